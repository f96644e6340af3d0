"""Command-line entry point: ``quantmdp <subcommand> --config FILE``.

Exit codes: 0 when every row passes, 1 when any row fails, 2 on usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, parse_config
from .core import Box
from .quantizer import build_uniform_net
from . import experiments as ex

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

RUNNERS = {
    "convergence": ex.run_convergence,
    "bounds": ex.run_bounds_check,
    "ergodicity": ex.run_ergodicity,
    "tvcheck": ex.run_tvcheck,
    "slb": ex.run_slb,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="quantmdp", description="Quantized-policy experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in RUNNERS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, type=Path, help="TOML experiment config")
        p.add_argument("--seed", type=int, help="override [seeds] root")
        p.add_argument("--out", type=Path, help="output directory (default [output] dir)")
        p.add_argument("--format", choices=("csv", "json"), default="csv",
                       help="format echoed to stdout; both files are always written")
        p.add_argument("--workers", type=int, help="override [mc] workers")
        if name in ("convergence", "bounds"):
            p.add_argument("--dump-rollouts", action="store_true",
                           help="also write per-rollout values to <stem>_rollouts.csv")
    p = sub.add_parser("codebook", help="print a uniform net, one level per line")
    p.add_argument("--config", type=Path, help="take the box and k from this config")
    p.add_argument("--k", type=int, help="number of levels (default: first k of the schedule)")
    p.add_argument("--box", action="append", metavar="LO,HI",
                   help="one axis of the action box; repeat per axis")
    return parser


def _load(args):
    cfg = parse_config(args.config)
    changes = {}
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed must lie in [0, 2^64)")
        changes["seeds"] = {**cfg.seeds, "root": args.seed}
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        changes["mc"] = {**cfg.mc, "workers": args.workers}
    if args.out is not None:
        changes["output"] = {**cfg.output, "dir": str(args.out)}
    return cfg.replace(**changes) if changes else cfg


def _codebook(args) -> int:
    box, k = None, args.k
    if args.config is not None:
        cfg = parse_config(args.config)
        box = ex.action_box(cfg)
        k = k if k is not None else cfg.codebook_schedule[0]
    if args.box:
        try:
            box = Box.from_pairs([[float(v) for v in axis.split(",")] for axis in args.box])
        except ValueError as exc:
            raise ConfigError(f"--box expects LO,HI pairs: {exc}") from exc
    if box is None or k is None:
        raise ConfigError("codebook needs --k and --box, or a --config with [codebook] box")
    if k < 1:
        raise ConfigError("--k must be >= 1")
    cb = build_uniform_net(box, k)
    sys.stderr.write(f"# {cb.size} levels, rate {cb.rate_bits:.6g} bits, "
                     f"covering radius {cb.covering_radius!r}\n")
    sys.stdout.write(cb.to_text())
    return EXIT_OK


def _write(report, cfg, command: str, fmt: str, dump: bool) -> None:
    out = Path(cfg.output["dir"])
    stem = cfg.output["stem"] or command
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{stem}.csv").write_text(report.to_csv())
        (out / f"{stem}.json").write_text(report.to_json())
        if dump:
            ex.write_rollouts(out / f"{stem}_rollouts.csv", report.runs)
    except OSError as exc:
        raise ConfigError(f"cannot write output to {out}: {exc}") from exc
    sys.stdout.write(report.to_csv() if fmt == "csv" else report.to_json())


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "codebook":
            return _codebook(args)
        cfg = _load(args)
        runner = RUNNERS[args.command]
        dump = getattr(args, "dump_rollouts", False)
        report = runner(cfg, keep_rollouts=True) if dump else runner(cfg)
        table = getattr(report, "constants_table", "")
        if not table and args.command == "convergence" and cfg.codebook["box"] is not None:
            try:
                table = ex.derive_constants(cfg, ex.build_system(cfg)).table()
            except ConfigError:
                table = ""
        if table:
            sys.stderr.write(table + "\n")
        _write(report, cfg, args.command, args.format, dump)
    except (ConfigError, ValueError) as exc:  # ConfigError and model-construction errors
        sys.stderr.write(f"quantmdp: error: {exc}\n")
        return EXIT_USAGE
    verdict = "PASS" if report.passed else "FAIL"
    sys.stderr.write(f"quantmdp {args.command}: {verdict}\n")
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
