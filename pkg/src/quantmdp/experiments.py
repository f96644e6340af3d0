"""Config-driven experiments: convergence curves, bound checks, ergodicity, TV checks."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .bounds import (SystemConstants, average_gap_bound, covering_alpha_for_box,
                     discounted_gap_bound, ergodicity_constants_bounded_gaussian,
                     gaussian_kernel_tv_lipschitz, slb_lower_bound)
from .config import ConfigError, ExperimentConfig
from .core import Box, CostSchedule, DeterministicPolicy, MdpModel, Policy
from .measures import check_marginal_tv_bound, ergodicity_profile
from .quantizer import build_uniform_net, quantize_policy
from .randomized import from_finite_mixture, quantize_randomized
from .simulate import PairedSums, RunSeed, paired_rollout_sums, summarize
from .systems import (GaussianNoise, make_additive_noise, make_bounded_drift,
                      make_linear_tracking, tracking_cost)

SCHEMA_VERSION = 1
CSV_COLUMNS = ("k", "rate_bits", "radius", "gap", "gap_ci95", "upper_bound", "lower_bound", "verdict")
PASS, FAIL, NA = "PASS", "FAIL", "NA"


# -- building blocks from config ---------------------------------------------------------

def _cost(kind: str, cap: float, value: float):
    """``(cost_fn, M, K1)`` for a named cost."""
    if kind == "tracking":
        return tracking_cost(cap), float(cap), 1.0
    if kind == "abs_state":
        return (lambda x, a: np.minimum(np.linalg.norm(x, axis=1), cap)), float(cap), 0.0
    if kind == "positive_indicator":
        return (lambda x, a: (x[:, 0] > 0).astype(float)), 1.0, 0.0
    if kind == "constant":
        return (lambda x, a: np.full(x.shape[0], float(value))), float(value), 0.0
    raise ConfigError(f"unknown cost {kind!r}")


@dataclass
class BuiltSystem:
    model: MdpModel
    K1: float
    action_lipschitz: float  # Lipschitz constant of the drift in the action
    sigma: float
    L_drift: Optional[float] = None


def action_box(cfg: ExperimentConfig) -> Box:
    box = cfg.codebook["box"]
    if box is None:
        raise ConfigError("[codebook] box is required to build quantizers")
    return Box.from_pairs(box)


def build_system(cfg: ExperimentConfig) -> BuiltSystem:
    s = cfg.system
    name = s["name"]
    if name == "linear_tracking":
        model = make_linear_tracking(s["d"], s["A"], s["B"], s["sigma"], s["cost_cap"], s["beta"],
                                     Box.from_pairs(cfg.codebook["box"]) if cfg.codebook["box"] else None)
        if cfg.criterion == "total":
            model = _with_constant_schedule(model)
        return BuiltSystem(model, 1.0, model.params["action_lipschitz"], s["sigma"])
    abox = action_box(cfg)
    cost, M, K1 = _cost(s["cost"], s["cost_cap"], s["cost_value"])
    sg, ag = float(s["state_gain"]), float(s["action_gain"])
    a_max = float(np.max(np.abs(np.concatenate([abox.lo, abox.hi]))))
    if name == "bounded_drift":
        if s["drift"] == "tanh":
            F = lambda x, a: sg * np.tanh(x) + ag * a[:, :1]
            natural_L = abs(sg) + abs(ag) * a_max
        else:
            F = lambda x, a: ag * a[:, :1]
            natural_L = abs(ag) * a_max
        L = s["L_drift"] if s["L_drift"] is not None else natural_L
        if not L > 0:
            raise ConfigError("[system] bounded_drift needs L_drift > 0 (set it or use a nonzero gain)")
        try:
            model = make_bounded_drift(L, s["sigma"], F, abox, cost, M, s["beta"])
        except ValueError as exc:
            raise ConfigError(f"[system] {exc}") from exc
        if cfg.criterion == "total":
            model = _with_constant_schedule(model)
        return BuiltSystem(model, K1, abs(ag), s["sigma"], float(L))
    # additive_noise, scalar state
    if s["drift"] == "linear":
        F = lambda x, a: sg * x + ag * a[:, :1]
    elif s["drift"] == "tanh":
        F = lambda x, a: sg * np.tanh(x) + ag * a[:, :1]
    else:
        F = lambda x, a: np.clip(x, -1.0, 1.0) + ag * a[:, :1]
    noise = GaussianNoise(s["sigma"], 1)
    schedule = CostSchedule((), cost) if cfg.criterion == "total" else None
    model = make_additive_noise(F, noise, abox, cost, M, s["beta"], 1, abox.dim,
                                cost_schedule=schedule)
    return BuiltSystem(model, K1, abs(ag), s["sigma"])


def _with_constant_schedule(model: MdpModel) -> MdpModel:
    from dataclasses import replace

    return replace(model, cost_schedule=CostSchedule((), model.cost))


def _deterministic(p: dict, state_dim: int, action_dim: int, box: Optional[Box]) -> DeterministicPolicy:
    name = p["name"]
    if name in ("identity", "tanh", "linear") and state_dim != action_dim:
        raise ConfigError(f"policy {name!r} needs equal state and action dimensions")
    if name == "identity":
        return DeterministicPolicy(lambda x: x.copy(), action_dim, state_dim, "identity")
    if name == "zero":
        return DeterministicPolicy(lambda x: np.zeros((x.shape[0], action_dim)), action_dim,
                                   state_dim, "zero")
    if name == "tanh":
        return DeterministicPolicy(np.tanh, action_dim, state_dim, "tanh")
    if name == "linear":
        g = float(p["gain"])
        return DeterministicPolicy(lambda x: g * x, action_dim, state_dim, f"linear({g:g})")
    if name == "clip":
        if box is None:
            raise ConfigError("policy 'clip' needs [codebook] box")
        if state_dim != action_dim:
            raise ConfigError("policy 'clip' needs equal state and action dimensions")
        return DeterministicPolicy(lambda x: np.clip(x, box.lo, box.hi), action_dim, state_dim, "clip")
    raise ConfigError(f"unknown policy {name!r}")


def build_policy(cfg: ExperimentConfig, model: MdpModel) -> Policy:
    box = Box.from_pairs(cfg.codebook["box"]) if cfg.codebook["box"] else None
    p = cfg.policy
    if p["name"] == "mixture":
        comps = [_deterministic(c, model.state_dim, model.action_dim, box) for c in p["components"]]
        return from_finite_mixture(p["weights"], comps)
    return _deterministic(p, model.state_dim, model.action_dim, box)


def quantize(policy: Policy, codebook) -> Policy:
    if policy.randomized:
        return quantize_randomized(policy, codebook)
    return quantize_policy(policy, codebook)


# -- constants -------------------------------------------------------------------------

@dataclass
class DerivedConstants:
    values: dict
    provenance: dict

    def get(self, name):
        return self.values.get(name)

    def table(self) -> str:
        lines = [f"{'constant':<9} {'value':>22}  provenance"]
        for name in ("alpha", "beta", "K1", "K2", "M", "C", "kappa", "d"):
            v = self.values.get(name)
            shown = "-" if v is None else repr(v)
            lines.append(f"{name:<9} {shown:>22}  {self.provenance.get(name, 'unavailable')}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {name: {"value": self.values.get(name), "provenance": self.provenance.get(name)}
                for name in ("alpha", "beta", "K1", "K2", "M", "C", "kappa", "d")}

    def system_constants(self, need=("alpha", "beta", "K1", "K2", "M")) -> SystemConstants:
        missing = [n for n in need if self.values.get(n) is None]
        if missing:
            raise ConfigError(f"constant(s) unavailable: {', '.join(missing)}; "
                              "supply them in the [constants] table")
        v = self.values
        return SystemConstants(v["alpha"], v["beta"], v["K1"], v["K2"], v["M"],
                               v.get("C"), v.get("kappa"), int(v["d"]))


def derive_constants(cfg: ExperimentConfig, built: BuiltSystem) -> DerivedConstants:
    """Bound constants for the configured system, then ``[constants]`` overrides."""
    model = built.model
    vals, prov = {}, {}
    box = action_box(cfg)
    vals["alpha"] = covering_alpha_for_box(box)
    prov["alpha"] = "derived: sqrt(d) * max side of the codebook box (uniform grid)"
    vals["beta"] = model.discount
    prov["beta"] = "model discount"
    vals["K1"] = built.K1
    prov["K1"] = "derived: Lipschitz constant of the cost in the action"
    if isinstance(model.noise, GaussianNoise):
        vals["K2"] = gaussian_kernel_tv_lipschitz(built.action_lipschitz, built.sigma)
        prov["K2"] = "derived: 2 L_F / (sigma sqrt(2 pi)) for an additive Gaussian kernel"
    vals["M"] = model.cost_bound
    prov["M"] = "model cost bound (cap)"
    if built.L_drift is not None:
        erg = ergodicity_constants_bounded_gaussian(built.L_drift, built.sigma)
        vals["C"], vals["kappa"] = erg.C, erg.kappa
        prov["C"] = prov["kappa"] = "closed form: C = 2, kappa = 1 - eps L (bounded Gaussian drift)"
    vals["d"] = box.dim
    prov["d"] = "action dimension"
    for name, v in cfg.constants.items():
        if v is not None:
            vals[name] = float(v)
            prov[name] = "override: [constants] table"
    return DerivedConstants(vals, prov)


def slb_applies(cfg: ExperimentConfig) -> bool:
    """Linear tracking, identity policy, tracking cost, initial law = noise law."""
    return cfg.system["name"] == "linear_tracking" and cfg.policy["name"] == "identity"


def slb_for(cfg: ExperimentConfig, criterion: str, k: int) -> float:
    s = cfg.system
    noise = GaussianNoise(s["sigma"], s["d"])
    beta = s["beta"] if criterion == "discounted" else None
    return slb_lower_bound(s["d"], noise.entropy_bits, criterion, k, beta).value


# -- reports ---------------------------------------------------------------------------

@dataclass
class ReportRow:
    k: int
    rate_bits: float
    radius: float
    gap: float
    gap_ci95: float
    upper_bound: Optional[float]
    lower_bound: Optional[float]
    verdict: str

    def csv_fields(self) -> list:
        fmt = lambda v: "" if v is None else repr(float(v))
        return [str(self.k), fmt(self.rate_bits), fmt(self.radius), fmt(self.gap),
                fmt(self.gap_ci95), fmt(self.upper_bound), fmt(self.lower_bound), self.verdict]

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in CSV_COLUMNS}


@dataclass
class ExperimentReport:
    kind: str
    rows: list
    slope: Optional[float]
    slope_note: str
    metadata: dict
    extra: dict = field(default_factory=dict)
    # not serialized: per-rollout sums (for dumps) and the printable constants table
    runs: Optional[list] = field(default=None, repr=False)
    constants_table: str = ""

    @property
    def passed(self) -> bool:
        return all(r.verdict != FAIL for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow(r.csv_fields())
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "rows": [r.to_dict() for r in self.rows],
            "slope": self.slope,
            "slope_note": self.slope_note,
            "passed": self.passed,
            "metadata": self.metadata,
            **self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def fit_slope(rows) -> tuple:
    """Least-squares slope of ``log|gap|`` on ``log k`` over rows with ``|gap| > 3 CI``."""
    usable = [r for r in rows if abs(r.gap) > 3 * r.gap_ci95 and r.gap != 0]
    if len(usable) < 2:
        return None, "insufficient points"
    x = np.log([r.k for r in usable])
    y = np.log([abs(r.gap) for r in usable])
    slope = float(np.polyfit(x, y, 1)[0])
    return slope, f"fitted over {len(usable)} rows"


def experiment_settings(cfg: ExperimentConfig) -> dict:
    """The config minus execution-only settings (worker count, output location).

    Those cannot change any number, and leaving them out keeps reports
    byte-identical across parallelism degrees and output directories.
    """
    d = cfg.to_dict()
    d["mc"].pop("workers")
    d.pop("output")
    return d


def settings_hash(cfg: ExperimentConfig) -> str:
    blob = json.dumps(experiment_settings(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def metadata(cfg: ExperimentConfig, kind: str) -> dict:
    return {"config_hash": settings_hash(cfg), "seed": cfg.seeds["root"], "version": __version__,
            "experiment": kind, "config": experiment_settings(cfg)}


@dataclass
class GapRun:
    k: int
    codebook: object
    sums: PairedSums


def _paired_gaps(cfg: ExperimentConfig, model: MdpModel, policy: Policy, k: int) -> GapRun:
    """Per-rollout criterion values of ``pi_k`` and ``pi`` over all replications."""
    cb = build_uniform_net(action_box(cfg), k)
    qpol = quantize(policy, cb)
    mc = cfg.mc
    root = RunSeed(cfg.seeds["root"], mc["block_size"])
    reps = cfg.seeds["replications"]
    parts = []
    for r in range(reps):
        seed = root if reps == 1 else root.derive(r)
        parts.append(paired_rollout_sums(
            model, qpol, policy, cfg.criterion, mc["n_rollouts"], seed, tol=mc["tol"],
            burn_in=mc["burn_in"], n_steps=mc["n_steps"], horizon=mc["horizon"],
            workers=mc["workers"]))
    sums = PairedSums(np.concatenate([p.a for p in parts]), np.concatenate([p.b for p in parts]),
                      parts[0].horizon, parts[0].bias_bound)
    return GapRun(k, cb, sums)


def _upper(cfg, consts: SystemConstants, k: int) -> float:
    if cfg.criterion == "discounted":
        return discounted_gap_bound(consts, k).value
    if cfg.criterion == "average":
        return average_gap_bound(consts, k, "optimize").value
    raise ConfigError("upper bounds exist for the discounted and average criteria only")


def _verdict(gap, ci, upper, lower) -> str:
    if upper is None and lower is None:
        return NA
    ok = True
    if upper is not None:
        ok &= abs(gap) <= upper + 3 * ci
    if lower is not None:
        ok &= gap >= lower - 3 * ci
    return PASS if ok else FAIL


def _rows(cfg, runs, upper_fn, lower_fn) -> list:
    rows = []
    for run in runs:
        est = run.sums.estimate()
        up = upper_fn(run.k)
        lo = lower_fn(run.k)
        rows.append(ReportRow(run.k, run.codebook.rate_bits, run.codebook.covering_radius,
                              est.mean, est.ci95_halfwidth, up, lo,
                              _verdict(est.mean, est.ci95_halfwidth, up, lo)))
    return rows


def _try_constants(cfg, built) -> Optional[SystemConstants]:
    consts = derive_constants(cfg, built)
    need = ("alpha", "beta", "K1", "K2", "M") + (("C", "kappa") if cfg.criterion == "average" else ())
    if any(consts.get(n) is None for n in need):
        return None
    return consts.system_constants(need)


def run_convergence(cfg: ExperimentConfig, keep_rollouts: bool = False) -> ExperimentReport:
    """Paired gap ``w(pi_k) - w(pi)`` per k, with bounds where they are available."""
    built = build_system(cfg)
    policy = build_policy(cfg, built.model)
    runs = [_paired_gaps(cfg, built.model, policy, k) for k in cfg.codebook_schedule]
    consts = _try_constants(cfg, built) if cfg.criterion != "total" else None
    upper_fn = (lambda k: _upper(cfg, consts, k)) if consts is not None else (lambda k: None)
    lower_fn = ((lambda k: slb_for(cfg, cfg.criterion, k))
                if slb_applies(cfg) and cfg.criterion != "total" else (lambda k: None))
    rows = _rows(cfg, runs, upper_fn, lower_fn)
    slope, note = fit_slope(rows)
    return ExperimentReport("convergence", rows, slope, note, metadata(cfg, "convergence"),
                            runs=runs if keep_rollouts else None)


def run_bounds_check(cfg: ExperimentConfig, keep_rollouts: bool = False) -> ExperimentReport:
    """Measured gaps against the upper bound (and the SLB floor when it applies)."""
    if cfg.criterion not in ("discounted", "average"):
        raise ConfigError("bounds check needs criterion 'discounted' or 'average'")
    built = build_system(cfg)
    policy = build_policy(cfg, built.model)
    derived = derive_constants(cfg, built)
    need = ("alpha", "beta", "K1", "K2", "M") + (("C", "kappa") if cfg.criterion == "average" else ())
    consts = derived.system_constants(need)
    runs = [_paired_gaps(cfg, built.model, policy, k) for k in cfg.codebook_schedule]
    lower_fn = (lambda k: slb_for(cfg, cfg.criterion, k)) if slb_applies(cfg) else (lambda k: None)
    rows = _rows(cfg, runs, lambda k: _upper(cfg, consts, k), lower_fn)
    slope, note = fit_slope(rows)
    return ExperimentReport("bounds", rows, slope, note, metadata(cfg, "bounds"),
                            {"constants": derived.to_dict()}, runs=runs if keep_rollouts else None,
                            constants_table=derived.table())


@dataclass
class ErgodicityReport:
    ns: np.ndarray
    tv: np.ndarray
    bound: np.ndarray
    noise_floor: float
    fitted_kappa: Optional[float]
    fitted_C: Optional[float]
    C: float
    kappa: float
    metadata: dict

    @property
    def passed(self) -> bool:
        return bool(np.all(self.tv <= self.bound + self.noise_floor))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "tv", "bound", "verdict"])
        for n, t, b in zip(self.ns, self.tv, self.bound):
            w.writerow([int(n), repr(float(t)), repr(float(b)),
                        PASS if t <= b + self.noise_floor else FAIL])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "kind": "ergodicity",
                "rows": [{"n": int(n), "tv": float(t), "bound": float(b)}
                         for n, t, b in zip(self.ns, self.tv, self.bound)],
                "noise_floor": self.noise_floor, "fitted_kappa": self.fitted_kappa,
                "fitted_C": self.fitted_C, "C": self.C, "kappa": self.kappa,
                "passed": self.passed, "metadata": self.metadata}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def state_box(cfg: ExperimentConfig, built: BuiltSystem) -> Box:
    if cfg.binning["box"] is not None:
        return Box.from_pairs(cfg.binning["box"])
    half = 8.0 * built.sigma + (built.L_drift or 0.0)
    return Box.cube(-half, half, built.model.state_dim)


def run_ergodicity(cfg: ExperimentConfig) -> ErgodicityReport:
    """``TV(lambda_n^x0, nu)`` against ``C kappa^n`` for a scalar system."""
    built = build_system(cfg)
    model = built.model
    if model.state_dim != 1:
        raise ConfigError("ergodicity profiles need a scalar-state system")
    consts = derive_constants(cfg, built)
    if consts.get("C") is None or consts.get("kappa") is None:
        raise ConfigError("constant(s) unavailable: C, kappa; use bounded_drift or set [constants]")
    policy = build_policy(cfg, model)
    e = cfg.ergodicity
    x0 = e["x0"] if e["x0"] is not None else [0.0]
    box = state_box(cfg, built)
    prof = ergodicity_profile(model, policy, x0, e["n_max"], e["per_n_samples"], box,
                              cfg.binning["bins"], RunSeed(cfg.seeds["root"], cfg.mc["block_size"]),
                              burn_in=e["burn_in"], thinning=e["thinning"], n_chains=e["n_chains"],
                              bound_C=consts.get("C"), bound_kappa=consts.get("kappa"))
    return ErgodicityReport(prof.ns, prof.tv_by_n, prof.bound(), prof.noise_floor,
                            prof.fitted_kappa, prof.fitted_C, consts.get("C"), consts.get("kappa"),
                            metadata(cfg, "ergodicity"))


@dataclass
class TVCheckReport:
    rows: list  # (k, MarginalTVRow)
    metadata: dict

    @property
    def passed(self) -> bool:
        return all(r.passed for _, r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "n", "tv", "bound", "tolerance", "verdict"])
        for k, r in self.rows:
            w.writerow([k, r.n, repr(r.tv), repr(r.bound), repr(r.tolerance),
                        PASS if r.passed else FAIL])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "kind": "tvcheck",
                "rows": [{"k": k, "n": r.n, "tv": r.tv, "bound": r.bound, "tolerance": r.tolerance,
                          "verdict": PASS if r.passed else FAIL} for k, r in self.rows],
                "passed": self.passed, "metadata": self.metadata}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def run_tvcheck(cfg: ExperimentConfig) -> TVCheckReport:
    """Binned TV between n-step marginals of ``pi`` and ``pi_k`` against its bound."""
    built = build_system(cfg)
    policy = build_policy(cfg, built.model)
    if policy.randomized:
        raise ConfigError("tvcheck needs a deterministic policy")
    consts = derive_constants(cfg, built)
    if consts.get("K2") is None:
        raise ConfigError("constant(s) unavailable: K2; supply it in [constants]")
    t = cfg.tvcheck
    box = state_box(cfg, built)
    rows = []
    for k in cfg.codebook_schedule:
        cb = build_uniform_net(action_box(cfg), k)
        for r in check_marginal_tv_bound(
                built.model, policy, cb, t["n_list"], t["per_n_samples"], box,
                cfg.binning["bins"], consts.get("alpha"), consts.get("K2"), k, cb.dim,
                RunSeed(cfg.seeds["root"], cfg.mc["block_size"]), t["init"], t["floor_multiple"]):
            rows.append((k, r))
    return TVCheckReport(rows, metadata(cfg, "tvcheck"))


@dataclass
class SLBReport:
    rows: list  # dicts
    L: float
    metadata: dict
    passed: bool = True

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = ["k", "rate_bits", "per_stage", "discounted", "average"]
        w.writerow(cols)
        for r in self.rows:
            w.writerow([r["k"]] + [repr(r[c]) for c in cols[1:]])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "kind": "slb", "L": self.L, "rows": self.rows,
                "passed": True, "metadata": self.metadata}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def run_slb(cfg: ExperimentConfig) -> SLBReport:
    """Shannon-lower-bound table for the configured Gaussian noise."""
    s = cfg.system
    d = s.get("d", 1)
    entropy = GaussianNoise(s["sigma"], d).entropy_bits
    rows = []
    L = None
    for k in cfg.codebook_schedule:
        ps = slb_lower_bound(d, entropy, "per_stage", k)
        L = ps.details["L"]
        rows.append({"k": k, "rate_bits": math.log2(k), "per_stage": ps.value,
                     "discounted": slb_lower_bound(d, entropy, "discounted", k, s["beta"]).value,
                     "average": slb_lower_bound(d, entropy, "average", k).value})
    return SLBReport(rows, L, metadata(cfg, "slb"))


def write_rollouts(path: Path, runs) -> None:
    """Per-rollout values of both policies, exact (``repr``) floats."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "rollout", "quantized", "base", "diff"])
        for run in runs:
            a, b, diff = run.sums.a, run.sums.b, run.sums.diff
            for i in range(a.shape[0]):
                w.writerow([run.k, i, repr(float(a[i])), repr(float(b[i])), repr(float(diff[i]))])


def read_rollout_gaps(path: Path) -> dict:
    """``{k: CostEstimate}`` recomputed from a rollout dump."""
    per_k = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            per_k.setdefault(int(row["k"]), []).append(float(row["diff"]))
    return {k: summarize(np.array(v), 0) for k, v in per_k.items()}
