"""Experiment configuration files (TOML).

Grammar, by table (all keys optional unless marked)::

    criterion = "discounted"          # discounted | average | total
    codebook_schedule = [4, 8, 16]    # required; strictly increasing level counts

    [system]                          # required
    name = "linear_tracking"          # linear_tracking | bounded_drift | additive_noise
    ...                               # parameters, see SYSTEM_KEYS

    [policy]
    name = "identity"                 # identity | zero | tanh | clip | linear | mixture
    gain = 0.5                        # linear only
    weights = [0.5, 0.5]              # mixture only
    components = ["identity", {name = "linear", gain = 0.5}]
    # or, equivalently for a mixture:
    # mixture = { weights = [0.5, 0.5], components = ["identity", "zero"] }

    [codebook]  box = [[-8.0, 8.0]]   # action box of the nets, one [lo, hi] per axis
    [seeds]     root, replications
    [mc]        n_rollouts, tol, burn_in, n_steps, horizon, workers, block_size
    [binning]   box, bins
    [constants] alpha, K1, K2, M, C, kappa   (override derived constants)
    [ergodicity] x0, n_max, per_n_samples, burn_in, thinning, n_chains
    [tvcheck]   n_list, per_n_samples, floor_multiple, init
    [output]    dir, stem

Every default is filled in by :func:`parse_config` and echoed into reports.
"""

from __future__ import annotations

import copy
import difflib
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    pass


SYSTEMS = ("linear_tracking", "bounded_drift", "additive_noise")
POLICIES = ("identity", "zero", "tanh", "clip", "linear", "mixture")
CRITERIA = ("discounted", "average", "total")
COSTS = ("tracking", "abs_state", "positive_indicator", "constant")

SYSTEM_KEYS = {
    "linear_tracking": {"name": None, "d": 1, "A": 1.0, "B": 1.0, "sigma": 1.0,
                        "cost_cap": None, "beta": 0.9},
    "bounded_drift": {"name": None, "drift": "tanh", "state_gain": 1.0, "action_gain": 0.0,
                      "L_drift": None, "sigma": 1.0, "cost": "tracking", "cost_cap": 4.0,
                      "cost_value": 1.0, "beta": 0.9},
    "additive_noise": {"name": None, "drift": "linear", "state_gain": 0.5, "action_gain": 1.0,
                       "sigma": 1.0, "cost": "tracking", "cost_cap": 4.0, "cost_value": 1.0,
                       "beta": 0.9},
}
DRIFTS = {"bounded_drift": ("tanh", "zero"), "additive_noise": ("linear", "tanh", "clip")}

TABLE_DEFAULTS = {
    "codebook": {"box": None},
    "seeds": {"root": 0, "replications": 1},
    "mc": {"n_rollouts": 10_000, "tol": None, "burn_in": 1000, "n_steps": 1000,
           "horizon": 50, "workers": 1, "block_size": 4096},
    "binning": {"box": None, "bins": 50},
    "constants": {"alpha": None, "K1": None, "K2": None, "M": None, "C": None, "kappa": None},
    "ergodicity": {"x0": None, "n_max": 40, "per_n_samples": 100_000, "burn_in": 1000,
                   "thinning": 5, "n_chains": 100},
    "tvcheck": {"n_list": [1, 2, 3], "per_n_samples": 100_000, "floor_multiple": 3.0,
                "init": None},
    "output": {"dir": "out", "stem": None},
}
POLICY_KEYS = ("name", "gain", "weights", "components", "mixture")
TOP_KEYS = ("criterion", "codebook_schedule", "system", "policy") + tuple(TABLE_DEFAULTS)


@dataclass(frozen=True)
class ExperimentConfig:
    criterion: str
    codebook_schedule: tuple
    system: dict
    policy: dict
    codebook: dict
    seeds: dict
    mc: dict
    binning: dict
    constants: dict
    ergodicity: dict
    tvcheck: dict
    output: dict
    source: str = ""

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "codebook_schedule": list(self.codebook_schedule),
            "system": copy.deepcopy(self.system),
            "policy": copy.deepcopy(self.policy),
            **{name: copy.deepcopy(getattr(self, name)) for name in TABLE_DEFAULTS},
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def replace(self, **changes) -> "ExperimentConfig":
        data = {name: getattr(self, name) for name in self.__dataclass_fields__}
        data.update(changes)
        return ExperimentConfig(**data)


def _unknown(key: str, allowed, where: str) -> ConfigError:
    hint = difflib.get_close_matches(key, list(allowed), n=1)
    suggestion = f"; did you mean {hint[0]!r}?" if hint else ""
    return ConfigError(f"unknown key {key!r} in {where}{suggestion}")


def _merge(table: dict, defaults: dict, where: str) -> dict:
    if not isinstance(table, dict):
        raise ConfigError(f"{where} must be a table")
    for key in table:
        if key not in defaults:
            raise _unknown(key, defaults, where)
    out = copy.deepcopy(defaults)
    out.update(copy.deepcopy(table))
    return out


def _check_box(value, where: str):
    if value is None:
        return
    pairs = value if value and isinstance(value[0], list) else [value]
    for pair in pairs:
        if not (isinstance(pair, list) and len(pair) == 2
                and all(isinstance(v, (int, float)) for v in pair) and pair[0] <= pair[1]):
            raise ConfigError(f"{where} must be a list of [lo, hi] pairs with lo <= hi, got {value!r}")


def _check_policy(p, where: str, allow_mixture: bool = True) -> dict:
    if isinstance(p, str):
        p = {"name": p}
    if not isinstance(p, dict):
        raise ConfigError(f"{where} must be a policy name or table")
    for key in p:
        if key not in POLICY_KEYS:
            raise _unknown(key, POLICY_KEYS, where)
    if "mixture" in p:
        # inline form: mixture = { weights = [...], components = [...] }
        inline = p["mixture"]
        if not allow_mixture or not isinstance(inline, dict) or set(p) - {"mixture", "name"}:
            raise ConfigError(f"{where}: 'mixture' must be the only key and a table")
        if p.get("name", "mixture") != "mixture":
            raise ConfigError(f"{where}: 'mixture' table given with name {p['name']!r}")
        p = {"name": "mixture", **inline}
        for key in p:
            if key not in POLICY_KEYS:
                raise _unknown(key, POLICY_KEYS, where)
    name = p.get("name")
    if name not in POLICIES or (name == "mixture" and not allow_mixture):
        choices = [n for n in POLICIES if allow_mixture or n != "mixture"]
        raise ConfigError(f"unknown policy {name!r} in {where}; available: {', '.join(choices)}")
    out = dict(p)
    if name == "linear":
        out.setdefault("gain", 1.0)
    if name == "mixture":
        weights, comps = p.get("weights"), p.get("components")
        if not isinstance(weights, list) or not isinstance(comps, list) or len(weights) != len(comps):
            raise ConfigError(f"{where}: mixture needs equal-length 'weights' and 'components' lists")
        if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-12:
            raise ConfigError(f"{where}: mixture weights must be nonnegative and sum to 1")
        out["components"] = [_check_policy(c, f"{where}.components[{i}]", False)
                             for i, c in enumerate(comps)]
    return out


def validate(raw: dict, source: str = "") -> ExperimentConfig:
    for key in raw:
        if key not in TOP_KEYS:
            raise _unknown(key, TOP_KEYS, "top level")
    if "system" not in raw:
        raise ConfigError("missing required [system] table")
    sysname = raw["system"].get("name") if isinstance(raw["system"], dict) else None
    if sysname not in SYSTEMS:
        raise ConfigError(f"unknown system {sysname!r}; available systems: {', '.join(SYSTEMS)}")
    system = _merge(raw["system"], SYSTEM_KEYS[sysname], "[system]")
    if system.get("sigma") is not None and not system["sigma"] > 0:
        raise ConfigError("[system] sigma must be positive")
    if not 0 < system["beta"] < 1:
        raise ConfigError("[system] beta must lie in (0, 1)")
    if "drift" in system and system["drift"] not in DRIFTS[sysname]:
        raise ConfigError(f"[system] drift {system['drift']!r} unknown for {sysname}; "
                          f"available: {', '.join(DRIFTS[sysname])}")
    if "cost" in system and system["cost"] not in COSTS:
        raise ConfigError(f"[system] cost {system['cost']!r} unknown; available: {', '.join(COSTS)}")

    criterion = raw.get("criterion", "discounted")
    if criterion not in CRITERIA:
        raise ConfigError(f"criterion must be one of {', '.join(CRITERIA)}, got {criterion!r}")

    sched = raw.get("codebook_schedule")
    if not isinstance(sched, list) or not sched:
        raise ConfigError("codebook_schedule must be a nonempty list of level counts")
    if not all(isinstance(k, int) and not isinstance(k, bool) and k >= 1 for k in sched):
        raise ConfigError("codebook_schedule entries must be integers >= 1")
    if any(b <= a for a, b in zip(sched, sched[1:])):
        raise ConfigError("codebook_schedule must be strictly increasing")

    policy = _check_policy(raw.get("policy", {"name": "identity"}), "[policy]")
    tables = {name: _merge(raw.get(name, {}), TABLE_DEFAULTS[name], f"[{name}]")
              for name in TABLE_DEFAULTS}
    _check_box(tables["codebook"]["box"], "[codebook] box")
    _check_box(tables["binning"]["box"], "[binning] box")
    mc = tables["mc"]
    for key in ("n_rollouts", "n_steps", "workers", "block_size"):
        if not (isinstance(mc[key], int) and mc[key] >= 1):
            raise ConfigError(f"[mc] {key} must be a positive integer")
    if mc["n_rollouts"] < 2:
        raise ConfigError("[mc] n_rollouts must be >= 2")
    if mc["tol"] is not None and not mc["tol"] > 0:
        raise ConfigError("[mc] tol must be positive")
    if not (isinstance(tables["seeds"]["root"], int) and 0 <= tables["seeds"]["root"] < 2 ** 64):
        raise ConfigError("[seeds] root must be an integer in [0, 2^64)")
    if not (isinstance(tables["seeds"]["replications"], int) and tables["seeds"]["replications"] >= 1):
        raise ConfigError("[seeds] replications must be a positive integer")
    if not (isinstance(tables["binning"]["bins"], int) and tables["binning"]["bins"] >= 1):
        raise ConfigError("[binning] bins must be a positive integer")
    if tables["ergodicity"]["n_max"] < 2:
        raise ConfigError("[ergodicity] n_max must be >= 2")
    if any(n < 1 for n in tables["tvcheck"]["n_list"]):
        raise ConfigError("[tvcheck] n_list entries must be >= 1")
    return ExperimentConfig(criterion, tuple(sched), system, policy, source=source, **tables)


def parse_config(path) -> ExperimentConfig:
    """Read, validate and default-fill a TOML experiment config."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, str(path))


def parse_config_text(text: str, source: str = "<string>") -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        # the decoder's message carries "(at line L, column C)"
        raise ConfigError(f"{source}: syntax error: {exc}") from exc
    return validate(raw, source)
