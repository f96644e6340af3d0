"""Randomized stationary policies as finite mixtures, and their quantization.

A mixture with weights ``w_1..w_m`` is encoded as ``f(x, z) = f_i(x)`` when
``z`` falls in ``[W_{i-1}, W_i)``, ``W_i`` the cumulative weights; the last
interval is closed so ``f`` is total on ``[0, 1]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import DeterministicPolicy, DimensionError, RandomizedPolicy
from .quantizer import Codebook

_WEIGHT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class MixturePolicy(RandomizedPolicy):
    """Randomized policy that remembers its mixture structure."""

    weights: tuple = ()
    components: tuple = ()

    def component_index(self, z) -> np.ndarray:
        return _interval_index(_cumulative(self.weights), z)


def _cumulative(weights) -> np.ndarray:
    cum = np.cumsum(np.asarray(weights, dtype=float))
    cum[-1] = 1.0
    return cum


def _interval_index(cum: np.ndarray, z) -> np.ndarray:
    idx = np.searchsorted(cum, np.asarray(z, dtype=float), side="right")
    return np.minimum(idx, cum.size - 1)


def from_finite_mixture(weights: Sequence[float], components: Sequence) -> MixturePolicy:
    """Mixture of deterministic policies (or batched callables ``x -> a``)."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a nonempty vector")
    if len(components) != w.size:
        raise ValueError(f"{w.size} weights but {len(components)} components")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError(f"weights must be nonnegative and finite, got {w.tolist()}")
    if abs(w.sum() - 1.0) > _WEIGHT_TOL:
        raise ValueError(f"weights must sum to 1 (within 1e-12), sum is {w.sum()!r}")
    for c in components:
        if not (isinstance(c, DeterministicPolicy) or callable(c)):
            raise TypeError(f"mixture component {c!r} is neither a policy nor callable")
    dims = {c.action_dim for c in components if isinstance(c, DeterministicPolicy)}
    if len(dims) > 1:
        raise DimensionError(f"mixture components disagree on action dimension: {sorted(dims)}")
    action_dim = dims.pop() if dims else 1
    sdims = {c.state_dim for c in components
             if isinstance(c, DeterministicPolicy) and c.state_dim is not None}
    if len(sdims) > 1:
        raise DimensionError(f"mixture components disagree on state dimension: {sorted(sdims)}")
    fns = [c.act if isinstance(c, DeterministicPolicy) else c for c in components]
    cum = _cumulative(w)

    def selector(x, z):
        idx = _interval_index(cum, z)
        out = np.empty((x.shape[0], action_dim))
        for i, fn in enumerate(fns):
            mask = idx == i
            if np.any(mask):
                out[mask] = np.asarray(fn(x[mask]), dtype=float).reshape(-1, action_dim)
        return out

    names = [getattr(c, "name", "f") for c in components]
    desc = "mix(" + ", ".join(f"{wi:g}*{n}" for wi, n in zip(w, names)) + ")"
    return MixturePolicy(selector, action_dim, sdims.pop() if sdims else None, desc,
                         tuple(float(v) for v in w), tuple(components))


def quantize_randomized(policy: RandomizedPolicy, codebook: Codebook) -> RandomizedPolicy:
    """``(x, z) -> nearest level to f(x, z)``: the quantized kernel ``eta_k``."""
    if not isinstance(policy, RandomizedPolicy):
        raise TypeError("quantize_randomized needs a randomized policy")
    if policy.action_dim != codebook.dim:
        raise DimensionError(f"policy action dim {policy.action_dim} != codebook dim {codebook.dim}")

    def selector(x, z):
        a = policy.act(x, z)
        return codebook.levels[codebook.nearest_indices(a)]

    return RandomizedPolicy(selector, policy.action_dim, policy.state_dim,
                            f"q{codebook.size}({policy.description})")
