"""Example systems with analytically known structure.

* linear tracking: ``x' = A x + B a + v``, cost ``min(||x - a||, cap)``; the
  identity policy tracks exactly and has cost zero.
* bounded drift: scalar ``x' = F(x, a) + v`` with ``|F| <= L``; Gaussian noise
  gives explicit geometric-ergodicity constants (see :mod:`quantmdp.bounds`).
* additive noise: generic ``x' = F(x, a) + v``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import special

from .core import Box, CostSchedule, MdpModel


@dataclass(frozen=True)
class GaussianNoise:
    """Isotropic ``N(0, sigma^2 I_dim)`` noise."""

    sigma: float
    dim: int = 1

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"noise sigma must be positive, got {self.sigma}")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.sigma * rng.standard_normal((n, self.dim))

    def density(self, v: np.ndarray) -> np.ndarray:
        v = np.atleast_2d(v)
        r2 = np.sum(v * v, axis=1) / self.sigma ** 2
        return np.exp(-0.5 * r2) / (2 * math.pi * self.sigma ** 2) ** (self.dim / 2)

    def axis_cdf(self, t):
        """Marginal CDF of one coordinate (coordinates are independent)."""
        return 0.5 * (1.0 + special.erf(np.asarray(t) / (self.sigma * math.sqrt(2.0))))

    @property
    def entropy_bits(self) -> float:
        return 0.5 * self.dim * math.log2(2 * math.pi * math.e * self.sigma ** 2)


@dataclass(frozen=True)
class GenericNoise:
    """User noise: a sampler and, optionally, a density."""

    sampler: Callable[[np.random.Generator, int], np.ndarray]
    dim: int = 1
    density: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def sample(self, rng, n):
        return np.asarray(self.sampler(rng, n), dtype=float).reshape(n, self.dim)


def tracking_cost(cap: float):
    """``c(x, a) = min(||x - a||, cap)``."""

    def cost(x, a):
        return np.minimum(np.linalg.norm(x - a, axis=1), cap)

    return cost


def _as_matrix(m, d: int, what: str) -> np.ndarray:
    arr = np.asarray(m, dtype=float)
    if arr.ndim == 0:
        return arr * np.eye(d)
    if arr.shape != (d, d):
        raise ValueError(f"{what} must be a scalar or a {d}x{d} matrix, got shape {arr.shape}")
    return arr.copy()


def make_linear_tracking(
    d: int = 1,
    A=1.0,
    B=1.0,
    sigma: float = 1.0,
    cost_cap: Optional[float] = None,
    beta: float = 0.9,
    action_box: Optional[Box] = None,
) -> MdpModel:
    """Linear system ``x' = A x + B a + v`` with the clipped tracking cost.

    The initial law equals the noise law. ``cost_cap`` defaults to
    ``20 sigma sqrt(d)``. ``A``, ``B`` may be scalars (times identity).
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if cost_cap is None:
        cost_cap = 20.0 * sigma * math.sqrt(d)
    if not cost_cap > 0:
        raise ValueError(f"cost cap must be positive, got {cost_cap}")
    Am = _as_matrix(A, d, "A")
    Bm = _as_matrix(B, d, "B")
    noise = GaussianNoise(sigma, d)

    def transition(x, a, rng):
        return x @ Am.T + a @ Bm.T + noise.sample(rng, x.shape[0])

    return MdpModel(
        state_dim=d,
        action_dim=d,
        transition=transition,
        cost=tracking_cost(cost_cap),
        cost_bound=float(cost_cap),
        discount=beta,
        initial=noise.sample,
        action_box=action_box,
        noise=noise,
        name="linear_tracking",
        params={"d": d, "A": Am.tolist(), "B": Bm.tolist(), "sigma": sigma,
                "cost_cap": float(cost_cap), "beta": beta,
                "action_lipschitz": float(np.linalg.norm(Bm, 2))},
    )


def _check_drift_bound(F, L_drift, action_box: Box, state_halfwidth, n_test, seed):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-state_halfwidth, state_halfwidth, size=(n_test, 1))
    a = action_box.sample(rng, n_test)
    vals = np.asarray(F(x, a), dtype=float).reshape(n_test)
    bad = np.flatnonzero(~(np.abs(vals) <= L_drift))
    if bad.size:
        shown = ", ".join(
            f"(x={x[i, 0]:.6g}, a={a[i].tolist()}) -> {vals[i]:.6g}" for i in bad[:5]
        )
        raise ValueError(
            f"drift exceeds L_drift={L_drift} at {bad.size} of {n_test} sampled points, e.g. {shown}"
        )


def make_bounded_drift(
    L_drift: float,
    sigma: float,
    F: Callable[[np.ndarray, np.ndarray], np.ndarray],
    action_box: Box,
    cost: Callable[[np.ndarray, np.ndarray], np.ndarray],
    cost_bound: float,
    beta: float = 0.9,
    initial: Optional[Callable] = None,
    n_test: int = 100_000,
    test_halfwidth: Optional[float] = None,
    seed: int = 0,
) -> MdpModel:
    """Scalar ``x' = F(x, a) + v``, ``v ~ N(0, sigma^2)``, with ``|F| <= L_drift``.

    Boundedness is checked on ``n_test`` random points with states uniform on
    ``[-h, h]``, ``h = 100 (1 + L_drift)`` unless ``test_halfwidth`` is given,
    and actions uniform on the box. The initial law defaults to the noise law.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not L_drift > 0:
        raise ValueError(f"L_drift must be positive, got {L_drift}")
    if test_halfwidth is None:
        test_halfwidth = 100.0 * (1.0 + L_drift)
    _check_drift_bound(F, L_drift, action_box, test_halfwidth, n_test, seed)
    noise = GaussianNoise(sigma, 1)

    def transition(x, a, rng):
        drift = np.asarray(F(x, a), dtype=float).reshape(x.shape[0], 1)
        return drift + noise.sample(rng, x.shape[0])

    return MdpModel(
        state_dim=1,
        action_dim=action_box.dim,
        transition=transition,
        cost=cost,
        cost_bound=float(cost_bound),
        discount=beta,
        initial=initial if initial is not None else noise.sample,
        action_box=action_box,
        noise=noise,
        name="bounded_drift",
        params={"L_drift": float(L_drift), "sigma": sigma, "beta": beta},
    )


def make_additive_noise(
    F: Callable[[np.ndarray, np.ndarray], np.ndarray],
    noise,
    action_box: Optional[Box],
    cost: Callable[[np.ndarray, np.ndarray], np.ndarray],
    cost_bound: float,
    beta: float = 0.9,
    state_dim: int = 1,
    action_dim: Optional[int] = None,
    initial: Optional[Callable] = None,
    cost_schedule: Optional[CostSchedule] = None,
) -> MdpModel:
    """Generic ``x' = F(x, a) + v``. ``noise`` needs ``sample(rng, n)``.

    Continuity of ``F`` in ``a`` and positivity of the noise density are the
    caller's responsibility. The initial law defaults to the noise law.
    """
    if action_dim is None:
        action_dim = action_box.dim if action_box is not None else state_dim

    def transition(x, a, rng):
        drift = np.asarray(F(x, a), dtype=float).reshape(x.shape[0], state_dim)
        return drift + noise.sample(rng, x.shape[0])

    return MdpModel(
        state_dim=state_dim,
        action_dim=action_dim,
        transition=transition,
        cost=cost,
        cost_bound=float(cost_bound),
        discount=beta,
        initial=initial if initial is not None else noise.sample,
        action_box=action_box,
        cost_schedule=cost_schedule,
        noise=noise,
        name="additive_noise",
        params={"beta": beta},
    )
