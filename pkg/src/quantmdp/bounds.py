"""Closed-form constants and bounds on the cost loss of quantized policies.

Upper bounds (k-level nearest-neighbour quantization of a stationary policy):

* discounted: ``|w_b(pi) - w_b(pi_k)| <= K (1/k)^(1/d)`` with
  ``K = alpha/(1-b) * (K1 - b K2 M + 2 b M K2 / (1-b))``;
* average: ``|w_A(pi) - w_A(pi_k)| <= 2 M C kappa^n + K_n (1/k)^(1/d)`` for
  every ``n >= 0``, ``K_n = (2n-1) K2 alpha M + K1 alpha``.

Lower bound (linear tracking, Shannon lower bound): per-stage distortion at
least ``L (1/k)^(1/d)``, ``L = (d/2) (2^h / (d V_d Gamma(d)))^(1/d)``.

All total-variation quantities use the convention with range ``[0, 2]``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional, Union

import numpy as np
from scipy import special

from .core import Box

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class SystemConstants:
    alpha: float
    beta: float
    K1: float
    K2: float
    M: float
    C: Optional[float] = None
    kappa: Optional[float] = None
    d: int = 1

    def __post_init__(self):
        for name in ("alpha", "K1", "K2", "M"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.C is not None and self.C < 0:
            raise ValueError("C must be nonnegative")
        if self.kappa is not None and not 0.0 < self.kappa < 1.0:
            raise ValueError(f"kappa must lie in (0, 1), got {self.kappa}")
        if self.d < 1:
            raise ValueError("action dimension d must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BoundReport:
    kind: str  # discounted_upper | average_upper | slb_lower
    k: int
    value: float
    details: dict = field(default_factory=dict)

    @property
    def degenerate(self) -> bool:
        return bool(self.details.get("degenerate", False))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "k": self.k, "value": self.value, "details": self.details}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _rate_factor(k: int, d: int) -> float:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return (1.0 / k) ** (1.0 / d)


def discounted_loss_constant(c: SystemConstants) -> float:
    b = c.beta
    if not 0.0 < b < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {b}")
    return c.alpha / (1 - b) * (c.K1 - b * c.K2 * c.M + 2 * b * c.M * c.K2 / (1 - b))


def discounted_gap_bound(c: SystemConstants, k: int) -> BoundReport:
    """``K (1/k)^(1/d)``. A nonpositive ``K`` is reported as-is and flagged degenerate."""
    K = discounted_loss_constant(c)
    return BoundReport("discounted_upper", int(k), K * _rate_factor(k, c.d),
                       {"K": K, "degenerate": K <= 0})


def average_gap_bound(c: SystemConstants, k: int, n: Union[int, str] = "optimize",
                      n_cap: int = 10_000) -> BoundReport:
    """``2 M C kappa^n + K_n (1/k)^(1/d)`` at ``n``, or minimised over ``0..n_cap``.

    The scan is exhaustive and vectorised; the smallest minimising ``n`` wins.
    """
    if c.C is None or c.kappa is None:
        missing = [name for name in ("C", "kappa") if getattr(c, name) is None]
        raise ValueError(f"average-cost bound needs the ergodicity constant(s) {', '.join(missing)}")
    r = _rate_factor(k, c.d)
    if n == "optimize":
        ns = np.arange(n_cap + 1, dtype=float)
    else:
        if int(n) != n or n < 0:
            raise ValueError(f"n must be a nonnegative integer or 'optimize', got {n!r}")
        ns = np.array([float(n)])
    Kn = (2 * ns - 1) * c.K2 * c.alpha * c.M + c.K1 * c.alpha
    values = 2 * c.M * c.C * c.kappa ** ns + Kn * r
    i = int(np.argmin(values))
    n_star = int(ns[i])
    return BoundReport("average_upper", int(k), float(values[i]),
                       {"n": n_star, "K_n": float(Kn[i]),
                        "mixing_term": float(2 * c.M * c.C * c.kappa ** n_star),
                        "optimized": n == "optimize"})


class ErgodicityConstants(NamedTuple):
    C: float
    kappa: float
    epsilon: float


def ergodicity_constants_bounded_gaussian(L_drift: float, sigma: float) -> ErgodicityConstants:
    """Geometric-ergodicity constants of ``x' = F(x, a) + N(0, sigma^2)`` with ``|F| <= L``.

    ``C = 2``, ``kappa = 1 - eps L``, ``eps = exp(-(2L)^2 / (2 sigma^2)) / (sigma sqrt(2 pi))``.
    """
    if not L_drift > 0 or not sigma > 0:
        raise ValueError("L_drift and sigma must be positive")
    eps = math.exp(-((2.0 * L_drift) ** 2) / (2.0 * sigma ** 2)) / (sigma * _SQRT_2PI)
    kappa = 1.0 - eps * L_drift
    if not 0.0 < kappa < 1.0:
        raise ValueError(f"eps*L = {eps * L_drift} gives kappa = {kappa} outside (0, 1)")
    return ErgodicityConstants(2.0, kappa, eps)


def gaussian_tv(delta: float, sigma: float) -> float:
    """``||N(m, s^2 I) - N(m', s^2 I)||_TV = 2 (2 Phi(|m-m'| / 2s) - 1)``."""
    return 2.0 * (2.0 * special.ndtr(abs(delta) / (2.0 * sigma)) - 1.0)


def gaussian_kernel_tv_lipschitz(lipschitz_F_in_a: float, sigma: float) -> float:
    """``K2 = 2 L_F / (sigma sqrt(2 pi))`` for additive Gaussian noise.

    ``gaussian_tv`` is concave in the mean shift with slope ``2/(sigma sqrt(2 pi))``
    at zero, which makes this a global Lipschitz constant.
    """
    if lipschitz_F_in_a < 0 or not sigma > 0:
        raise ValueError("need L_F >= 0 and sigma > 0")
    return 2.0 * lipschitz_F_in_a / (sigma * _SQRT_2PI)


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def slb_constant(d: int, entropy: float, units: str = "bits") -> float:
    """``L = (d/2) (2^h / (d V_d Gamma(d)))^(1/d)`` with ``h`` the noise entropy."""
    if units == "nats":
        entropy = entropy / math.log(2.0)
    elif units != "bits":
        raise ValueError(f"units must be 'bits' or 'nats', got {units!r}")
    if not math.isfinite(entropy):
        raise ValueError("differential entropy must be finite")
    return (d / 2.0) * (2.0 ** entropy / (d * unit_ball_volume(d) * math.gamma(d))) ** (1.0 / d)


def slb_lower_bound(d: int, entropy: float, criterion: str, k: int,
                    beta: Optional[float] = None, units: str = "bits") -> BoundReport:
    """Shannon-lower-bound floor for ``per_stage``, ``discounted`` or ``average`` cost."""
    L = slb_constant(d, entropy, units)
    per_stage = L * _rate_factor(k, d)
    if criterion in ("per_stage", "average"):
        value = per_stage
    elif criterion == "discounted":
        if beta is None or not 0.0 < beta < 1.0:
            raise ValueError("discounted SLB needs beta in (0, 1)")
        value = per_stage / (1.0 - beta)
    else:
        raise ValueError(f"unknown criterion {criterion!r}")
    return BoundReport("slb_lower", int(k), value,
                       {"L": L, "criterion": criterion, "V_d": unit_ball_volume(d),
                        "entropy_bits": entropy if units == "bits" else entropy / math.log(2.0)})


def covering_alpha_for_box(box: Optional[Box], d: Optional[int] = None) -> float:
    """``alpha = sqrt(d) * (max side)`` for the uniform nets of :mod:`quantmdp.quantizer`."""
    if box is None:
        raise ValueError("covering constant needs a bounded action box")
    if d is None:
        d = box.dim
    if d != box.dim:
        raise ValueError(f"box has dimension {box.dim}, not {d}")
    return math.sqrt(d) * float(np.max(box.sides))


def prop8_bound(alpha: float, K2: float, n: int, k: int, d: int) -> float:
    """``alpha K2 (2n - 1) (1/k)^(1/d)`` bound on the TV distance of n-step marginals."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return alpha * K2 * (2 * n - 1) * _rate_factor(k, d)
