"""Domain types for MDPs on real vector spaces.

All model and policy callables are *batched*: states are ``(n, state_dim)``
arrays, actions ``(n, action_dim)`` arrays, costs ``(n,)`` arrays. The
single-vector helpers :func:`policy_action` and :func:`stage_cost` wrap them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

TransitionFn = Callable[[np.ndarray, np.ndarray, np.random.Generator], np.ndarray]
CostFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
InitialFn = Callable[[np.random.Generator, int], np.ndarray]

# slack for cost-range checks; costs are computed in floating point
_COST_SLACK = 1e-9


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[lo_i, hi_i]`` in R^d."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float)).copy()
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float)).copy()
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("box bounds must be matching 1-D vectors")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box bounds must be finite")
        if np.any(hi < lo):
            raise ValueError(f"box has hi < lo: lo={lo}, hi={hi}")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def from_pairs(cls, pairs) -> "Box":
        """``[[lo0, hi0], [lo1, hi1], ...]`` or a single ``[lo, hi]``."""
        arr = np.asarray(pairs, dtype=float)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError(f"box must be a list of [lo, hi] pairs, got {pairs!r}")
        return cls(arr[:, 0], arr[:, 1])

    @classmethod
    def cube(cls, lo: float, hi: float, dim: int) -> "Box":
        return cls(np.full(dim, float(lo)), np.full(dim, float(hi)))

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def sides(self) -> np.ndarray:
        return self.hi - self.lo

    def contains(self, points, atol: float = 0.0) -> np.ndarray:
        pts = np.atleast_2d(points)
        return np.all((pts >= self.lo - atol) & (pts <= self.hi + atol), axis=1)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(n, self.dim))

    def to_pairs(self) -> list:
        return [[float(a), float(b)] for a, b in zip(self.lo, self.hi)]

    def __eq__(self, other):
        if not isinstance(other, Box):
            return NotImplemented
        return np.array_equal(self.lo, other.lo) and np.array_equal(self.hi, other.hi)

    def __hash__(self):
        return hash((self.lo.tobytes(), self.hi.tobytes()))


@dataclass(frozen=True)
class CostSchedule:
    """Per-stage costs ``c_n``: explicit closures for ``n < len(stages)``, ``tail`` after."""

    stages: tuple
    tail: CostFn

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))

    def at(self, n: int) -> CostFn:
        if n < 0:
            raise ValueError("stage index must be nonnegative")
        return self.stages[n] if n < len(self.stages) else self.tail


@dataclass(frozen=True)
class MdpModel:
    """A discounted MDP on R^n states and R^d actions.

    ``transition(x, a, rng)`` must draw all of its randomness from ``rng`` and
    consume the same number of draws for every action, so that two policies
    fed the same generator see the same noise (common random numbers).
    """

    state_dim: int
    action_dim: int
    transition: TransitionFn
    cost: CostFn
    cost_bound: float
    discount: float
    initial: InitialFn
    action_box: Optional[Box] = None
    cost_schedule: Optional[CostSchedule] = None
    noise: object = None
    name: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.state_dim < 1 or self.action_dim < 1:
            raise ValueError("state and action dimensions must be >= 1")
        if not 0.0 < self.discount < 1.0:
            raise ValueError(f"discount must lie in (0, 1), got {self.discount}")
        if not (np.isfinite(self.cost_bound) and self.cost_bound >= 0):
            raise ValueError(f"cost bound M must be finite and >= 0, got {self.cost_bound}")
        if self.action_box is not None and self.action_box.dim != self.action_dim:
            raise DimensionError("action box dimension differs from action_dim")

    def step(self, x: np.ndarray, a: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return np.asarray(self.transition(x, a, rng), dtype=float).reshape(x.shape[0], self.state_dim)

    def costs(self, x: np.ndarray, a: np.ndarray, n: Optional[int] = None) -> np.ndarray:
        fn = self.cost if n is None or self.cost_schedule is None else self.cost_schedule.at(n)
        c = np.asarray(fn(x, a), dtype=float).reshape(x.shape[0])
        if np.any(c < -_COST_SLACK) or np.any(c > self.cost_bound + _COST_SLACK) or np.any(np.isnan(c)):
            bad = np.flatnonzero((c < -_COST_SLACK) | (c > self.cost_bound + _COST_SLACK) | np.isnan(c))[0]
            raise ValueError(
                f"stage cost {c[bad]!r} at x={x[bad]}, a={a[bad]} outside [0, M={self.cost_bound}]"
            )
        return c


class Policy:
    """Base class of the stationary policies."""

    kind: str = ""
    action_dim: int
    state_dim: Optional[int]

    def act(self, x: np.ndarray, z: Optional[np.ndarray] = None) -> np.ndarray:
        raise NotImplementedError

    @property
    def randomized(self) -> bool:
        return self.kind == "randomized"


@dataclass(frozen=True, eq=False)
class DeterministicPolicy(Policy):
    fn: Callable[[np.ndarray], np.ndarray]
    action_dim: int
    state_dim: Optional[int] = None
    name: str = "f"
    kind = "deterministic"

    def act(self, x, z=None):
        a = np.asarray(self.fn(x), dtype=float)
        return a.reshape(x.shape[0], self.action_dim)


@dataclass(frozen=True, eq=False)
class QuantizedPolicy(Policy):
    """``x -> nearest level of the codebook to base(x)``."""

    base: DeterministicPolicy
    codebook: object  # quantizer.Codebook; typed loosely to avoid an import cycle
    kind = "quantized"

    @property
    def action_dim(self) -> int:
        return self.base.action_dim

    @property
    def state_dim(self):
        return self.base.state_dim

    @property
    def name(self) -> str:
        return f"q{self.codebook.size}({self.base.name})"

    def act(self, x, z=None):
        a = self.base.act(x)
        return self.codebook.levels[self.codebook.nearest_indices(a)]


@dataclass(frozen=True, eq=False)
class RandomizedPolicy(Policy):
    """Randomized stationary policy in the ``f(x, z)``, ``z ~ U[0, 1]`` form."""

    selector: Callable[[np.ndarray, np.ndarray], np.ndarray]
    action_dim: int
    state_dim: Optional[int] = None
    description: str = "eta"
    kind = "randomized"

    @property
    def name(self) -> str:
        return self.description

    def act(self, x, z=None):
        if z is None:
            raise ValueError("randomized policy needs a z in [0, 1] per state")
        z = np.asarray(z, dtype=float).reshape(x.shape[0])
        a = np.asarray(self.selector(x, z), dtype=float)
        return a.reshape(x.shape[0], self.action_dim)


@dataclass(frozen=True)
class Trajectory:
    """States ``x_0..x_N``, actions ``a_0..a_N`` and costs ``c(x_t, a_t)``."""

    states: np.ndarray
    actions: np.ndarray
    costs: np.ndarray

    def __post_init__(self):
        n = self.states.shape[0]
        if self.actions.shape[0] != n or self.costs.shape[0] != n:
            raise ValueError("trajectory arrays must have matching lengths")

    @property
    def horizon(self) -> int:
        return self.states.shape[0] - 1


def _as_vector(v, dim: Optional[int], what: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.ndim != 1:
        raise DimensionError(f"{what} must be a vector, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionError(f"{what} has dimension {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} has non-finite coordinates: {arr}")
    return arr


def policy_action(policy: Policy, x, z: Optional[float] = None) -> np.ndarray:
    """Action of ``policy`` at a single state ``x`` (and ``z`` for randomized policies)."""
    xv = _as_vector(x, policy.state_dim, "state")
    if policy.randomized:
        if z is None:
            raise ValueError("randomized policy requires z in [0, 1]")
        if not 0.0 <= z <= 1.0:
            raise ValueError(f"z must lie in [0, 1], got {z}")
        return policy.act(xv[None, :], np.array([z]))[0]
    if z is not None:
        raise ValueError("z is only meaningful for randomized policies")
    return policy.act(xv[None, :])[0]


def stage_cost(model: MdpModel, x, a, n: Optional[int] = None) -> float:
    """``c(x, a)``, or ``c_n(x, a)`` when ``n`` is given and the model has a schedule.

    Without a schedule every stage uses ``c``.
    """
    xv = _as_vector(x, model.state_dim, "state")
    av = _as_vector(a, model.action_dim, "action")
    return float(model.costs(xv[None, :], av[None, :], n)[0])
