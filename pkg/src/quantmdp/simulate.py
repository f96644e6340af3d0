"""Rollouts and Monte Carlo estimates of discounted, average and total cost.

Rollouts run in fixed-size blocks, vectorised across the block. Block ``b`` of
root seed ``s`` draws from three streams seeded by
``SeedSequence(s, spawn_key=(b, purpose))`` with purpose 0 = initial states,
1 = transition noise, 2 = randomization variables ``z``. Estimates therefore
depend on (seed, block size) only, never on the number of worker threads, and
two policies run with the same seed see the same noise (common random numbers).
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import MdpModel, Policy, Trajectory, _as_vector

DEFAULT_BLOCK_SIZE = 4096
_INIT, _NOISE, _SELECT = 0, 1, 2
# first spawn-key entry of derived seeds; block indices never get this large
_DERIVED = 2 ** 40


@dataclass(frozen=True)
class RunSeed:
    """Root seed plus the block layout used to derive per-block streams."""

    root_seed: int
    block_size: int = DEFAULT_BLOCK_SIZE

    def __post_init__(self):
        if not 0 <= int(self.root_seed) < 2 ** 64:
            raise ValueError(f"root seed must be a 64-bit unsigned integer, got {self.root_seed}")
        if self.block_size < 1:
            raise ValueError("block size must be >= 1")

    def stream(self, block: int, purpose: int) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.root_seed), spawn_key=(int(block), int(purpose)))
        return np.random.Generator(np.random.PCG64(ss))

    def derive(self, *key: int) -> "RunSeed":
        """Independent root seed for a sub-experiment; a pure function of (root, key)."""
        ss = np.random.SeedSequence(int(self.root_seed), spawn_key=(_DERIVED,) + tuple(int(k) for k in key))
        return RunSeed(int(ss.generate_state(1, np.uint64)[0]), self.block_size)

    def block_of(self, rollout: int) -> tuple:
        """``(block, offset)`` of rollout ``i``."""
        return divmod(rollout, self.block_size)


def _as_seed(seed) -> RunSeed:
    return seed if isinstance(seed, RunSeed) else RunSeed(int(seed))


@dataclass(frozen=True)
class CostEstimate:
    mean: float
    std_error: float
    n_rollouts: int
    horizon_used: int
    truncation_bias_bound: float = 0.0

    @property
    def ci95_halfwidth(self) -> float:
        return 1.96 * self.std_error

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std_error": self.std_error,
            "ci95": self.ci95_halfwidth,
            "n_rollouts": self.n_rollouts,
            "horizon": self.horizon_used,
            "bias_bound": self.truncation_bias_bound,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def summarize(samples, horizon: int, bias: float = 0.0) -> CostEstimate:
    """Sample mean and standard error of per-rollout values.

    The mean is computed around the first sample, so constant samples give
    that constant back exactly and a zero standard error.
    """
    s = np.asarray(samples, dtype=float).ravel()
    if s.size < 1:
        raise ValueError("need at least one sample")
    dev = s - s[0]
    mean = float(s[0] + dev.mean())
    se = float(dev.std(ddof=1) / math.sqrt(s.size)) if s.size > 1 else 0.0
    return CostEstimate(mean, se, int(s.size), int(horizon), float(bias))


def _initial_states(model: MdpModel, x0, rng: np.random.Generator, size: int) -> np.ndarray:
    if x0 is None:
        x = np.asarray(model.initial(rng, size), dtype=float)
        return x.reshape(size, model.state_dim)
    xv = _as_vector(x0, model.state_dim, "initial state")
    return np.repeat(xv[None, :], size, axis=0)


def _act(policy: Policy, x: np.ndarray, z_rng: np.random.Generator) -> np.ndarray:
    if policy.randomized:
        return policy.act(x, z_rng.random(x.shape[0]))
    return policy.act(x)


def _check_dims(model: MdpModel, policy: Policy):
    if policy.action_dim != model.action_dim:
        raise ValueError(f"policy action dim {policy.action_dim} != model action dim {model.action_dim}")
    if policy.state_dim is not None and policy.state_dim != model.state_dim:
        raise ValueError(f"policy state dim {policy.state_dim} != model state dim {model.state_dim}")


def _run_block(model, policy, x0, n_stages, seed: RunSeed, block, size,
               weight: Optional[Callable[[int], Optional[float]]] = None,
               use_schedule: bool = False, record: bool = False):
    """Simulate ``size`` rollouts for stages ``0..n_stages``.

    Returns ``(final_states, weighted_cost_sums, record_or_None)``. ``weight(t)``
    returning ``None`` skips the cost at stage ``t``; without ``weight`` no costs
    are evaluated and no action is taken at the final stage.
    """
    init_rng = seed.stream(block, _INIT)
    noise_rng = seed.stream(block, _NOISE)
    z_rng = seed.stream(block, _SELECT)
    x = _initial_states(model, x0, init_rng, size)
    acc = np.zeros(size)
    states, actions, costs = [], [], []
    for t in range(n_stages + 1):
        last = t == n_stages
        if last and weight is None and not record:
            break
        a = _act(policy, x, z_rng)
        w = weight(t) if weight is not None else None
        if w is not None or record:
            c = model.costs(x, a, t if use_schedule else None)
            if w is not None:
                acc += w * c
            if record:
                states.append(x)
                actions.append(a)
                costs.append(c)
        if not last:
            x = model.step(x, a, noise_rng)
    rec = (np.stack(states, 1), np.stack(actions, 1), np.stack(costs, 1)) if record else None
    return x, acc, rec


def _map_blocks(fn, n_total: int, seed: RunSeed, workers: int = 1) -> list:
    """Apply ``fn(block, size)`` to every block; results in block order."""
    bs = seed.block_size
    jobs = [(b, min(bs, n_total - b * bs)) for b in range(-(-n_total // bs))]
    if workers <= 1 or len(jobs) == 1:
        return [fn(b, s) for b, s in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def simulate_sums(model, policy, n_rollouts, n_stages, seed, weight, x0=None,
                  use_schedule=False, workers=1) -> np.ndarray:
    """Per-rollout ``sum_t weight(t) c(x_t, a_t)`` over stages ``0..n_stages``."""
    _check_dims(model, policy)
    seed = _as_seed(seed)
    parts = _map_blocks(
        lambda b, s: _run_block(model, policy, x0, n_stages, seed, b, s, weight, use_schedule)[1],
        n_rollouts, seed, workers)
    return np.concatenate(parts)


def simulate_states(model, policy, n_rollouts, n_stages, seed, x0=None, workers=1) -> np.ndarray:
    """States ``x_{n_stages}`` of ``n_rollouts`` independent rollouts."""
    _check_dims(model, policy)
    seed = _as_seed(seed)
    parts = _map_blocks(
        lambda b, s: _run_block(model, policy, x0, n_stages, seed, b, s)[0],
        n_rollouts, seed, workers)
    return np.concatenate(parts)


def rollout(model: MdpModel, policy: Policy, x0=None, horizon: int = 0, seed=0) -> Trajectory:
    """One trajectory of ``horizon + 1`` stages; ``x0=None`` samples the initial law."""
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    _check_dims(model, policy)
    run = RunSeed(int(seed), block_size=1)
    _, _, (xs, acts, cs) = _run_block(model, policy, x0, horizon, run, 0, 1, record=True)
    return Trajectory(xs[0], acts[0], cs[0])


def horizon_for_tolerance(M: float, beta: float, tol: float) -> int:
    """Smallest ``N >= 0`` with ``M beta^(N+1) / (1 - beta) <= tol``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    if M <= 0:
        return 0
    target = tol * (1 - beta) / M
    if beta <= target:
        return 0
    n = max(0, math.ceil(math.log(target) / math.log(beta)) - 1)
    # the logarithm can be off by one ulp either way
    while n > 0 and M * beta ** n / (1 - beta) <= tol:
        n -= 1
    while M * beta ** (n + 1) / (1 - beta) > tol:
        n += 1
    return n


def _discount_setup(model: MdpModel, tol: Optional[float]):
    M, beta = model.cost_bound, model.discount
    if tol is None:
        tol = 1e-3 * M / (1 - beta) if M > 0 else 1.0
    N = horizon_for_tolerance(M, beta, tol)
    bias = M * beta ** (N + 1) / (1 - beta)
    return N, bias, (lambda t: beta ** t)


def _average_weight(burn_in: int):
    return lambda t: 1.0 if t >= burn_in else None


def estimate_discounted_cost(model, policy, n_rollouts: int, tol: Optional[float] = None,
                             seed=0, x0=None, workers: int = 1) -> CostEstimate:
    """Truncated discounted cost, horizon from :func:`horizon_for_tolerance`.

    ``tol`` defaults to ``1e-3 M / (1 - beta)``; the reported bias bound is the
    exact geometric tail ``M beta^(N+1) / (1 - beta)`` (at most ``tol``).
    """
    if n_rollouts < 2:
        raise ValueError("n_rollouts must be >= 2")
    N, bias, weight = _discount_setup(model, tol)
    sums = simulate_sums(model, policy, n_rollouts, N, seed, weight, x0, workers=workers)
    return summarize(sums, N, bias)


def estimate_average_cost(model, policy, x0=None, burn_in: int = 1000, n_steps: int = 1000,
                          n_rollouts: int = 100, seed=0, workers: int = 1) -> CostEstimate:
    """Mean over rollouts of ``(1/n_steps) sum_{t=burn_in}^{burn_in+n_steps-1} c(x_t, a_t)``."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    sums = simulate_sums(model, policy, n_rollouts, burn_in + n_steps - 1, seed,
                         _average_weight(burn_in), x0, workers=workers)
    return summarize(sums / n_steps, burn_in + n_steps - 1, 0.0)


def estimate_total_cost(model, policy, horizon: int, n_rollouts: int, seed=0, x0=None,
                        workers: int = 1) -> CostEstimate:
    """Finite-horizon total ``sum_{n=0}^{horizon} c_n(x_n, a_n)`` under the model's schedule."""
    if model.cost_schedule is None:
        raise ValueError("total cost needs a model with a cost schedule c_n")
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    sums = simulate_sums(model, policy, n_rollouts, horizon, seed, lambda t: 1.0, x0,
                         use_schedule=True, workers=workers)
    return summarize(sums, horizon, 0.0)


@dataclass(frozen=True)
class PairedSums:
    """Per-rollout criterion values of two policies under common random numbers."""

    a: np.ndarray
    b: np.ndarray
    horizon: int
    bias_bound: float

    @property
    def diff(self) -> np.ndarray:
        return self.a - self.b

    def estimate(self) -> CostEstimate:
        return summarize(self.diff, self.horizon, self.bias_bound)


def paired_rollout_sums(model, policy_a, policy_b, criterion: str = "discounted",
                        n_rollouts: int = 1000, seed=0, tol: Optional[float] = None,
                        burn_in: int = 1000, n_steps: int = 1000, x0=None,
                        horizon: Optional[int] = None, workers: int = 1) -> PairedSums:
    if criterion == "discounted":
        N, bias, weight = _discount_setup(model, tol)
        # both truncated tails lie in [0, bias], so their difference does too
        run = lambda pol: simulate_sums(model, pol, n_rollouts, N, seed, weight, x0, workers=workers)
        return PairedSums(run(policy_a), run(policy_b), N, bias)
    if criterion == "average":
        last = burn_in + n_steps - 1
        run = lambda pol: simulate_sums(model, pol, n_rollouts, last, seed,
                                        _average_weight(burn_in), x0, workers=workers) / n_steps
        return PairedSums(run(policy_a), run(policy_b), last, 0.0)
    if criterion == "total":
        if model.cost_schedule is None:
            raise ValueError("total cost needs a model with a cost schedule c_n")
        if horizon is None:
            raise ValueError("total criterion needs a horizon")
        run = lambda pol: simulate_sums(model, pol, n_rollouts, horizon, seed, lambda t: 1.0,
                                        x0, use_schedule=True, workers=workers)
        return PairedSums(run(policy_a), run(policy_b), horizon, 0.0)
    raise ValueError(f"unknown criterion {criterion!r}; expected discounted, average or total")


def paired_cost_gap(model, policy_a, policy_b, criterion: str = "discounted",
                    n_rollouts: int = 1000, seed=0, **params) -> CostEstimate:
    """Estimate of ``cost(policy_a) - cost(policy_b)`` with common random numbers."""
    if n_rollouts < 2:
        raise ValueError("n_rollouts must be >= 2")
    return paired_rollout_sums(model, policy_a, policy_b, criterion, n_rollouts, seed,
                               **params).estimate()
