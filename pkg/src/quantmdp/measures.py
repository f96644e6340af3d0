"""Binned state distributions, total variation and ergodicity diagnostics.

Total variation uses the convention ``||p - q||_TV = sum |p_i - q_i|`` over
cells, range ``[0, 2]``. Binning can only merge mass, so a binned TV never
exceeds the TV of the underlying laws; checks of upper bounds are sound.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr

from ._kernels import bin_counts
from .bounds import prop8_bound
from .core import Box, MdpModel, Policy
from .quantizer import Codebook, quantize_policy
from .simulate import RunSeed, _act, _as_seed, _check_dims, _initial_states, simulate_states

_NORM_TOL = 1e-12


class GridMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BinnedMeasure:
    """Histogram on ``bins`` cells per axis of ``box`` plus a trailing overflow cell."""

    box: Box
    bins: int
    mass: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mass, dtype=float)
        if m.shape != (self.bins ** self.box.dim + 1,):
            raise ValueError(f"mass has shape {m.shape}, expected ({self.bins ** self.box.dim + 1},)")
        if np.any(m < 0) or abs(m.sum() - 1.0) > _NORM_TOL:
            raise ValueError(f"mass must be a probability vector, sums to {m.sum()!r}")
        m.flags.writeable = False
        object.__setattr__(self, "mass", m)

    @classmethod
    def from_samples(cls, samples, box: Box, bins: int) -> "BinnedMeasure":
        pts = np.ascontiguousarray(np.asarray(samples, dtype=float).reshape(-1, box.dim))
        if pts.shape[0] == 0:
            raise ValueError("need at least one sample")
        counts = bin_counts(pts, np.ascontiguousarray(box.lo), np.ascontiguousarray(box.hi), int(bins))
        return cls.from_counts(counts, box, bins)

    @classmethod
    def from_counts(cls, counts, box: Box, bins: int) -> "BinnedMeasure":
        counts = np.asarray(counts, dtype=float)
        return cls(box, int(bins), counts / counts.sum())

    @property
    def n_cells(self) -> int:
        return self.mass.shape[0]

    @property
    def overflow(self) -> float:
        return float(self.mass[-1])

    def cell_edges(self, cell: int) -> tuple:
        """``(lo, hi)`` vectors of a regular cell (row-major index)."""
        width = self.box.sides / self.bins
        idx = []
        for _ in range(self.box.dim):
            cell, j = divmod(cell, self.bins)
            idx.append(j)
        idx = np.array(idx[::-1])
        lo = self.box.lo + idx * width
        return lo, lo + width

    def to_csv(self) -> str:
        """Columns ``cell, lo_0, hi_0, ..., mass``; the overflow row has blank edges."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["cell"]
        for t in range(self.box.dim):
            header += [f"lo_{t}", f"hi_{t}"]
        w.writerow(header + ["mass"])
        for i in range(self.n_cells - 1):
            lo, hi = self.cell_edges(i)
            row = [i]
            for a, b in zip(lo, hi):
                row += [repr(float(a)), repr(float(b))]
            w.writerow(row + [repr(float(self.mass[i]))])
        w.writerow(["overflow"] + [""] * (2 * self.box.dim) + [repr(float(self.mass[-1]))])
        return buf.getvalue()

    def sample(self, rng: np.random.Generator, n: int) -> tuple:
        """Draw ``n`` points uniformly within cells chosen by mass.

        Returns ``(points, overflow_mask)``; overflow draws have no location and
        are returned as NaN rows.
        """
        cells = rng.choice(self.n_cells, size=n, p=self.mass)
        over = cells == self.n_cells - 1
        width = self.box.sides / self.bins
        idx = np.zeros((n, self.box.dim), dtype=np.int64)
        rest = np.where(over, 0, cells)
        for t in reversed(range(self.box.dim)):
            rest, idx[:, t] = np.divmod(rest, self.bins)
        pts = self.box.lo + (idx + rng.random((n, self.box.dim))) * width
        pts[over] = np.nan
        return pts, over


def tv_distance(p: BinnedMeasure, q: BinnedMeasure) -> float:
    """``sum_cells |p - q|`` including the overflow cell, in ``[0, 2]``."""
    if p.bins != q.bins or p.box != q.box:
        raise GridMismatch("TV distance needs measures on the same box and bins")
    return float(np.sum(np.abs(p.mass - q.mass)))


def noise_floor(bins_total: int, n_samples: int) -> float:
    """``3 sqrt(cells / samples)``: Monte Carlo scale of a binned TV estimate."""
    return 3.0 * math.sqrt(bins_total / n_samples)


def _floor_for(box: Box, bins: int, n_samples: int) -> float:
    return noise_floor(bins ** box.dim, n_samples)


def gaussian_binned_measure(box: Box, bins: int, mean=0.0, sigma: float = 1.0) -> BinnedMeasure:
    """Exact cell masses of ``N(mean, sigma^2 I)`` (independent coordinates)."""


    mean = np.broadcast_to(np.asarray(mean, dtype=float), (box.dim,))
    per_axis = []
    for t in range(box.dim):
        edges = np.linspace(box.lo[t], box.hi[t], bins + 1)
        per_axis.append(np.diff(ndtr((edges - mean[t]) / sigma)))
    mass = per_axis[0]
    for p in per_axis[1:]:
        mass = np.outer(mass, p).ravel()
    mass = np.append(mass, max(0.0, 1.0 - mass.sum()))
    return BinnedMeasure(box, bins, mass / mass.sum())


def noise_binned_measure(model: MdpModel, box: Box, bins: int, n_quad: int = 64) -> BinnedMeasure:
    """Cell masses of the model's noise law, from its density.

    Needs ``model.noise.density``; the cell integrals use Gauss-Legendre
    quadrature in each axis (``n_quad`` nodes per cell and axis).
    """
    noise = model.noise
    density = getattr(noise, "density", None)
    if density is None:
        raise ValueError(f"model {model.name or '<unnamed>'} has no noise density; "
                         "exact noise measures are unavailable")
    if box.dim != 1:
        raise ValueError("density quadrature is implemented for scalar states only")
    nodes, weights = np.polynomial.legendre.leggauss(n_quad)
    edges = np.linspace(box.lo[0], box.hi[0], bins + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    pts = (mid[:, None] + half[:, None] * nodes[None, :]).reshape(-1, 1)
    vals = np.asarray(density(pts), dtype=float).reshape(bins, n_quad)
    mass = np.clip((vals * weights).sum(axis=1) * half, 0.0, None)
    mass = np.append(mass, max(0.0, 1.0 - mass.sum()))
    return BinnedMeasure(box, bins, mass / mass.sum())


def empirical_marginal(model: MdpModel, policy: Policy, init=None, n: int = 0,
                       n_samples: int = 10_000, box: Optional[Box] = None, bins: int = 50,
                       seed=0, workers: int = 1) -> BinnedMeasure:
    """Histogram of ``x_n`` over ``n_samples`` independent rollouts.

    ``init`` is a fixed state or ``None`` for the model's initial law.
    """
    if n < 0 or n_samples < 1:
        raise ValueError("need n >= 0 and n_samples >= 1")
    if box is None:
        raise ValueError("empirical_marginal needs a state box")
    states = simulate_states(model, policy, n_samples, n, seed, init, workers=workers)
    return BinnedMeasure.from_samples(states, box, bins)


def _chain_states(model, policy, x0, burn_in, n_samples, thinning, seed: RunSeed,
                  n_chains: int) -> np.ndarray:
    rng_init, rng_noise, rng_z = seed.stream(0, 0), seed.stream(0, 1), seed.stream(0, 2)
    x = _initial_states(model, x0, rng_init, n_chains)
    per_chain = -(-n_samples // n_chains)
    out = np.empty((per_chain, n_chains, model.state_dim))
    for _ in range(burn_in):
        x = model.step(x, _act(policy, x, rng_z), rng_noise)
    for i in range(per_chain):
        for _ in range(thinning):
            x = model.step(x, _act(policy, x, rng_z), rng_noise)
        out[i] = x
    return out.reshape(-1, model.state_dim)[:n_samples]


def estimate_invariant_measure(model: MdpModel, policy: Policy, x0=None, burn_in: int = 1000,
                               n_samples: int = 10_000, thinning: int = 1,
                               box: Optional[Box] = None, bins: int = 50, seed=0,
                               n_chains: int = 1) -> BinnedMeasure:
    """Histogram of thinned states after burn-in.

    ``n_chains`` long chains run side by side (default one); each contributes
    every ``thinning``-th state after ``burn_in`` steps.
    """
    if burn_in < 0 or thinning < 1 or n_chains < 1:
        raise ValueError("need burn_in >= 0, thinning >= 1, n_chains >= 1")
    if box is None:
        raise ValueError("estimate_invariant_measure needs a state box")
    _check_dims(model, policy)
    states = _chain_states(model, policy, x0, burn_in, n_samples, thinning, _as_seed(seed), n_chains)
    return BinnedMeasure.from_samples(states, box, bins)


def push_forward(measure: BinnedMeasure, model: MdpModel, policy: Policy, n_samples: int,
                 seed=0) -> BinnedMeasure:
    """One kernel step applied to a histogram: resample cells, move, re-bin.

    Overflow mass has no location and stays in the overflow cell.
    """
    rs = _as_seed(seed)
    pts, over = measure.sample(rs.stream(0, 0), n_samples)
    inside = pts[~over]
    moved = model.step(inside, _act(policy, inside, rs.stream(0, 2)), rs.stream(0, 1))
    counts = bin_counts(np.ascontiguousarray(moved), np.ascontiguousarray(measure.box.lo),
                        np.ascontiguousarray(measure.box.hi), measure.bins)
    counts[-1] += int(over.sum())
    return BinnedMeasure.from_counts(counts, measure.box, measure.bins)


@dataclass(frozen=True)
class ErgodicityProfile:
    tv_by_n: np.ndarray  # entry i is n = i + 1
    noise_floor: float
    fitted_kappa: Optional[float]
    fitted_C: Optional[float]
    bound_C: Optional[float] = None
    bound_kappa: Optional[float] = None

    @property
    def resolved(self) -> bool:
        return self.fitted_kappa is not None

    @property
    def ns(self) -> np.ndarray:
        return np.arange(1, self.tv_by_n.shape[0] + 1)

    def bound(self) -> Optional[np.ndarray]:
        if self.bound_C is None or self.bound_kappa is None:
            return None
        return self.bound_C * self.bound_kappa ** self.ns

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "tv", "bound"])
        b = self.bound()
        for i, n in enumerate(self.ns):
            w.writerow([int(n), repr(float(self.tv_by_n[i])), "" if b is None else repr(float(b[i]))])
        return buf.getvalue()


def fit_geometric(ns, tv, floor: float) -> tuple:
    """Least-squares fit of ``log tv = log C + n log kappa`` over entries above ``floor``.

    Returns ``(C, kappa)`` or ``(None, None)`` when fewer than two entries
    qualify or the fitted rate is not in ``(0, 1)``.
    """
    ns = np.asarray(ns, dtype=float)
    tv = np.asarray(tv, dtype=float)
    keep = tv > floor
    if np.count_nonzero(keep) < 2:
        return None, None
    slope, intercept = np.polyfit(ns[keep], np.log(tv[keep]), 1)
    kappa = math.exp(slope)
    if not 0.0 < kappa < 1.0:
        return None, None
    return math.exp(intercept), kappa


def ergodicity_profile(model: MdpModel, policy: Policy, x0, n_max: int, per_n_samples: int,
                       box: Box, bins: int = 50, seed=0, invariant: Optional[BinnedMeasure] = None,
                       floor: Optional[float] = None, bound_C: Optional[float] = None,
                       bound_kappa: Optional[float] = None, burn_in: int = 1000,
                       thinning: int = 5, n_chains: int = 1) -> ErgodicityProfile:
    """``TV(lambda_n^x, nu)`` for ``n = 1..n_max`` with a geometric fit.

    ``lambda_n^x`` is estimated from ``per_n_samples`` chains started at ``x0``;
    ``nu`` from :func:`estimate_invariant_measure` with an independent seed
    stream unless ``invariant`` is given.
    """
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    _check_dims(model, policy)
    rs = _as_seed(seed)
    if invariant is None:
        invariant = estimate_invariant_measure(model, policy, x0, burn_in, per_n_samples, thinning,
                                               box, bins, rs.derive(1), n_chains)
    if floor is None:
        floor = _floor_for(box, bins, per_n_samples)
    tvs = np.empty(n_max)
    # one batch of chains, histogrammed at every n; blocks keep memory bounded
    counts = np.zeros((n_max, bins ** box.dim + 1), dtype=np.int64)
    bs = rs.block_size
    for b in range(-(-per_n_samples // bs)):
        size = min(bs, per_n_samples - b * bs)
        init_rng, noise_rng, z_rng = rs.stream(b, 0), rs.stream(b, 1), rs.stream(b, 2)
        x = _initial_states(model, x0, init_rng, size)
        for n in range(1, n_max + 1):
            x = model.step(x, _act(policy, x, z_rng), noise_rng)
            counts[n - 1] += bin_counts(np.ascontiguousarray(x), np.ascontiguousarray(box.lo),
                                        np.ascontiguousarray(box.hi), bins)
    for n in range(n_max):
        tvs[n] = tv_distance(BinnedMeasure.from_counts(counts[n], box, bins), invariant)
    C, kappa = fit_geometric(np.arange(1, n_max + 1), tvs, floor)
    return ErgodicityProfile(tvs, floor, kappa, C, bound_C, bound_kappa)


@dataclass(frozen=True)
class MarginalTVRow:
    n: int
    tv: float
    bound: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.tv <= self.tolerance


def check_marginal_tv_bound(model: MdpModel, policy: Policy, codebook: Codebook,
                            n_list: Sequence[int], per_n_samples: int, box: Box, bins: int,
                            alpha: float, K2: float, k: Optional[int] = None,
                            d: Optional[int] = None, seed=0, init=None,
                            floor_multiple: float = 1.0) -> list:
    """Binned ``TV(lambda_n^pi, lambda_n^pi_k)`` against ``alpha K2 (2n-1) (1/k)^(1/d)``.

    Both marginals use the same seed (common random numbers). A row passes
    when the estimate is at most bound + ``floor_multiple`` noise floors.
    """
    quantized = quantize_policy(policy, codebook)
    k = codebook.size if k is None else k
    d = codebook.dim if d is None else d
    floor = _floor_for(box, bins, per_n_samples)
    rows = []
    for n in n_list:
        p = empirical_marginal(model, policy, init, n, per_n_samples, box, bins, seed)
        q = empirical_marginal(model, quantized, init, n, per_n_samples, box, bins, seed)
        bound = prop8_bound(alpha, K2, n, k, d)
        rows.append(MarginalTVRow(int(n), tv_distance(p, q), bound, bound + floor_multiple * floor))
    return rows
