"""Finite action nets and nearest-neighbour quantization of policies.

Codebooks keep their levels in a fixed order; the nearest level is the one of
minimum Euclidean distance, ties going to the smallest index. Uniform nets are
cell-centred grids, for which the covering radius is known exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._kernels import nearest_brute
from .core import Box, DeterministicPolicy, DimensionError, Policy, QuantizedPolicy


@dataclass(frozen=True, eq=False)
class Codebook:
    """Finite level set ``Lambda_k`` covering an action box.

    ``axes`` is set when the levels form a Cartesian product of sorted per-axis
    values listed in lexicographic order. Nearest-level search then runs axis by
    axis in O(n d) instead of brute force over all levels.
    """

    levels: np.ndarray
    box: Box
    covering_radius: float
    axes: Optional[tuple] = None

    def __post_init__(self):
        levels = np.array(self.levels, dtype=float, ndmin=2)
        if levels.shape[0] == 0:
            raise ValueError("codebook must have at least one level")
        levels.flags.writeable = False
        object.__setattr__(self, "levels", levels)

    @property
    def size(self) -> int:
        return self.levels.shape[0]

    @property
    def dim(self) -> int:
        return self.levels.shape[1]

    @property
    def rate_bits(self) -> float:
        return math.log2(self.size)

    def nearest_indices(self, points) -> np.ndarray:
        """Indices of the nearest level for each row of ``points``."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None] if self.dim == 1 else pts[None, :]
        if pts.shape[1] != self.dim:
            raise DimensionError(f"points have dimension {pts.shape[1]}, codebook has {self.dim}")
        if self.axes is None:
            return nearest_brute(np.ascontiguousarray(pts), np.ascontiguousarray(self.levels))
        return _product_nearest(pts, self.axes)

    def to_text(self) -> str:
        """One level per line, comma-separated coordinates (``repr`` precision)."""
        return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in self.levels)

    @classmethod
    def from_levels(cls, levels, box: Optional[Box] = None) -> "Codebook":
        """Codebook from explicit levels; ``box`` defaults to their bounding box.

        The covering radius is exact for d = 1 and for product grids; other
        codebooks in d >= 2 are rejected.
        """
        arr = np.array(levels, dtype=float, ndmin=2)
        if arr.ndim == 2 and arr.shape[0] == 1 and np.ndim(levels) == 1 and len(levels) > 1:
            arr = arr.T  # a flat list of scalars is a 1-D codebook
        if arr.shape[0] == 0:
            raise ValueError("codebook must have at least one level")
        if len({row.tobytes() for row in arr}) != arr.shape[0]:
            raise ValueError("codebook levels must be distinct")
        if box is None:
            box = Box(arr.min(axis=0), arr.max(axis=0))
        if box.dim != arr.shape[1]:
            raise DimensionError("box and levels differ in dimension")
        if not np.all(box.contains(arr)):
            raise ValueError("codebook levels must lie inside the box")
        axes = _product_axes(arr)
        if axes is None and arr.shape[1] > 1:
            raise ValueError("exact covering radius is only available for d = 1 or product grids")
        if axes is None:  # 1-D but not sorted: still exact via the sorted values
            radius = _axis_radius(np.sort(arr[:, 0]), box.lo[0], box.hi[0])
        else:
            radius = math.sqrt(sum(
                _axis_radius(ax, lo, hi) ** 2 for ax, lo, hi in zip(axes, box.lo, box.hi)
            ))
        return cls(arr, box, radius, axes)

    @classmethod
    def from_text(cls, text: str, box: Optional[Box] = None) -> "Codebook":
        rows = [line.split(",") for line in text.splitlines() if line.strip()]
        return cls.from_levels(np.array(rows, dtype=float), box)


def _product_axes(levels: np.ndarray) -> Optional[tuple]:
    """Per-axis sorted values if ``levels`` is their lexicographic Cartesian product."""
    axes = tuple(np.unique(levels[:, t]) for t in range(levels.shape[1]))
    if math.prod(len(a) for a in axes) != levels.shape[0]:
        return None
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, levels.shape[1])
    if not np.array_equal(grid, levels):
        return None
    for a in axes:
        a.flags.writeable = False
    return axes


def _axis_radius(values: np.ndarray, lo: float, hi: float) -> float:
    """Largest distance from a point of ``[lo, hi]`` to the nearest of ``values``."""
    r = max(values[0] - lo, hi - values[-1])
    if values.shape[0] > 1:
        r = max(r, float(np.max(np.diff(values))) / 2.0)
    return float(r)


def _product_nearest(points: np.ndarray, axes: tuple) -> np.ndarray:
    index = np.zeros(points.shape[0], dtype=np.intp)
    for t, values in enumerate(axes):
        m = values.shape[0]
        p = points[:, t]
        if m == 1:
            j = np.zeros(p.shape[0], dtype=np.intp)
        else:
            # compare the two bracketing levels; "<=" sends ties to the lower one
            upper = np.clip(np.searchsorted(values, p, side="left"), 1, m - 1)
            lower = upper - 1
            go_low = np.abs(p - values[lower]) <= np.abs(values[upper] - p)
            j = np.where(go_low, lower, upper)
        index = index * m + j
    return index


def _grid_cells_per_axis(k: int, d: int) -> int:
    """Largest integer ``m`` with ``m**d <= k`` (exact integer root)."""
    m = max(1, int(round(k ** (1.0 / d))))
    while m ** d > k:
        m -= 1
    while (m + 1) ** d <= k:
        m += 1
    return m


def build_uniform_net(box: Box, k: int) -> Codebook:
    """Cell-centred uniform grid with ``floor(k**(1/d))`` cells per axis.

    Axes of zero length get a single level and do not count towards ``d``.

    >>> cb = build_uniform_net(Box.cube(-1, 1, 1), 4)
    >>> cb.levels.ravel().tolist(), cb.covering_radius
    ([-0.75, -0.25, 0.25, 0.75], 0.25)
    """
    if int(k) != k or k < 1:
        raise ValueError(f"level count k must be an integer >= 1, got {k!r}")
    k = int(k)
    live = box.sides > 0
    d_eff = int(np.count_nonzero(live))
    if d_eff == 0:
        return Codebook(box.lo[None, :].copy(), box, 0.0, tuple(box.lo[t:t + 1] for t in range(box.dim)))
    m = _grid_cells_per_axis(k, d_eff)
    axes = []
    for t in range(box.dim):
        if live[t]:
            width = box.sides[t] / m
            axes.append(box.lo[t] + width * (np.arange(m) + 0.5))
        else:
            axes.append(box.lo[t:t + 1].copy())
    for a in axes:
        a.flags.writeable = False
    levels = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, box.dim)
    radius = math.sqrt(float(np.sum((box.sides[live] / (2 * m)) ** 2)))
    return Codebook(levels, box, radius, tuple(axes))


def nearest_level(codebook: Codebook, a) -> tuple:
    """``(index, level)`` of the level nearest to the single action ``a``."""
    av = np.atleast_1d(np.asarray(a, dtype=float))
    if av.shape != (codebook.dim,):
        raise DimensionError(f"action has shape {av.shape}, codebook dimension is {codebook.dim}")
    if not np.all(np.isfinite(av)):
        raise ValueError("action must be finite")
    i = int(codebook.nearest_indices(av[None, :])[0])
    return i, codebook.levels[i].copy()


def quantize_policy(policy: Policy, codebook: Codebook) -> QuantizedPolicy:
    """Nearest-neighbour quantized approximation ``x -> q_k(f(x))``."""
    if not isinstance(policy, DeterministicPolicy):
        raise TypeError(
            f"quantize_policy needs a deterministic policy, got {policy.kind!r}; "
            "use randomized.quantize_randomized for randomized policies"
        )
    if policy.action_dim != codebook.dim:
        raise DimensionError(f"policy action dim {policy.action_dim} != codebook dim {codebook.dim}")
    return QuantizedPolicy(policy, codebook)


def rate(codebook: Codebook) -> float:
    """Rate in bits: ``log2`` of the number of levels."""
    return codebook.rate_bits
