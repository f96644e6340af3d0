"""Pure numpy versions of the compiled kernels.

Same contracts as ``_ckernels``; used when the extension is not built or when
``QUANTMDP_PURE_PYTHON=1`` is set.
"""

import numpy as np

# rows per chunk in nearest_brute; bounds the (rows, levels, dim) temporary
_CHUNK = 2048


def nearest_brute(points, levels):
    points = np.ascontiguousarray(points, dtype=float)
    levels = np.ascontiguousarray(levels, dtype=float)
    if levels.shape[1] != points.shape[1]:
        raise ValueError("points and levels must share their dimension")
    if levels.shape[0] == 0:
        raise ValueError("empty codebook")
    out = np.empty(points.shape[0], dtype=np.intp)
    for start in range(0, points.shape[0], _CHUNK):
        block = points[start:start + _CHUNK]
        dist = np.zeros((block.shape[0], levels.shape[0]))
        # axis-by-axis accumulation keeps rounding identical to the C loop
        for t in range(points.shape[1]):
            diff = block[:, t, None] - levels[None, :, t]
            dist += diff * diff
        out[start:start + _CHUNK] = np.argmin(dist, axis=1)
    return out


def bin_counts(samples, lo, hi, bins):
    samples = np.ascontiguousarray(samples, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    n, d = samples.shape
    ncells = bins ** d
    inside = np.all((samples >= lo) & (samples <= hi), axis=1)
    width = (hi - lo) / bins
    safe = np.where(width > 0, width, 1.0)
    idx = np.floor((samples[inside] - lo) / safe).astype(np.int64)
    idx[:, width <= 0] = 0
    np.clip(idx, 0, bins - 1, out=idx)
    # the division can round across an edge; edges are lo + j*w
    x = samples[inside]
    live = width > 0
    down = live & (idx > 0) & (x < lo + idx * width)
    idx -= down
    up = live & (idx < bins - 1) & (x >= lo + (idx + 1) * width)
    idx += up
    cell = np.zeros(idx.shape[0], dtype=np.int64)
    for t in range(d):
        cell = cell * bins + idx[:, t]
    counts = np.bincount(cell, minlength=ncells).astype(np.int64)
    return np.append(counts, np.int64(n - idx.shape[0]))
