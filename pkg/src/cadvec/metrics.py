"""Raster and vector similarity metrics with a tiled evaluation harness.

Report schema of :func:`patch_evaluate`::

    {
      "patch_size": 512, "frechet_patch": 64, "stroke": 3,
      "metrics": ["iou", ...],
      "tiles": {"iou": [{"row": r0, "col": c0, "value": v}, ...], ...},
      "skipped_empty": {"iou": n, ...},
      "aggregate": {"iou": {"count", "mean", "median", "p10", "p90", "min", "max"}, ...}
    }

Tiles are listed in raster order of their top-left corner.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage as ndi
from scipy.spatial import cKDTree
from skimage.draw import line as draw_line

from .skeleton import thin
from .vecmodel import VectorMap, map_to_raster, trace

METRICS = ("iou", "hausdorff", "frechet", "mse")


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ValueError(f"raster shapes differ: {a.shape} vs {b.shape}")
    return a, b


def iou(a, b) -> float:
    """Intersection over union of the foreground sets; two empty rasters give 1.0."""
    a, b = _pair(a, b)
    union = np.count_nonzero(a | b)
    if union == 0:
        return 1.0
    return np.count_nonzero(a & b) / union


def mse(a, b) -> float:
    """Mean squared difference of the 0/1 rasters, in percent."""
    a, b = _pair(a, b)
    if a.size == 0:
        return 0.0
    return 100.0 * np.count_nonzero(a ^ b) / a.size


def _points(p) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.size == 0:
        raise ValueError("point set is empty")
    return arr.reshape(-1, 2)


def directed_hausdorff(m, n) -> float:
    m, n = _points(m), _points(n)
    d, _ = cKDTree(n).query(m)
    return float(d.max())


def hausdorff(m, n) -> float:
    """Symmetric Hausdorff distance between two finite point sets."""
    m, n = _points(m), _points(n)
    return max(directed_hausdorff(m, n), directed_hausdorff(n, m))


def frechet(p, q) -> float:
    """Discrete Frechet distance between two point sequences.

    Uses the usual coupling recurrence
    ``c[i, j] = max(d(p_i, q_j), min(c[i-1, j], c[i, j-1], c[i-1, j-1]))``,
    filled one anti-diagonal at a time.
    """
    p, q = _points(p), _points(q)
    n, m = len(p), len(q)
    d = np.sqrt(((p[:, None, :] - q[None, :, :]) ** 2).sum(axis=2))
    c = np.full((n, m), np.inf)
    c[0, 0] = d[0, 0]
    for k in range(1, n + m - 1):
        i = np.arange(max(0, k - m + 1), min(k, n - 1) + 1)
        j = k - i
        best = np.full(len(i), np.inf)
        ok = i > 0
        best[ok] = c[i[ok] - 1, j[ok]]
        ok = j > 0
        best[ok] = np.minimum(best[ok], c[i[ok], j[ok] - 1])
        ok = (i > 0) & (j > 0)
        best[ok] = np.minimum(best[ok], c[i[ok] - 1, j[ok] - 1])
        c[i, j] = np.maximum(d[i, j], best)
    return float(c[-1, -1])


def rasterize(v: VectorMap, width: int, height: int, stroke: int = 3) -> np.ndarray:
    """Draw every category segment, then widen to a ``stroke`` x ``stroke`` pen.

    Segment ends map to the pixel containing them, and both ends are drawn,
    so a segment between two pixel centres ``L`` apart along an axis covers
    ``L + 1`` pixels at stroke 1. Even strokes extend one pixel further up
    and left than down and right.
    """
    if stroke < 1:
        raise ValueError("stroke must be at least 1")
    out = np.zeros((height, width), dtype=bool)
    for c in v.live():
        pts = np.asarray(c.points, dtype=float)
        rows, cols = map_to_raster(pts[:, 0], pts[:, 1], height)
        if len(pts) == 1:
            rows, cols = np.append(rows, rows), np.append(cols, cols)
        for k in range(len(pts) - 1):
            rr, cc = draw_line(int(rows[k]), int(cols[k]), int(rows[k + 1]), int(cols[k + 1]))
            keep = (rr >= 0) & (rr < height) & (cc >= 0) & (cc < width)
            out[rr[keep], cc[keep]] = True
    if stroke > 1:
        out = ndi.binary_dilation(out, structure=np.ones((stroke, stroke), dtype=bool))
    return out


# -- tiled evaluation -----------------------------------------------------------

def _tiles(shape, size):
    h, w = shape
    for r0 in range(0, h, size):
        for c0 in range(0, w, size):
            yield r0, c0


def _tile(a: np.ndarray, r0: int, c0: int, size: int) -> np.ndarray:
    t = a[r0:r0 + size, c0:c0 + size]
    if t.shape != (size, size):
        t = np.pad(t, ((0, size - t.shape[0]), (0, size - t.shape[1])))
    return t


def _curves(tile: np.ndarray) -> list[np.ndarray]:
    v = trace(thin(tile))
    return [np.asarray(c.points) for c in v.live()]


def tile_frechet(a: np.ndarray, b: np.ndarray) -> float:
    """Frechet distance between the centerline sets of two raster tiles.

    Each tile is thinned and traced. Every curve is matched to the closest
    curve of the other tile (either direction of travel), and the worst such
    match over both tiles is the tile score. ``inf`` if only one tile has curves.
    """
    ca, cb = _curves(a), _curves(b)
    if not ca and not cb:
        return 0.0
    if not ca or not cb:
        return math.inf

    def one_way(src, dst):
        worst = 0.0
        for p in src:
            best = min(min(frechet(p, q), frechet(p, q[::-1])) for q in dst)
            worst = max(worst, best)
        return worst

    return max(one_way(ca, cb), one_way(cb, ca))


def _summary(values: list[float]) -> dict:
    if not values:
        return {"count": 0}
    arr = np.asarray(values, dtype=float)
    return {
        "count": int(arr.size),
        "mean": float(arr.mean()),
        "median": float(np.median(arr)),
        "p10": float(np.percentile(arr, 10)),
        "p90": float(np.percentile(arr, 90)),
        "min": float(arr.min()),
        "max": float(arr.max()),
    }


def patch_evaluate(
    reference,
    candidate: VectorMap | np.ndarray,
    patch_size: int = 512,
    frechet_patch: int = 64,
    metrics=("iou", "hausdorff", "mse"),
    stroke: int = 3,
) -> dict:
    """Tile reference and candidate and score each tile pair.

    ``candidate`` may be a VectorMap (rasterized with ``stroke``) or a raster
    of the same shape. Partial edge tiles are zero padded. Tile pairs that
    are both empty are skipped and counted. Hausdorff runs on foreground
    pixel coordinates; a tile where only one side has foreground scores inf
    and is left out of the aggregate (its count is reported as ``one_sided``).
    """
    ref = np.asarray(reference, dtype=bool)
    if isinstance(candidate, VectorMap):
        cand = rasterize(candidate, ref.shape[1], ref.shape[0], stroke)
    else:
        cand = np.asarray(candidate, dtype=bool)
        if cand.shape != ref.shape:
            raise ValueError(f"raster shapes differ: {ref.shape} vs {cand.shape}")
    unknown = set(metrics) - set(METRICS)
    if unknown:
        raise ValueError(f"unknown metrics: {sorted(unknown)}")
    tiles: dict[str, list] = {m: [] for m in metrics}
    skipped = {m: 0 for m in metrics}
    one_sided = {m: 0 for m in metrics}

    for m in metrics:
        size = frechet_patch if m == "frechet" else patch_size
        for r0, c0 in _tiles(ref.shape, size):
            a, b = _tile(ref, r0, c0, size), _tile(cand, r0, c0, size)
            fa, fb = a.any(), b.any()
            if not fa and not fb:
                skipped[m] += 1
                continue
            if m == "iou":
                val = iou(a, b)
            elif m == "mse":
                val = mse(a, b)
            elif not (fa and fb):
                val = math.inf
            elif m == "hausdorff":
                val = hausdorff(np.argwhere(a), np.argwhere(b))
            else:
                val = tile_frechet(a, b)
            if math.isinf(val):
                one_sided[m] += 1
            tiles[m].append({"row": r0, "col": c0, "value": val})

    aggregate = {}
    for m in metrics:
        aggregate[m] = _summary([t["value"] for t in tiles[m] if math.isfinite(t["value"])])
        aggregate[m]["one_sided"] = one_sided[m]
    return {
        "patch_size": patch_size,
        "frechet_patch": frechet_patch,
        "stroke": stroke,
        "metrics": list(metrics),
        "tiles": tiles,
        "skipped_empty": skipped,
        "aggregate": aggregate,
    }
