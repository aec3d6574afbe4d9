"""Deterministic gap bridging for boundary strokes and synthetic gap corruption."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage as ndi
from scipy.spatial import cKDTree
from skimage.draw import line as draw_line

from .raster import EIGHT
from .skeleton import RING, neighbor_counts, thin


@dataclass(frozen=True)
class Endpoint:
    pos: tuple[int, int]
    stroke_dir: tuple[float, float]  # (dx, dy) in image axes, pointing out of the stroke


@dataclass(frozen=True)
class GapBridge:
    a: Endpoint
    b: Endpoint
    length: float


def _walk(s: np.ndarray, start: tuple[int, int], steps: int) -> list[tuple[int, int]]:
    """Follow a skeleton from ``start`` for up to ``steps`` pixels, stopping at forks."""
    h, w = s.shape
    path = [start]
    prev = None
    cur = start
    for _ in range(steps):
        nxt = []
        for dr, dc in RING:
            q = (cur[0] + dr, cur[1] + dc)
            if q != prev and 0 <= q[0] < h and 0 <= q[1] < w and s[q] and q not in path:
                nxt.append(q)
        if len(nxt) != 1:
            break
        prev, cur = cur, nxt[0]
        path.append(cur)
    return path


def _endpoints_of_skeleton(s: np.ndarray, k: int) -> list[Endpoint]:
    deg = neighbor_counts(s)
    out = []
    for r, c in zip(*np.nonzero(deg == 1)):
        trail = _walk(s, (int(r), int(c)), k)
        tr, tc = trail[-1]
        dx, dy = float(c - tc), float(r - tr)
        norm = math.hypot(dx, dy)
        out.append(Endpoint((int(r), int(c)), (dx / norm, dy / norm)))
    return out


def find_endpoints(r: np.ndarray, k: int = 5) -> list[Endpoint]:
    """Degree-1 pixels of the raster's skeleton with outward stroke directions.

    The direction runs from the pixel ``k`` steps back along the stroke to the
    endpoint itself.
    """
    return _endpoints_of_skeleton(thin(r), k)


def _pick_bridges(eps: list[Endpoint], max_gap: float, cos_limit: float, allowed) -> list[tuple[int, int, float]]:
    if len(eps) < 2:
        return []
    pos = np.array([e.pos for e in eps], dtype=float)
    best: dict[int, tuple[float, int]] = {}
    for i, j in cKDTree(pos).query_pairs(max_gap):
        if not allowed(i, j):
            continue
        dr, dc = pos[j] - pos[i]
        dist = math.hypot(dr, dc)
        if dist == 0 or dist > max_gap:
            continue
        ux, uy = dc / dist, dr / dist
        ai, bi = eps[i].stroke_dir, eps[j].stroke_dir
        if ai[0] * ux + ai[1] * uy < cos_limit or -(bi[0] * ux + bi[1] * uy) < cos_limit:
            continue
        for a, b in ((i, j), (j, i)):
            if a not in best or (dist, b) < best[a]:
                best[a] = (dist, b)
    pairs = []
    for a, (dist, b) in sorted(best.items()):
        if a < b and best.get(b, (None, None))[1] == a:
            pairs.append((a, b, dist))
    return pairs


def bridge_gaps(
    r: np.ndarray,
    max_gap: float = 12.0,
    max_angle_dev: float = 45.0,
    anchor_area: int = 0,
    k: int = 5,
) -> tuple[np.ndarray, list[GapBridge]]:
    """Close small breaks by drawing 1-pixel lines between facing endpoints.

    Endpoints pair up when each is the other's nearest eligible partner within
    ``max_gap``, and both stroke directions are within ``max_angle_dev`` of
    the chord joining them. With ``anchor_area > 0`` a bridge also needs one
    of its ends on a component of at least that many pixels, which keeps
    digits from being bridged to each other. Rounds repeat until no new
    bridge appears, so a second call adds nothing.
    """
    if max_gap <= 0:
        raise ValueError("max_gap must be positive")
    out = np.array(r, dtype=bool, copy=True)
    cos_limit = math.cos(math.radians(max_angle_dev))
    bridges: list[GapBridge] = []
    while True:
        eps = find_endpoints(out, k)
        if anchor_area > 0 and eps:
            labels, _ = ndi.label(out, structure=EIGHT)
            areas = np.bincount(labels.ravel())
            big = [areas[labels[e.pos]] >= anchor_area for e in eps]
            allowed = lambda i, j: big[i] or big[j]  # noqa: E731
        else:
            allowed = lambda i, j: True  # noqa: E731
        pairs = _pick_bridges(eps, max_gap, cos_limit, allowed)
        if not pairs:
            return out, bridges
        for i, j, dist in pairs:
            rr, cc = draw_line(*eps[i].pos, *eps[j].pos)
            out[rr, cc] = True
            bridges.append(GapBridge(eps[i], eps[j], dist))


# -- synthetic corruption ----------------------------------------------------

def _local_axis(s: np.ndarray, p: tuple[int, int], reach: int = 3) -> int:
    """0 if the stroke through ``p`` runs mostly along rows (horizontal), else 1."""
    h, w = s.shape
    ends = []
    for first in [q for q in ((p[0] + dr, p[1] + dc) for dr, dc in RING)
                  if 0 <= q[0] < h and 0 <= q[1] < w and s[q]]:
        ends.append(_walk_from(s, p, first, reach))
    if len(ends) < 2:
        return 0
    (r0, c0), (r1, c1) = ends[0], ends[1]
    return 0 if abs(c1 - c0) >= abs(r1 - r0) else 1


def _walk_from(s, origin, first, steps):
    path = [origin, first]
    for _ in range(steps - 1):
        cur = path[-1]
        nxt = [(cur[0] + dr, cur[1] + dc) for dr, dc in RING]
        nxt = [q for q in nxt if 0 <= q[0] < s.shape[0] and 0 <= q[1] < s.shape[1]
               and s[q] and q not in path]
        if len(nxt) != 1:
            break
        path.append(nxt[0])
    return path[-1]


def _run_along(s: np.ndarray, centre: tuple[int, int], length: int) -> list[tuple[int, int]]:
    """``length`` consecutive skeleton pixels centred (as far as possible) on ``centre``."""
    h, w = s.shape
    first = [(centre[0] + dr, centre[1] + dc) for dr, dc in RING]
    first = [q for q in first if 0 <= q[0] < h and 0 <= q[1] < w and s[q]]
    if len(first) != 2:
        return []
    back = _walk(_Hidden(s, {centre, first[1]}), first[0], length)
    fwd = _walk(_Hidden(s, {centre, first[0]}), first[1], length)
    back = [q for q in back if q != centre]
    fwd = [q for q in fwd if q != centre]
    need_back = (length - 1) // 2
    need_fwd = length - 1 - need_back
    if len(back) < need_back or len(fwd) < need_fwd:
        return []
    return back[:need_back][::-1] + [centre] + fwd[:need_fwd]


class _Hidden:
    """Read-only view of a skeleton with some pixels masked out."""

    def __init__(self, s, hidden):
        self.s = s
        self.hidden = hidden
        self.shape = s.shape

    def __getitem__(self, q):
        return q not in self.hidden and self.s[q]


def generate_gaps(
    r: np.ndarray,
    n_gaps: int,
    gap_len: tuple[int, int] = (3, 8),
    seed: int = 0,
    margin: float | None = None,
    max_half_width: int = 8,
) -> tuple[np.ndarray, np.ndarray]:
    """Erase ``n_gaps`` runs of stroke to simulate broken boundary lines.

    Each gap is centred on a skeleton pixel at least ``margin`` pixels from
    any junction or line end; its length ``L`` is drawn uniformly from the
    inclusive ``gap_len`` range. The ``L`` skeleton pixels of the run are
    erased together with the stroke cross-section through each of them
    (column runs for mostly horizontal strokes, row runs otherwise), so a
    1-pixel line loses exactly ``L`` pixels. Gaps keep apart from each other.
    Returns ``(corrupted, ground_truth)``.
    """
    truth = np.array(r, dtype=bool, copy=True)
    corrupted = truth.copy()
    if n_gaps == 0:
        return corrupted, truth
    lo, hi = gap_len
    if lo < 1 or hi < lo:
        raise ValueError(f"bad gap length range {gap_len}")
    if int(truth.sum()) < n_gaps:
        raise ValueError("not enough foreground pixels for the requested gaps")
    if margin is None:
        margin = hi + 4
    s = thin(truth)
    deg = neighbor_counts(s)
    nodes = np.argwhere(s & (deg != 2))
    path = np.argwhere(deg == 2)
    if len(nodes):
        dist, _ = cKDTree(nodes).query(path)
        path = path[dist >= margin]
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(path))
    spacing = 2 * hi + margin
    centres: list[tuple[int, int]] = []
    h, w = truth.shape
    for k in order:
        if len(centres) == n_gaps:
            break
        p = (int(path[k][0]), int(path[k][1]))
        if any(math.dist(p, q) < spacing for q in centres):
            continue
        length = int(rng.integers(lo, hi + 1))
        run = _run_along(s, p, length)
        if len(run) != length:
            continue
        axis = _local_axis(s, p)
        for pr, pc in run:
            # erase the stroke cross-section perpendicular to the run
            step = (1, 0) if axis == 0 else (0, 1)
            corrupted[pr, pc] = False
            for sign in (1, -1):
                for t in range(1, max_half_width + 1):
                    qr, qc = pr + sign * t * step[0], pc + sign * t * step[1]
                    if not (0 <= qr < h and 0 <= qc < w) or not truth[qr, qc]:
                        break
                    corrupted[qr, qc] = False
        centres.append(p)
    if len(centres) < n_gaps:
        raise ValueError(f"only {len(centres)} of {n_gaps} gaps fit on this raster")
    return corrupted, truth


def training_patches(
    r: np.ndarray,
    patch: int = 300,
    n_gaps: int = 2,
    gap_len: tuple[int, int] = (3, 8),
    seed: int = 0,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Cut full ``patch`` x ``patch`` tiles and corrupt each with ``n_gaps`` gaps.

    Tiles without room for the gaps are skipped. Seeds are derived per tile so
    the result is reproducible.
    """
    r = np.asarray(r, dtype=bool)
    pairs = []
    for k, top in enumerate(range(0, r.shape[0] - patch + 1, patch)):
        for j, left in enumerate(range(0, r.shape[1] - patch + 1, patch)):
            tile = r[top:top + patch, left:left + patch]
            try:
                pairs.append(generate_gaps(tile, n_gaps, gap_len, seed=int(np.random.SeedSequence([seed, k, j]).generate_state(1)[0])))
            except ValueError:
                continue
    return pairs
