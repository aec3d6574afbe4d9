"""Zhang-Suen thinning and skeleton pixel classification.

Thinning works on flat indices of foreground pixels in a zero-padded copy of
the raster, so the cost scales with stroke area rather than image area.
"""

from __future__ import annotations

import heapq
from enum import IntEnum

import numpy as np

# Zhang-Suen ring order P2..P9: N, NE, E, SE, S, SW, W, NW.
RING = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))
N, NE, E, SE, S, SW, W, NW = (1 << k for k in range(8))

_PAD = 2


class PixelRole(IntEnum):
    BACKGROUND = 0
    ENDPOINT = 1
    PATH = 2
    JUNCTION = 3
    ISOLATED = 4


def _ring_bits(code: int) -> list[int]:
    return [(code >> k) & 1 for k in range(8)]


def _transitions(bits: list[int]) -> int:
    return sum(1 for k in range(8) if bits[k] == 0 and bits[(k + 1) % 8] == 1)


def _is_simple(code: int) -> bool:
    """8-connected foreground / 4-connected background simplicity of the centre."""
    bits = _ring_bits(code)
    fg = [k for k in range(8) if bits[k]]
    if not fg:
        return False
    # foreground: ring neighbours are 8-adjacent to their ring successor, and an
    # edge neighbour is also adjacent to the edge neighbours two steps away
    def fg_adjacent(i, j):
        d = (i - j) % 8
        if d in (1, 7):
            return True
        return d in (2, 6) and i % 2 == 0 and j % 2 == 0

    seen = {fg[0]}
    stack = [fg[0]]
    while stack:
        i = stack.pop()
        for j in fg:
            if j not in seen and fg_adjacent(i, j):
                seen.add(j)
                stack.append(j)
    if len(seen) != len(fg):
        return False
    # background: ring successors are 4-adjacent; count components touching an
    # edge neighbour of the centre
    bg = [k for k in range(8) if not bits[k]]
    comps = 0
    seen = set()
    for start in bg:
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        while stack:
            i = stack.pop()
            for j in ((i + 1) % 8, (i - 1) % 8):
                if not bits[j] and j not in comp:
                    comp.add(j)
                    stack.append(j)
        seen |= comp
        if any(k % 2 == 0 for k in comp):
            comps += 1
    return comps == 1


def _build_tables():
    zs = np.zeros((2, 256), dtype=bool)
    simple = np.zeros(256, dtype=bool)
    corner = np.zeros(256, dtype=bool)
    degree = np.zeros(256, dtype=np.uint8)
    for code in range(256):
        b = _ring_bits(code)
        p2, p3, p4, p5, p6, p7, p8, p9 = b
        count = sum(b)
        degree[code] = count
        base = 2 <= count <= 6 and _transitions(b) == 1
        zs[0, code] = base and p2 * p4 * p6 == 0 and p4 * p6 * p8 == 0
        zs[1, code] = base and p2 * p4 * p8 == 0 and p2 * p6 * p8 == 0
        simple[code] = _is_simple(code)
        corner[code] = bool((p2 and p4) or (p4 and p6) or (p6 and p8) or (p8 and p2))
    return zs, simple, corner, degree


ZS_TABLES, SIMPLE, CORNER, DEGREE = _build_tables()
CLEANUP = SIMPLE & CORNER & (DEGREE >= 2)

# L-shaped neighbourhoods of a 2x2 block, with the offset of the block's
# top-left pixel relative to the centre
_SQUARE_ROLES = (
    (E | SE | S, (0, 0)),
    (W | SW | S, (0, -1)),
    (N | NE | E, (-1, 0)),
    (N | NW | W, (-1, -1)),
)


def _offsets(width: int) -> np.ndarray:
    return np.array([dr * width + dc for dr, dc in RING], dtype=np.int64)


def _codes(flat: np.ndarray, idx: np.ndarray, offs: np.ndarray) -> np.ndarray:
    code = np.zeros(idx.shape, dtype=np.uint8)
    for k, off in enumerate(offs):
        code |= flat[idx + off] << np.uint8(k)
    return code


def _isolated_square(flat, idx, code, width):
    """Mask of pixels belonging to a 2x2 block with an empty 4x4 surround."""
    out = np.zeros(idx.shape, dtype=bool)
    for pattern, (dr, dc) in _SQUARE_ROLES:
        sel = np.flatnonzero(code == pattern)
        if sel.size == 0:
            continue
        top_left = idx[sel] + dr * width + dc
        total = np.zeros(sel.shape, dtype=np.int32)
        for wr in range(-1, 3):
            for wc in range(-1, 3):
                total += flat[top_left + wr * width + wc]
        out[sel[total == 4]] = True
    return out


def _padded(r: np.ndarray) -> np.ndarray:
    return np.pad(np.asarray(r, dtype=bool).astype(np.uint8), _PAD)


def _zhang_suen(a: np.ndarray) -> int:
    """Run both subiterations in place until stable; returns deleted count."""
    width = a.shape[1]
    flat = a.ravel()
    offs = _offsets(width)
    fg = np.flatnonzero(flat)
    removed = 0
    while True:
        changed = 0
        for step in (0, 1):
            code = _codes(flat, fg, offs)
            cand = ZS_TABLES[step][code]
            if not cand.any():
                continue
            cand &= ~_isolated_square(flat, fg, code, width)
            n = int(cand.sum())
            if n:
                flat[fg[cand]] = 0
                fg = fg[~cand]
                changed += n
        removed += changed
        if not changed:
            return removed


def _remove_corners(a: np.ndarray) -> int:
    """Delete simple non-end corner pixels in raster order, repeating until stable.

    A heap of pending flat indices reproduces a top-to-bottom, left-to-right
    scan exactly: a pixel is revisited in the same sweep only if a neighbour
    earlier in scan order was deleted.
    """
    width = a.shape[1]
    flat = a.ravel()
    offs = _offsets(width)
    py_offs = [int(o) for o in offs]
    removed = 0
    while True:
        fg = np.flatnonzero(flat)
        code = _codes(flat, fg, offs)
        heap = fg[CLEANUP[code]].tolist()
        if not heap:
            return removed
        heapq.heapify(heap)
        queued = set(heap)
        swept = 0
        while heap:
            i = heapq.heappop(heap)
            queued.discard(i)
            if not flat[i]:
                continue
            c = 0
            for k, off in enumerate(py_offs):
                if flat[i + off]:
                    c |= 1 << k
            if not CLEANUP[c]:
                continue
            flat[i] = 0
            swept += 1
            for off in py_offs:
                j = i + off
                if j > i and flat[j] and j not in queued:
                    heapq.heappush(heap, j)
                    queued.add(j)
        removed += swept
        if not swept:
            return removed


def thin(r: np.ndarray) -> np.ndarray:
    """Thin a binary raster to a one-pixel-wide 8-connected skeleton.

    Zhang-Suen subiterations run to a fixpoint, except that an isolated 2x2
    block is never erased (plain Zhang-Suen deletes all four pixels). Corner
    pixels of 4-connected staircases are then removed in raster order, and the
    two stages alternate until neither changes anything, which makes the
    result idempotent. Topology (8-connected foreground, 4-connected
    background) is preserved. Pixels outside the raster count as background.
    """
    r = np.asarray(r, dtype=bool)
    if r.size == 0 or not r.any():
        return r.copy()
    a = _padded(r)
    while True:
        _zhang_suen(a)
        if not _remove_corners(a):
            break
    return a[_PAD:-_PAD, _PAD:-_PAD].astype(bool)


def neighbor_counts(s: np.ndarray) -> np.ndarray:
    """Number of 8-neighbours of each foreground pixel (0 on background)."""
    s = np.asarray(s, dtype=bool)
    out = np.zeros(s.shape, dtype=np.uint8)
    if not s.any():
        return out
    a = _padded(s)
    width = a.shape[1]
    flat = a.ravel()
    fg = np.flatnonzero(flat)
    code = _codes(flat, fg, _offsets(width))
    rows, cols = np.divmod(fg, width)
    out[rows - _PAD, cols - _PAD] = DEGREE[code]
    return out


def classify_pixels(s: np.ndarray) -> np.ndarray:
    """Per-pixel :class:`PixelRole` codes for a skeleton raster."""
    s = np.asarray(s, dtype=bool)
    deg = neighbor_counts(s)
    roles = np.full(s.shape, PixelRole.BACKGROUND, dtype=np.uint8)
    roles[s & (deg == 0)] = PixelRole.ISOLATED
    roles[s & (deg == 1)] = PixelRole.ENDPOINT
    roles[s & (deg == 2)] = PixelRole.PATH
    roles[s & (deg >= 3)] = PixelRole.JUNCTION
    return roles
