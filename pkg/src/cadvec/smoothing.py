"""Post-vectorisation smoothing: join repair, staircase removal,
zero-length segment removal and category merging, plus a fixpoint driver.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from decimal import Decimal

from .vecmodel import Category, Point, VectorMap, build_index


@dataclass
class SmoothParams:
    join_threshold: float = 3.0
    max_passes: int = 16


@dataclass
class SmoothReport:
    joins_fixed: int = 0
    staircases_removed: int = 0
    zero_lengths_removed: int = 0
    merges: int = 0
    passes: int = 0

    def total(self) -> int:
        return self.joins_fixed + self.staircases_removed + self.zero_lengths_removed + self.merges

    def as_dict(self) -> dict:
        return asdict(self)


def _mid(a: float, b: float) -> float:
    # Coordinates originate as decimal text; averaging the shortest decimal
    # forms keeps e.g. mid(1.8, 2.1) == 1.95 instead of 1.9500000000000002.
    return float((Decimal(repr(float(a))) + Decimal(repr(float(b)))) / 2)


def midpoint(p: Point, q: Point) -> Point:
    return (_mid(p[0], q[0]), _mid(p[1], q[1]))


def direction(p1: Point, p2: Point, p3: Point) -> int:
    """Turn sign of p1 -> p2 -> p3: +1 counter-clockwise, -1 clockwise, 0 straight."""
    cross = (p2[0] - p1[0]) * (p3[1] - p2[1]) - (p2[1] - p1[1]) * (p3[0] - p2[0])
    return (cross > 0) - (cross < 0)


# -- join errors -----------------------------------------------------------

def _retarget(c: Category, old: Point, new: Point) -> None:
    if c.points[0] == old:
        c.points[0] = new
    if c.points[-1] == old:
        c.points[-1] = new


def _solve_join_error(cats: list[Category], len_threshold: float) -> int:
    by_id = {c.id: c for c in cats}
    index = build_index(c for c in cats if not c.removed)
    fixed = 0
    for c in sorted(cats, key=lambda c: c.id):
        if c.removed or c.is_loop:
            continue
        lp, rp = c.left, c.right
        lids, rids = index.get(lp, []), index.get(rp, [])
        if len(lids) < 3 or len(rids) < 3 or c.length() >= len_threshold:
            continue
        mp = midpoint(lp, rp)
        others_l = [i for i in lids if i != c.id]
        others_r = [i for i in rids if i != c.id]
        for i in dict.fromkeys(others_l):
            _retarget(by_id[i], lp, mp)
        for i in dict.fromkeys(others_r):
            _retarget(by_id[i], rp, mp)
        c.removed = True
        del index[lp]
        del index[rp]
        index.setdefault(mp, []).extend(others_l + others_r)
        fixed += 1
    return fixed


def solve_join_error(v: VectorMap, len_threshold: float = 3.0) -> VectorMap:
    """Collapse short lines that split one crossing into two nearby junctions.

    A category shorter than ``len_threshold`` whose two endpoints are each
    shared by at least three categories (itself included) is removed, and
    every other category ending at either endpoint is re-terminated at its
    midpoint.
    """
    cats = [c.copy() for c in v.live()]
    _solve_join_error(cats, len_threshold)
    return VectorMap(cats).compact()


# -- staircase -------------------------------------------------------------

def _staircase_pass(points: list[Point]) -> tuple[list[Point], int]:
    n = len(points)
    if n < 4:
        return list(points), 0
    out = [points[0]]
    replaced = 0
    i = 0
    while i < n - 3:
        d1 = direction(points[i], points[i + 1], points[i + 2])
        d2 = direction(points[i + 1], points[i + 2], points[i + 3])
        if d1 * d2 < 0:
            out.append(midpoint(points[i + 1], points[i + 2]))
            replaced += 1
            i += 2
        else:
            out.append(points[i + 1])
            i += 1
    out.extend(points[i + 1:])
    return out, replaced


def remove_staircase(c: Category) -> Category:
    """One sweep of 4-point windows; opposite turns collapse the middle pair.

    When the turn of the first three points and the turn of the last three
    have opposite signs, the two middle points are replaced by their midpoint
    and the window resumes at that midpoint. Collinear triples (sign 0) never
    trigger. The first and last points never move.
    """
    pts, _ = _staircase_pass(c.points)
    return Category(c.id, pts, c.removed)


# -- zero-length -----------------------------------------------------------

def _dedupe(points: list[Point]) -> list[Point]:
    out = [points[0]]
    for p in points[1:]:
        if p != out[-1]:
            out.append(p)
    return out


def _remove_zero_length(cats: list[Category]) -> int:
    dropped = 0
    for c in cats:
        if c.removed:
            continue
        pts = _dedupe(c.points)
        dropped += len(c.points) - len(pts)
        c.points = pts
        if len(pts) < 2:
            c.removed = True
    return dropped


def remove_zero_length(v: VectorMap) -> VectorMap:
    """Drop repeated consecutive points; categories left with one point go."""
    cats = [c.copy() for c in v.live()]
    _remove_zero_length(cats)
    return VectorMap(cats).compact()


# -- merging ---------------------------------------------------------------

def _merge_categories(cats: list[Category]) -> int:
    by_id = {c.id: c for c in cats}
    index = build_index(c for c in cats if not c.removed)
    merges = 0
    changed = True
    while changed:
        changed = False
        for p in sorted(index):
            ids = index.get(p)
            if ids is None or len(ids) != 2 or ids[0] == ids[1]:
                continue
            c1, c2 = by_id[min(ids)], by_id[max(ids)]
            tail = c2.points if c2.left == p else c2.points[::-1]
            if c1.right == p:
                c1.points = c1.points + tail[1:]
            else:
                c1.points = tail[::-1] + c1.points[1:]
            far = tail[-1]
            del index[p]
            index[far] = [c1.id if i == c2.id else i for i in index[far]]
            c2.removed = True
            merges += 1
            changed = True
    return merges


def merge_categories(v: VectorMap) -> VectorMap:
    """Join every pair of categories that are the only two meeting at a point.

    The lower id survives and absorbs the other. Points where a closed loop
    meets only itself are left alone.
    """
    cats = [c.copy() for c in v.live()]
    _merge_categories(cats)
    return VectorMap(cats).compact()


# -- driver ----------------------------------------------------------------

def smooth(v: VectorMap, params: SmoothParams | None = None) -> tuple[VectorMap, SmoothReport]:
    """Run zero-length removal, merging, join repair and staircase removal
    in rounds until a round changes nothing (at most ``max_passes`` rounds).
    """
    params = params or SmoothParams()
    cats = [c.copy() for c in v.live()]
    report = SmoothReport()
    for _ in range(params.max_passes):
        zero = _remove_zero_length(cats)
        merges = _merge_categories(cats)
        joins = _solve_join_error(cats, params.join_threshold)
        stairs = 0
        for c in cats:
            if c.removed:
                continue
            for _ in range(params.max_passes):
                c.points, n = _staircase_pass(c.points)
                if not n:
                    break
                stairs += n
        report.zero_lengths_removed += zero
        report.merges += merges
        report.joins_fixed += joins
        report.staircases_removed += stairs
        if not (zero or merges or joins or stairs):
            break
        report.passes += 1
    return VectorMap(cats).compact(), report
