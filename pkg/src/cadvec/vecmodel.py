"""Vector line model, ASCII line format, skeleton tracing and topology cleanup.

Points are plain ``(x, y)`` float tuples so they can key the junction index
directly. Map coordinates put pixel centres on half-integers with ``y``
growing upward from the bottom row::

    x = col + 0.5
    y = (height - 1 - row) + 0.5
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .skeleton import RING, neighbor_counts

Point = tuple[float, float]


class AsciiFormatError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass
class Category:
    """An open polyline between two junctions (closed when first == last)."""

    id: int
    points: list[Point]
    removed: bool = False

    @property
    def left(self) -> Point:
        return self.points[0]

    @property
    def right(self) -> Point:
        return self.points[-1]

    @property
    def is_loop(self) -> bool:
        return self.points[0] == self.points[-1]

    def length(self) -> float:
        return polyline_length(self.points)

    def copy(self) -> "Category":
        return Category(self.id, list(self.points), self.removed)


@dataclass
class VectorMap:
    categories: list[Category] = field(default_factory=list)

    def live(self) -> list[Category]:
        return [c for c in self.categories if not c.removed]

    def junction_index(self) -> dict[Point, list[int]]:
        """Endpoint -> ids of the live categories ending there.

        A closed loop is listed twice under its single endpoint.
        """
        return build_index(self.live())

    def copy(self) -> "VectorMap":
        return VectorMap([c.copy() for c in self.categories])

    def compact(self) -> "VectorMap":
        """Copy with removed categories dropped, sorted by id."""
        return VectorMap(sorted((c.copy() for c in self.live()), key=lambda c: c.id))

    def next_id(self) -> int:
        return max((c.id for c in self.categories), default=0) + 1

    def point_count(self) -> int:
        return sum(len(c.points) for c in self.live())


def build_index(cats) -> dict[Point, list[int]]:
    index: dict[Point, list[int]] = defaultdict(list)
    for c in cats:
        index[c.left].append(c.id)
        index[c.right].append(c.id)
    return dict(index)


def polyline_length(points) -> float:
    return sum(math.dist(points[i], points[i + 1]) for i in range(len(points) - 1))


# -- coordinates -----------------------------------------------------------

def raster_to_map(row, col, height: int):
    """Pixel (row, col) -> map (x, y); works on scalars and arrays."""
    return col + 0.5, (height - 1 - row) + 0.5


def map_to_raster(x, y, height: int):
    """Map (x, y) -> integer pixel (row, col) of the containing pixel."""
    col = np.floor(x).astype(np.int64) if isinstance(x, np.ndarray) else math.floor(x)
    if isinstance(y, np.ndarray):
        row = height - 1 - np.floor(y).astype(np.int64)
    else:
        row = height - 1 - math.floor(y)
    return row, col


# -- ASCII format ----------------------------------------------------------

def _fmt(v: float) -> str:
    return repr(float(v))


def write_ascii(v: VectorMap) -> str:
    """Serialise live categories, ascending id, one ``L`` record each."""
    out = []
    for c in sorted(v.live(), key=lambda c: c.id):
        out.append(f"L {len(c.points)} 1\n")
        for x, y in c.points:
            out.append(f"{_fmt(x)} {_fmt(y)}\n")
        out.append(f"1 {c.id}\n")
    return "".join(out)


def _int(tok: str, lineno: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise AsciiFormatError(lineno, f"{what} is not an integer: {tok!r}") from None


def parse_ascii(text: str) -> VectorMap:
    lines = [(i + 1, ln.split()) for i, ln in enumerate(text.splitlines())]
    lines = [(n, toks) for n, toks in lines if toks]
    cats: list[Category] = []
    seen: set[int] = set()
    pos = 0
    while pos < len(lines):
        lineno, toks = lines[pos]
        if toks[0] != "L" or len(toks) != 3:
            raise AsciiFormatError(lineno, "expected header 'L <n_points> <n_cats>'")
        n_points = _int(toks[1], lineno, "point count")
        n_cats = _int(toks[2], lineno, "category count")
        if n_points < 2:
            raise AsciiFormatError(lineno, f"line needs at least 2 points, got {n_points}")
        if n_cats != 1:
            raise AsciiFormatError(lineno, f"only one category per line is supported, got {n_cats}")
        pos += 1
        points = []
        for _ in range(n_points):
            if pos >= len(lines):
                raise AsciiFormatError(lineno, f"header promises {n_points} points, file ended")
            ln, toks = lines[pos]
            if len(toks) != 2:
                raise AsciiFormatError(ln, f"expected '<x> <y>', got {' '.join(toks)!r}")
            try:
                x, y = float(toks[0]), float(toks[1])
            except ValueError:
                raise AsciiFormatError(ln, f"non-numeric coordinate in {' '.join(toks)!r}") from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise AsciiFormatError(ln, "non-finite coordinate")
            points.append((x, y))
            pos += 1
        if pos >= len(lines):
            raise AsciiFormatError(lines[-1][0], "missing '<layer> <id>' line")
        ln, toks = lines[pos]
        if len(toks) != 2 or toks[0] == "L":
            raise AsciiFormatError(
                ln, f"expected '<layer> <id>' after {n_points} points (point count mismatch?)"
            )
        _int(toks[0], ln, "layer")
        cat_id = _int(toks[1], ln, "category id")
        if cat_id in seen:
            raise AsciiFormatError(ln, f"duplicate category id {cat_id}")
        seen.add(cat_id)
        cats.append(Category(cat_id, points))
        pos += 1
    return VectorMap(cats)


# -- tracing ---------------------------------------------------------------

def _junction_clusters(padded: np.ndarray, dpad: np.ndarray):
    """Label 8-connected groups of junction pixels; pick each group's most central pixel."""
    from scipy import ndimage as ndi

    shape = padded.shape
    labels, n = ndi.label(dpad >= 3, structure=np.ones((3, 3), dtype=bool))
    flat = labels.ravel()
    idx = np.flatnonzero(flat)
    lab = flat[idx]
    order = np.lexsort((idx, lab))
    idx, lab = idx[order], lab[order]
    reps = {}
    starts = np.searchsorted(lab, np.arange(1, n + 1))
    ends = np.append(starts[1:], len(idx))
    for k in range(n):
        members = idx[starts[k]:ends[k]]
        rows, cols = np.divmod(members, shape[1])
        d = (rows - rows.mean()) ** 2 + (cols - cols.mean()) ** 2
        reps[k + 1] = int(members[int(np.argmin(d))])
    return flat, reps


def trace(s: np.ndarray) -> VectorMap:
    """Convert a thin skeleton into categories.

    Each 8-connected group of junction pixels (three or more neighbours) acts
    as one node, placed at the group pixel nearest the group's centre. Every
    maximal run of pixels between nodes and line ends becomes one category;
    a run that enters a group away from its centre pixel is extended to it.
    Cycles made only of path pixels become closed categories. Isolated single
    pixels are dropped.
    """
    s = np.asarray(s, dtype=bool)
    height, width = s.shape
    if not s.any():
        return VectorMap()
    deg = neighbor_counts(s)
    pw = width + 2
    padded2d = np.pad(s, 1)
    dpad2d = np.pad(deg, 1)
    padded = padded2d.ravel()
    dpad = dpad2d.ravel()
    a = padded.astype(np.uint8).tobytes()
    dflat = dpad.tobytes()
    offs = [dr * pw + dc for dr, dc in RING]
    cluster, reps = _junction_clusters(padded2d, dpad2d)

    def to_point(i: int) -> Point:
        r, c = divmod(i, pw)
        return (float(c - 1) + 0.5, float(height - r) + 0.5)

    def nbrs(i: int):
        return [i + o for o in offs if a[i + o]]

    trees: dict[int, dict[int, int | None]] = {}

    def to_centre(i: int) -> list[int]:
        """Pixels from junction ``i`` to its group's centre, through the group."""
        cn = int(cluster[i])
        if cn not in trees:
            back = {reps[cn]: None}
            queue = [reps[cn]]
            for j in queue:
                for k in nbrs(j):
                    if k not in back and cluster[k] == cn:
                        back[k] = j
                        queue.append(k)
            trees[cn] = back
        back = trees[cn]
        path = [i]
        while back[path[-1]] is not None:
            path.append(back[path[-1]])
        return path

    fg = np.flatnonzero(padded)
    fdeg = dpad[fg]
    nodes = fg[(fdeg != 2) & (fdeg != 0)].tolist()
    visited = bytearray(len(a))
    done_steps: set[tuple[int, int]] = set()
    cats: list[list[int]] = []

    for n in nodes:
        cn = int(cluster[n])
        for m in nbrs(n):
            if (n, m) in done_steps or (cn and cluster[m] == cn):
                continue
            chain = [n, m]
            prev, cur = n, m
            while dflat[cur] == 2:
                n1, n2 = nbrs(cur)
                prev, cur = cur, (n2 if n1 == prev else n1)
                chain.append(cur)
            done_steps.add((n, m))
            done_steps.add((cur, prev))
            if cn:
                chain = to_centre(n)[::-1][:-1] + chain
            if cluster[cur]:
                chain = chain + to_centre(cur)[1:]
            for i in chain:
                visited[i] = 1
            cats.append(chain)

    # junction pixels no run passed through still get covered, by a spur from the centre
    for n in nodes:
        if cluster[n] and not visited[n]:
            path = to_centre(n)[::-1]
            if len(path) == 1:
                # the centre itself, in a group no run touches
                path.append(next(j for j in nbrs(n) if cluster[j] == cluster[n]))
            for i in path:
                visited[i] = 1
            cats.append(path)

    for start in fg[fdeg == 2].tolist():
        if visited[start]:
            continue
        chain = [start]
        visited[start] = 1
        prev, cur = start, nbrs(start)[0]
        while cur != start:
            visited[cur] = 1
            chain.append(cur)
            n1, n2 = nbrs(cur)
            prev, cur = cur, (n2 if n1 == prev else n1)
        chain.append(start)
        cats.append(chain)

    return VectorMap([Category(k + 1, [to_point(i) for i in chain]) for k, chain in enumerate(cats)])


# -- topology cleanup ------------------------------------------------------

def _cluster_endpoints(points: list[Point], tol: float) -> dict[Point, Point]:
    """Union endpoints closer than ``tol`` (transitively); map each to its cluster centroid."""
    if not points:
        return {}
    arr = np.array(points)
    parent = list(range(len(points)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    if tol > 0:
        from scipy.spatial import cKDTree

        for i, j in sorted(cKDTree(arr).query_pairs(tol)):
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = defaultdict(list)
    for i in range(len(points)):
        groups[find(i)].append(i)
    mapping = {}
    for members in groups.values():
        if len(members) == 1:
            p = points[members[0]]
            mapping[p] = p
            continue
        cx = sum(arr[k, 0] for k in members) / len(members)
        cy = sum(arr[k, 1] for k in members) / len(members)
        for k in members:
            mapping[points[k]] = (float(cx), float(cy))
    return mapping


def snap_and_prune(v: VectorMap, snap_tol: float = 1.5, dangle_len: float = 8.0) -> VectorMap:
    """Snap nearby endpoints together and drop short dangling lines.

    Endpoints within ``snap_tol`` of each other (transitively) move to their
    common centroid. Categories squeezed entirely inside one snapped cluster
    disappear. Then categories with a free end (no other category touching it)
    shorter than ``dangle_len`` are removed, repeatedly until none remain.
    """
    cats = [c.copy() for c in v.live()]
    ends = sorted({p for c in cats for p in (c.left, c.right)})
    mapping = _cluster_endpoints(ends, snap_tol)
    out = []
    for c in cats:
        left, right = mapping[c.left], mapping[c.right]
        was_loop = c.is_loop
        pts = [left] + c.points[1:-1] + [right]
        if left == right and not was_loop:
            if all(math.dist(p, left) <= snap_tol for p in pts):
                continue
        c.points = pts
        out.append(c)

    while dangle_len > 0:
        index = build_index(out)
        keep = []
        for c in out:
            free = (len(index[c.left]) == 1 or len(index[c.right]) == 1) and not c.is_loop
            if free and c.length() < dangle_len:
                continue
            keep.append(c)
        if len(keep) == len(out):
            break
        out = keep
    return VectorMap(sorted(out, key=lambda c: c.id))
