"""Plot polygons from boundary lines, digit assignment and plot numbers."""

from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .ocr import LOW_CONFIDENCE, DigitDetection
from .vecmodel import Point, VectorMap

NUDGE = 1e-6


@dataclass
class PlanarGraph:
    """Nodes are snapped junction points; each edge is a category polyline."""

    nodes: list[Point]
    edges: dict[int, list[Point]]  # category id -> points, first/last are nodes

    @classmethod
    def from_vectors(cls, v: VectorMap, prune: bool = True) -> "PlanarGraph":
        edges = {}
        for c in v.live():
            pts = [p for k, p in enumerate(c.points) if k == 0 or p != c.points[k - 1]]
            if len(pts) < 2:
                continue  # zero length
            edges[c.id] = pts
        g = cls([], edges)
        if prune:
            g.prune_dangles()
        g.nodes = sorted({p for pts in g.edges.values() for p in (pts[0], pts[-1])})
        return g

    def degree(self) -> dict[Point, int]:
        deg: dict[Point, int] = defaultdict(int)
        for pts in self.edges.values():
            deg[pts[0]] += 1
            deg[pts[-1]] += 1
        return deg

    def prune_dangles(self) -> int:
        """Drop edges with a degree-1 end until none are left; returns how many went."""
        removed = 0
        while True:
            deg = self.degree()
            gone = [e for e, pts in self.edges.items() if deg[pts[0]] == 1 or deg[pts[-1]] == 1]
            if not gone:
                return removed
            for e in gone:
                del self.edges[e]
            removed += len(gone)

    def components(self) -> list[set[int]]:
        """Edge-id sets of the connected components."""
        parent = {p: p for p in self.nodes}

        def find(p):
            while parent[p] != p:
                parent[p] = parent[parent[p]]
                p = parent[p]
            return p

        for pts in self.edges.values():
            a, b = find(pts[0]), find(pts[-1])
            if a != b:
                parent[max(a, b)] = min(a, b)
        groups: dict[Point, set[int]] = defaultdict(set)
        for e, pts in self.edges.items():
            groups[find(pts[0])].add(e)
        return [groups[k] for k in sorted(groups)]


@dataclass
class PlotRecord:
    polygon_id: int
    ring: list[Point]  # closed, counterclockwise
    digits: list[DigitDetection] = field(default_factory=list)
    plot_number: str = ""
    review_flag: bool = False

    @property
    def area(self) -> float:
        return signed_area(self.ring)


@dataclass
class FaceReport:
    faces: list[PlotRecord]
    euler_ok: list[bool]  # one entry per connected component
    removed_bridges: int = 0

    @property
    def all_euler_ok(self) -> bool:
        return all(self.euler_ok)


def signed_area(ring) -> float:
    """Shoelace area; positive for counterclockwise rings."""
    a = np.asarray(ring, dtype=float)
    if len(a) < 3:
        return 0.0
    x, y = a[:, 0], a[:, 1]
    return 0.5 * float(np.dot(x[:-1], y[1:]) - np.dot(x[1:], y[:-1]) + x[-1] * y[0] - x[0] * y[-1])


# -- face walking --------------------------------------------------------------

def _half_edges(g: PlanarGraph):
    """Outgoing half-edges per node sorted counterclockwise by first-segment angle.

    A half-edge is ``(edge_id, forward)``.
    """
    out: dict[Point, list] = defaultdict(list)
    for e, pts in g.edges.items():
        for fwd in (True, False):
            seq = pts if fwd else pts[::-1]
            (x0, y0), (x1, y1) = seq[0], seq[1]
            out[seq[0]].append((math.atan2(y1 - y0, x1 - x0), e, fwd))
    rot = {}
    for node, items in out.items():
        items.sort()
        rot[node] = [(e, fwd) for _, e, fwd in items]
    return rot


def _walk_cycles(g: PlanarGraph) -> list[list[tuple[int, bool]]]:
    rot = _half_edges(g)
    pos = {h: (node, k) for node, hs in rot.items() for k, h in enumerate(hs)}
    seen = set()
    cycles = []
    for node in sorted(rot):
        for h in rot[node]:
            if h in seen:
                continue
            cyc = []
            cur = h
            while cur not in seen:
                seen.add(cur)
                cyc.append(cur)
                twin = (cur[0], not cur[1])
                v, k = pos[twin]
                hs = rot[v]
                # next clockwise from the twin keeps the face on the left
                cur = hs[(k - 1) % len(hs)]
            cycles.append(cyc)
    return cycles


def _cycle_ring(g: PlanarGraph, cyc) -> list[Point]:
    ring: list[Point] = []
    for e, fwd in cyc:
        pts = g.edges[e] if fwd else g.edges[e][::-1]
        ring.extend(pts[:-1])
    ring.append(ring[0])
    return ring


def _canonical(ring: list[Point]) -> list[Point]:
    body = ring[:-1]
    k = min(range(len(body)), key=lambda i: body[i])
    body = body[k:] + body[:k]
    return body + [body[0]]


def build_faces(v: VectorMap | PlanarGraph) -> FaceReport:
    """Bounded faces of the line network as counterclockwise rings.

    Dangling edges are pruned first. Edges walked on both sides of the same
    cycle (bridges) are dropped and the walk repeated, so every returned
    face is a proper ring. The outer face of each component has negative
    area and is left out. Each component is checked against Euler's formula
    ``V - E + F = 2`` with its outer face counted.
    """
    g = v if isinstance(v, PlanarGraph) else PlanarGraph.from_vectors(v)
    bridges = 0
    while True:
        cycles = _walk_cycles(g)
        bad = set()
        for cyc in cycles:
            ids = [e for e, _ in cyc]
            bad.update(e for e in ids if ids.count(e) > 1)
        if not bad:
            break
        for e in bad:
            del g.edges[e]
        bridges += len(bad)
        g.prune_dangles()
        g.nodes = sorted({p for pts in g.edges.values() for p in (pts[0], pts[-1])})

    comp_of = {}
    comps = g.components()
    for k, edges in enumerate(comps):
        for e in edges:
            comp_of[e] = k
    faces_per = [0] * len(comps)
    rings = []
    for cyc in cycles:
        faces_per[comp_of[cyc[0][0]]] += 1
        ring = _cycle_ring(g, cyc)
        if signed_area(ring) > 0:
            rings.append(_canonical(ring))
    euler = []
    for k, edges in enumerate(comps):
        verts = {p for e in edges for p in (g.edges[e][0], g.edges[e][-1])}
        euler.append(len(verts) - len(edges) + faces_per[k] == 2)

    rings.sort(key=lambda r: (r[0], r))
    faces = [PlotRecord(k + 1, r) for k, r in enumerate(rings)]
    return FaceReport(faces, euler, bridges)


# -- digit assignment ------------------------------------------------------------

def _segments(ring):
    a = np.asarray(ring, dtype=float)
    return a[:-1], a[1:]


def point_in_ring(ring, x: float, y: float) -> bool:
    """Even-odd ray casting toward +x."""
    p, q = _segments(ring)
    y0, y1 = p[:, 1], q[:, 1]
    crosses = (y0 > y) != (y1 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = p[:, 0] + (y - y0) * (q[:, 0] - p[:, 0]) / (y1 - y0)
    return bool(np.count_nonzero(crosses & (x < xi)) % 2)


def on_boundary(ring, x: float, y: float, tol: float = 1e-12) -> bool:
    p, q = _segments(ring)
    d = q - p
    cross = d[:, 0] * (y - p[:, 1]) - d[:, 1] * (x - p[:, 0])
    scale = np.hypot(d[:, 0], d[:, 1])
    within_x = (x >= np.minimum(p[:, 0], q[:, 0]) - tol) & (x <= np.maximum(p[:, 0], q[:, 0]) + tol)
    within_y = (y >= np.minimum(p[:, 1], q[:, 1]) - tol) & (y <= np.maximum(p[:, 1], q[:, 1]) + tol)
    return bool(np.any((np.abs(cross) <= tol * np.maximum(scale, 1.0)) & within_x & within_y))


class FaceIndex:
    """Bounding boxes and areas of a face set for repeated point lookups."""

    def __init__(self, faces: list[PlotRecord]):
        self.faces = faces
        self.boxes = np.array([
            (min(p[0] for p in f.ring), min(p[1] for p in f.ring),
             max(p[0] for p in f.ring), max(p[1] for p in f.ring))
            for f in faces
        ]).reshape(-1, 4)
        self.areas = [f.area for f in faces]

    def candidates(self, x, y) -> list[int]:
        b = self.boxes
        hit = (b[:, 0] <= x) & (x <= b[:, 2]) & (b[:, 1] <= y) & (y <= b[:, 3])
        return np.flatnonzero(hit).tolist()

    def locate(self, x: float, y: float) -> int | None:
        """Index of the smallest face containing the point, nudging it off edges."""
        cand = self.candidates(x, y)
        for dx, dy in ((0, 0), (NUDGE, NUDGE), (NUDGE, 2 * NUDGE), (2 * NUDGE, NUDGE)):
            px, py = x + dx, y + dy
            if any(on_boundary(self.faces[k].ring, px, py) for k in cand):
                continue
            inside = [k for k in cand if point_in_ring(self.faces[k].ring, px, py)]
            if not inside:
                return None
            return min(inside, key=lambda k: (self.areas[k], k))
        return None


def assign_digits(faces: list[PlotRecord], detections) -> list[DigitDetection]:
    """Attach each detection to the face containing it; returns the ones outside all faces."""
    index = FaceIndex(faces)
    outside = []
    for d in detections:
        k = index.locate(*d.position)
        if k is None:
            outside.append(d)
        else:
            faces[k].digits.append(d)
    return outside


def assemble_plot_number(face: PlotRecord | list[DigitDetection]) -> str:
    digits = face.digits if isinstance(face, PlotRecord) else face
    ordered = sorted(digits, key=lambda d: (d.position[0], d.position[1], d.label))
    return "".join(str(d.label) for d in ordered)


def multi_row(digits: list[DigitDetection]) -> bool:
    """True when the digits do not sit on one text row."""
    if len(digits) < 2:
        return False
    ys = [d.position[1] for d in digits]
    size = max((d.size for d in digits), default=0.0)
    return size > 0 and max(ys) - min(ys) > 0.75 * size


def label_plots(faces: list[PlotRecord], low_confidence: float = LOW_CONFIDENCE) -> list[PlotRecord]:
    """Fill plot numbers and review flags in place."""
    for f in faces:
        f.plot_number = assemble_plot_number(f)
        f.review_flag = (
            not f.digits
            or any(d.confidence < low_confidence for d in f.digits)
            or multi_row(f.digits)
        )
    return faces


# -- export ------------------------------------------------------------------------

def export_plots(faces: list[PlotRecord]) -> str:
    features = []
    for f in sorted(faces, key=lambda f: f.polygon_id):
        features.append({
            "type": "Feature",
            "properties": {
                "polygon_id": f.polygon_id,
                "plot_number": f.plot_number,
                "digit_count": len(f.digits),
                "review_flag": f.review_flag,
                "digits": [
                    {"label": int(d.label), "confidence": float(d.confidence),
                     "x": float(d.position[0]), "y": float(d.position[1])}
                    for d in f.digits
                ],
            },
            "geometry": {"type": "Polygon", "coordinates": [[[float(x), float(y)] for x, y in f.ring]]},
        })
    return json.dumps({"type": "FeatureCollection", "features": features}, indent=1) + "\n"


def parse_plots(text: str) -> list[PlotRecord]:
    doc = json.loads(text)
    if doc.get("type") != "FeatureCollection":
        raise ValueError("not a FeatureCollection")
    out = []
    for feat in doc["features"]:
        props = feat["properties"]
        ring = [(float(x), float(y)) for x, y in feat["geometry"]["coordinates"][0]]
        digits = [
            DigitDetection(int(d["label"]), float(d["confidence"]), (float(d["x"]), float(d["y"])))
            for d in props.get("digits", [])
        ]
        out.append(PlotRecord(int(props["polygon_id"]), ring, digits,
                              str(props["plot_number"]), bool(props["review_flag"])))
    return out


DIGITS_HEADER = ["label", "confidence", "x", "y"]


def write_digits_csv(detections) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DIGITS_HEADER)
    for d in detections:
        w.writerow([d.label, repr(float(d.confidence)), repr(float(d.position[0])), repr(float(d.position[1]))])
    return buf.getvalue()


def read_digits_csv(text: str) -> list[DigitDetection]:
    rows = csv.reader(io.StringIO(text))
    header = next(rows, None)
    if header is None or [h.strip() for h in header] != DIGITS_HEADER:
        raise ValueError(f"digits CSV must start with the header {','.join(DIGITS_HEADER)}")
    out = []
    for lineno, row in enumerate(rows, start=2):
        if not row:
            continue
        if len(row) != 4:
            raise ValueError(f"digits CSV line {lineno}: expected 4 fields, got {len(row)}")
        try:
            label = int(row[0])
            conf, x, y = float(row[1]), float(row[2]), float(row[3])
        except ValueError:
            raise ValueError(f"digits CSV line {lineno}: bad number in {row}") from None
        if not 0 <= label <= 9:
            raise ValueError(f"digits CSV line {lineno}: label {label} outside 0..9")
        out.append(DigitDetection(label, conf, (x, y)))
    return out
