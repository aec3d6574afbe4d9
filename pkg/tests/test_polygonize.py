import json
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import winding_number

from cadvec.ocr import DigitDetection
from cadvec.polygonize import (
    FaceIndex,
    PlanarGraph,
    PlotRecord,
    assemble_plot_number,
    assign_digits,
    build_faces,
    export_plots,
    label_plots,
    multi_row,
    on_boundary,
    parse_plots,
    point_in_ring,
    read_digits_csv,
    signed_area,
    write_digits_csv,
)
from cadvec.synth import generate_synthetic_map
from cadvec.vecmodel import Category, VectorMap


def grid(n, m, step=10.0, jitter=0.0, seed=0):
    rng = np.random.default_rng(seed)
    pts = {(i, j): (j * step + rng.uniform(-jitter, jitter), i * step + rng.uniform(-jitter, jitter))
           for i in range(n + 1) for j in range(m + 1)}
    cats = []
    for i in range(n + 1):
        for j in range(m):
            cats.append(Category(len(cats) + 1, [pts[i, j], pts[i, j + 1]]))
    for j in range(m + 1):
        for i in range(n):
            cats.append(Category(len(cats) + 1, [pts[i, j], pts[i + 1, j]]))
    return VectorMap(cats)


def square(x0=0.0, y0=0.0, s=10.0):
    return [(x0, y0), (x0 + s, y0), (x0 + s, y0 + s), (x0, y0 + s), (x0, y0)]


def test_signed_area_orientation():
    assert signed_area(square()) == 100.0
    assert signed_area(square()[::-1]) == -100.0
    assert signed_area([(0, 0), (1, 1)]) == 0.0


def test_single_square_loop():
    rep = build_faces(VectorMap([Category(1, square())]))
    assert len(rep.faces) == 1 and rep.all_euler_ok
    f = rep.faces[0]
    assert f.ring[0] == f.ring[-1] == (0.0, 0.0)
    assert f.area == 100.0


def test_two_by_two_grid():
    rep = build_faces(grid(2, 2))
    assert len(rep.faces) == 4
    assert sorted(f.area for f in rep.faces) == [100.0] * 4
    assert rep.all_euler_ok and rep.removed_bridges == 0
    assert [f.polygon_id for f in rep.faces] == [1, 2, 3, 4]


def test_dangles_and_bridges_removed():
    # two loops joined at their start nodes by a bridge, plus a dangle
    cats = [Category(1, square()), Category(2, square(30.0)),
            Category(3, [(0.0, 0.0), (15.0, -10.0), (30.0, 0.0)]),
            Category(4, [(0.0, 0.0), (-5.0, -5.0)])]
    rep = build_faces(VectorMap(cats))
    assert sorted(f.area for f in rep.faces) == [100.0, 100.0]
    assert rep.removed_bridges == 1
    assert rep.all_euler_ok and len(rep.euler_ok) == 2


def test_figure_eight_shares_a_node():
    left = [(10.0, 0.0), (10.0, 10.0), (0.0, 10.0), (0.0, 0.0), (10.0, 0.0)]
    right = [(10.0, 0.0), (20.0, 0.0), (20.0, 10.0), (12.0, 10.0), (10.0, 0.0)]
    rep = build_faces(VectorMap([Category(1, left), Category(2, right)]))
    assert len(rep.faces) == 2 and rep.all_euler_ok


def test_empty_network():
    rep = build_faces(VectorMap())
    assert rep.faces == [] and rep.all_euler_ok


@settings(max_examples=40)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 1000))
def test_jittered_grids_have_all_cells(n, m, seed):
    rep = build_faces(grid(n, m, jitter=3.0, seed=seed))
    assert len(rep.faces) == n * m
    assert rep.all_euler_ok
    total = sum(f.area for f in rep.faces)
    assert all(f.area > 0 for f in rep.faces)
    assert total > 0


@settings(max_examples=30)
@given(st.integers(1, 4), st.integers(1, 4), st.randoms(use_true_random=False))
def test_faces_independent_of_category_order_and_direction(n, m, rnd):
    v = grid(n, m, jitter=2.0, seed=n * 10 + m)
    cats = [Category(c.id, c.points[::-1] if rnd.random() < 0.5 else c.points) for c in v.categories]
    rnd.shuffle(cats)
    a = [(f.polygon_id, f.ring) for f in build_faces(v).faces]
    b = [(f.polygon_id, f.ring) for f in build_faces(VectorMap(cats)).faces]
    assert a == b


def test_point_in_ring_against_winding_number():
    rng = random.Random(4)
    rep = build_faces(grid(3, 3, jitter=3.0, seed=4))
    for f in rep.faces:
        for _ in range(100):
            x, y = rng.uniform(-5, 35), rng.uniform(-5, 35)
            if on_boundary(f.ring, x, y, tol=1e-9):
                continue
            assert point_in_ring(f.ring, x, y) == (winding_number(f.ring, x, y) != 0)


def test_locate_picks_smallest_containing_face():
    outer = PlotRecord(1, square(0, 0, 100))
    inner = PlotRecord(2, square(10, 10, 10))
    idx = FaceIndex([outer, inner])
    assert idx.locate(15, 15) == 1
    assert idx.locate(50, 50) == 0
    assert idx.locate(500, 50) is None


def test_locate_nudges_off_shared_edge():
    faces = build_faces(grid(1, 2)).faces
    idx = FaceIndex(faces)
    k = idx.locate(10.0, 5.0)  # on the shared edge
    assert k is not None
    x, y = 10.0 + 1e-6, 5.0 + 1e-6
    assert point_in_ring(faces[k].ring, x, y)


def det(label, x, y, conf=0.9, size=10.0):
    return DigitDetection(label, conf, (x, y), size)


def test_plot_number_592():
    faces = build_faces(VectorMap([Category(1, square(0, 0, 100))])).faces
    outside = assign_digits(faces, [det(2, 60, 50), det(5, 40, 50), det(9, 50, 51), det(1, 200, 5)])
    assert [d.label for d in outside] == [1]
    label_plots(faces)
    assert faces[0].plot_number == "592"
    assert not faces[0].review_flag


def test_review_flags():
    empty = PlotRecord(1, square())
    weak = PlotRecord(2, square(), [det(3, 5, 5, conf=0.01)])
    stacked = PlotRecord(3, square(), [det(1, 5, 1), det(2, 5, 9)])
    ok = PlotRecord(4, square(), [det(1, 3, 5), det(2, 6, 5)])
    label_plots([empty, weak, stacked, ok])
    assert [f.review_flag for f in (empty, weak, stacked, ok)] == [True, True, True, False]
    assert empty.plot_number == ""
    assert multi_row(stacked.digits) and not multi_row(ok.digits)


@given(st.permutations([det(4, 1.0, 0.0), det(0, 2.0, 0.0), det(7, 3.0, 0.0), det(7, 3.0, 0.5)]))
def test_plot_number_independent_of_detection_order(ds):
    assert assemble_plot_number(list(ds)) == "4077"


def test_export_roundtrip():
    faces = build_faces(grid(1, 2)).faces
    assign_digits(faces, [det(1, 5, 5), det(2, 15, 5), det(3, 16, 5)])
    label_plots(faces)
    text = export_plots(faces)
    doc = json.loads(text)
    assert doc["type"] == "FeatureCollection"
    props = [f["properties"] for f in doc["features"]]
    assert [p["plot_number"] for p in props] == ["1", "23"]
    assert [p["digit_count"] for p in props] == [1, 2]
    back = parse_plots(text)
    assert [(f.polygon_id, f.ring, f.plot_number, f.review_flag) for f in back] == \
        [(f.polygon_id, f.ring, f.plot_number, f.review_flag) for f in faces]
    assert export_plots(back) == text
    with pytest.raises(ValueError):
        parse_plots('{"type": "Feature"}')


def test_digits_csv_roundtrip():
    ds = [det(5, 1.25, 2.5, 0.75), det(0, 1e-3, 7.0, 0.125)]
    text = write_digits_csv(ds)
    assert text.splitlines()[0] == "label,confidence,x,y"
    back = read_digits_csv(text)
    assert [(d.label, d.confidence, d.position) for d in back] == [(d.label, d.confidence, d.position) for d in ds]


@pytest.mark.parametrize("text", ["", "a,b,c,d\n", "label,confidence,x,y\n1,0.5,2\n",
                                  "label,confidence,x,y\n12,0.5,2,3\n", "label,confidence,x,y\n1,zz,2,3\n"])
def test_digits_csv_errors(text):
    with pytest.raises(ValueError):
        read_digits_csv(text)


def test_synthetic_centerlines_match_truth_rings():
    _, truth = generate_synthetic_map(3, 4, jitter=4, digit_seed=7)
    rep = build_faces(truth.centerlines)
    got = sorted(round(f.area, 6) for f in rep.faces)
    want = sorted(round(signed_area(r), 6) for r in truth.rings)
    assert got == want and rep.all_euler_ok


def test_planar_graph_components():
    v = VectorMap([Category(1, square()), Category(2, square(50.0))])
    g = PlanarGraph.from_vectors(v)
    assert sorted(map(sorted, g.components())) == [[1], [2]]
    rep = build_faces(g)
    assert len(rep.euler_ok) == 2 and rep.all_euler_ok
