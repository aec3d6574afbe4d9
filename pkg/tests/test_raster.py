import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from oracles import flood_components

from cadvec.glyphs import FONTS, render_digit
from cadvec.raster import (
    PATCH_SIZE,
    BlankMapError,
    Component,
    binarize,
    component_mask,
    connected_components,
    extract_digit_patch,
    otsu_threshold,
    separate_boundary_and_digits,
)


def test_binarize_polarity():
    assert binarize(np.zeros((4, 5), np.uint8)).all()
    assert not binarize(np.full((4, 5), 255, np.uint8)).any()
    light = binarize(np.full((2, 2), 200, np.uint8), 128, dark_ink=False)
    assert light.all()


def test_binarize_checkerboard_count():
    for h, w in [(4, 6), (8, 8), (10, 2)]:
        img = np.where((np.add.outer(np.arange(h), np.arange(w)) % 2) == 0, 0, 255).astype(np.uint8)
        r = binarize(img, 128)
        expected = sum(1 for i in range(h) for j in range(w) if (i + j) % 2 == 0)
        assert r.sum() == expected == h * w // 2


def test_otsu_splits_two_levels():
    img = np.full((10, 10), 220, np.uint8)
    img[2:5, 2:8] = 30
    t = otsu_threshold(img)
    assert 30 < t <= 220
    assert binarize(img, "otsu").sum() == 18


def test_components_basic():
    assert connected_components(np.zeros((5, 5), bool)) == []
    r = np.zeros((3, 3), bool)
    r[0, 0] = r[1, 1] = True
    comps = connected_components(r)
    assert len(comps) == 1 and comps[0].area == 2
    assert comps[0].bbox == (0, 0, 1, 1)
    assert comps[0].centroid == (1.0, 1.0)


def test_components_ordered_by_bbox():
    r = np.zeros((10, 10), bool)
    r[5, 1] = True
    r[1, 8] = True
    r[1, 3] = True
    comps = connected_components(r)
    assert [c.bbox[:2] for c in comps] == [(1, 3), (1, 8), (5, 1)]
    assert [c.id for c in comps] == [0, 1, 2]


@given(arrays(bool, st.tuples(st.integers(1, 64), st.integers(1, 64))))
def test_components_match_flood_fill(r):
    comps = connected_components(r)
    ours = sorted(sorted(map(tuple, c.pixels.tolist())) for c in comps)
    ref = sorted(sorted(c) for c in flood_components(r))
    assert ours == ref
    assert sum(c.area for c in comps) == r.sum()


def test_separate_ring_and_blob():
    r = np.zeros((40, 40), bool)
    r[2:37, 2] = r[2:37, 36] = r[2, 2:37] = r[36, 2:37] = True
    r[10:16, 10:15] = True
    comps = connected_components(r)
    boundary, digits, noise = separate_boundary_and_digits(comps, 100, 5)
    assert boundary.area == 136
    assert [d.area for d in digits] == [30]
    assert noise == []


def test_separate_single_and_blank():
    r = np.zeros((5, 5), bool)
    r[1:3, 1:3] = True
    b, d, n = separate_boundary_and_digits(connected_components(r))
    assert b.area == 4 and d == [] and n == []
    with pytest.raises(BlankMapError):
        separate_boundary_and_digits([])


def test_separate_tie_goes_to_lowest_id():
    r = np.zeros((10, 10), bool)
    r[1, 1:4] = True
    r[6, 5:8] = True
    b, _, _ = separate_boundary_and_digits(connected_components(r), 1, 1)
    assert b.id == 0


def test_separate_finds_stamped_digits():
    r = np.zeros((120, 120), bool)
    r[5, 5:115] = r[114, 5:115] = r[5:115, 5] = r[5:115, 114] = True
    spots = [(20, 20), (20, 70), (70, 20), (70, 70)]
    for k, (y, x) in enumerate(spots):
        g = render_digit(k + 2, FONTS[0])
        r[y:y + g.shape[0], x:x + g.shape[1]] = g
    b, digits, noise = separate_boundary_and_digits(connected_components(r))
    assert len(digits) == 4 and noise == []
    assert b.area == 4 * 109 + 4 - 4


def test_patch_identity_for_full_size_component():
    rng = np.random.default_rng(1)
    crop = rng.random((28, 28)) < 0.5
    crop[0, :] = crop[:, 0] = crop[-1, :] = crop[:, -1] = True
    r = np.zeros((40, 40), bool)
    r[5:33, 6:34] = crop
    c = max(connected_components(r), key=lambda c: c.area)
    patch, _ = extract_digit_patch(r, c)
    assert np.array_equal(patch == 255, component_mask(c, r.shape)[5:33, 6:34])


def test_patch_doubles_small_component():
    rng = np.random.default_rng(2)
    crop = rng.random((14, 14)) < 0.5
    crop[0, :] = crop[:, 0] = crop[-1, :] = crop[:, -1] = True
    r = np.zeros((30, 30), bool)
    r[3:17, 4:18] = crop
    c = max(connected_components(r), key=lambda c: c.area)
    crop = component_mask(c, r.shape)[3:17, 4:18]
    patch, _ = extract_digit_patch(r, c)
    expected = np.zeros((28, 28), bool)
    for i in range(28):
        for j in range(28):
            expected[i, j] = crop[i // 2, j // 2]
    assert np.array_equal(patch == 255, expected)


def test_patch_keeps_aspect_and_centres():
    r = np.zeros((40, 40), bool)
    r[5:19, 10:17] = True  # 14 tall, 7 wide
    (c,) = connected_components(r)
    patch, _ = extract_digit_patch(r, c)
    rows, cols = np.nonzero(patch)
    assert (rows.min(), rows.max()) == (0, 27)
    assert (cols.min(), cols.max()) == (7, 20)


def test_single_pixel_patch_and_position():
    r = np.zeros((10, 12), bool)
    r[3, 7] = True
    (c,) = connected_components(r)
    patch, pos = extract_digit_patch(r, c)
    rows, cols = np.nonzero(patch)
    assert rows.min() + rows.max() == 27 and cols.min() + cols.max() == 27
    assert pos == (7.5, 10 - 1 - 3 + 0.5)


@given(arrays(bool, st.tuples(st.integers(1, 40), st.integers(1, 40))))
def test_patch_never_blank(r):
    for c in connected_components(r)[:5]:
        patch, _ = extract_digit_patch(r, c)
        assert patch.shape == (PATCH_SIZE, PATCH_SIZE)
        assert patch.any()


def test_component_mask_roundtrip():
    r = np.random.default_rng(4).random((20, 20)) < 0.3
    total = np.zeros_like(r)
    for c in connected_components(r):
        total |= component_mask(c, r.shape)
    assert np.array_equal(total, r)


def test_thin_sliver_patch_gets_mark():
    # a very wide, one-pixel-tall component samples only some columns
    r = np.zeros((3, 400), bool)
    r[1, :] = True
    c = Component(0, np.argwhere(r), int(r.sum()), (1, 0, 1, 399), (200.0, 1.5))
    patch, _ = extract_digit_patch(r, c)
    assert patch.any()
