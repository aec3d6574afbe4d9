import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cadvec.glyphs import FONTS, render_digit
from cadvec.ocr import (
    MAGIC,
    ModelFormatError,
    RecognizerModel,
    baseline_model,
    classify,
    confusion_matrix,
    distances,
    load_model,
    save_model,
    synthetic_samples,
    train_baseline,
)
from cadvec.raster import connected_components, extract_digit_patch


def clean_patch(digit, font=FONTS[0]):
    g = render_digit(digit, font)
    comp = max(connected_components(g), key=lambda c: c.area)
    return extract_digit_patch(g, comp)[0]


@pytest.fixture(scope="module")
def model():
    return baseline_model()


def test_single_sample_templates_reproduce_training_set():
    samples = [(clean_patch(d), d) for d in range(10)]
    m = train_baseline(samples)
    for patch, d in samples:
        det = classify(m, patch)
        assert det.label == d
        assert det.confidence > 0.5
    assert m.counts.tolist() == [1] * 10


def test_template_is_class_mean():
    rng = np.random.default_rng(0)
    samples = [(rng.random((28, 28)), d) for d in range(10) for _ in range(3)]
    m = train_baseline(samples)
    mean7 = np.mean([p for p, d in samples if d == 7], axis=0)
    assert np.allclose(m.templates[7], mean7, atol=1e-6)


def test_duplicate_samples_do_not_change_templates():
    samples = [(clean_patch(d, f), d) for d in range(10) for f in FONTS[:3]]
    a = train_baseline(samples)
    b = train_baseline(samples * 3)
    assert np.allclose(a.templates, b.templates, atol=1e-6)


def test_training_order_does_not_matter():
    samples = [(clean_patch(d, f), d) for d in range(10) for f in FONTS[:4]]
    a = train_baseline(samples)
    b = train_baseline(samples[::-1])
    assert np.allclose(a.templates, b.templates, atol=1e-6)


def test_missing_label_is_an_error():
    with pytest.raises(ValueError, match=r"\[3\]"):
        train_baseline([(clean_patch(d), d) for d in range(10) if d != 3])
    with pytest.raises(ValueError):
        train_baseline([(clean_patch(1), 11)])
    with pytest.raises(ValueError):
        train_baseline([(np.zeros((20, 20)), 1)])


def test_ties_go_to_lower_digit():
    t = np.zeros((10, 28, 28), np.float32)
    t[2, :14] = 1.0
    t[6, 14:] = 1.0
    patch = np.ones((28, 28))
    m = RecognizerModel(t)
    d = distances(m, patch)
    assert d[2] == d[6] == d.min()
    det = classify(m, patch)
    assert det.label == 2 and det.confidence == 0.0


def test_blank_patch_has_zero_confidence(model):
    det = classify(model, np.zeros((28, 28), np.uint8))
    assert det.confidence == 0.0 and det.low_confidence


def test_uint8_and_unit_scale_agree(model):
    p = clean_patch(4, FONTS[5])
    a, b = classify(model, p), classify(model, p / 255.0)
    assert a.label == b.label == 4
    assert abs(a.confidence - b.confidence) < 1e-9


def test_rejects_wrong_patch_shape(model):
    with pytest.raises(ValueError):
        classify(model, np.zeros((14, 14)))


@settings(max_examples=50)
@given(st.permutations(list(range(10))))
def test_class_relabeling_is_equivariant(perm):
    samples = [(clean_patch(d, f), d) for d in range(10) for f in FONTS[:2]]
    base = train_baseline(samples)
    renamed = train_baseline([(p, perm[d]) for p, d in samples])
    for d in range(10):
        assert classify(renamed, clean_patch(d, FONTS[2])).label == perm[classify(base, clean_patch(d, FONTS[2])).label]


def test_confidence_range(model):
    for patch, _ in synthetic_samples(per_font=1, seed=5):
        c = classify(model, patch).confidence
        assert 0.0 <= c <= 1.0


def test_save_load_roundtrip(tmp_path, model):
    path = tmp_path / "m.cvdm"
    save_model(model, path)
    data = path.read_bytes()
    assert data[:4] == MAGIC and len(data) == 8 + 40 + 7840 * 4
    back = load_model(path)
    assert np.array_equal(back.templates, model.templates)
    assert back.counts.tolist() == model.counts.tolist()
    p = clean_patch(8, FONTS[3])
    assert classify(back, p) == classify(model, p)


def test_load_rejects_bad_files(tmp_path, model):
    path = tmp_path / "m.cvdm"
    save_model(model, path)
    good = path.read_bytes()
    for bad in (b"XXXX" + good[4:], good[:4] + struct.pack("<I", 9) + good[8:], good[:-4]):
        path.write_bytes(bad)
        with pytest.raises(ModelFormatError):
            load_model(path)


def test_synthetic_corpus_deterministic():
    a = list(synthetic_samples(per_font=2, seed=3))
    b = list(synthetic_samples(per_font=2, seed=3))
    assert len(a) == 2 * 10 * len(FONTS)
    assert all(np.array_equal(p, q) and x == y for (p, x), (q, y) in zip(a, b))


def test_held_out_accuracy(model):
    cm = confusion_matrix(model, synthetic_samples(per_font=20, seed=101))
    acc = np.trace(cm) / cm.sum()
    assert acc >= 0.95
