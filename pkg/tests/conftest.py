import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings
from scipy import ndimage as ndi

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None)
settings.load_profile("default")


def random_raster(rng: np.random.Generator, max_side: int = 128) -> np.ndarray:
    """Mix of speckle, smoothed blobs and drawn strokes."""
    h, w = (int(v) for v in rng.integers(4, max_side + 1, 2))
    kind = rng.integers(3)
    if kind == 0:
        return rng.random((h, w)) < rng.uniform(0.2, 0.6)
    if kind == 1:
        field = ndi.gaussian_filter(rng.random((h, w)), rng.uniform(1.0, 4.0))
        return field > np.quantile(field, rng.uniform(0.4, 0.8))
    from skimage.draw import line

    out = np.zeros((h, w), dtype=bool)
    for _ in range(rng.integers(1, 8)):
        r0, r1 = rng.integers(0, h, 2)
        c0, c1 = rng.integers(0, w, 2)
        rr, cc = line(r0, c0, r1, c1)
        out[rr, cc] = True
    return ndi.binary_dilation(out, iterations=int(rng.integers(0, 3))) if out.any() else out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(name, passed, detail)``."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(name: str, passed: bool, detail: str) -> bool:
        lines.append(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
