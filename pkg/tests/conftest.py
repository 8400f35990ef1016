import numpy as np
import pytest

from uvcurate.frame_io import Frame


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_frames(arrays):
    return [Frame(i, a) for i, a in enumerate(arrays)]


def noise_canvas(h, w, seed=0):
    return np.random.default_rng(seed).integers(0, 256, size=(h, w, 3), dtype=np.uint8)
