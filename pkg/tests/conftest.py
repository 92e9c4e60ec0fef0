import numpy as np
import pytest

from teachkit.vision import Frame, frame_from_array


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_frame(arr, t_ms=0.0) -> Frame:
    return frame_from_array(np.asarray(arr, dtype=np.uint8), timestamp_ms=t_ms)


def solid_frame(width, height, color, t_ms=0.0) -> Frame:
    arr = np.zeros((height, width, 3), dtype=np.uint8)
    arr[:, :] = color
    return frame_from_array(arr, timestamp_ms=t_ms)


def random_frame(rng, width=96, height=96, t_ms=0.0) -> Frame:
    arr = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
    return frame_from_array(arr, timestamp_ms=t_ms)
