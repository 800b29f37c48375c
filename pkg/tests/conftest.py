import sys
import pathlib

import numpy as np
import pytest

sys.path.insert(0, str(pathlib.Path(__file__).parent))

from stub_service import StubService  # noqa: E402


@pytest.fixture(scope="session")
def stub_server():
    with StubService() as stub:
        yield stub


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def random_image(rng, h=32, w=32, c=3):
    return rng.integers(0, 256, size=(h, w, c), dtype=np.uint8)
