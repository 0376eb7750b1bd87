from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

DATA = Path(__file__).resolve().parents[1] / "data" / "mnist"
MNIST_IMAGES = DATA / "mnist10k-images-idx3-ubyte.gz"
MNIST_LABELS = DATA / "mnist10k-labels-idx1-ubyte.gz"


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def report(capsys):
    """Print one visible line per check, then assert it."""

    def _report(tag, ok, detail):
        with capsys.disabled():
            print(f"\n{tag} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return _report
