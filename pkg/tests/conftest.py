import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))  # make oracles importable

from sketchlab.rng import derive


@pytest.fixture
def rng():
    return derive(12345, "tests")


def seeded(*path):
    return derive(12345, *path)
