import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from dgetc.setfn import ExampleFamilyParams, make_example_family  # noqa: E402


@pytest.fixture
def easy():
    """Two-item instance with a deterministic Double-Greedy trace."""
    return make_example_family(ExampleFamilyParams((0.5, -0.25), 1.0))
