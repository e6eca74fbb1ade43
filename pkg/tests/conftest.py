import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sgipdg import builtin_problem  # noqa: E402


@pytest.fixture(scope="session")
def example1_2d():
    return builtin_problem("example1", 2)


@pytest.fixture(scope="session")
def example1_3d():
    return builtin_problem("example1", 3)
