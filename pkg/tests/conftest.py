import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kglauber.bench import warmup_kernels


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # compile the numba kernels once so no individual test pays JIT cost
    warmup_kernels()
