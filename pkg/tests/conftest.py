import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dtmix.edt import warmup_jit


@pytest.fixture(scope="session", autouse=True)
def _warm_jit():
    # compile (or load cached) numba kernels once, outside any timed test
    warmup_jit()
