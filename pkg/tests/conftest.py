import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from riflex.rope import FrequencySpec, make_frequencies  # noqa: E402

# Reference spectrum with an intrinsic component (k = 3) of period 32 at L = 64.
FAILURE_BASE = (16 / math.pi) ** 4
FAILURE_D = 16
FAILURE_K = 3
FAILURE_L = 64

# HunyuanVideo-style temporal periods in decoded frames; N_4 = 200.
HUNYUAN_PERIODS = (25, 50, 100, 200, 400, 800, 1600, 3200)


@pytest.fixture
def rng():
    return np.random.default_rng(20240229)


@pytest.fixture
def failure_spec():
    return make_frequencies(FAILURE_BASE, FAILURE_D)


@pytest.fixture
def hunyuan_spec():
    return FrequencySpec.from_periods(HUNYUAN_PERIODS)
