import numpy as np
import pytest

from gzccl.codec import Workspace

# golden wire-format cases: seed -> (element count, error bound)
GOLDEN_CASES = {1: (1000, 1e-3), 2: (4096, 1e-4), 3: (31, 1e-5)}


def golden_data(seed):
    n, eb = GOLDEN_CASES[seed]
    rng = np.random.default_rng(seed)
    return rng.uniform(-1.0, 1.0, n).astype(np.float32), eb


def uniform_f32(seed, n, lo=0.0, hi=1.0):
    return np.random.default_rng(seed).uniform(lo, hi, n).astype(np.float32)


@pytest.fixture(scope="session")
def shared_ws():
    return Workspace()


def max_err(ref, test):
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.size == 0:
        return 0.0
    return float(np.max(np.abs(ref - test)))
