import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_matrix(rng, dim, scale=1.0, kind="general"):
    A = rng.standard_normal((dim, dim)) * scale
    if kind == "symmetric":
        return 0.5 * (A + A.T)
    if kind == "antisymmetric":
        return 0.5 * (A - A.T)
    return A


def brute_sppm(A, n, weight=1.0):
    """Reference: direct loop over subsets with numpy determinants."""
    l = A.shape[0]
    total = 0j
    for mask in range(1 << l):
        idx = [i for i in range(l) if (mask >> i) & 1]
        d = np.linalg.det(A[np.ix_(idx, idx)]) if idx else 1.0
        total += weight ** len(idx) * d ** n
    return total
