import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sppm.errors import NumericError
from sppm.duality import build_dual, sppm_dual_exact
from sppm.exact import formation_probabilities, sppm_exact
from sppm.matrix import pfaffian
from sppm.meanfield import MFState, log_sppm_mf_value, log_sppm_pfaffian_form

elements = st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False)
small = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def square(draw, lo=1, hi=7):
    n = draw(st.integers(lo, hi))
    return draw(arrays(np.float64, (n, n), elements=elements))


def log_sppm(A, n=2):
    return sppm_exact(A, n).value


def same(a, b, tol=1e-10):
    # compare complex values held in log form
    if a.is_zero or b.is_zero:
        return abs(a.value) < 1e-8 and abs(b.value) < 1e-8
    scale = max(1.0, abs(a.log_mag))
    return abs(a.log_mag - b.log_mag) <= tol * scale + 1e-9 and abs(np.exp(1j * a.phase) - np.exp(1j * b.phase)) < 1e-7


class TestInvariances:
    @small
    @given(square(), st.integers(1, 3))
    def test_transpose(self, A, n):
        assert same(log_sppm(A, n), log_sppm(A.T, n))

    @small
    @given(square())
    def test_sign_flip_even_power(self, A):
        assert same(log_sppm(A, 2), log_sppm(-A, 2))

    @small
    @given(square(), st.data())
    def test_diagonal_similarity(self, A, data):
        d = data.draw(arrays(np.float64, A.shape[0], elements=st.floats(0.3, 3.0)))
        B = np.diag(d) @ A @ np.diag(1 / d)
        assert same(log_sppm(A), log_sppm(B), tol=1e-9)

    @small
    @given(square(), st.randoms(use_true_random=False))
    def test_permutation(self, A, rnd):
        p = list(range(A.shape[0]))
        rnd.shuffle(p)
        assert same(log_sppm(A), log_sppm(A[np.ix_(p, p)]))

    @small
    @given(square())
    def test_first_power_is_determinant(self, A):
        expect = np.linalg.det(np.eye(A.shape[0]) + A)
        got = log_sppm(A, 1).value
        assert abs(got - expect) <= 1e-10 * max(1.0, abs(expect))


class TestProbabilities:
    @small
    @given(square(1, 6))
    def test_normalised(self, A):
        if abs(np.linalg.det(np.eye(A.shape[0]) + A)) < 1e-3:
            return
        assert abs(formation_probabilities(A).total() - 1) < 1e-9

    @small
    @given(st.integers(1, 4).map(lambda k: 2 * k), st.data())
    def test_pfaffian_squared(self, n, data):
        B = data.draw(arrays(np.float64, (n, n), elements=elements))
        A = B - B.T
        assert abs((pfaffian(A) ** 2).value - np.linalg.det(A)) <= 1e-9 * max(1.0, abs(np.linalg.det(A)))


class TestMeanFieldLaws:
    @small
    @given(square(2, 6), st.floats(-0.8, 0.8), st.floats(-0.4, 0.4).filter(lambda x: x == 0 or abs(x) > 1e-3))
    def test_forms_agree(self, A, d1, d3):
        s = MFState(d1, 0.0, d3)
        a, b = log_sppm_mf_value(A, s), log_sppm_pfaffian_form(A, s)
        # skip draws where the value is pure roundoff
        assume(not (a.is_zero or b.is_zero) and min(a.log_mag, b.log_mag) > -20)
        assert same(a, b, tol=1e-9)


class TestDuality:
    @settings(max_examples=15, deadline=None)
    @given(square(2, 6), st.sampled_from([0.1, 0.3, 0.5, 0.7, 0.9]))
    def test_u_independent(self, A, u):
        ref = log_sppm(A)
        try:
            T = build_dual(A, u)
        except NumericError:
            assume(False)
        assume(not ref.is_zero and abs(ref.value) > 1e-6)
        assume(np.linalg.cond(A + T.shift * np.eye(A.shape[0])) < 1e6)
        got = sppm_dual_exact(T).value
        assert abs(got.log_mag - ref.log_mag) <= 1e-8 * max(1.0, abs(ref.log_mag))
