import math

import numpy as np
import pytest

from sppm import config
from sppm._backend import BACKEND
from sppm.errors import CapacityError, InputError
from sppm.exact import (MAX_DIM, exact_two_point, formation_probabilities, minor_table,
                        sppm_exact, sppm_hs_discrete, sppm_hs_random, sppm_weighted)
from sppm.ising import ising_F

from conftest import brute_sppm, random_matrix

BACKENDS = ["python"] + (["cython"] if BACKEND == "cython" else [])


class TestSppmExact:
    def test_identity(self):
        assert sppm_exact(np.eye(3), 2).real == pytest.approx(8.0)

    def test_tridiagonal_2x2(self):
        assert sppm_exact([[2.0, -1.0], [-1.0, 2.0]], 2).real == pytest.approx(18.0)

    @pytest.mark.parametrize("backend", BACKENDS)
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_matches_brute_force(self, rng, backend, n):
        A = random_matrix(rng, 6)
        got = sppm_exact(A, n, backend=backend).value.value
        assert got == pytest.approx(brute_sppm(A, n), rel=1e-10)

    def test_first_power_is_det_identity_plus(self, rng):
        A = random_matrix(rng, 7)
        assert sppm_exact(A, 1).real == pytest.approx(np.linalg.det(np.eye(7) + A), rel=1e-10)

    def test_complex_input(self, rng):
        A = random_matrix(rng, 5) + 1j * random_matrix(rng, 5)
        assert sppm_exact(A, 2).value.value == pytest.approx(brute_sppm(A, 2), rel=1e-10)

    def test_weighted(self, rng):
        A = random_matrix(rng, 5)
        assert sppm_weighted(A, 2, 0.3).value.value == pytest.approx(brute_sppm(A, 2, 0.3), rel=1e-10)

    def test_capacity(self):
        with pytest.raises(CapacityError):
            sppm_exact(np.eye(MAX_DIM + 1), 2)

    @pytest.mark.parametrize("n", [0, -1, 1.5, True])
    def test_bad_power(self, n):
        with pytest.raises(InputError):
            sppm_exact(np.eye(2), n)

    def test_thread_count_does_not_change_bits(self, rng):
        A = random_matrix(rng, 17)
        a = sppm_exact(A, 2, threads=1).value
        b = sppm_exact(A, 2, threads=8).value
        assert a == b

    def test_global_thread_setting(self, rng):
        A = random_matrix(rng, 17)
        config.set_threads(3)
        try:
            a = sppm_exact(A, 2).value
        finally:
            config.set_threads(None)
        assert a == sppm_exact(A, 2, threads=1).value


class TestSignSum:
    @pytest.mark.parametrize("backend", BACKENDS)
    def test_discrete_equals_exact(self, rng, backend):
        A = random_matrix(rng, 7)
        assert sppm_hs_discrete(A, backend=backend).log == pytest.approx(sppm_exact(A, 2).log, rel=1e-10)

    def test_random_estimator(self, rng):
        A = random_matrix(rng, 5, 0.5)
        est = sppm_hs_random(A, 20000, seed=7)
        exact = sppm_exact(A, 2).real
        assert abs(est.mean.real - exact) < 5 * est.stderr
        again = sppm_hs_random(A, 20000, seed=7)
        assert again.mean == est.mean

    def test_random_needs_samples(self):
        with pytest.raises(InputError):
            sppm_hs_random(np.eye(2), 1)


class TestFormationProbabilities:
    def test_sum_to_one_ising(self):
        t = formation_probabilities(ising_F(4, 2.0))
        assert t.total() == pytest.approx(1.0, abs=1e-9)
        assert np.all(t.probabilities > -1e-12)
        assert len(t) == 16

    def test_empty_subset_probability(self, rng):
        A = random_matrix(rng, 4, kind="antisymmetric")
        t = formation_probabilities(A)
        assert t.probability(0) == pytest.approx(1 / np.linalg.det(np.eye(4) + A))

    def test_minor_table(self, rng):
        A = random_matrix(rng, 4)
        logabs, phase = minor_table(A)
        idx = [0, 2, 3]
        d = np.linalg.det(A[np.ix_(idx, idx)])
        assert logabs[0b1101] == pytest.approx(math.log(abs(d)))
        assert (phase[0b1101] != 0) == (d < 0)


class TestTwoPoint:
    def test_first_power_is_resolvent(self, rng):
        A = random_matrix(rng, 5)
        G = np.linalg.inv(np.eye(5) + A)
        for j in range(5):
            assert exact_two_point(A, 1, j, 1) == pytest.approx(G[j, j], rel=1e-10)

    def test_log_derivative(self, rng):
        A = random_matrix(rng, 5)
        e, j, n = 1e-6, 2, 2
        E = np.zeros((5, 5))
        E[j, j] = e
        fd = (sppm_exact(A + E, n).log - sppm_exact(A - E, n).log) / (2 * e) / n
        assert exact_two_point(A, n, j, 1).real == pytest.approx(fd, rel=1e-6)

    def test_bad_arguments(self):
        with pytest.raises(InputError):
            exact_two_point(np.eye(3), 2, 5, 1)
        with pytest.raises(InputError):
            exact_two_point(np.eye(3), 2, 0, 3)
