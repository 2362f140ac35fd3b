import math

import numpy as np
import pytest

from sppm.errors import CapacityError, InputError
from sppm.hubbard import (HubbardSpec, hopping_block, hubbard_atomic_check, hubbard_mass, hubbard_matrix,
                          hubbard_partition_hs, hubbard_partition_sppm, hubbard_partition_weighted,
                          hubbard_single_site_analytic, single_site_convergence, single_site_finite_n)


class TestSpec:
    def test_eps(self):
        s = HubbardSpec(1, 8, beta=2.0)
        assert s.eps == 0.25 and s.dim == 8 and s.coupling == -0.25

    @pytest.mark.parametrize("kw", [dict(L=0, N=4), dict(L=1, N=1), dict(L=1, N=4, beta=0.0)])
    def test_invalid(self, kw):
        with pytest.raises(InputError):
            HubbardSpec(**kw)


class TestMatrix:
    def test_single_site_three_slices(self):
        s = HubbardSpec(1, 3, mu=0.6, beta=1.5)
        b = 1 + 0.6 * 0.5
        np.testing.assert_allclose(hubbard_matrix(s), [[-b, -1, 0], [0, b, -1], [-1, 0, b]])

    def test_block_structure(self):
        s = HubbardSpec(3, 4, t=0.5, mu=0.2)
        A, B, L = hubbard_matrix(s), hopping_block(s), 3
        blocks = [[A[i * L:(i + 1) * L, j * L:(j + 1) * L] for j in range(4)] for i in range(4)]
        np.testing.assert_allclose(blocks[0][0], -B)
        for k in range(1, 4):
            np.testing.assert_allclose(blocks[k][k], B)
        for k in range(4):
            np.testing.assert_allclose(blocks[k][(k + 1) % 4], -np.eye(L))
        nonzero_off = sum(np.any(blocks[i][j]) for i in range(4) for j in range(4) if i != j)
        assert nonzero_off == 4

    def test_hopping_ring(self):
        B = hopping_block(HubbardSpec(4, 2, t=1.0, beta=2.0))
        assert B[0, 3] == B[3, 0] == 1.0 and B[0, 2] == 0.0

    def test_determinant_limit(self):
        beta, mu = 1.0, 0.4
        d = abs(np.linalg.det(hubbard_matrix(HubbardSpec(1, 2000, mu=mu, beta=beta))))
        assert d == pytest.approx(1 + math.exp(beta * mu), rel=1e-3)


class TestPartitionFunction:
    def test_analytic_trivial(self):
        assert hubbard_single_site_analytic(1.0, 0.0, 0.0) == 4.0

    @pytest.mark.parametrize("N", [2, 4, 8])
    def test_weighted_matches_closed_form(self, N):
        s = HubbardSpec(1, N, U=2.0, mu=0.3)
        assert hubbard_partition_weighted(s) == pytest.approx(single_site_finite_n(1.0, 0.3, 2.0, N), rel=1e-10)

    def test_sppm_approaches_analytic(self):
        s = HubbardSpec(1, 12, U=2.0, mu=0.3)
        z = hubbard_partition_sppm(s).real
        exact = hubbard_single_site_analytic(1.0, 0.3, 2.0)
        assert abs(z / exact - 1) < 0.05
        assert z == pytest.approx(single_site_finite_n(1.0, 0.3, 2.0, 12), rel=1e-9)

    def test_sppm_and_hs_agree(self):
        s = HubbardSpec(1, 8, U=1.0, mu=0.5, beta=2.0)
        a, b = hubbard_partition_sppm(s), hubbard_partition_hs(s)
        assert abs(a - b) <= 1e-8 * abs(a)

    def test_hopping_paths_agree(self):
        s = HubbardSpec(2, 4, t=0.7, U=1.5, mu=0.2)
        w = hubbard_partition_weighted(s)
        assert hubbard_partition_sppm(s).real == pytest.approx(w, rel=1e-8)
        assert hubbard_partition_hs(s).real == pytest.approx(w, rel=1e-8)

    def test_branches_agree(self):
        s = HubbardSpec(2, 3, t=0.4, U=1.0, mu=0.1)
        a, b = hubbard_partition_sppm(s, 1), hubbard_partition_sppm(s, -1)
        assert abs(a - b) <= 1e-8 * abs(a)

    def test_imaginary_part_small(self):
        z = hubbard_partition_sppm(HubbardSpec(3, 3, t=0.5, U=0.8, mu=-0.2))
        assert abs(z.imag) <= 1e-8 * abs(z)

    def test_mass_relation(self):
        s = HubbardSpec(1, 4, U=1.0)
        for br in (1, -1):
            m = hubbard_mass(s, br)
            assert (m * m + 1) ** 2 * (-s.U * s.eps) == pytest.approx(1.0)

    def test_free_fermion_limit(self):
        s = HubbardSpec(2, 4, t=0.5, U=0.0, mu=0.3)
        assert hubbard_partition_weighted(s) == pytest.approx(np.linalg.det(hubbard_matrix(s)) ** 2)

    def test_weak_coupling_continuous(self):
        base = HubbardSpec(1, 6, U=0.0, mu=0.3)
        small = HubbardSpec(1, 6, U=1e-7, mu=0.3)
        assert hubbard_partition_sppm(small).real == pytest.approx(hubbard_partition_weighted(base), rel=1e-5)

    def test_capacity(self):
        with pytest.raises(CapacityError):
            hubbard_partition_sppm(HubbardSpec(3, 6))


class TestLimits:
    def test_convergence_monotone(self):
        r = single_site_convergence(2.0, 0.5, 1.0)
        assert r.monotone
        assert r.extrapolated_rel_error < 0.01

    @pytest.mark.parametrize("method", ["hs", "weighted"])
    def test_convergence_other_paths(self, method):
        a = single_site_convergence(2.0, 0.5, 1.0, Ns=(4, 6, 8), method=method)
        b = single_site_convergence(2.0, 0.5, 1.0, Ns=(4, 6, 8))
        np.testing.assert_allclose(a.Z, b.Z, rtol=1e-8)

    def test_atomic_two_sites(self):
        assert hubbard_atomic_check(HubbardSpec(2, 8, U=1.0, mu=0.5, beta=2.0))

    def test_atomic_needs_zero_hopping(self):
        with pytest.raises(InputError):
            hubbard_atomic_check(HubbardSpec(2, 4, t=0.1))

    def test_unknown_method(self):
        with pytest.raises(InputError):
            single_site_convergence(1.0, 0.0, 1.0, method="qmc")
