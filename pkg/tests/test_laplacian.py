import math

import numpy as np
import pytest

from sppm.errors import CapacityError, DomainError, InputError
from sppm.exact import sppm_exact
from sppm.laplacian import (MU_OFFSET, closed_chain_multiplicity, closed_form_X, cluster_distribution,
                            expected_ground_state_counts, generating_function, ground_state_census,
                            laplacian_matrix, laplacian_mf_benchmark, laplacian_symbol,
                            laplacian_symbol_value, mu_threshold, run_lengths,
                            separated_monomer_count, thermo_curve, thermo_point, z_cluster_formula,
                            z_exact_enumeration, z_transfer_matrix)
from sppm.matrix import circulant_dense


class TestMatrix:
    def test_three(self):
        np.testing.assert_array_equal(laplacian_matrix(3), [[2, -1, -1], [-1, 2, -1], [-1, -1, 2]])

    def test_symbol(self):
        assert laplacian_symbol_value(np.pi).real == pytest.approx(4.0)
        np.testing.assert_allclose(circulant_dense(laplacian_symbol(7)), laplacian_matrix(7), atol=1e-12)

    def test_singular(self):
        assert abs(np.linalg.det(laplacian_matrix(8))) < 1e-9

    def test_too_small(self):
        with pytest.raises(InputError):
            laplacian_matrix(2)


class TestPartitionFunction:
    def test_first_power(self):
        A = laplacian_matrix(3)
        assert z_exact_enumeration(3, 1).real == pytest.approx(np.linalg.det(np.eye(3) + A))

    @pytest.mark.parametrize("L", [3, 5, 8, 11, 14])
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_three_paths_agree(self, L, n):
        a = z_exact_enumeration(L, n).log_mag
        b = z_cluster_formula(L, n).log_mag
        c = z_transfer_matrix(L, n).log_mag
        assert b == pytest.approx(a, rel=1e-10)
        assert c == pytest.approx(a, rel=1e-10)

    def test_cluster_path_method(self):
        assert z_exact_enumeration(6, 2, method="clusters").log_mag == pytest.approx(sppm_exact(laplacian_matrix(6), 2).log)

    def test_capacity(self):
        with pytest.raises(CapacityError):
            z_exact_enumeration(21, 2)

    def test_run_lengths(self):
        present, absent = run_lengths(0b0110111, 7)
        assert sorted(present) == [2, 3] and sorted(absent) == [1, 1]

    def test_multiplicity_counts_all_subsets(self):
        # summing the multiplicities over cluster patterns recovers 2^L minus empty/full rings
        L = 9
        seen = {}
        for mask in range(1, (1 << L) - 1):
            p, a = run_lengths(mask, L)
            key = (tuple(sorted(p)), tuple(sorted(a)))
            seen[key] = seen.get(key, 0) + 1
        for (p, a), count in seen.items():
            mp = {l: p.count(l) for l in set(p)}
            ma = {l: a.count(l) for l in set(a)}
            assert closed_chain_multiplicity(mp, ma, L) == count

    def test_transfer_large(self):
        f = -z_transfer_matrix(400, 2).log_mag / 800
        assert f == pytest.approx(-0.628, abs=0.005)


class TestGeneratingFunction:
    def test_n_zero_closed_form(self):
        # n = 0: S = e^-mu/(1-e^-mu), h = 1 - S^2 and G = 1/(1-x) + h'/h with x = e^-mu
        mu = 1.0
        x = math.exp(-mu)
        S = x / (1 - x)
        dS = -x / (1 - x) ** 2
        h, dh = 1 - S * S, -2 * S * dS
        assert generating_function(0.0, mu).G == pytest.approx(1 / (1 - x) + dh / h, rel=1e-12)

    def test_threshold_n_zero(self):
        mu = mu_threshold(0)
        x = math.exp(-mu)
        assert abs(1 - (x / (1 - x)) ** 2) < 1e-10
        assert mu == pytest.approx(math.log(2), abs=1e-11)

    def test_threshold_monotone(self):
        th = [mu_threshold(n) for n in range(5)]
        assert all(b > a for a, b in zip(th, th[1:]))

    @pytest.mark.parametrize("n,scale", [(1.0, 1.05), (2.0, 1.01), (5.0, 1.2)])
    def test_derivatives_match_finite_differences(self, n, scale):
        mu = mu_threshold(n) * scale
        g = generating_function(n, mu)
        e = 1e-6
        lnG = lambda n_, mu_: math.log(generating_function(n_, mu_).G)
        fd_mu = (lnG(n, mu + e) - lnG(n, mu - e)) / (2 * e)
        fd_n = (lnG(n + e, mu) - lnG(n - e, mu)) / (2 * e)
        assert g.dlnG_dmu == pytest.approx(fd_mu, rel=1e-6)
        assert g.dlnG_dn == pytest.approx(fd_n, rel=1e-6)

    def test_domain_error_carries_threshold(self):
        th = mu_threshold(2)
        with pytest.raises(DomainError) as exc:
            generating_function(2.0, th * 0.99)
        assert exc.value.threshold == pytest.approx(th)

    def test_size_diverges_at_threshold(self):
        th = mu_threshold(2)
        sizes = [generating_function(2.0, th * (1 + d)).mean_L for d in (1e-2, 1e-4, 1e-6)]
        assert sizes[0] < sizes[1] < sizes[2] and sizes[2] > 1e5

    def test_size_decreasing_in_mu(self):
        th = mu_threshold(2)
        sizes = [generating_function(2.0, th * s).mean_L for s in (1.001, 1.01, 1.1, 1.5)]
        assert all(b < a for a, b in zip(sizes, sizes[1:]))


class TestThermodynamics:
    def test_free_energy_n2(self):
        assert thermo_point(2.0).f == pytest.approx(-0.63, abs=0.01)

    def test_legendre_identities(self):
        for p in thermo_curve([0.5, 2.0, 6.0]):
            assert p.g == pytest.approx(p.f + p.mu / p.n, abs=1e-10)
            assert p.s == pytest.approx(-p.n * (p.f - p.e), abs=1e-10)
            assert p.s >= 0

    def test_entropy_concave_in_energy(self):
        pts = thermo_curve(np.linspace(0.5, 12, 24))
        e = np.array([p.e for p in pts])
        s = np.array([p.s for p in pts])
        order = np.argsort(e)
        e, s = e[order], s[order]
        slopes = np.diff(s) / np.diff(e)
        assert np.all(np.diff(slopes) <= 1e-6)

    def test_offset_sensitivity_small(self):
        a = thermo_point(2.0, offset=MU_OFFSET).f
        b = thermo_point(2.0, offset=10 * MU_OFFSET).f
        assert abs(a - b) < 1e-3

    def test_small_size_enumeration_close(self):
        f20 = -z_exact_enumeration(20, 2).log_mag / 40
        assert f20 == pytest.approx(thermo_point(2.0).f, abs=0.03)

    def test_bad_n(self):
        with pytest.raises(InputError):
            thermo_point(0.0)


class TestClusters:
    def test_nonnegative(self):
        c = cluster_distribution(4.0)
        assert all(v >= 0 for v in c.mean_m_plus.values())
        assert c.l_max > 0

    def test_dimers_dominate_at_twelve(self):
        assert cluster_distribution(12.0).dominant_length == 2

    def test_monomers_dominate_at_low_n(self):
        assert cluster_distribution(2.0).dominant_length == 1

    def test_crossover_just_above_eight(self):
        # monomer and dimer densities cross between n = 8 and n = 8.1
        lo, hi = cluster_distribution(8.0), cluster_distribution(8.1)
        assert lo.mean_m_plus[1] > lo.mean_m_plus[2]
        assert hi.mean_m_plus[2] > hi.mean_m_plus[1]

    def test_counts_sum_to_mean_clusters(self):
        # sum_l l <m_l> <= <L>
        c = cluster_distribution(3.0, l_report=None)
        g = generating_function(3.0, c.mu)
        assert sum(l * m for l, m in c.mean_m_plus.items()) <= g.mean_L


class TestGroundStates:
    def test_zero_mod_three(self):
        c = ground_state_census(9)
        assert (c.num_ground_states, c.num_clusters) == (3, 3)

    def test_minus_one_mod_three(self):
        c = ground_state_census(8)
        assert c.num_ground_states == 8 and c.num_clusters == 8

    @pytest.mark.parametrize("L", [10, 13, 16])
    def test_plus_one_mod_three_derived(self, L):
        c = ground_state_census(L)
        assert (c.num_ground_states, c.num_clusters) == expected_ground_state_counts(L, separated_monomer_count(L))

    def test_closed_form_agrees_below_sixteen(self):
        for L in (10, 13):
            assert closed_form_X(L) == separated_monomer_count(L)

    def test_closed_form_at_sixteen(self):
        # the closed-form sum counts only distinct monomer gaps at L = 16 and misses
        # the symmetric split, which contributes L/2 more states
        assert closed_form_X(16) == 16 and separated_monomer_count(16) == 24

    def test_entropy_and_complexity(self):
        c = ground_state_census(10)
        assert c.entropy == pytest.approx(math.log(25) / 10)
        assert c.complexity == pytest.approx(math.log(15) / 10)

    def test_capacity(self):
        with pytest.raises(CapacityError):
            ground_state_census(21)


class TestMeanFieldBenchmark:
    def test_goldens(self):
        b = laplacian_mf_benchmark()
        assert sorted(b.roots) == pytest.approx([-4.01545, 0.601232], abs=1e-5)
        assert b.f_mf == pytest.approx(-0.576, abs=1e-3)
        assert b.beta_mf == pytest.approx(-1.01755, abs=5e-4)
        assert b.beta_mf == pytest.approx(2 * math.log(0.601232), abs=1e-5)

    def test_upper_bound_on_free_energy(self):
        assert thermo_point(2.0).f <= laplacian_mf_benchmark().f_mf
