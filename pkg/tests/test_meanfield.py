import math

import numpy as np
import pytest

from sppm.duality import build_dual
from sppm.errors import CapacityError, InputError, SolverError
from sppm.exact import sppm_exact
from sppm.ising import ising_F, ising_F_symbol
from sppm.laplacian import laplacian_matrix, laplacian_symbol, laplacian_symbol_value
from sppm.matrix import circulant_symbol
from sppm.meanfield import (DEFAULT_INIT_GRID, MFState, SymbolFunction, fixed_point_residual,
                            init_grid, is_stable, log_sppm_mf_value, log_sppm_pfaffian_form,
                            mf_circulant, mf_direct, mf_dual, mf_dual_circulant, mf_multistart,
                            stability_ratio, variational_gap, with_stability)

from conftest import random_matrix

LAPLACIAN_ROOTS = (0.601231826, -4.015445388)


class TestState:
    def test_delta4(self):
        assert MFState(2.0, 1.0, 0.5).delta4 == pytest.approx(4 - 1 - 0.25)

    def test_default_grid(self):
        assert len(DEFAULT_INIT_GRID) == 18
        d1 = sorted({s.delta1 for s in DEFAULT_INIT_GRID})
        assert d1 == [-5.0, -1.0, -0.5, 0.0, 0.5, 1.0]
        assert {s.delta2 for s in DEFAULT_INIT_GRID} == {0.0}


class TestDirect:
    def test_antisymmetric_trivial(self, rng):
        A = random_matrix(rng, 6, kind="antisymmetric")
        sol = mf_direct(A)
        assert sol.converged and np.allclose(sol.state.as_array(), 0)
        assert sol.log_value == pytest.approx(np.linalg.slogdet(A @ A.T)[1])

    def test_laplacian_finite(self):
        sol = mf_direct(laplacian_matrix(12), MFState(0.5, 0, 0))
        assert sol.converged
        assert sol.state.delta1 == pytest.approx(LAPLACIAN_ROOTS[0], abs=0.01)
        assert abs(sol.state.delta2) < 1e-14 and abs(sol.state.delta3) < 1e-9

    def test_residual_recomputed(self, rng):
        A = random_matrix(rng, 8, kind="symmetric") + 4 * np.eye(8)
        sol = mf_direct(A, MFState(0.5, 0, 0), tol=1e-12)
        assert sol.converged and sol.residual <= 1e-12
        assert fixed_point_residual(A, sol) <= 2e-12

    def test_positive_definite_bound(self, rng):
        B = random_matrix(rng, 8)
        A = B @ B.T / 8 + np.eye(8)
        res = mf_multistart(A, "direct")
        assert res.best.converged
        assert variational_gap(A, res.best) >= -1e-9

    def test_nonconvergence_reported(self, rng):
        A = random_matrix(rng, 5)
        sol = mf_direct(A, MFState(0.3, 0, 0.2), max_iter=3, tol=1e-15)
        assert not sol.converged and sol.iterations <= 3

    def test_delta2_preserved_for_antisymmetric(self, rng):
        A = random_matrix(rng, 6, kind="antisymmetric")
        sol = mf_direct(A, MFState(0.4, 0.0, 0.3), pin_delta2=False)
        assert abs(sol.state.delta2) < 1e-14

    def test_rejects_complex(self):
        with pytest.raises(InputError):
            mf_direct(np.eye(2) * 1j)


class TestForms:
    def test_pfaffian_equals_determinant(self, rng):
        for _ in range(5):
            A = random_matrix(rng, 6)
            st = MFState(*rng.standard_normal(3))
            a = log_sppm_mf_value(A, st)
            b = log_sppm_pfaffian_form(A, st)
            assert b.log_mag == pytest.approx(a.log_mag, abs=1e-9)
            assert math.cos(a.phase - b.phase) == pytest.approx(1.0, abs=1e-9)

    def test_antisymmetric_depends_on_delta4_only(self, rng):
        A = random_matrix(rng, 6, kind="antisymmetric")
        a = log_sppm_mf_value(A, MFState(0.5, 0, 0))
        b = log_sppm_mf_value(A, MFState(math.sqrt(0.5 ** 2 + 0.3 ** 2), 0, 0.3))
        assert a.log_mag == pytest.approx(b.log_mag, abs=1e-10)


class TestCirculant:
    @pytest.mark.parametrize("k0", [0, 0.5])
    def test_matches_dense(self, rng, k0):
        row = rng.standard_normal(8)
        row[0] += 3
        sym = circulant_symbol(row, k0)
        from sppm.matrix import circulant_dense
        A = circulant_dense(sym)
        init = MFState(0.4, 0, 0.2)
        a = mf_direct(A, init, pin_delta2=True)
        b = mf_circulant(sym, init, pin_delta2=True)
        assert a.converged and b.converged
        np.testing.assert_allclose(a.state.as_array(), b.state.as_array(), atol=1e-9)
        assert a.log_value == pytest.approx(b.log_value, abs=1e-8)

    def test_laplacian_thermodynamic_roots(self):
        sym = SymbolFunction(laplacian_symbol_value, (0.0,))
        res = mf_multistart(sym, "circulant")
        roots = sorted(s.state.delta1 for s in res.solutions)
        assert roots[0] == pytest.approx(LAPLACIAN_ROOTS[1], abs=1e-4)
        assert roots[-1] == pytest.approx(LAPLACIAN_ROOTS[0], abs=1e-5)
        assert res.best.state.delta1 == pytest.approx(LAPLACIAN_ROOTS[0], abs=1e-5)
        d = res.best.state.delta1
        assert d ** 3 * (d + 4) == pytest.approx(1.0, abs=1e-8)

    def test_ising_paramagnetic(self):
        res = mf_multistart(ising_F_symbol(20, 2.0), "circulant")
        assert all(abs(s.state.delta4) < 1e-10 for s in res.solutions)

    def test_ising_broken_matches_dense(self):
        sym = ising_F_symbol(40, 0.5)
        a = mf_multistart(sym, "circulant").best
        assert a.state.delta4 > 0 and a.state.delta2 == 0
        b = mf_multistart(ising_F(40, 0.5), "direct", inits=[a.state]).best
        assert b.state.delta4 == pytest.approx(a.state.delta4, abs=1e-9)


class TestDual:
    def test_u_one_is_inverse_direct(self, rng):
        A = random_matrix(rng, 6, kind="symmetric") + 3 * np.eye(6)
        init = MFState(0.1, 0, 0)
        d = mf_dual(build_dual(A, 1.0), init, pin_delta2=True)
        direct = mf_direct(-np.linalg.inv(A), init, pin_delta2=True)
        assert d.converged and direct.converged
        assert d.log_value == pytest.approx(direct.log_value + 2 * np.linalg.slogdet(A)[1], abs=1e-9)

    def test_circulant_dual_matches_dense(self):
        L, u = 10, 0.3
        a = mf_dual_circulant(laplacian_symbol(L), u, init=MFState(0.1, 0, 0))
        b = mf_dual(build_dual(laplacian_matrix(L), u), MFState(0.1, 0, 0))
        assert a.state.delta1 == pytest.approx(b.state.delta1, abs=1e-9)
        assert a.log_value == pytest.approx(b.log_value, abs=1e-8)

    def test_laplacian_window(self):
        """Stable u-window at L = 100: contiguous, holds the minimum error, errors below 1.5%."""
        from sppm.laplacian import z_transfer_matrix
        L = 100
        f_exact = -z_transfer_matrix(L, 2).log_mag / (2 * L)
        sym = laplacian_symbol(L)
        rows = []
        for u in np.round(np.arange(0.02, 1.0, 0.04), 2):
            best = mf_multistart(sym, "dual-circulant", u=u).best
            f = -best.log_value / (2 * L)
            rows.append((u, abs(f / f_exact - 1), is_stable(stability_ratio(best, f))))
        stable = [i for i, r in enumerate(rows) if r[2]]
        assert stable and stable == list(range(stable[0], stable[-1] + 1))
        best_i = min(range(len(rows)), key=lambda i: rows[i][1])
        assert best_i in stable
        assert rows[best_i][1] < 0.015


class TestStability:
    def test_zero_deltas_ratio_one(self, rng):
        sol = mf_direct(random_matrix(rng, 4, kind="antisymmetric"))
        assert stability_ratio(sol, -0.5) == 1.0
        assert with_stability(sol, -0.5).stability_ratio == 1.0

    def test_unstable_sentinel(self, rng):
        from dataclasses import replace
        sol = replace(mf_direct(random_matrix(rng, 4, kind="antisymmetric")), state=MFState(1.5, 0, 0))
        assert stability_ratio(sol, -0.5) == -math.inf
        assert not is_stable(-math.inf)

    def test_predicate(self):
        assert is_stable(0.995) and is_stable(1.005) and not is_stable(0.98)


class TestMultistart:
    def test_laplacian_both_roots_finite(self):
        grid = init_grid(d1=(-5.0, -1.0, 0.0, 0.6, 1.0), d3=(0.0,))
        res = mf_multistart(laplacian_matrix(16), "direct", inits=grid)
        d1 = sorted(s.state.delta1 for s in res.solutions)
        # the negative root approaches -4.015 only as L grows
        assert d1[0] < -2.5 and 0.55 < d1[-1] < 0.65
        assert res.best.state.delta1 == d1[-1]

    def test_antisymmetric_keeps_trivial(self, rng):
        A = random_matrix(rng, 6, kind="antisymmetric")
        res = mf_multistart(A, "direct")
        assert any(np.allclose(s.state.as_array(), 0) for s in res.solutions)

    def test_ising_broken_best(self):
        res = mf_multistart(ising_F(20, 0.5), "direct")
        assert res.best.state.delta4 > 0

    def test_no_convergence_raises(self, rng):
        A = random_matrix(rng, 5)
        with pytest.raises(SolverError) as exc:
            mf_multistart(A, "direct", inits=[MFState(0.3, 0, 0.2)], max_iter=2, tol=1e-15)
        assert exc.value.residuals

    def test_empty_grid(self):
        with pytest.raises(InputError):
            mf_multistart(np.eye(2), "direct", inits=[])

    def test_unknown_mode(self):
        with pytest.raises(InputError):
            mf_multistart(np.eye(2), "newton")


class TestVariationalBound:
    def test_identity(self):
        assert variational_gap(np.eye(4), mf_multistart(np.eye(4)).best) >= 0

    def test_laplacian_ten(self):
        A = laplacian_matrix(10)
        gap = variational_gap(A, mf_multistart(A).best)
        f_exact = -sppm_exact(A, 2).log / 20
        assert gap >= 0
        assert 0.03 < gap / 20 / abs(f_exact) < 0.15

    @pytest.mark.parametrize("h", [0.0, 0.5, 1.0, 1.5])
    def test_ising(self, h):
        F = ising_F(12, h)
        for s in mf_multistart(F).solutions:
            assert variational_gap(F, s) >= -1e-9

    def test_random_corpus(self, rng):
        for _ in range(6):
            l = int(rng.integers(2, 8))
            A = random_matrix(rng, l, rng.uniform(0.3, 2.0))
            try:
                res = mf_multistart(A, pin_delta2=False)
            except SolverError:
                continue
            for s in res.solutions:
                if s.admissible:
                    assert variational_gap(A, s) >= -1e-9

    def test_capacity(self):
        with pytest.raises(CapacityError):
            variational_gap(np.eye(21), mf_direct(np.eye(3)))
