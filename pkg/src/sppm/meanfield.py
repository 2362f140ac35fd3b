"""Mean-field approximations to the squared-minor sum ``M^(2)``.

The quartic interaction is decoupled with three uniform order parameters
``(d1, d2, d3)``; ``d4 = d1**2 - d2**2 - d3**2``.  With

    Y = (A + (d1 - d2) I)(A^T + (d1 + d2) I) - d3**2 I
      = A A^T + 2 d1 A_s + 2 d2 A_a + d4 I

the estimate is ``log M_MF = log c - l d4 / g + log det Y`` and the
self-consistency conditions are the stationarity conditions of that
expression.  ``g = 1`` is the direct theory; the dual theory applies the same
equations to the dual matrix ``N`` with coupling ``g = u`` and prefactor ``c``
(there the order parameters are the rescaled ``u * delta``).

Three evaluation paths share one damped fixed-point driver:

* dense matrices (site average of the diagonal two-point functions),
* (anti)circulant symbols on the finite momentum grid,
* the thermodynamic limit, where momentum averages become quadratures.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .duality import DualTransform
from .errors import InputError, NumericError, SolverError
from .exact import MAX_TABLE_DIM, sppm_exact
from .matrix import CirculantSymbol, LogSigned, as_square, det_lu, pfaffian

__all__ = [
    "MFState",
    "MFSolution",
    "SymbolFunction",
    "DEFAULT_INIT_GRID",
    "mf_direct",
    "mf_circulant",
    "mf_dual",
    "mf_dual_circulant",
    "mf_multistart",
    "stability_ratio",
    "is_stable",
    "variational_gap",
    "log_sppm_mf_value",
    "log_sppm_pfaffian_form",
    "fixed_point_residual",
    "init_grid",
]

DEFAULT_DAMPING = 0.5
DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100_000
_DIVERGENCE = 1e8
_MIN_DAMPING = 1e-6
_MAX_RESTARTS = 3
_STALL = 5000


@dataclass(frozen=True)
class MFState:
    """Uniform order parameters; ``delta4`` is derived."""

    delta1: float = 0.0
    delta2: float = 0.0
    delta3: float = 0.0

    @property
    def delta4(self) -> float:
        return self.delta1 ** 2 - self.delta2 ** 2 - self.delta3 ** 2

    def as_array(self) -> np.ndarray:
        return np.array([self.delta1, self.delta2, self.delta3], dtype=float)

    @classmethod
    def from_array(cls, d) -> "MFState":
        return cls(float(d[0]), float(d[1]), float(d[2]))

    def to_dict(self) -> dict:
        return {"delta1": self.delta1, "delta2": self.delta2, "delta3": self.delta3,
                "delta4": self.delta4}


@dataclass(frozen=True)
class MFSolution:
    """Result of one mean-field solve.

    ``log_sppm_mf`` is the estimate of ``M^(2)`` (per site when ``per_site``
    is set, i.e. in the thermodynamic limit).  ``coupling`` is 1 for the
    direct theory and ``u`` for the dual one.  ``admissible`` records whether
    ``Y`` has a positive-definite symmetric part, the regime where the
    decoupling is a genuine average and the variational bound applies.
    """

    state: MFState
    converged: bool
    residual: float
    iterations: int
    log_sppm_mf: LogSigned
    coupling: float = 1.0
    mode: str = "direct"
    admissible: bool = True
    per_site: bool = False
    size: int | None = None
    stability_ratio: float | None = None
    restarts: int = 0

    @property
    def log_value(self) -> float:
        return self.log_sppm_mf.log_mag

    def to_dict(self) -> dict:
        d = {"mode": self.mode, "converged": self.converged, "residual": self.residual,
             "iterations": self.iterations, "log_sppm_mf": self.log_sppm_mf.log_mag,
             "phase": self.log_sppm_mf.phase, "coupling": self.coupling,
             "admissible": self.admissible, "per_site": self.per_site, "size": self.size,
             "stability_ratio": self.stability_ratio, "restarts": self.restarts}
        d.update(self.state.to_dict())
        return d


class _Singular(Exception):
    pass


class _DenseProblem:
    """Site-averaged equations for an arbitrary real matrix."""

    def __init__(self, A: np.ndarray, coupling: float, log_c: LogSigned):
        self.A = A
        self.l = A.shape[0]
        self.g = coupling
        self.log_c = log_c
        self.AAt = A @ A.T
        self.Asum = A + A.T
        self.Adiff = A - A.T
        self.eye = np.eye(self.l)

    def Y(self, d):
        d1, d2, d3 = d
        return self.AAt + d1 * self.Asum + d2 * self.Adiff + (d1 * d1 - d2 * d2 - d3 * d3) * self.eye

    def S(self, d):
        d1, d2, d3 = d
        l, I = self.l, self.eye
        S = np.empty((2 * l, 2 * l))
        S[:l, :l] = self.A + (d1 - d2) * I
        S[:l, l:] = d3 * I
        S[l:, :l] = -d3 * I
        S[l:, l:] = -self.A.T - (d1 + d2) * I
        return S

    def rhs(self, d):
        try:
            Si = np.linalg.inv(self.S(d))
        except np.linalg.LinAlgError:
            raise _Singular from None
        if not np.all(np.isfinite(Si)):
            raise _Singular
        l = self.l
        s11 = np.diag(Si[:l, :l])
        s22 = np.diag(Si[l:, l:])
        s12 = np.diag(Si[:l, l:])
        s21 = np.diag(Si[l:, :l])
        out = np.array([0.5 * np.mean(s11 - s22), 0.5 * np.mean(s11 + s22), 0.5 * np.mean(s12 - s21)])
        return self.g * out

    def log_value(self, d):
        d4 = d[0] ** 2 - d[1] ** 2 - d[2] ** 2
        return self.log_c * LogSigned(-self.l * d4 / self.g) * det_lu(self.Y(d))

    def admissible(self, d):
        Y = self.Y(d)
        try:
            np.linalg.cholesky(0.5 * (Y + Y.T))
        except np.linalg.LinAlgError:
            return False
        return True


class _SymbolProblem:
    """Momentum-grid equations for an (anti)circulant matrix given by its symbol."""

    def __init__(self, a_q, a_mq, coupling: float, log_c: LogSigned):
        self.a_q = np.asarray(a_q, dtype=complex)
        self.a_mq = np.asarray(a_mq, dtype=complex)
        self.l = self.a_q.size
        self.g = coupling
        self.log_c = log_c
        self.a_s = 0.5 * (self.a_q + self.a_mq)
        self.a_a = 0.5 * (self.a_q - self.a_mq)

    def Y(self, d):
        d1, d2, d3 = d
        return (self.a_q + d1 - d2) * (self.a_mq + d1 + d2) - d3 * d3

    def rhs(self, d):
        Y = self.Y(d)
        if np.any(Y == 0):
            raise _Singular
        out = np.array([np.mean((self.a_s + d[0]) / Y), np.mean((d[1] - self.a_a) / Y),
                        np.mean(d[2] / Y)]).real
        if not np.all(np.isfinite(out)):
            raise _Singular
        return self.g * out

    def log_value(self, d):
        d4 = d[0] ** 2 - d[1] ** 2 - d[2] ** 2
        Y = self.Y(d)
        if np.any(Y == 0):
            return LogSigned.zero()
        logs = np.log(Y.astype(complex))
        return self.log_c * LogSigned(-self.l * d4 / self.g + float(logs.real.sum()),
                                      float(logs.imag.sum()))

    def admissible(self, d):
        return bool(np.all(self.Y(d).real > 0))


@dataclass(frozen=True)
class SymbolFunction:
    """Continuous symbol ``q -> A(q)`` for thermodynamic-limit evaluation.

    ``breakpoints`` lists momenta in ``(-pi, pi)`` where the integrand is
    sharply peaked or non-smooth; they are handed to the quadrature.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    breakpoints: tuple = ()
    epsrel: float = 1e-10

    def __call__(self, q):
        return np.asarray(self.fn(np.asarray(q, dtype=float)), dtype=complex)


class _QuadratureProblem:
    """Thermodynamic-limit equations: momentum means become ``(1/2pi) int dq``."""

    def __init__(self, sym: SymbolFunction, coupling: float, log_c_per_site: float = 0.0,
                 dual_mass: float | None = None):
        self.sym = sym
        self.g = coupling
        self.log_c = log_c_per_site
        self.dual_mass = dual_mass
        self.l = None
        pts = np.array([p for p in sym.breakpoints if -math.pi < p < math.pi], dtype=float)
        self._grid = np.unique(np.concatenate([np.linspace(-math.pi, math.pi, 4097), pts]))

    def _a(self, q):
        a = self.sym(q)
        am = self.sym(-q)
        if self.dual_mass is not None:
            m = self.dual_mass
            shift = m / (self.g + m * m)
            a, am = m - 1.0 / (a + shift), m - 1.0 / (am + shift)
        return a, am

    def _quad(self, f, dim):
        pts = sorted(set(float(p) for p in self.sym.breakpoints if -math.pi < p < math.pi))
        edges = [-math.pi] + pts + [math.pi]
        total = np.zeros(dim)
        for a, b in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad_vec(f, a, b, epsrel=self.sym.epsrel, epsabs=1e-14, limit=2000)
            total += val
        return total / (2 * math.pi)

    def Y_at(self, q, d):
        a, am = self._a(q)
        d1, d2, d3 = d
        return (a + d1 - d2) * (am + d1 + d2) - d3 * d3, a, am

    def _crosses_zero(self, d):
        # a zero of Y on the Brillouin zone makes the momentum integrals diverge
        q = self._grid
        a, am = self._a(q)
        d1, d2, d3 = d
        P, Q = a + d1 - d2, am + d1 + d2
        for z in (P, Q, P * Q - d3 * d3):
            flip = np.sign(z.real[:-1]) != np.sign(z.real[1:])
            small_im = np.maximum(np.abs(z.imag[:-1]), np.abs(z.imag[1:])) <= np.maximum(
                np.abs(z.real[:-1]), np.abs(z.real[1:]))
            if np.any(flip & small_im) or np.any(z == 0):
                return True
        return False

    def rhs(self, d):
        if self._crosses_zero(d):
            raise _Singular

        def f(q):
            Y, a, am = self.Y_at(q, d)
            if Y == 0:
                raise _Singular
            a_s, a_a = 0.5 * (a + am), 0.5 * (a - am)
            return np.array([((a_s + d[0]) / Y).real, ((d[1] - a_a) / Y).real, (d[2] / Y).real])
        out = self._quad(f, 3)
        if not np.all(np.isfinite(out)):
            raise _Singular
        return self.g * out

    def log_value(self, d):
        d4 = d[0] ** 2 - d[1] ** 2 - d[2] ** 2

        def f(q):
            Y, _, _ = self.Y_at(q, d)
            z = np.log(complex(Y)) if Y != 0 else complex(-np.inf)
            return np.array([z.real, z.imag])
        lr, li = self._quad(f, 2)
        return LogSigned(self.log_c - d4 / self.g + lr, li)

    def admissible(self, d):
        a, am = self._a(self._grid)
        Y = (a + d[0] - d[1]) * (am + d[0] + d[1]) - d[2] ** 2
        return bool(np.all(Y.real > 0))


def _iterate(problem, init, damping, tol, max_iter, pin_delta2):
    d = np.asarray(init, dtype=float).copy()
    if pin_delta2:
        d[1] = 0.0
    eta = damping
    r = problem.rhs(d)
    if pin_delta2:
        r[1] = 0.0
    res = float(np.max(np.abs(r - d)))
    best, since_best = res, 0
    for it in range(1, max_iter + 1):
        if res <= tol:
            return d, True, res, it
        if res < 0.5 * best:
            best, since_best = res, 0
        else:
            since_best += 1
            if since_best > _STALL:
                return d, False, res, it
        # a trial step that lands on a singular point is rejected and the damping halved
        while True:
            trial = (1 - eta) * d + eta * r
            try:
                r_new = problem.rhs(trial)
                break
            except _Singular:
                if eta <= _MIN_DAMPING:
                    raise
                eta = max(0.5 * eta, _MIN_DAMPING)
        if pin_delta2:
            r_new[1] = 0.0
        res_new = float(np.max(np.abs(r_new - trial)))
        if res_new > res:
            eta = max(0.5 * eta, _MIN_DAMPING)
        d, r, res = trial, r_new, res_new
        if np.max(np.abs(d)) > _DIVERGENCE:
            return d, False, res, it
    return d, res <= tol, res, max_iter


def _solve(problem, init, damping, tol, max_iter, pin_delta2, mode, per_site=False, seed=0):
    if not 0 < damping <= 1:
        raise InputError(f"damping must lie in (0, 1], got {damping}")
    if tol <= 0 or max_iter < 1:
        raise InputError("tol must be positive and max_iter >= 1")
    start = init.as_array() if isinstance(init, MFState) else np.asarray(init, dtype=float)
    rng = np.random.default_rng(seed)
    for restart in range(_MAX_RESTARTS + 1):
        try:
            d, ok, res, it = _iterate(problem, start, damping, tol, max_iter, pin_delta2)
            log_value = problem.log_value(d)
            break
        except (_Singular, NumericError, ZeroDivisionError, FloatingPointError):
            if restart == _MAX_RESTARTS:
                raise NumericError(
                    f"mean-field equations singular from init {tuple(start)} after {_MAX_RESTARTS} restarts"
                ) from None
            start = start + 1e-3 * rng.standard_normal(3)
            if pin_delta2:
                start[1] = 0.0
    return MFSolution(
        state=MFState.from_array(d), converged=ok, residual=res, iterations=it,
        log_sppm_mf=log_value, coupling=float(np.real(problem.g)), mode=mode,
        admissible=problem.admissible(d), per_site=per_site, size=problem.l, restarts=restart,
    )


def _real_matrix(A, name="matrix"):
    A = as_square(A, name)
    if np.iscomplexobj(A):
        if np.max(np.abs(A.imag)) > 1e-12 * max(1.0, np.max(np.abs(A))):
            raise InputError(f"{name} must be real for the mean-field solvers")
        A = A.real.copy()
    return A


def mf_direct(A, init: MFState | Sequence[float] = MFState(), damping: float = DEFAULT_DAMPING,
              tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
              pin_delta2: bool = False) -> MFSolution:
    """Direct mean field for a dense real matrix.

    The right-hand sides are the site averages of the diagonal two-point
    functions read off the inverse of the ``2l x 2l`` quadratic form; for
    translation-invariant matrices every site gives the same value.

    Parameters
    ----------
    A : array_like
        Real square matrix.
    init : MFState
        Starting order parameters.
    damping : float
        Mixing weight of the new iterate, in ``(0, 1]``; halved automatically
        whenever the residual grows.
    tol : float
        Convergence threshold on ``max |RHS(d) - d|``.
    max_iter : int
        Iteration cap; exceeding it returns ``converged=False``.
    pin_delta2 : bool
        Hold ``delta2 = 0`` throughout.
    """
    A = _real_matrix(A)
    return _solve(_DenseProblem(A, 1.0, LogSigned.one()), init, damping, tol, max_iter,
                  pin_delta2, "direct")


def _symbol_arrays(sym):
    if isinstance(sym, CirculantSymbol):
        return sym.values, sym.reflected
    raise InputError("expected a CirculantSymbol")


def mf_circulant(sym: CirculantSymbol | SymbolFunction, init: MFState | Sequence[float] = MFState(),
                 damping: float = DEFAULT_DAMPING, tol: float = DEFAULT_TOL,
                 max_iter: int = DEFAULT_MAX_ITER, pin_delta2: bool = False) -> MFSolution:
    """Mean field for a circulant/anticirculant matrix from its symbol.

    A ``CirculantSymbol`` uses the finite momentum grid (identical to the
    dense solver on the corresponding matrix).  A ``SymbolFunction`` selects
    the thermodynamic limit; the returned log-value is then per site.
    """
    if isinstance(sym, SymbolFunction):
        problem = _QuadratureProblem(sym, 1.0)
        return _solve(problem, init, damping, tol, max_iter, pin_delta2, "thermodynamic", per_site=True)
    a_q, a_mq = _symbol_arrays(sym)
    return _solve(_SymbolProblem(a_q, a_mq, 1.0, LogSigned.one()), init, damping, tol, max_iter,
                  pin_delta2, "circulant")


def mf_dual(T: DualTransform, init: MFState | Sequence[float] = MFState(),
            damping: float = DEFAULT_DAMPING, tol: float = DEFAULT_TOL,
            max_iter: int = DEFAULT_MAX_ITER, pin_delta2: bool = False) -> MFSolution:
    """Dual-space mean field on ``N`` with coupling ``u``.

    The state holds the rescaled parameters ``u * delta``; the estimate is
    ``log c - l d4' / u + log det(N N^T + 2 d1' N_s + 2 d2' N_a + d4')``
    with ``d4' = d1'**2 - d2'**2 - d3'**2``.
    """
    N = _real_matrix(T.N, "dual matrix")
    u = float(np.real(T.u))
    return _solve(_DenseProblem(N, u, T.log_c), init, damping, tol, max_iter, pin_delta2, "dual")


def mf_dual_circulant(sym: CirculantSymbol | SymbolFunction, u: float, branch: int = -1,
                      init: MFState | Sequence[float] = MFState(), damping: float = DEFAULT_DAMPING,
                      tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                      pin_delta2: bool = False) -> MFSolution:
    """Dual mean field for a circulant matrix, working entirely with symbols.

    The dual matrix of a circulant is circulant with symbol
    ``N(q) = m - 1 / (A(q) + m/(u + m**2))``.
    """
    from .duality import dual_mass

    m = dual_mass(float(u), branch)
    shift = m / (u + m * m)
    if isinstance(sym, SymbolFunction):
        log_c_site = -math.log(u + m * m)

        def logdet_density(q):
            z = np.log(complex(sym(np.array([q]))[0] + shift))
            return np.array([2 * z.real])
        pts = sorted(set(float(p) for p in sym.breakpoints if -math.pi < p < math.pi))
        edges = [-math.pi] + pts + [math.pi]
        acc = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            acc += integrate.quad_vec(logdet_density, a, b, epsrel=sym.epsrel, limit=2000)[0][0]
        log_c_site += acc / (2 * math.pi)
        problem = _QuadratureProblem(sym, float(u), log_c_site, dual_mass=m)
        return _solve(problem, init, damping, tol, max_iter, pin_delta2, "dual-thermodynamic",
                      per_site=True)
    a_q, a_mq = _symbol_arrays(sym)
    ap, apm = a_q + shift, a_mq + shift
    if np.any(ap == 0):
        raise NumericError(f"A + {shift!r} I is singular; choose a different u")
    l = a_q.size
    logs = np.log(ap.astype(complex))
    log_c = LogSigned(-l * math.log(u + m * m) + 2 * float(logs.real.sum()),
                      2 * float(logs.imag.sum()))
    problem = _SymbolProblem(m - 1.0 / ap, m - 1.0 / apm, float(u), log_c)
    return _solve(problem, init, damping, tol, max_iter, pin_delta2, "dual-circulant")


def log_sppm_mf_value(A, state: MFState, coupling: float = 1.0,
                      log_c: LogSigned = LogSigned.one()) -> LogSigned:
    """Evaluate the mean-field estimate at an arbitrary (not necessarily stationary) state."""
    A = _real_matrix(A)
    return _DenseProblem(A, coupling, log_c).log_value(state.as_array())


def fixed_point_residual(A, sol: MFSolution) -> float:
    """Recompute ``max |RHS(d) - d|`` from scratch for a dense-matrix solution."""
    A = _real_matrix(A)
    d = sol.state.as_array()
    r = _DenseProblem(A, sol.coupling, LogSigned.one()).rhs(d)
    return float(np.max(np.abs(r - d)))


def log_sppm_pfaffian_form(A, state: MFState) -> LogSigned:
    """Estimate via the Pfaffian of the ``4l x 4l`` antisymmetric form.

    With ``O = [[A + d1, -d2], [-d2, A + d1]]`` and the pairing blocks
    ``P = [[0, d3], [-d3, 0]]`` the estimate is
    ``(-1)**l exp(-l d4) Pf([[P, -O], [O^T, P]])``; the sign undoes the block
    ordering, ``Pf([[0, M], [-M^T, 0]]) = (-1)**(k(k-1)/2) det M`` for ``k x k``
    blocks.  It coincides with the determinant form.
    """
    A = _real_matrix(A)
    l = A.shape[0]
    I = np.eye(l)
    d1, d2, d3 = state.delta1, state.delta2, state.delta3
    O = np.block([[A + d1 * I, -d2 * I], [-d2 * I, A + d1 * I]])
    P = np.block([[np.zeros((l, l)), d3 * I], [-d3 * I, np.zeros((l, l))]])
    S = np.block([[P, -O], [O.T, P]])
    return LogSigned(-l * state.delta4, math.pi * (l % 2)) * pfaffian(S)


def stability_ratio(sol: MFSolution, f_mf: float, coupling: float | None = None) -> float:
    """Gaussian saddle-point correction relative to the mean-field free energy.

    ``1 + ln(1 - (d1**2 - d3**2)**2 / g**2) / (2 f_mf)`` with ``g`` the
    coupling (1 direct, ``u`` dual).  Returns ``-inf`` when the logarithm's
    argument is not positive (maximally unstable).
    """
    g = sol.coupling if coupling is None else float(coupling)
    s = sol.state
    x = (s.delta1 ** 2 - s.delta3 ** 2) ** 2 / (g * g)
    if x == 0:
        return 1.0
    bracket = 1.0 - x
    if bracket <= 0 or f_mf == 0:
        return -math.inf
    return 1.0 + math.log(bracket) / (2.0 * f_mf)


def is_stable(ratio: float, threshold: float = 0.99) -> bool:
    """Stability predicate ``|ratio - 1| < 1 - threshold``.

    Symmetric in the sign of the free energy, so it does not depend on
    whether the density is defined with or without the minus sign.
    """
    return math.isfinite(ratio) and abs(ratio - 1.0) < 1.0 - threshold


def init_grid(d1=(-5.0, -1.0, -0.5, 0.0, 0.5, 1.0), d2=(0.0,), d3=(0.0, 0.5, 1.0)) -> list[MFState]:
    """Cartesian grid of starting states (default covers both chain roots and broken phases)."""
    return [MFState(a, b, c) for a in d1 for b in d2 for c in d3]


DEFAULT_INIT_GRID = tuple(init_grid())


@dataclass(frozen=True)
class MultistartResult:
    """All distinct converged solutions and the variational choice among them."""

    best: MFSolution
    solutions: list = field(default_factory=list)
    failures: list = field(default_factory=list)


def _dedupe(solutions, tol=1e-6):
    out = []
    for s in solutions:
        v = s.state.as_array()
        if all(np.max(np.abs(v - o.state.as_array())) > tol for o in out):
            out.append(s)
    return out


def mf_multistart(target, mode: str = "direct", inits: Sequence[MFState] | None = None,
                  damping: float = DEFAULT_DAMPING, tol: float = DEFAULT_TOL,
                  max_iter: int = DEFAULT_MAX_ITER, pin_delta2: bool = True,
                  u: float | None = None, branch: int = -1) -> MultistartResult:
    """Solve from every start and pick the maximiser of the mean-field estimate.

    The estimate is a lower bound on ``log M^(2)``, so the largest value among
    converged admissible solutions is the best one (ties: larger ``|d4|``).

    Parameters
    ----------
    target : matrix, CirculantSymbol, SymbolFunction or DualTransform
    mode : {"direct", "circulant", "dual", "dual-circulant"}
    inits : starting states, default ``DEFAULT_INIT_GRID``
    pin_delta2 : hold ``delta2 = 0`` (default, as found for the applications)
    u, branch : dual coupling for ``mode="dual-circulant"``
    """
    inits = list(DEFAULT_INIT_GRID if inits is None else inits)
    if not inits:
        raise InputError("init grid must be nonempty")
    if mode == "direct":
        solve = lambda s: mf_direct(target, s, damping, tol, max_iter, pin_delta2)
    elif mode == "circulant":
        solve = lambda s: mf_circulant(target, s, damping, tol, max_iter, pin_delta2)
    elif mode == "dual":
        solve = lambda s: mf_dual(target, s, damping, tol, max_iter, pin_delta2)
    elif mode == "dual-circulant":
        if u is None:
            raise InputError("mode 'dual-circulant' needs u")
        solve = lambda s: mf_dual_circulant(target, u, branch, s, damping, tol, max_iter, pin_delta2)
    else:
        raise InputError(f"unknown mode {mode!r}")
    converged, failures = [], []
    for s in inits:
        try:
            sol = solve(s)
        except NumericError as exc:
            failures.append((s, str(exc)))
            continue
        if sol.converged:
            converged.append(sol)
        else:
            failures.append((s, sol.residual))
    if not converged:
        raise SolverError("no mean-field start converged", residuals=failures)
    distinct = _dedupe(converged)
    pool = [s for s in distinct if s.admissible] or distinct
    best = max(pool, key=lambda s: (round(s.log_value, 9), abs(s.state.delta4)))
    return MultistartResult(best, distinct, failures)


def variational_gap(A, sol: MFSolution) -> float:
    """``log M_exact - log M_MF``; non-negative up to roundoff for admissible solutions."""
    A = as_square(A)
    if A.shape[0] > MAX_TABLE_DIM:
        from .errors import CapacityError

        raise CapacityError(f"variational_gap needs an exact oracle, dimension <= {MAX_TABLE_DIM}")
    if sol.per_site:
        raise InputError("variational_gap needs a finite-size solution")
    return sppm_exact(A, 2).log - sol.log_value


def with_stability(sol: MFSolution, f_mf: float) -> MFSolution:
    """Copy of ``sol`` carrying its stability ratio."""
    return replace(sol, stability_ratio=stability_ratio(sol, f_mf))
