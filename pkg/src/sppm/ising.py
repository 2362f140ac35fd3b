"""Shannon-Renyi entropy ``R_2`` of the transverse-field Ising chain ground state.

In the antiperiodic fermion sector the correlation matrix ``G`` and the
matrix ``F = (I + G)(I - G)^-1`` are anticirculant with symbols

    sigma_q = (h - e^{iq}) / |h - e^{iq}|,   F_q = (1 + sigma_q) / (1 - sigma_q),

on ``q_m = 2 pi (m - 1/2) / L``.  Configuration probabilities are
``P(K) = det(F_K) det((I - G)/2)``, hence

    R_2 = -ln sum_K P(K)**2 = -2 ln det((I - G)/2) - ln M^(2)(F).

``F`` is real antisymmetric, so with ``delta2 = 0`` the mean-field estimate
depends on the order parameters only through ``d4``:
``Y(q) = |F_q|**2 + d4`` and stationarity reads ``mean_q 1/Y(q) = 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .duality import default_u_grid
from .errors import CapacityError, InputError, NumericError, ScanError, SolverError
from .exact import MAX_DIM, sppm_exact
from .matrix import CirculantSymbol, LogSigned, circulant_dense
from .meanfield import (MFSolution, MFState, init_grid, is_stable, mf_dual_circulant,
                        mf_multistart, stability_ratio)

__all__ = [
    "IsingPoint",
    "FitResult",
    "HStarScan",
    "Delta4Scaling",
    "ns_momenta",
    "ising_sigma",
    "ising_G",
    "ising_F",
    "ising_F_symbol",
    "log_det_half_complement",
    "log_efp",
    "renyi2_exact",
    "mf_delta4",
    "renyi2_mf",
    "renyi2_dual_mf",
    "dual_u_scan",
    "best_stable_u",
    "efp_zeta",
    "efp_zeta_prime",
    "efp_zeta_prime_closed",
    "catalan_constant",
    "elliptic_k",
    "kink_correction",
    "fit_alpha_beta",
    "hstar",
    "hstar_scan",
    "delta4_thermodynamic",
    "delta4_scaling",
    "DELTA4_THRESHOLD",
    "DUAL_INIT_GRID",
]

DELTA4_THRESHOLD = 1e-8
MAX_KINK_L = 80
# dual order parameters scale with u, so the starts stay small
DUAL_INIT_GRID = tuple(MFState(*d) for d in [(0, 0, 0), (0.5, 0, 0.5), (0.2, 0, 0.2), (0.1, 0, 0.3),
                                             (0.3, 0, 0.1), (-0.3, 0, 0.3), (0.5, 0, 0), (-0.5, 0, 0)])


@dataclass(frozen=True)
class IsingPoint:
    """One ``R_2`` value with its provenance.

    ``method`` is one of ``exact``, ``mf``, ``dual-mf``, ``efp``, ``kink2``.
    """

    L: int
    h: float
    R2: float
    method: str
    deltas: MFState | None = None
    u: float | None = None
    stability: float | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.R2):
            raise NumericError(f"non-finite R2 at L={self.L}, h={self.h}")

    @property
    def stable(self) -> bool | None:
        return None if self.stability is None else is_stable(self.stability)

    def to_dict(self) -> dict:
        d = {"L": self.L, "h": self.h, "R2": self.R2, "method": self.method, "u": self.u,
             "stability_ratio": self.stability}
        if self.deltas is not None:
            d.update(self.deltas.to_dict())
        d.update(self.extra)
        return d


def _check_L(L) -> int:
    if int(L) != L or L < 2 or int(L) % 2:
        raise InputError(f"L must be a positive even integer, got {L}")
    return int(L)


def ns_momenta(L: int) -> np.ndarray:
    """Antiperiodic-sector momenta ``2 pi (m - 1/2) / L`` for ``m = 1..L``."""
    L = _check_L(L)
    return 2 * np.pi * (np.arange(1, L + 1) - 0.5) / L


def ising_sigma(L: int, h: float) -> np.ndarray:
    """Unimodular correlation symbol ``sigma_q`` on the antiperiodic momenta."""
    z = h - np.exp(1j * ns_momenta(L))
    if np.any(np.abs(z) == 0):
        raise NumericError(f"field h={h} hits a gapless momentum")
    return z / np.abs(z)


def _f_of_sigma(s):
    den = 1 - s
    if np.any(np.abs(den) < 1e-14):
        raise NumericError("I - G is singular at this (L, h)")
    return (1 + s) / den


def ising_F_symbol(L: int, h: float) -> CirculantSymbol:
    """Symbol ``F_q = (1 + sigma_q) / (1 - sigma_q)`` (purely imaginary)."""
    return CirculantSymbol(_check_L(L), 0.5, _f_of_sigma(ising_sigma(L, h)))


def ising_G(L: int, h: float) -> np.ndarray:
    """Dense correlation matrix: real, orthogonal, anticirculant."""
    return circulant_dense(CirculantSymbol(_check_L(L), 0.5, ising_sigma(L, h)))


def ising_F(L: int, h: float) -> np.ndarray:
    """Dense ``F = (I + G)(I - G)^-1``: real antisymmetric anticirculant."""
    F = circulant_dense(ising_F_symbol(L, h))
    return 0.5 * (F - F.T)


def log_det_half_complement(L: int, h: float) -> float:
    """``ln det((I - G)/2) = sum_q ln((1 - sigma_q)/2)`` (real)."""
    s = ising_sigma(L, h)
    return float(np.sum(np.log((1 - s) / 2)).real)


def log_efp(L: int, h: float) -> float:
    """``ln P`` of the configuration keeping every index, ``sum_q ln((1 + sigma_q)/2)``."""
    s = ising_sigma(L, h)
    return float(np.sum(np.log((1 + s) / 2)).real)


def renyi2_exact(L: int, h: float, threads=None, backend=None) -> IsingPoint:
    """Exact ``R_2`` by enumerating every principal minor of ``F``."""
    L = _check_L(L)
    if L > MAX_DIM:
        raise CapacityError(f"renyi2_exact supports L <= {MAX_DIM}, got {L}")
    F = ising_F(L, h)
    ldg = log_det_half_complement(L, h)
    norm = float(np.sum(np.log(1 + ising_F_symbol(L, h).values)).real) + ldg
    if abs(norm) > 1e-9:
        raise NumericError(f"probabilities do not sum to 1 (log error {norm:.3g})")
    m2 = sppm_exact(F, 2, threads=threads, backend=backend)
    return IsingPoint(L, float(h), -2 * ldg - m2.log, "exact", extra={"log_norm_error": norm})


def _abs_f2(L, h):
    return np.abs(ising_F_symbol(L, h).values) ** 2


def mf_delta4(L: int, h: float, coupling: float = 1.0) -> float:
    """Broken-phase ``d4`` on the finite momentum grid, or 0 in the symmetric phase.

    Solves ``mean_q 1/(|F_q|**2 + d4) = 1/coupling`` for ``d4 > 0``; a root
    exists exactly when ``mean_q 1/|F_q|**2 > 1/coupling``.
    """
    f2 = _abs_f2(L, h)
    target = 1.0 / coupling
    g = lambda d4: float(np.mean(1.0 / (f2 + d4))) - target
    if np.min(f2) == 0 or g(0.0) <= 0:
        return 0.0
    hi = 1.0
    while g(hi) > 0:
        hi *= 2
    return float(optimize.brentq(g, 0.0, hi, xtol=1e-15, rtol=1e-14))


def _log_mf_from_delta4(L, h, d4):
    f2 = _abs_f2(L, h)
    return -L * d4 + float(np.sum(np.log(f2 + d4)))


def renyi2_mf(L: int, h: float, check_solver: bool = False) -> IsingPoint:
    """Direct mean-field ``R_2``.

    The order parameter comes from the reduced one-variable stationarity
    condition; the reported state is the representative ``(sqrt(d4), 0, 0)``
    of the degenerate family.  With ``check_solver`` the full fixed-point
    multistart is also run and must reproduce ``d4``.
    """
    L = _check_L(L)
    d4 = mf_delta4(L, h)
    log_m = _log_mf_from_delta4(L, h, d4)
    R2 = -2 * log_det_half_complement(L, h) - log_m
    extra = {"delta4": d4}
    if check_solver:
        res = mf_multistart(ising_F_symbol(L, h), "circulant")
        if abs(res.best.state.delta4 - d4) > 1e-6 * max(1.0, d4):
            raise SolverError(f"fixed-point d4 {res.best.state.delta4} disagrees with reduced {d4}")
        extra["solver_delta4"] = res.best.state.delta4
    return IsingPoint(L, float(h), R2, "mf", MFState(math.sqrt(d4), 0.0, 0.0), extra=extra)


def renyi2_dual_mf(L: int, h: float, u: float, branch: int = -1, inits=None) -> IsingPoint:
    """Dual-space mean-field ``R_2`` with its stability ratio.

    The free-energy density entering the ratio is ``R_2 / L``.
    """
    L = _check_L(L)
    sym = ising_F_symbol(L, h)
    res = mf_multistart(sym, "dual-circulant", inits=DUAL_INIT_GRID if inits is None else inits,
                        u=u, branch=branch)
    sol: MFSolution = res.best
    R2 = -2 * log_det_half_complement(L, h) - sol.log_value
    ratio = stability_ratio(sol, R2 / L)
    return IsingPoint(L, float(h), R2, "dual-mf", sol.state, u=float(u), stability=ratio,
                      extra={"admissible": sol.admissible, "solutions": len(res.solutions)})


def dual_u_scan(L: int, h: float, u_grid=None, branch: int = -1) -> list[IsingPoint]:
    """``renyi2_dual_mf`` over a u grid (default 0.02..0.98), in grid order.

    Points whose solve fails are skipped.
    """
    out = []
    for u in default_u_grid() if u_grid is None else u_grid:
        try:
            out.append(renyi2_dual_mf(L, h, float(u), branch))
        except (NumericError, InputError):
            continue
    return out


def best_stable_u(points: list[IsingPoint]) -> IsingPoint:
    """Within the stable window, the point with the largest ``M^(2)`` (smallest ``R_2``)."""
    stable = [p for p in points if p.stable]
    if not stable:
        raise ScanError("no u in the scan passes the stability predicate")
    return min(stable, key=lambda p: p.R2)


def _zeta_integrand(q, h):
    eps = np.sqrt(1 + h * h - 2 * h * np.cos(q))
    return np.log(0.5 + (h - np.cos(q)) / (2 * eps))


def efp_zeta(h: float) -> float:
    """``zeta(h) = (1/2pi) int_0^pi ln(1/2 + (h - cos q)/(2 eps_q)) dq``.

    >>> round(-2 * efp_zeta(1.0), 5)
    0.22005
    """
    if h < 0:
        raise InputError(f"h must be non-negative, got {h}")
    if h == 0:
        return -math.log(2.0)
    val, _ = integrate.quad(_zeta_integrand, 0.0, math.pi, args=(h,), epsabs=1e-12, epsrel=1e-11,
                            limit=500)
    return val / (2 * math.pi)


def efp_zeta_prime(h: float) -> float:
    """``d zeta/dh = (1/2pi) int_0^pi (cos q - h + eps_q) / eps_q**2 dq`` by quadrature."""
    if h < 0 or h == 1:
        raise InputError(f"zeta'(h) needs h >= 0 and h != 1, got {h}")

    def f(q):
        eps2 = 1 + h * h - 2 * h * math.cos(q)
        return (math.cos(q) - h + math.sqrt(eps2)) / eps2
    pts = [math.acos(min(1.0, max(-1.0, h)))] if abs(h - 1) < 0.5 else None
    val, _ = integrate.quad(f, 0.0, math.pi, points=pts, epsabs=1e-13, epsrel=1e-12, limit=500)
    return val / (2 * math.pi)


def elliptic_k(m: float, tol: float = 1e-15) -> float:
    """Complete elliptic integral of the first kind ``K(m)`` (parameter ``m = k**2``) via the AGM."""
    if not 0 <= m < 1:
        raise InputError(f"K(m) needs 0 <= m < 1, got {m}")
    a, b = 1.0, math.sqrt(1.0 - m)
    while abs(a - b) > tol * a:
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return math.pi / (2 * a)


def efp_zeta_prime_closed(h: float) -> float:
    """``-Theta(h - 1)/(2h) + K(4h/(1+h)**2) / (pi (1 + h))``."""
    if h < 0 or h == 1:
        raise InputError(f"closed form needs h >= 0 and h != 1, got {h}")
    step = 1.0 / (2 * h) if h > 1 else 0.0
    return -step + elliptic_k(4 * h / (1 + h) ** 2) / (math.pi * (1 + h))


def catalan_constant() -> float:
    """Catalan's constant from the rapidly convergent central-binomial series."""
    s, term_binom = 0.0, 1.0
    for k in range(60):
        if k:
            term_binom *= (2 * k) * (2 * k - 1) / (k * k)
        s += 1.0 / ((2 * k + 1) ** 2 * term_binom)
    return math.pi / 8 * math.log(2 + math.sqrt(3)) + 3.0 / 8 * s


def kink_correction(L: int, h: float, flips: int = 2) -> IsingPoint:
    """EFP plus the two-flip correction, ``-2 ln P0 - ln(1 + sum_{i<j} x_ij**2)``.

    ``x_ij`` is the ratio of the probability with indices ``i, j`` removed to
    ``P0``; by the complementary-minor identity it equals
    ``det([[0, G_ij], [-G_ij, 0]]) = G_ij**2`` with ``G = F^-1``.
    """
    L = _check_L(L)
    if L > MAX_KINK_L:
        raise CapacityError(f"kink_correction supports L <= {MAX_KINK_L}, got {L}")
    if flips not in (0, 2):
        raise InputError(f"flips must be 0 or 2, got {flips}")
    lp0 = log_efp(L, h)
    if flips == 0:
        return IsingPoint(L, float(h), -2 * lp0, "efp")
    Finv = circulant_dense(CirculantSymbol(L, 0.5, 1.0 / ising_F_symbol(L, h).values))
    iu = np.triu_indices(L, 1)
    x = Finv[iu] ** 2
    corr = float(np.sum(x ** 2))
    return IsingPoint(L, float(h), -2 * lp0 - math.log1p(corr), "kink2", extra={"two_flip_sum": corr})


@dataclass(frozen=True)
class FitResult:
    """Least-squares line ``R_2 = alpha2 L + beta2``."""

    alpha2: float
    beta2: float
    residual: float
    L_range: tuple
    alpha2_stderr: float = 0.0
    beta2_stderr: float = 0.0

    def to_dict(self) -> dict:
        return {"alpha2": self.alpha2, "beta2": self.beta2, "residual": self.residual,
                "L_range": list(self.L_range), "alpha2_stderr": self.alpha2_stderr,
                "beta2_stderr": self.beta2_stderr}


def _linear_fit(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    X = np.column_stack([x, np.ones_like(x)])
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < 2:
        raise InputError("degenerate design: need at least two distinct abscissae")
    r = y - X @ coef
    rss = float(r @ r)
    dof = x.size - 2
    if dof > 0:
        cov = rss / dof * np.linalg.inv(X.T @ X)
        se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    else:
        se = np.zeros(2)
    return coef, rss, se


def fit_alpha_beta(points) -> FitResult:
    """Ordinary least squares of ``R_2`` against ``L`` over at least three distinct even sizes."""
    pts = list(points)
    Ls = sorted({p.L for p in pts})
    if len(Ls) < 3:
        raise InputError(f"need at least 3 distinct L values, got {len(Ls)}")
    coef, rss, se = _linear_fit([p.L for p in pts], [p.R2 for p in pts])
    return FitResult(float(coef[0]), float(coef[1]), math.sqrt(rss), tuple(Ls), float(se[0]), float(se[1]))


def hstar(L: int, threshold: float = DELTA4_THRESHOLD, xtol: float = 1e-7) -> float:
    """Largest field with ``d4 > threshold`` on the size-``L`` grid, by bisection."""
    L = _check_L(L)
    on = lambda h: mf_delta4(L, h) > threshold
    lo, hi = 0.0, 1.0
    if not on(lo):
        raise ScanError(f"no broken-phase solution at h = 0 for L = {L}")
    while on(hi):
        hi += 0.5
        if hi > 10:
            raise ScanError(f"broken phase persists beyond h = 10 for L = {L}")
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if on(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class HStarScan:
    """``h*(L)`` and the power law ``1 - h* = zeta1 L**-zeta2``."""

    L: tuple
    hstar: tuple
    zeta1: float
    zeta2: float
    zeta2_stderr: float

    def to_dict(self) -> dict:
        return {"L": list(self.L), "hstar": list(self.hstar), "zeta1": self.zeta1,
                "zeta2": self.zeta2, "zeta2_stderr": self.zeta2_stderr}


def hstar_scan(L_list, threshold: float = DELTA4_THRESHOLD) -> HStarScan:
    """``h*`` for each size and a log-log fit of ``1 - h*`` against ``L``."""
    Ls = [_check_L(L) for L in L_list]
    if len(set(Ls)) < 3:
        raise InputError("need at least 3 distinct sizes")
    hs = [hstar(L, threshold) for L in Ls]
    coef, _, se = _linear_fit(np.log(Ls), np.log(1 - np.array(hs)))
    return HStarScan(tuple(Ls), tuple(hs), float(math.exp(coef[1])), float(-coef[0]), float(se[0]))


def _abs_f2_continuum(q, h):
    z = h - np.exp(1j * q)
    s = z / np.abs(z)
    return np.abs((1 + s) / (1 - s)) ** 2


def delta4_thermodynamic(h: float) -> float:
    """``d4`` in the thermodynamic limit: root of ``(1/pi) int_0^pi dq / (|F(q)|**2 + d4) = 1``.

    The integrand is sharply peaked at small ``q`` for ``h`` near 1, so the
    quadrature is split at multiples of the peak width.
    """
    if not 0 <= h < 1:
        raise InputError(f"h must lie in [0, 1), got {h}")

    def g(d4):
        w = 2 * (1 - h) * math.sqrt(d4)
        pts = [k * w for k in (0.5, 1, 2, 4, 8, 16, 64) if k * w < math.pi]
        pts += [k * (1 - h) for k in (0.5, 1, 2, 4) if k * (1 - h) < math.pi]
        val, _ = integrate.quad(lambda q: 1.0 / (_abs_f2_continuum(q, h) + d4), 0.0, math.pi,
                                points=sorted(set(pts)) or None, limit=1000, epsabs=1e-14, epsrel=1e-12)
        return val / math.pi - 1.0
    lo = 1e-14
    if g(lo) <= 0:
        return 0.0
    hi = 1.0
    while g(hi) > 0:
        hi *= 2
    return float(optimize.brentq(g, lo, hi, xtol=1e-16, rtol=1e-13))


@dataclass(frozen=True)
class Delta4Scaling:
    """Log-log slope of ``d4`` against ``1 - h``."""

    h: tuple
    delta4: tuple
    exponent: float
    exponent_stderr: float
    prefactor: float

    def to_dict(self) -> dict:
        return {"h": list(self.h), "delta4": list(self.delta4), "exponent": self.exponent,
                "exponent_stderr": self.exponent_stderr, "prefactor": self.prefactor}


def delta4_scaling(h_grid=None) -> Delta4Scaling:
    """Fit ``d4 ~ (1 - h)**p`` as ``h -> 1-`` (default ``1 - h`` in ``[1e-3, 10**-1.5]``)."""
    hs = 1 - np.logspace(-3, -1.5, 8) if h_grid is None else np.asarray(h_grid, dtype=float)
    d4 = np.array([delta4_thermodynamic(float(h)) for h in hs])
    if np.any(d4 <= 0):
        raise ScanError("d4 vanished on part of the grid")
    coef, _, se = _linear_fit(np.log(1 - hs), np.log(d4))
    return Delta4Scaling(tuple(float(h) for h in hs), tuple(float(x) for x in d4), float(coef[0]),
                         float(se[0]), float(math.exp(coef[1])))
