"""Imaginary-time Hubbard partition function as a sum of squared principal minors.

With ``N`` time slices of width ``eps = beta / N`` the single-spin block
``A_Hub`` (size ``l = N L``) reproduces the Trotterised partition function as

    Z_N = sum_K lam**(l - |K|) det(A_K)**2,      lam = -U eps,

and a duality shift turns the weighted sum into a plain SPPM,

    Z_N = (1 + m**2)**-l det(A')**2 M^(2)(m I - A'^-1),   A' = A + m/(1 + m**2) I,

for either root ``m**2 = -1 +- 1/sqrt(-U eps)``.  The discrete
Hubbard-Stratonovich form sums ``det((m I + S) A' - I)**2`` over Ising spins.
"""
from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, InputError, NumericError
from .exact import sppm_exact, sppm_weighted

__all__ = [
    "HubbardSpec",
    "ConvergenceResult",
    "MAX_HUBBARD_DIM",
    "hopping_block",
    "hubbard_matrix",
    "hubbard_mass",
    "hubbard_partition_weighted",
    "hubbard_partition_sppm",
    "hubbard_partition_hs",
    "single_site_finite_n",
    "hubbard_single_site_analytic",
    "hubbard_atomic_check",
    "single_site_convergence",
]

MAX_HUBBARD_DIM = 16
IMAG_RTOL = 1e-8


@dataclass(frozen=True)
class HubbardSpec:
    """Lattice, Trotter and model parameters; ``eps = beta / N``."""

    L: int
    N: int
    t: float = 0.0
    U: float = 1.0
    mu: float = 0.0
    beta: float = 1.0

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise InputError(f"L must be a positive integer, got {self.L}")
        if int(self.N) != self.N or self.N < 2:
            raise InputError(f"N must be an integer >= 2, got {self.N}")
        if not self.beta > 0:
            raise InputError(f"beta must be positive, got {self.beta}")

    @property
    def eps(self) -> float:
        return self.beta / self.N

    @property
    def dim(self) -> int:
        return self.L * self.N

    @property
    def coupling(self) -> float:
        """Weight ``-U eps`` per removed index."""
        return -self.U * self.eps

    def to_dict(self) -> dict:
        return {"L": self.L, "N": self.N, "t": self.t, "U": self.U, "mu": self.mu,
                "beta": self.beta, "eps": self.eps}


def hopping_block(spec: HubbardSpec) -> np.ndarray:
    """``B = (1 + mu eps) I + t eps (nearest neighbours)``, periodic for ``L >= 3``.

    ``L = 2`` has a single bond; ``L = 1`` has none.
    """
    L, eps = spec.L, spec.eps
    B = (1 + spec.mu * eps) * np.eye(L)
    if L == 2:
        B[0, 1] = B[1, 0] = spec.t * eps
    elif L >= 3:
        for j in range(L):
            B[j, (j + 1) % L] += spec.t * eps
            B[(j + 1) % L, j] += spec.t * eps
    return B


def hubbard_matrix(spec: HubbardSpec) -> np.ndarray:
    """Block matrix with ``-B`` then ``B`` on the diagonal, ``-I`` above it and in the corner."""
    L, N = spec.L, spec.N
    B = hopping_block(spec)
    A = np.zeros((N * L, N * L))
    eye = np.eye(L)
    for k in range(N):
        blk = slice(k * L, (k + 1) * L)
        A[blk, blk] = -B if k == 0 else B
        nxt = slice(((k + 1) % N) * L, ((k + 1) % N + 1) * L)
        A[blk, nxt] = -eye
    return A


def _check_capacity(spec):
    if spec.dim > MAX_HUBBARD_DIM:
        raise CapacityError(f"Hubbard paths support N*L <= {MAX_HUBBARD_DIM}, got {spec.dim}")


def hubbard_mass(spec: HubbardSpec, branch: int = 1) -> complex:
    """``m`` with ``m**2 = -1 + branch / sqrt(-U eps)`` (principal square roots)."""
    if branch not in (1, -1):
        raise InputError(f"branch must be +1 or -1, got {branch}")
    if spec.U == 0:
        raise InputError("the dual form needs U != 0")
    m2 = -1 + branch / cmath.sqrt(complex(spec.coupling))
    return cmath.sqrt(m2)


def _real_checked(z: complex, what: str) -> float:
    if abs(z.imag) > IMAG_RTOL * max(abs(z), 1e-300):
        raise NumericError(f"{what}: imaginary part {z.imag:.3g} exceeds {IMAG_RTOL} relative")
    return z.real


def hubbard_partition_weighted(spec: HubbardSpec) -> float:
    """``Z_N`` as the weighted minor sum ``sum_K (-U eps)**(l - |K|) det(A_K)**2``."""
    _check_capacity(spec)
    A = hubbard_matrix(spec)
    lam = spec.coupling
    if lam == 0:
        return float(np.linalg.det(A) ** 2)
    z = (lam ** spec.dim) * sppm_weighted(A, 2, 1.0 / lam).value.value
    return _real_checked(complex(z), "weighted sum")


def _shifted(spec, branch):
    m = hubbard_mass(spec, branch)
    m2 = m * m
    if abs(m2 + 1) < 1e-14:
        raise NumericError("1 + m^2 vanishes")
    Ap = hubbard_matrix(spec) + (m / (m2 + 1)) * np.eye(spec.dim)
    return m, m2, Ap


def hubbard_partition_sppm(spec: HubbardSpec, branch: int = 1, threads=None) -> complex:
    """``Z_N`` through the SPPM of ``m I - A'^-1``; imaginary residue checked."""
    _check_capacity(spec)
    m, m2, Ap = _shifted(spec, branch)
    sign, logdet = np.linalg.slogdet(Ap)
    if sign == 0 or not np.isfinite(logdet):
        raise NumericError("shifted Hubbard matrix is singular")
    Nmat = m * np.eye(spec.dim) - np.linalg.inv(Ap)
    m2sum = sppm_exact(Nmat, 2, threads=threads).value
    logz = -spec.dim * cmath.log(1 + m2) + 2 * (logdet + cmath.log(sign)) + m2sum.log_mag + 1j * m2sum.phase
    z = cmath.exp(logz)
    _real_checked(z, "SPPM path")
    return z


def hubbard_partition_hs(spec: HubbardSpec, branch: int = 1, batch: int = 4096) -> complex:
    """``Z_N = (2 (1 + m**2))**-l sum_S det((m I + S) A' - I)**2`` over all ``2**l`` spins."""
    _check_capacity(spec)
    m, m2, Ap = _shifted(spec, branch)
    l = spec.dim
    eye = np.eye(l)
    total = 0j
    spins = itertools.product((1.0, -1.0), repeat=l)
    while True:
        chunk = np.array(list(itertools.islice(spins, batch)))
        if chunk.size == 0:
            break
        D = m + chunk
        mats = D[:, :, None] * Ap[None, :, :] - eye
        total += np.sum(np.linalg.det(mats) ** 2)
    z = total / (2 * (1 + m2)) ** l
    _real_checked(z, "HS path")
    return z


def single_site_finite_n(beta: float, mu: float, U: float, N: int) -> float:
    """Closed form of ``Z_N`` for one site: ``1 + 2 b**N + (b**2 - U eps)**N`` with ``b = 1 + mu eps``."""
    eps = beta / N
    b = 1 + mu * eps
    return 1 + 2 * b ** N + (b * b - U * eps) ** N


def hubbard_single_site_analytic(beta: float, mu: float, U: float) -> float:
    """``1 + 2 e^{beta mu} + e^{2 beta mu - beta U}``.

    >>> hubbard_single_site_analytic(1.0, 0.0, 0.0)
    4.0
    """
    return 1 + 2 * math.exp(beta * mu) + math.exp(2 * beta * mu - beta * U)


def hubbard_atomic_check(spec: HubbardSpec, branch: int = 1, slack: float = 1.5) -> bool:
    """At ``t = 0``: ``Z_N = Z_N(single site)**L`` exactly, and the deviation from
    the analytic ``Z_SS**L`` stays inside ``slack`` times the propagated
    single-site Trotter error.
    """
    if spec.t != 0:
        raise InputError("atomic check needs t = 0")
    z = hubbard_partition_sppm(spec, branch).real
    z_n = single_site_finite_n(spec.beta, spec.mu, spec.U, spec.N) ** spec.L
    z_ss = hubbard_single_site_analytic(spec.beta, spec.mu, spec.U) ** spec.L
    envelope = slack * abs(z_n / z_ss - 1) + 1e-12
    return abs(z / z_n - 1) <= 1e-8 and abs(z / z_ss - 1) <= envelope


@dataclass(frozen=True)
class ConvergenceResult:
    """Single-site ``Z_N`` against the analytic limit over a set of slice counts."""

    N: tuple
    Z: tuple
    analytic: float
    rel_errors: tuple
    monotone: bool
    extrapolated: float
    extrapolated_rel_error: float

    def to_dict(self) -> dict:
        return {"N": list(self.N), "Z": list(self.Z), "analytic": self.analytic,
                "rel_errors": list(self.rel_errors), "monotone": self.monotone,
                "extrapolated": self.extrapolated,
                "extrapolated_rel_error": self.extrapolated_rel_error}


def single_site_convergence(beta: float, mu: float, U: float, Ns=(4, 6, 8, 10, 12),
                            method: str = "sppm", branch: int = 1) -> ConvergenceResult:
    """``Z_N`` for each ``N`` by the chosen path, with a linear-in-``1/N`` extrapolation."""
    Ns = tuple(int(n) for n in Ns)
    if len(Ns) < 2:
        raise InputError("need at least two slice counts")
    path = {"sppm": lambda s: hubbard_partition_sppm(s, branch).real,
            "hs": lambda s: hubbard_partition_hs(s, branch).real,
            "weighted": hubbard_partition_weighted}.get(method)
    if path is None:
        raise InputError(f"unknown method {method!r}")
    Z = [float(path(HubbardSpec(1, n, 0.0, U, mu, beta))) for n in Ns]
    exact = hubbard_single_site_analytic(beta, mu, U)
    errs = [abs(z / exact - 1) for z in Z]
    order = np.argsort(Ns)
    e_sorted = [errs[i] for i in order]
    monotone = all(b < a for a, b in zip(e_sorted, e_sorted[1:]))
    slope, intercept = np.polyfit(1.0 / np.array(Ns, dtype=float), Z, 1)
    return ConvergenceResult(Ns, tuple(Z), exact, tuple(errs), monotone, float(intercept),
                             abs(float(intercept) / exact - 1))
