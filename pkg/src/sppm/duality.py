"""Strong-weak duality for the squared-minor sum.

For ``0 < u <= 1`` and ``m**2 = sqrt(u) - u`` (so that ``u / (u + m**2)**2 = 1``)
the exact identity

    M^(2)(A) = c * sum_K u**(l - |K|) * det(N_K)**2

holds with ``A' = A + m/(u + m**2) I``, ``N = m I - A'^-1`` and
``c = (u + m**2)**-l * det(A')**2``.  Here ``K`` runs over kept subsets, so
the coupling ``u`` is raised to the number of removed indices.  Small ``u``
makes the dual sum dominated by its full-matrix term, which is what the
weak-coupling expansion exploits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import _enum
from .errors import CapacityError, InputError, NumericError
from .exact import MAX_TABLE_DIM, SppmResult
from .matrix import LogSigned, as_square, det_lu

__all__ = [
    "DualTransform",
    "dual_mass",
    "default_u_grid",
    "build_dual",
    "build_dual_general",
    "sppm_dual_exact",
    "weak_coupling_expansion",
]


@dataclass(frozen=True)
class DualTransform:
    """Parameters and dual matrix of the transform.

    Attributes
    ----------
    u : coupling in the dual sum
    m : mass parameter (real for the SPPM branch, complex for general weights)
    N : dual matrix ``m I - (A + shift I)^-1``
    log_c : prefactor ``(u + m**2)**-l det(A + shift I)**2``
    source_dim : dimension ``l`` of the original matrix
    """

    u: complex
    m: complex
    N: np.ndarray
    log_c: LogSigned
    source_dim: int

    @property
    def shift(self) -> complex:
        return self.m / (self.u + self.m ** 2)

    @property
    def coupling_ratio(self) -> complex:
        """``u / (u + m**2)**2``: equals 1 on the SPPM branch."""
        return self.u / (self.u + self.m ** 2) ** 2

    def to_dict(self) -> dict:
        return {"u": complex(self.u).real, "m": complex(self.m).real,
                "log_c": self.log_c.log_mag, "phase_c": self.log_c.phase,
                "source_dim": self.source_dim}


def dual_mass(u: float, branch: int = -1) -> float:
    """``m = branch * sqrt(sqrt(u) - u)``; the negative branch is the default."""
    if not 0 < u <= 1:
        raise InputError(f"u must lie in (0, 1], got {u}")
    if branch not in (-1, 1):
        raise InputError(f"branch must be -1 or +1, got {branch}")
    r = math.sqrt(max(math.sqrt(u) - u, 0.0))
    return branch * r if r else 0.0


def default_u_grid() -> np.ndarray:
    """Scan grid 0.02, 0.04, ..., 0.98."""
    return np.round(np.arange(1, 50) * 0.02, 10)


def build_dual_general(A, u: complex, m: complex) -> DualTransform:
    """Transform for arbitrary ``(u, m)``; weights removed indices by ``u/(u+m**2)**2``."""
    A = as_square(A)
    l = A.shape[0]
    shift = m / (u + m ** 2)
    Ap = A + shift * np.eye(l)
    det_ap = det_lu(Ap)
    if det_ap.is_zero:
        raise NumericError(f"A + {shift!r} I is singular; choose a different u")
    try:
        N = m * np.eye(l) - np.linalg.inv(Ap)
    except np.linalg.LinAlgError:
        raise NumericError(f"A + {shift!r} I is singular; choose a different u") from None
    log_c = LogSigned.from_value((u + m ** 2) ** (-l)) * det_ap ** 2
    if np.iscomplexobj(N) and np.max(np.abs(N.imag)) == 0:
        N = N.real.copy()
    return DualTransform(u, m, N, log_c, l)


def build_dual(A, u: float, branch: int = -1) -> DualTransform:
    """Dual transform on the SPPM branch ``u/(u+m**2)**2 = 1``.

    Examples
    --------
    >>> T = build_dual([[2.0, -1.0], [-1.0, 2.0]], 1.0)
    >>> T.m, round(T.log_c.real, 9)
    (0.0, 9.0)
    """
    m = dual_mass(float(u), branch)
    return build_dual_general(A, float(u), m)


def sppm_dual_exact(T: DualTransform, threads=None, backend=None) -> SppmResult:
    """``c * sum_K u**(l - |K|) det(N_K)**2``, equal to ``M^(2)(A)`` for every valid ``u``."""
    l = T.source_dim
    if l > MAX_TABLE_DIM:
        raise CapacityError(f"sppm_dual_exact supports dimension <= {MAX_TABLE_DIM}, got {l}")
    u = complex(T.u)
    s = _enum.power_sum(T.N, 2, fugacity=1.0 / u, threads=threads, backend=backend)
    value = T.log_c * LogSigned.from_value(u ** l) * s
    return SppmResult(value, 2, l, 1 << l)


def weak_coupling_expansion(T: DualTransform, order: int = 2) -> LogSigned:
    """Small-``u`` truncation of the dual sum.

    By the Jacobi complementary-minor identity the dual sum equals
    ``det(N)**2 * sum_R u**|R| det((N^-1)_R)**2`` over removed sets ``R``;
    this keeps ``|R| <= order``.
    """
    if order not in (0, 1, 2):
        raise InputError(f"order must be 0, 1 or 2, got {order}")
    det_n = det_lu(T.N)
    if det_n.is_zero:
        raise NumericError("dual matrix N is singular")
    G = np.linalg.inv(T.N)
    u = complex(T.u)
    series = 1.0 + 0j
    if order >= 1:
        series += u * np.sum(np.diag(G) ** 2)
    if order >= 2:
        l = G.shape[0]
        i, j = np.array(list(combinations(range(l), 2))).T if l > 1 else (np.array([], int),) * 2
        blocks = G[i, i] * G[j, j] - G[i, j] * G[j, i]
        series += u ** 2 * np.sum(blocks ** 2)
    if not np.iscomplexobj(T.N) and complex(T.u).imag == 0:
        series = complex(series.real, 0.0)
    return T.log_c * det_n ** 2 * LogSigned.from_value(series)
