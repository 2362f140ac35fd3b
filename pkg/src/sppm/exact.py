"""Exact sums of powers of principal minors by exhaustive enumeration.

``sppm_exact(A, n)`` is ``sum_K det(A_K)**n`` over all ``2**l`` kept-index
subsets ``K`` (the empty minor counts as 1).  The module also provides the
exact sign-sum representation for ``n = 2``, its Monte-Carlo estimator,
formation probabilities ``det(F_K) / det(I + F)`` and exact two-point sums.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import _enum
from .errors import CapacityError, InputError, NumericError
from .matrix import IndexSubset, LogSigned, as_square, det_lu

__all__ = [
    "MAX_DIM",
    "MAX_TABLE_DIM",
    "SppmResult",
    "HSEstimate",
    "FormationTable",
    "sppm_exact",
    "sppm_weighted",
    "sppm_hs_discrete",
    "sppm_hs_random",
    "formation_probabilities",
    "exact_two_point",
    "minor_table",
]

MAX_DIM = 24
MAX_TABLE_DIM = 20


@dataclass(frozen=True)
class SppmResult:
    """An SPPM value with its provenance."""

    value: LogSigned
    n: int
    dim: int
    terms: int

    @property
    def log(self) -> float:
        """Natural log of the magnitude."""
        return self.value.log_mag

    @property
    def real(self) -> float:
        return self.value.real

    def to_dict(self) -> dict:
        return {"log_mag": self.value.log_mag, "phase": self.value.phase, "n": self.n,
                "dim": self.dim, "terms": self.terms}


def _check_power(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise InputError(f"power n must be a positive integer, got {n!r}")
    return int(n)


def _check_dim(A: np.ndarray, limit: int, what: str) -> None:
    if A.shape[0] > limit:
        raise CapacityError(f"{what} supports dimension <= {limit}, got {A.shape[0]}")


def sppm_exact(M, n: int, threads=None, backend=None) -> SppmResult:
    """Exact ``M^(n)(A) = sum_K det(A_K)**n`` over every kept subset ``K``.

    Parameters
    ----------
    M : array_like
        Square real or complex matrix, dimension at most ``MAX_DIM``.
    n : int
        Positive power.
    threads : int, optional
        Worker count; the result does not depend on it.
    backend : {"cython", "python"}, optional
        Kernel override.

    Examples
    --------
    >>> round(sppm_exact([[2.0, -1.0], [-1.0, 2.0]], 2).real, 9)
    18.0
    """
    A = as_square(M)
    n = _check_power(n)
    _check_dim(A, MAX_DIM, "sppm_exact")
    value = _enum.power_sum(A, n, threads=threads, backend=backend)
    return SppmResult(value, n, A.shape[0], 1 << A.shape[0])


def sppm_weighted(M, n: int, fugacity: complex, threads=None, backend=None) -> SppmResult:
    """``sum_K fugacity**|K| * det(A_K)**n`` (grand-canonical weighting by subset size)."""
    A = as_square(M)
    n = _check_power(n)
    _check_dim(A, MAX_DIM, "sppm_weighted")
    if complex(fugacity) == 0:
        raise InputError("fugacity must be nonzero")
    value = _enum.power_sum(A, n, fugacity=fugacity, threads=threads, backend=backend)
    return SppmResult(value, n, A.shape[0], 1 << A.shape[0])


def sppm_hs_discrete(M, threads=None, backend=None) -> SppmResult:
    """``2**-l * sum_S det(A + S)**2`` over all diagonal sign matrices ``S``.

    Equals ``sppm_exact(A, 2)``: averaging over independent signs keeps only
    the even powers of each diagonal shift.
    """
    A = as_square(M)
    _check_dim(A, MAX_TABLE_DIM, "sppm_hs_discrete")
    l = A.shape[0]
    total = _enum.power_sum(A, 2, mode=1, threads=threads, backend=backend)
    if not total.is_zero:
        total = LogSigned(total.log_mag - l * math.log(2.0), total.phase)
    return SppmResult(total, 2, l, 1 << l)


@dataclass(frozen=True)
class HSEstimate:
    """Monte-Carlo estimate of ``M^(2)`` from random diagonal signs."""

    mean: complex
    stderr: float
    samples: int
    seed: int | None

    def to_dict(self) -> dict:
        return {"mean_re": self.mean.real, "mean_im": self.mean.imag, "stderr": self.stderr,
                "samples": self.samples, "seed": self.seed}


def sppm_hs_random(M, samples: int, seed: int | None = None, batch: int = 4096) -> HSEstimate:
    """Unbiased estimator: mean of ``det(A + S)**2`` over i.i.d. Rademacher diagonals ``S``."""
    A = as_square(M)
    if int(samples) < 2:
        raise InputError(f"samples must be >= 2, got {samples}")
    samples = int(samples)
    rng = np.random.default_rng(seed)
    l = A.shape[0]
    vals = []
    for lo in range(0, samples, batch):
        m = min(batch, samples - lo)
        signs = rng.choice(np.array([-1.0, 1.0]), size=(m, l))
        stack = np.broadcast_to(A, (m, l, l)).copy()
        stack[:, np.arange(l), np.arange(l)] += signs
        vals.append(np.linalg.det(stack) ** 2)
    x = np.concatenate(vals)
    mean = complex(x.mean())
    stderr = float(np.std(x, ddof=1) / math.sqrt(samples))
    return HSEstimate(mean, stderr, samples, seed)


def minor_table(M, threads=None, backend=None):
    """``(log|det A_K|, phase)`` arrays indexed by subset integer ``K``."""
    A = as_square(M)
    _check_dim(A, MAX_TABLE_DIM, "minor_table")
    return _enum.subset_logdets(A, 0, threads=threads, backend=backend)


@dataclass(frozen=True)
class FormationTable:
    """Formation probabilities ``P(K) = det(F_K) / det(I + F)`` indexed by subset integer."""

    dim: int
    probabilities: np.ndarray
    log_norm: LogSigned

    def __len__(self) -> int:
        return self.probabilities.size

    def probability(self, subset) -> complex | float:
        mask = subset.mask if isinstance(subset, IndexSubset) else int(subset)
        return self.probabilities[mask]

    def items(self) -> Iterator[tuple[IndexSubset, float]]:
        for mask, p in enumerate(self.probabilities):
            yield IndexSubset(mask, self.dim), p

    def total(self):
        return self.probabilities.sum()


def formation_probabilities(F, threads=None, backend=None) -> FormationTable:
    """All ``2**l`` formation probabilities of the correlation-derived matrix ``F``.

    Raises
    ------
    NumericError
        If ``I + F`` is singular.
    """
    A = as_square(F)
    _check_dim(A, MAX_TABLE_DIM, "formation_probabilities")
    norm = det_lu(np.eye(A.shape[0]) + A)
    if norm.is_zero:
        raise NumericError("I + F is singular; formation probabilities are undefined")
    logabs, phase = _enum.subset_logdets(A, 0, threads=threads, backend=backend)
    mag = np.exp(logabs - norm.log_mag)
    if np.iscomplexobj(A) or not norm.is_real:
        p = mag * np.exp(1j * (phase - norm.phase))
    else:
        sgn = np.where(np.cos(phase - norm.phase) < 0, -1.0, 1.0)
        p = mag * sgn
    return FormationTable(A.shape[0], p, norm)


def _logsum(logt: np.ndarray, phase: np.ndarray) -> LogSigned:
    finite = np.isfinite(logt)
    if not np.any(finite):
        return LogSigned.zero()
    m = logt[finite].max()
    s = np.sum(np.exp(logt[finite] - m) * np.exp(1j * phase[finite]))
    if s == 0:
        return LogSigned.zero()
    return LogSigned(m + math.log(abs(s)), float(np.angle(s)))


def exact_two_point(M, n: int, j: int, d: int, threads=None, backend=None) -> complex:
    """Normalised exact two-point sum for index ``j`` (0-based).

    Computes ``sum_{K containing j} det(A_{K without j})**d * det(A_K)**(n-d)``
    divided by ``M^(n)(A)``.  For ``n = d = 1`` this is ``[(I + A)^-1]_jj``;
    for ``d = 1`` it equals ``(1/n) d/de log M^(n)(A + e e_j e_j^T)`` at
    ``e = 0``.
    """
    A = as_square(M)
    n = _check_power(n)
    l = A.shape[0]
    _check_dim(A, MAX_TABLE_DIM, "exact_two_point")
    if not 0 <= int(j) < l:
        raise InputError(f"index j={j} outside [0, {l})")
    if int(d) != d or not 0 <= d <= n:
        raise InputError(f"d must be an integer in [0, n], got {d}")
    j, d = int(j), int(d)
    logabs, phase = _enum.subset_logdets(A, 0, threads=threads, backend=backend)
    masks = np.arange(1 << l)
    K = masks[(masks >> j) & 1 == 1]
    R = K ^ (1 << j)

    def powered(idx, p):
        if p == 0:
            return np.zeros(idx.size), np.zeros(idx.size)
        return p * logabs[idx], p * phase[idx]

    la, pa = powered(R, d)
    lb, pb = powered(K, n - d)
    num = _logsum(la + lb, pa + pb)
    den = _enum.power_sum(A, n, threads=threads, backend=backend)
    if den.is_zero:
        raise NumericError("M^(n) vanishes; two-point function undefined")
    return (num / den).value
