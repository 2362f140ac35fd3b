"""Dense linear-algebra primitives shared by every other module.

Indices are 0-based in code.  Human-facing text (``str(IndexSubset)``, CLI
output) uses 1-based labels.
"""
from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import InputError, NumericError

__all__ = [
    "LogSigned",
    "IndexSubset",
    "CirculantSymbol",
    "as_square",
    "det_lu",
    "principal_submatrix",
    "pfaffian",
    "circulant_symbol",
    "circulant_dense",
    "read_matrix",
    "write_matrix",
]

_TWO_PI = 2.0 * math.pi


def _wrap_phase(phase: float) -> float:
    p = math.remainder(phase, _TWO_PI)
    return math.pi if p <= -math.pi else p


@dataclass(frozen=True)
class LogSigned:
    """A scalar stored as ``exp(log_mag) * exp(1j * phase)``.

    Zero is represented only by ``log_mag = -inf`` with ``phase = 0``.  Real
    negative numbers carry ``phase = pi``.
    """

    log_mag: float
    phase: float = 0.0

    def __post_init__(self):
        lm = float(self.log_mag)
        if math.isnan(lm) or lm == math.inf:
            raise NumericError(f"invalid log-magnitude {self.log_mag!r}")
        ph = 0.0 if lm == -math.inf else _wrap_phase(float(self.phase))
        if math.isnan(ph):
            raise NumericError("phase is NaN")
        object.__setattr__(self, "log_mag", lm)
        object.__setattr__(self, "phase", ph)

    @classmethod
    def zero(cls) -> "LogSigned":
        return cls(-math.inf, 0.0)

    @classmethod
    def one(cls) -> "LogSigned":
        return cls(0.0, 0.0)

    @classmethod
    def from_value(cls, z: complex) -> "LogSigned":
        z = complex(z)
        if z == 0:
            return cls.zero()
        if not cmath.isfinite(z):
            raise InputError(f"non-finite value {z!r}")
        return cls(math.log(abs(z)), cmath.phase(z))

    @property
    def is_zero(self) -> bool:
        return self.log_mag == -math.inf

    @property
    def is_real(self) -> bool:
        return self.phase == 0.0 or self.phase == math.pi

    @property
    def sign(self) -> float:
        """Sign of the real part (0 for the zero sentinel)."""
        if self.is_zero:
            return 0.0
        c = math.cos(self.phase)
        return 0.0 if c == 0 else math.copysign(1.0, c)

    @property
    def value(self) -> complex:
        if self.is_zero:
            return 0j
        if self.phase == 0.0:
            return complex(math.exp(self.log_mag))
        if self.phase == math.pi:
            return complex(-math.exp(self.log_mag))
        return cmath.rect(math.exp(self.log_mag), self.phase)

    @property
    def real(self) -> float:
        return self.value.real

    def __mul__(self, other: "LogSigned") -> "LogSigned":
        if self.is_zero or other.is_zero:
            return LogSigned.zero()
        return LogSigned(self.log_mag + other.log_mag, self.phase + other.phase)

    def __truediv__(self, other: "LogSigned") -> "LogSigned":
        if other.is_zero:
            raise NumericError("division by a zero LogSigned")
        if self.is_zero:
            return LogSigned.zero()
        return LogSigned(self.log_mag - other.log_mag, self.phase - other.phase)

    def __pow__(self, n: int) -> "LogSigned":
        if self.is_zero:
            return LogSigned.one() if n == 0 else LogSigned.zero()
        return LogSigned(n * self.log_mag, n * self.phase)

    def __neg__(self) -> "LogSigned":
        return self if self.is_zero else LogSigned(self.log_mag, self.phase + math.pi)

    def __add__(self, other: "LogSigned") -> "LogSigned":
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        m = max(self.log_mag, other.log_mag)
        z = cmath.rect(math.exp(self.log_mag - m), self.phase) + cmath.rect(
            math.exp(other.log_mag - m), other.phase
        )
        if self.is_real and other.is_real:
            z = complex(z.real, 0.0)
        if z == 0:
            return LogSigned.zero()
        return LogSigned(m + math.log(abs(z)), cmath.phase(z))

    def __sub__(self, other: "LogSigned") -> "LogSigned":
        return self + (-other)

    def isclose(self, other: "LogSigned", rtol: float = 1e-9) -> bool:
        """Relative closeness of the represented values (log-domain safe)."""
        if self.is_zero or other.is_zero:
            return self.is_zero and other.is_zero
        d_log = self.log_mag - other.log_mag
        d_phase = abs(_wrap_phase(self.phase - other.phase))
        return abs(math.expm1(d_log)) <= rtol and d_phase <= rtol

    def to_dict(self) -> dict:
        return {"log_mag": self.log_mag, "phase": self.phase}


@dataclass(frozen=True)
class IndexSubset:
    """A subset of ``{0, ..., dim-1}`` stored as a bit mask."""

    mask: int
    dim: int

    def __post_init__(self):
        if self.dim < 0 or self.mask < 0 or self.mask >> self.dim:
            raise InputError(f"mask {self.mask:#b} has bits outside dimension {self.dim}")

    @classmethod
    def from_indices(cls, indices: Iterable[int], dim: int) -> "IndexSubset":
        mask = 0
        for i in indices:
            if not 0 <= int(i) < dim:
                raise InputError(f"index {i} outside [0, {dim})")
            mask |= 1 << int(i)
        return cls(mask, dim)

    @classmethod
    def full(cls, dim: int) -> "IndexSubset":
        return cls((1 << dim) - 1, dim)

    @property
    def card(self) -> int:
        return bin(self.mask).count("1")

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.dim) if (self.mask >> i) & 1)

    def __contains__(self, i: int) -> bool:
        return bool((self.mask >> i) & 1)

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)

    def __len__(self) -> int:
        return self.card

    def __str__(self) -> str:
        return "{" + ",".join(str(i + 1) for i in self.indices) + "}"


@dataclass(frozen=True)
class CirculantSymbol:
    """Eigenvalues ``values[k]`` of a (anti)circulant at ``q_k = 2*pi*(k + k0)/size``.

    ``k0 = 0`` is the periodic (circulant) case and ``k0 = 1/2`` the
    antiperiodic one, where entries wrapping around the corner flip sign.
    """

    size: int
    k0: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.size,):
            raise InputError(f"symbol has {vals.size} values, expected {self.size}")
        if self.k0 not in (0, 0.5):
            raise InputError(f"k0 must be 0 or 1/2, got {self.k0}")
        if not np.all(np.isfinite(vals)):
            raise InputError("symbol values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def momenta(self) -> np.ndarray:
        return 2 * np.pi * (np.arange(self.size) + self.k0) / self.size

    @property
    def reflected(self) -> np.ndarray:
        """Symbol values at ``-q_k`` (the symbol of the transpose)."""
        k = np.arange(self.size)
        if self.k0 == 0:
            return self.values[(-k) % self.size]
        return self.values[self.size - 1 - k]


def as_square(M, name: str = "matrix", allow_empty: bool = False) -> np.ndarray:
    """Validate and return ``M`` as a 2-D square float or complex array."""
    A = np.asarray(M)
    if A.dtype == object or not (np.issubdtype(A.dtype, np.number) or A.dtype == bool):
        raise InputError(f"{name} must be numeric")
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"{name} must be square, got shape {A.shape}")
    if A.shape[0] == 0 and not allow_empty:
        raise InputError(f"{name} must have dimension >= 1")
    if not np.all(np.isfinite(A)):
        raise InputError(f"{name} has non-finite entries")
    if np.iscomplexobj(A):
        return A.astype(np.complex128, copy=False)
    return A.astype(np.float64, copy=False)


def det_lu(M) -> LogSigned:
    """Determinant via LU with partial pivoting, returned in log form.

    Exactly singular input (a zero pivot) gives the zero sentinel; the empty
    matrix has determinant one.

    Examples
    --------
    >>> round(det_lu([[2.0, -1.0], [-1.0, 2.0]]).real, 12)
    3.0
    """
    A = as_square(M, allow_empty=True)
    if A.shape[0] == 0:
        return LogSigned.one()
    sign, logabs = np.linalg.slogdet(A)
    if sign == 0:
        return LogSigned.zero()
    return LogSigned(float(logabs), float(np.angle(sign)))


def principal_submatrix(M, subset) -> np.ndarray:
    """Rows and columns listed in ``subset`` (ascending order), possibly 0x0."""
    A = as_square(M)
    if isinstance(subset, IndexSubset):
        if subset.dim != A.shape[0]:
            raise InputError(f"subset dimension {subset.dim} != matrix dimension {A.shape[0]}")
        idx = list(subset.indices)
    else:
        idx = sorted(set(int(i) for i in subset))
        if idx and (idx[0] < 0 or idx[-1] >= A.shape[0]):
            raise InputError(f"subset indices out of range for dimension {A.shape[0]}")
    return A[np.ix_(idx, idx)]


def pfaffian(M, tol: float = 1e-10) -> LogSigned:
    """Pfaffian of an antisymmetric matrix by pivoted skew tridiagonalisation.

    Uses Parlett-Reid style Gauss transformations with row/column swaps;
    each swap flips the sign.  Odd dimension returns the zero sentinel.
    """
    A = as_square(M, allow_empty=True)
    n = A.shape[0]
    scale = max(1.0, float(np.max(np.abs(A)))) if n else 1.0
    if n and np.max(np.abs(A + A.T)) > tol * scale:
        raise InputError("pfaffian requires an antisymmetric matrix")
    if n % 2:
        return LogSigned.zero()
    A = A.astype(np.complex128 if np.iscomplexobj(A) else np.float64, copy=True)
    log_mag, phase = 0.0, 0.0
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(A[k + 1:, k])))
        if kp != k + 1:
            A[[k + 1, kp], :] = A[[kp, k + 1], :]
            A[:, [k + 1, kp]] = A[:, [kp, k + 1]]
            phase += math.pi
        piv = A[k, k + 1]
        if piv == 0:
            return LogSigned.zero()
        log_mag += math.log(abs(piv))
        phase += cmath.phase(piv)
        if k + 2 < n:
            tau = A[k, k + 2:] / piv
            col = A[k + 2:, k + 1].copy()
            A[k + 2:, k + 2:] += np.outer(tau, col) - np.outer(col, tau)
    return LogSigned(log_mag, phase)


def circulant_symbol(first_row, k0: float = 0) -> CirculantSymbol:
    """Symbol ``A(q_k) = sum_n r_n exp(i q_k n)`` of the (anti)circulant with first row ``r``."""
    r = np.asarray(first_row, dtype=complex).ravel()
    if r.size == 0:
        raise InputError("first row must be nonempty")
    if not np.all(np.isfinite(r)):
        raise InputError("first row has non-finite entries")
    l = r.size
    q = 2 * np.pi * (np.arange(l) + k0) / l
    vals = np.exp(1j * np.outer(q, np.arange(l))) @ r
    return CirculantSymbol(l, k0, vals)


def circulant_dense(sym: CirculantSymbol, real_tol: float | None = 1e-12) -> np.ndarray:
    """Dense matrix ``A_mn = (1/l) sum_k A(q_k) exp(-i q_k (n - m))``.

    The result is returned as a real array when every imaginary part is below
    ``real_tol`` (pass ``None`` to always keep it complex).
    """
    l = sym.size
    q = sym.momenta
    d = np.arange(l)
    # entry depends on n - m only; build the 2l-1 distinct offsets once
    offsets = np.arange(-(l - 1), l)
    vals = np.exp(-1j * np.outer(offsets, q)) @ sym.values / l
    A = vals[(d[None, :] - d[:, None]) + (l - 1)]
    if real_tol is not None and np.max(np.abs(A.imag)) <= real_tol * max(1.0, np.max(np.abs(A))):
        return A.real.copy()
    return A


def _parse_csv(text: str) -> np.ndarray:
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            rows.append([complex(tok.replace(" ", "")) for tok in line.split(",")])
        except ValueError as exc:
            raise InputError(f"cannot parse CSV row {line!r}: {exc}") from None
    if not rows or any(len(r) != len(rows) for r in rows):
        raise InputError("CSV matrix must have as many columns as rows")
    A = np.array(rows, dtype=complex)
    return A.real.copy() if not np.any(A.imag) else A


def _parse_json(text: str) -> np.ndarray:
    try:
        doc = json.loads(text)
        dim = int(doc["dim"])
        entries = doc["entries"]
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"malformed matrix JSON: {exc}") from None
    if dim < 1 or len(entries) != dim * dim:
        raise InputError(f"expected {dim * dim} entries for dim {dim}, got {len(entries)}")
    try:
        re = np.array([float(e[0]) for e in entries])
        im = np.array([float(e[1]) for e in entries])
    except (TypeError, IndexError, ValueError) as exc:
        raise InputError(f"matrix entries must be [re, im] pairs: {exc}") from None
    if np.any(im):
        return (re + 1j * im).reshape(dim, dim)
    return re.reshape(dim, dim)


def read_matrix(path) -> np.ndarray:
    """Load a matrix from JSON (``{"dim", "entries"}``) or dense CSV by extension/content."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InputError(f"cannot read matrix file {p}: {exc}") from None
    if p.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        A = _parse_json(text)
    else:
        A = _parse_csv(text)
    return as_square(A)


def write_matrix(M, path) -> None:
    """Write a matrix as JSON or CSV depending on the file extension."""
    A = as_square(M)
    p = Path(path)
    if p.suffix.lower() == ".json":
        Ac = A.astype(complex)
        entries = [[float(z.real), float(z.imag)] for z in Ac.ravel()]
        p.write_text(json.dumps({"dim": A.shape[0], "entries": entries}))
        return
    lines = []
    for row in A:
        if np.iscomplexobj(A):
            lines.append(",".join(f"{float(z.real)!r}{float(z.imag):+}j" for z in row))
        else:
            lines.append(",".join(repr(float(x)) for x in row))
    p.write_text("\n".join(lines) + "\n")
