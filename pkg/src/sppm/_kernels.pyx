# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-subset determinant kernel.

Each subset integer ``s`` in ``[start, stop)`` selects either a principal
submatrix (mode 0, bit ``i`` set keeps row/column ``i``) or a diagonal sign
pattern added to the full matrix (mode 1, bit set means ``+1``).  The
determinant of the selected matrix is returned as ``(log|det|, phase)``.
"""
import numpy as np

from libc.math cimport INFINITY, M_PI, atan2, fabs, fmod, log
from libc.stdlib cimport free, malloc

ctypedef fused scalar:
    double
    double complex


cdef inline double _wrap(double phase) noexcept nogil:
    phase = fmod(phase, 2.0 * M_PI)
    if phase > M_PI:
        phase -= 2.0 * M_PI
    elif phase <= -M_PI:
        phase += 2.0 * M_PI
    return phase


cdef void _lu_logdet(scalar* a, int k, double* out_log, double* out_phase) noexcept nogil:
    # in-place Gaussian elimination with partial pivoting on a row-major k x k buffer
    cdef int c, r, j, piv
    cdef double best, mag
    cdef double logsum = 0.0
    cdef double phase = 0.0
    cdef int flips = 0
    cdef scalar tmp, p, f
    for c in range(k):
        piv = c
        best = -1.0
        for r in range(c, k):
            if scalar is double:
                mag = fabs(a[r * k + c])
            else:
                mag = a[r * k + c].real * a[r * k + c].real + a[r * k + c].imag * a[r * k + c].imag
            if mag > best:
                best = mag
                piv = r
        if best == 0.0:
            out_log[0] = -INFINITY
            out_phase[0] = 0.0
            return
        if piv != c:
            for j in range(k):
                tmp = a[c * k + j]
                a[c * k + j] = a[piv * k + j]
                a[piv * k + j] = tmp
            flips += 1
        p = a[c * k + c]
        if scalar is double:
            logsum += log(fabs(p))
            if p < 0:
                flips += 1
        else:
            logsum += 0.5 * log(p.real * p.real + p.imag * p.imag)
            phase += atan2(p.imag, p.real)
        for r in range(c + 1, k):
            f = a[r * k + c] / p
            if f != 0:
                for j in range(c + 1, k):
                    a[r * k + j] -= f * a[c * k + j]
    out_log[0] = logsum
    # real results stay exactly 0 or pi
    if scalar is double:
        out_phase[0] = M_PI if flips % 2 else 0.0
    else:
        out_phase[0] = _wrap(phase + M_PI * (flips % 2))


cdef void _fill(const scalar[:, ::1] A, long long start, long long stop, int mode,
                double[::1] out_log, double[::1] out_phase) noexcept nogil:
    cdef int l = A.shape[0]
    cdef int i, j, k
    cdef long long s
    cdef scalar* buf = <scalar*> malloc(l * l * sizeof(scalar) + sizeof(scalar))
    cdef int* idx = <int*> malloc((l + 1) * sizeof(int))
    for s in range(start, stop):
        if mode == 0:
            k = 0
            for i in range(l):
                if (s >> i) & 1:
                    idx[k] = i
                    k += 1
            for i in range(k):
                for j in range(k):
                    buf[i * k + j] = A[idx[i], idx[j]]
        else:
            k = l
            for i in range(l):
                for j in range(l):
                    buf[i * l + j] = A[i, j]
                if (s >> i) & 1:
                    buf[i * l + i] = buf[i * l + i] + 1.0
                else:
                    buf[i * l + i] = buf[i * l + i] - 1.0
        if k == 0:
            out_log[s - start] = 0.0
            out_phase[s - start] = 0.0
        else:
            _lu_logdet(buf, k, &out_log[s - start], &out_phase[s - start])
    free(buf)
    free(idx)


def logdet_terms(A, long long start, long long stop, int mode):
    """Return ``(log|det|, phase)`` arrays for subset integers in ``[start, stop)``."""
    A = np.ascontiguousarray(A)
    out_log = np.empty(stop - start, dtype=np.float64)
    out_phase = np.empty(stop - start, dtype=np.float64)
    cdef double[::1] lv = out_log
    cdef double[::1] pv = out_phase
    cdef const double[:, ::1] Ar
    cdef const double complex[:, ::1] Ac
    if np.iscomplexobj(A):
        Ac = A.astype(np.complex128, copy=False)
        with nogil:
            _fill(Ac, start, stop, mode, lv, pv)
    else:
        Ar = A.astype(np.float64, copy=False)
        with nogil:
            _fill(Ar, start, stop, mode, lv, pv)
    return out_log, out_phase
