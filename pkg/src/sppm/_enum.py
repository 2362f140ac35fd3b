"""Deterministic subset enumeration and log-domain reduction.

Subset integers are processed in ascending order in fixed chunks.  Each chunk
is split into blocks of ``BLOCK`` consecutive subsets whose terms are summed
relative to the block maximum; block results are then combined by a pairwise
tree.  The partition does not depend on the worker count, so serial and
threaded runs give bit-identical results.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import config
from ._backend import get_kernel
from .matrix import LogSigned

BLOCK = 1024
CHUNK = 1 << 16


def popcount(masks: np.ndarray) -> np.ndarray:
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(masks).astype(np.int64)
    out = np.zeros(masks.shape, dtype=np.int64)
    m = masks.copy()
    while np.any(m):
        out += m & 1
        m >>= 1
    return out


def _chunks(total: int):
    return [(lo, min(lo + CHUNK, total)) for lo in range(0, total, CHUNK)]


def _map(fn, items, threads):
    threads = config.get_threads() if threads is None else max(1, int(threads))
    if threads == 1 or len(items) == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def subset_logdets(A, mode: int = 0, threads=None, backend=None):
    """``(log|det|, phase)`` for every subset integer ``0 .. 2**l - 1``."""
    kernel = get_kernel(backend)
    total = 1 << A.shape[0]
    parts = _map(lambda c: kernel(A, c[0], c[1], mode), _chunks(total), threads)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def _block_reduce(logt: np.ndarray, weight: np.ndarray):
    pad = (-logt.size) % BLOCK
    if pad:
        logt = np.concatenate([logt, np.full(pad, -np.inf)])
        weight = np.concatenate([weight, np.zeros(pad, dtype=weight.dtype)])
    logt = logt.reshape(-1, BLOCK)
    weight = weight.reshape(-1, BLOCK)
    m = logt.max(axis=1)
    safe = np.where(np.isfinite(m), m, 0.0)
    s = np.sum(np.exp(logt - safe[:, None]) * weight, axis=1)
    return m, s


def _combine(ma, sa, mb, sb):
    m = np.maximum(ma, mb)
    safe = np.where(np.isfinite(m), m, 0.0)
    fa = np.where(np.isfinite(ma), np.exp(ma - safe), 0.0)
    fb = np.where(np.isfinite(mb), np.exp(mb - safe), 0.0)
    return m, sa * fa + sb * fb


def tree_reduce(m: np.ndarray, s: np.ndarray):
    """Pairwise reduction of ``(max_log, scaled_sum)`` block pairs."""
    while m.size > 1:
        if m.size % 2:
            m = np.append(m, -np.inf)
            s = np.append(s, np.zeros(1, dtype=s.dtype))
        m, s = _combine(m[0::2], s[0::2], m[1::2], s[1::2])
    return float(m[0]), s[0]


def _to_logsigned(m: float, s) -> LogSigned:
    if not math.isfinite(m) or s == 0:
        return LogSigned.zero()
    s = complex(s)
    return LogSigned(m + math.log(abs(s)), math.atan2(s.imag, s.real))


def power_sum(A, n: int, fugacity: complex = 1.0, mode: int = 0, threads=None, backend=None) -> LogSigned:
    """``sum_s fugacity**|s| * det(selected_s)**n`` over all subset integers.

    In mode 1 (diagonal sign patterns) the fugacity is ignored.
    """
    kernel = get_kernel(backend)
    l = A.shape[0]
    fug = complex(fugacity)
    if fug == 0:
        raise ValueError("fugacity must be nonzero")
    log_fug, arg_fug = math.log(abs(fug)), math.atan2(fug.imag, fug.real)
    real_terms = not np.iscomplexobj(A) and fug.imag == 0

    def work(chunk):
        lo, hi = chunk
        logabs, phase = kernel(A, lo, hi, mode)
        logt = n * logabs
        ph = n * phase
        if mode == 0:
            k = popcount(np.arange(lo, hi, dtype=np.int64))
            logt = logt + k * log_fug
            ph = ph + k * arg_fug
        logt = np.where(np.isneginf(logabs), -np.inf, logt)
        if real_terms:
            # phases are exact multiples of pi: keep the arithmetic real
            odd = np.rint(ph / math.pi).astype(np.int64) % 2
            weight = np.where(odd == 1, -1.0, 1.0)
        else:
            weight = np.exp(1j * ph)
        return _block_reduce(logt, weight)

    parts = _map(work, _chunks(1 << l), threads)
    m = np.concatenate([p[0] for p in parts])
    s = np.concatenate([p[1] for p in parts])
    return _to_logsigned(*tree_reduce(m, s))
