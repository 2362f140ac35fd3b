"""Pure-numpy per-subset determinant kernel (same contract as the compiled one)."""
import numpy as np

_BATCH = 1 << 14


def _phase(sign):
    return np.angle(sign) if np.iscomplexobj(sign) else np.where(sign < 0, np.pi, 0.0)


def logdet_terms(A, start, stop, mode):
    """Return ``(log|det|, phase)`` arrays for subset integers in ``[start, stop)``.

    Mode 0 selects principal submatrices (bit ``i`` keeps index ``i``); mode 1
    adds the diagonal sign pattern ``+1`` (bit set) / ``-1`` to the full matrix.
    """
    A = np.asarray(A)
    l = A.shape[0]
    masks = np.arange(start, stop, dtype=np.int64)
    out_log = np.empty(masks.size)
    out_phase = np.empty(masks.size)
    bits = ((masks[:, None] >> np.arange(l)) & 1).astype(bool)
    if mode == 1:
        for lo in range(0, masks.size, _BATCH):
            b = bits[lo:lo + _BATCH]
            stack = np.broadcast_to(A, (b.shape[0], l, l)).copy()
            stack[:, np.arange(l), np.arange(l)] += np.where(b, 1.0, -1.0)
            sign, logabs = np.linalg.slogdet(stack)
            out_log[lo:lo + _BATCH] = logabs
            out_phase[lo:lo + _BATCH] = _phase(sign)
        return out_log, out_phase
    card = bits.sum(axis=1)
    for k in np.unique(card):
        rows = np.flatnonzero(card == k)
        if k == 0:
            out_log[rows] = 0.0
            out_phase[rows] = 0.0
            continue
        for lo in range(0, rows.size, _BATCH):
            sel = rows[lo:lo + _BATCH]
            idx = np.nonzero(bits[sel])[1].reshape(sel.size, k)
            sub = A[idx[:, :, None], idx[:, None, :]]
            sign, logabs = np.linalg.slogdet(sub)
            out_log[sel] = logabs
            out_phase[sel] = _phase(sign)
    return out_log, out_phase
