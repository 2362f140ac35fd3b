"""Process-wide settings: worker count and default tolerance."""
import os

_threads = None


def get_threads():
    """Worker count: explicit setting, else ``SPPM_THREADS``, else the CPU count."""
    if _threads is not None:
        return _threads
    env = os.environ.get("SPPM_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def set_threads(n):
    """Set the worker count (``None`` restores the environment/CPU default)."""
    global _threads
    _threads = None if n is None else max(1, int(n))


def default_tol(fallback=1e-12):
    """Fixed-point tolerance from ``SPPM_TOL`` when set."""
    env = os.environ.get("SPPM_TOL")
    return float(env) if env else fallback
