"""Sums of powers of principal minors.

Exact enumeration, the strong-weak duality transform, three mean-field
schemes, and two applications with independent exact solutions: the chain
Laplacian (spanning forests) and the Renyi entropy of the transverse-field
Ising chain.  A small Hubbard-model module checks the Trotterised partition
function against its closed-form limits.
"""
from ._backend import BACKEND
from .duality import *  # noqa: F401,F403
from .errors import CapacityError, DomainError, InputError, NumericError, ScanError, SolverError, SppmError
from .exact import *  # noqa: F401,F403
from .hubbard import *  # noqa: F401,F403
from .ising import *  # noqa: F401,F403
from .laplacian import *  # noqa: F401,F403
from .matrix import *  # noqa: F401,F403
from .meanfield import *  # noqa: F401,F403

from . import duality, exact, hubbard, ising, laplacian, matrix, meanfield

__version__ = "0.1.0"

__all__ = (["BACKEND", "SppmError", "InputError", "NumericError", "CapacityError", "DomainError",
            "SolverError", "ScanError", "__version__"]
           + matrix.__all__ + exact.__all__ + duality.__all__ + meanfield.__all__
           + laplacian.__all__ + ising.__all__ + hubbard.__all__)
