"""Liouvillian eigenmode toolkit for the transverse-field Ising chain under dephasing.

The package works in the vectorized (superket) picture: density matrices and
other operators on the N-spin Hilbert space become vectors of length 4**N, and
the Liouvillian becomes a non-Hermitian matrix acting on them.  On top of that
representation it provides dense spectral analysis, an imaginary-time solver
for the most coherent mode, two-sublattice mean-field theory, fictitious-
temperature (Liouvillian canonical) averages, Binder-cumulant criticality, and
real-time / stochastic-unraveling dynamics of cat states.
"""

from .params import Frame, LiouvilleParams
from .superket import (
    inner,
    superket_trace,
    vectorize,
    devectorize,
    apply_frame_transform,
    FrameDirection,
)
from .liouvillian import (
    Liouvillian,
    apply_liouvillian,
    apply_adjoint_liouvillian,
    dense_liouvillian,
)

__version__ = "0.1.0"

__all__ = [
    "Frame",
    "FrameDirection",
    "LiouvilleParams",
    "Liouvillian",
    "apply_liouvillian",
    "apply_adjoint_liouvillian",
    "dense_liouvillian",
    "vectorize",
    "devectorize",
    "inner",
    "superket_trace",
    "apply_frame_transform",
]
