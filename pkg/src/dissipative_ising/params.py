"""Physical parameter records and basis conventions.

Conventions used throughout the package:

* Spin configurations are N-bit integers; bit j is site j and bit value 1
  means sigma^z eigenvalue +1 (spin up).
* A superket amplitude vector has length 4**N and is indexed by the flat
  index ``s * 2**N + sp`` where ``s`` is the configuration of the + copy
  (ket side) and ``sp`` of the - copy (bra side).
* Sublattice A contains the even sites, sublattice B the odd sites; the
  chain is periodic and N must be even so the staggered pattern closes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace


class Frame(enum.Enum):
    """Representation frame of the Liouvillian."""

    ORIGINAL = "original"
    TRANSFORMED = "transformed"


class Boundary(enum.Enum):
    PERIODIC = "periodic"


@dataclass(frozen=True)
class LiouvilleParams:
    """Parameters of the dissipative transverse-field Ising chain.

    Attributes
    ----------
    N : int
        Number of spins; must be even and >= 2 (periodic chain).
    J : float
        Ising exchange coupling, J > 0.
    g : float
        Transverse field, g >= 0.
    gamma : float
        Per-site dephasing rate, gamma >= 0.
    frame : Frame
        Whether operators are expressed in the original or the
        sublattice-transformed frame.
    """

    N: int
    J: float = 1.0
    g: float = 0.0
    gamma: float = 1.0
    frame: Frame = Frame.ORIGINAL
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self) -> None:
        if self.N < 2 or self.N % 2 != 0:
            raise ValueError(f"N must be even and >= 2, got {self.N}")
        for name in ("J", "g", "gamma"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {value}")
        if self.boundary is not Boundary.PERIODIC:
            raise ValueError("only periodic boundary conditions are supported")

    @property
    def hilbert_dim(self) -> int:
        """Dimension 2**N of the spin Hilbert space."""
        return 1 << self.N

    @property
    def dim(self) -> int:
        """Dimension 4**N of the doubled (superket) space."""
        return 1 << (2 * self.N)

    @property
    def spectral_scale(self) -> float:
        """Rough magnitude estimate of the Liouvillian, used for step sizing."""
        return 2 * self.J * self.N + 2 * self.gamma * self.N + self.g * self.N + 1.0

    def with_frame(self, frame: Frame) -> "LiouvilleParams":
        return replace(self, frame=frame)


def check_superket_dim(state, params: LiouvilleParams) -> None:
    """Raise ValueError unless ``state`` has the superket length 4**N."""
    if state.ndim != 1 or state.shape[0] != params.dim:
        raise ValueError(
            f"superket has shape {state.shape}, expected ({params.dim},) for N={params.N}"
        )
