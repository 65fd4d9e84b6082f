"""Superket (vectorized operator) utilities and the sublattice frame transform.

An operator A on the 2**N-dimensional Hilbert space is stored as the flat
complex vector |A) with ``A[i, j] -> amplitude[i * 2**N + j]``.  The inner
product (A|B) = sum(conj(A) * B) then equals Tr[A^dag B].
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .params import Frame, LiouvilleParams, check_superket_dim


class FrameDirection(enum.Enum):
    TO_TRANSFORMED = "to_transformed"
    TO_ORIGINAL = "to_original"


def vectorize(op: np.ndarray) -> np.ndarray:
    """Map a D x D operator matrix to its superket vector of length D**2."""
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {op.shape}")
    return op.astype(complex).reshape(-1)


def devectorize(state: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vectorize`; requires a perfect-square length."""
    state = np.asarray(state)
    d = math.isqrt(state.shape[0])
    if d * d != state.shape[0]:
        raise ValueError(f"superket length {state.shape[0]} is not a perfect square")
    return state.reshape(d, d)


def inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product (A|B) = Tr[A^dag B]."""
    return complex(np.vdot(a, b))


def superket_trace(state: np.ndarray) -> complex:
    """Trace of the devectorized operator, i.e. the sum of diagonal amplitudes."""
    state = np.asarray(state)
    d = math.isqrt(state.shape[0])
    if d * d != state.shape[0]:
        raise ValueError(f"superket length {state.shape[0]} is not a perfect square")
    return complex(state[:: d + 1].sum())


def spin_values(configs: np.ndarray, site: int) -> np.ndarray:
    """sigma^z eigenvalues (+-1) of ``site`` for an array of bit configurations."""
    return ((configs >> site) & 1) * 2 - 1


def sublattice_mask(N: int, sublattice: str) -> int:
    """Bit mask of A (even) or B (odd) sites."""
    if sublattice == "A":
        return sum(1 << j for j in range(0, N, 2))
    if sublattice == "B":
        return sum(1 << j for j in range(1, N, 2))
    raise ValueError(f"unknown sublattice {sublattice!r}")


def _transform_phases(N: int) -> np.ndarray:
    """Diagonal phase of U on each - copy configuration after the B flip.

    U = prod_j exp(i pi/2 sigma^z_{j,-}) * prod_{j in B} exp(i pi/2 sigma^x_{j,-});
    the x rotations flip the B bits of the - copy (phase i each), the z
    rotations contribute i * z_j per site of the flipped configuration.
    """
    d = 1 << N
    confs = np.arange(d)
    z_product = np.ones(d)
    for j in range(N):
        z_product = z_product * spin_values(confs, j)
    return (1j**N) * (1j ** (N // 2)) * z_product


def apply_frame_transform(
    state: np.ndarray, direction: FrameDirection, params: LiouvilleParams
) -> np.ndarray:
    """Apply the sublattice unitary U (or its inverse) to a superket.

    ``TO_TRANSFORMED`` maps an original-frame superket |A) to U^dag |A) so
    that transformed-frame operators act on it; ``TO_ORIGINAL`` applies U.
    Only the - copy (low bits of the flat index) is touched.
    """
    state = np.asarray(state, dtype=complex)
    check_superket_dim(state, params)
    N = params.N
    d = 1 << N
    mask_b = sublattice_mask(N, "B")
    perm = np.arange(d) ^ mask_b
    phases = _transform_phases(N)

    V = state.reshape(d, d)
    out = np.empty_like(V)
    if direction is FrameDirection.TO_ORIGINAL:
        # (U A)[s, perm(sp)] = phase(perm(sp)) * A[s, sp]
        out[:, perm] = phases[perm] * V
    elif direction is FrameDirection.TO_TRANSFORMED:
        out[:, :] = np.conj(phases[perm]) * V[:, perm]
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return out.reshape(-1)


def random_hermitian_superket(N: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorized random Hermitian matrix, handy for property tests."""
    d = 1 << N
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return vectorize((m + m.conj().T) / 2)
