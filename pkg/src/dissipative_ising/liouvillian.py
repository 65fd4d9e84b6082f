"""Matrix-free and dense construction of the dissipative-Ising Liouvillian.

In the vectorized picture the Liouvillian of the transverse-field Ising chain
under dephasing is, in the original frame,

    L = -J sum_<jk> (sz_{j,+} sz_{k,+} - sz_{j,-} sz_{k,-})
        - g sum_j (sx_{j,+} - sx_{j,-})
        + i gamma sum_j sz_{j,+} sz_{j,-} - i gamma N,

and in the sublattice-transformed frame both Ising terms and both transverse
terms carry the same sign while the dephasing term is staggered:

    Lt = -J sum_<jk> (sz_{j,+} sz_{k,+} + sz_{j,-} sz_{k,-})
         - g sum_j (sx_{j,+} + sx_{j,-})
         + i gamma sum_j sgn(j) sz_{j,+} sz_{j,-} - i gamma N,

with sgn(j) = +1 on sublattice A (even sites) and -1 on B (odd sites).

The matrix-free kernel stores the diagonal once and applies the transverse
field through strided single-bit-flip views, costing O(N 4^N) per application
with no index gathers.
"""

from __future__ import annotations

import functools
import os

import numpy as np

from .params import Frame, LiouvilleParams, check_superket_dim
from .superket import spin_values, sublattice_mask

try:  # optional fused kernel; numpy strided views remain the fallback
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

DEFAULT_DENSE_CAP = 6
_DENSE_CAP_ENV = "DISING_DENSE_CAP"
_NUMBA_MIN_N = 8  # below this the numpy path wins on setup overhead


def dense_cap() -> int:
    """Largest N for which dense 4^N x 4^N matrices may be built."""
    return int(os.environ.get(_DENSE_CAP_ENV, DEFAULT_DENSE_CAP))


def _ring_bond_sum(N: int) -> np.ndarray:
    """sum_j z_j z_{j+1} (periodic) for every N-bit configuration."""
    confs = np.arange(1 << N)
    total = np.zeros(1 << N, dtype=np.int64)
    for j in range(N):
        total += spin_values(confs, j) * spin_values(confs, (j + 1) % N)
    return total


def _popcount(values: np.ndarray, N: int) -> np.ndarray:
    counts = np.zeros_like(values)
    for j in range(N):
        counts += (values >> j) & 1
    return counts


def _add_bitflip(out: np.ndarray, v: np.ndarray, bit: int, coef: complex) -> None:
    """out += coef * v with bit ``bit`` of the flat index flipped."""
    shape = (-1, 2, 1 << bit)
    out.reshape(shape)[...] += coef * v.reshape(shape)[:, ::-1, :]


_fused_apply = None
if _numba is not None:

    @_numba.njit(parallel=True, fastmath=False, cache=True)
    def _fused_apply(v, diag, coef_minus, coef_plus, n):  # pragma: no cover - jitted
        out = np.empty_like(v)
        for k in _numba.prange(v.size):
            acc = diag[k] * v[k]
            s_minus = 0.0 + 0.0j
            for j in range(n):
                s_minus += v[k ^ (1 << j)]
            s_plus = 0.0 + 0.0j
            for j in range(n, 2 * n):
                s_plus += v[k ^ (1 << j)]
            out[k] = acc + coef_minus * s_minus + coef_plus * s_plus
        return out


class Liouvillian:
    """Callable Liouvillian for fixed parameters.

    The diagonal part (Ising + dephasing + the -i*gamma*N shift) is
    precomputed as a flat 4^N vector; the transverse-field part connects
    single bit flips on either copy.
    """

    def __init__(self, params: LiouvilleParams):
        self.params = params
        N = params.N
        d = 1 << N
        bond = _ring_bond_sum(N)
        confs = np.arange(d)

        # Flat index = s * 2^N + sp; rows are + copy, columns - copy.
        xor = confs[:, None] ^ confs[None, :]
        if params.frame is Frame.ORIGINAL:
            ising = -params.J * (bond[:, None] - bond[None, :])
            zz_sum = N - 2 * _popcount(xor, N)
        else:
            ising = -params.J * (bond[:, None] + bond[None, :])
            mask_a = sublattice_mask(N, "A")
            mask_b = sublattice_mask(N, "B")
            zz_a = N // 2 - 2 * _popcount(xor & mask_a, N)
            zz_b = N // 2 - 2 * _popcount(xor & mask_b, N)
            zz_sum = zz_a - zz_b
        diag = ising + 1j * params.gamma * zz_sum - 1j * params.gamma * N
        self._diag = diag.astype(complex).reshape(-1)
        self._diag_conj = None

        self._coef_plus = -params.g
        self._coef_minus = params.g if params.frame is Frame.ORIGINAL else -params.g

    @property
    def diagonal(self) -> np.ndarray:
        """Diagonal of the Liouvillian over flat superket indices (read-only view)."""
        view = self._diag.view()
        view.flags.writeable = False
        return view

    def _apply(self, state: np.ndarray, diag: np.ndarray) -> np.ndarray:
        check_superket_dim(state, self.params)
        state = np.ascontiguousarray(state, dtype=complex)
        N = self.params.N
        if self._coef_plus != 0.0 and _fused_apply is not None and N >= _NUMBA_MIN_N:
            return _fused_apply(
                state, diag, complex(self._coef_minus), complex(self._coef_plus), N
            )
        out = diag * state
        if self._coef_plus != 0.0:
            for j in range(N):
                _add_bitflip(out, state, j, self._coef_minus)
                _add_bitflip(out, state, N + j, self._coef_plus)
        return out

    def apply(self, state: np.ndarray) -> np.ndarray:
        """Return L|state)."""
        return self._apply(state, self._diag)

    def apply_adjoint(self, state: np.ndarray) -> np.ndarray:
        """Return L^dag |state).

        The transverse-field part is real symmetric (bit flips with real
        coefficients), so the adjoint only conjugates the diagonal.
        """
        if self._diag_conj is None:
            self._diag_conj = np.conj(self._diag)
        return self._apply(state, self._diag_conj)

    def dense(self) -> np.ndarray:
        """Dense 4^N x 4^N matrix; column k is L applied to the k-th basis superket."""
        params = self.params
        if params.N > dense_cap():
            raise MemoryError(
                f"dense Liouvillian requested for N={params.N}, cap is "
                f"{dense_cap()} (override via {_DENSE_CAP_ENV})"
            )
        dim = params.dim
        mat = np.diag(self._diag)
        rows = np.arange(dim)
        if self._coef_plus != 0.0:
            for j in range(params.N):
                mat[rows, rows ^ (1 << j)] += self._coef_minus
                mat[rows, rows ^ (1 << (params.N + j))] += self._coef_plus
        return mat


@functools.lru_cache(maxsize=32)
def _cached_liouvillian(params: LiouvilleParams) -> Liouvillian:
    return Liouvillian(params)


def get_liouvillian(params: LiouvilleParams) -> Liouvillian:
    """Shared, cached Liouvillian instance for ``params``."""
    return _cached_liouvillian(params)


def apply_liouvillian(state: np.ndarray, params: LiouvilleParams) -> np.ndarray:
    """Matrix-free L|state) in the frame selected by ``params.frame``."""
    return get_liouvillian(params).apply(state)


def apply_adjoint_liouvillian(state: np.ndarray, params: LiouvilleParams) -> np.ndarray:
    """Matrix-free L^dag |state)."""
    return get_liouvillian(params).apply_adjoint(state)


def dense_liouvillian(params: LiouvilleParams) -> np.ndarray:
    """Dense Liouvillian matrix (N capped, see :func:`dense_cap`)."""
    return get_liouvillian(params).dense()
