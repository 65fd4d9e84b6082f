"""Two-sublattice mean-field theory of the most coherent mode.

The self-consistency lives on the 4-dimensional one-site doubled space with
basis {uu, ud, du, dd}.  The sublattice magnetizations are complex and tied
by m_A = conj(m_B); the reported order parameter m = (m_A + m_B)/2 is real.
"""

from __future__ import annotations

import cmath
import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg

SZ = np.diag([1.0, -1.0])
SX = np.array([[0.0, 1.0], [1.0, 0.0]])
ID2 = np.eye(2)

SZ_PLUS = np.kron(SZ, ID2)
SZ_MINUS = np.kron(ID2, SZ)
SX_PLUS = np.kron(SX, ID2)
SX_MINUS = np.kron(ID2, SX)
SZ_SZ = np.kron(SZ, SZ)
ID4 = np.eye(4)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 5000
DEFAULT_MIXING = 0.5
DEFAULT_INIT = 0.5 + 0.0j
DEGENERACY_GAP = 1e-10
ORDER_THRESHOLD = 1e-4


class DegenerateDominantMode(RuntimeError):
    """beta = inf magnetization is ill-defined: dominant eigenvalue not unique."""


@dataclass(frozen=True)
class MFParams:
    """zJ is the coordination number times the coupling; beta may be math.inf."""

    zJ: float
    g: float
    gamma: float
    beta: float

    def __post_init__(self) -> None:
        if not (self.zJ > 0):
            raise ValueError(f"zJ must be positive, got {self.zJ}")
        if not (self.beta > 0):
            raise ValueError(f"beta must be positive (or inf), got {self.beta}")


@dataclass
class MFState:
    mA: complex
    mB: complex
    converged: bool
    iterations: int
    residual: float

    @property
    def m(self) -> complex:
        return (self.mA + self.mB) / 2.0


def mf_liouvillian(sublattice: str, m_other: complex, p: MFParams) -> np.ndarray:
    """Single-site mean-field Liouvillian (transformed frame), 4x4 complex."""
    if sublattice not in ("A", "B"):
        raise ValueError(f"sublattice must be 'A' or 'B', got {sublattice!r}")
    sign = 1.0 if sublattice == "A" else -1.0
    return (
        -p.zJ * m_other * (SZ_PLUS + SZ_MINUS)
        - p.g * (SX_PLUS + SX_MINUS)
        + 1j * p.gamma * sign * SZ_SZ
        - 1j * p.gamma * ID4
    )


def mf_magnetization(L4: np.ndarray, beta: float) -> complex:
    """Tr[sz_+ exp(-beta L4)] / Tr[exp(-beta L4)], with beta = inf as the
    dominant-eigenvector (most negative Re eigenvalue) limit."""
    if math.isinf(beta):
        # Left vectors come straight from LAPACK: inverting the full right
        # eigenvector matrix is unstable whenever non-dominant eigenvalues
        # are degenerate (e.g. the doubly degenerate middle pair at gamma=0).
        eigs, left, right = scipy.linalg.eig(L4, left=True, right=True)
        order = np.argsort(eigs.real)
        gap = abs(eigs[order[1]] - eigs[order[0]])
        if gap < DEGENERACY_GAP:
            raise DegenerateDominantMode(
                f"dominant eigenvalue gap {gap:.2e} below {DEGENERACY_GAP:.0e}"
            )
        v_r = right[:, order[0]]
        v_l = np.conj(left[:, order[0]])
        return complex((v_l @ SZ_PLUS @ v_r) / (v_l @ v_r))
    # Finite beta: eigendecomposition with a Re-shift against overflow; the
    # ratio is shift-invariant.
    eigs, right = scipy.linalg.eig(L4)
    cond = np.linalg.cond(right)
    if np.isfinite(cond) and cond < 1e10:
        rinv = np.linalg.inv(right)
        weights = np.exp(-beta * (eigs - eigs.real.min()))
        middle = rinv @ SZ_PLUS @ right
        num = np.sum(weights * np.diag(middle))
        den = np.sum(weights)
    else:
        # Near-defective: fall back to a direct scaling-and-squaring exponential.
        expm = scipy.linalg.expm(-beta * (L4 - L4.real.min() * ID4))
        num = np.trace(SZ_PLUS @ expm)
        den = np.trace(expm)
    return complex(num / den)


def _self_consistency_map(m: complex, p: MFParams) -> complex:
    """One sweep: m_A from the A-site Liouvillian driven by m_B = conj(m_A)."""
    return mf_magnetization(mf_liouvillian("A", np.conj(m), p), p.beta)


def solve_self_consistent(
    p: MFParams,
    mixing: float = DEFAULT_MIXING,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    init: complex = DEFAULT_INIT,
) -> MFState:
    """Iterate the self-consistency with damping until the update norm < tol.

    Oscillation (three successive sign flips of the update) halves the mixing.
    Non-convergence is reported in the result, not raised.
    """
    m = complex(init)
    eta = mixing
    prev_updates: list[complex] = []
    residual = math.inf
    for it in range(1, max_iter + 1):
        try:
            target = _self_consistency_map(m, p)
        except DegenerateDominantMode:
            # Perturb once and keep going; the degenerate point is a measure-
            # zero accident of the iterate, not of the fixed point.
            m += 1e-8 + 1e-8j
            continue
        update = target - m
        residual = abs(update)
        m = m + eta * update
        if residual < tol:
            return MFState(mA=m, mB=np.conj(m), converged=True, iterations=it, residual=residual)
        prev_updates.append(update)
        if len(prev_updates) >= 3:
            a, b, c = prev_updates[-3:]
            if (a * np.conj(b)).real < 0 and (b * np.conj(c)).real < 0:
                eta = max(eta / 2.0, 1e-3)
                prev_updates.clear()
    return MFState(mA=m, mB=np.conj(m), converged=False, iterations=max_iter, residual=residual)


def solve_free_pair(
    p: MFParams,
    mixing: float = DEFAULT_MIXING,
    tol: float = 1e-10,
    max_iter: int = DEFAULT_MAX_ITER,
    init: tuple[complex, complex] = (0.5 + 0.1j, 0.4 - 0.2j),
) -> MFState:
    """Unconstrained (m_A, m_B) iteration; used to verify m_A = conj(m_B)."""
    mA, mB = complex(init[0]), complex(init[1])
    residual = math.inf
    for it in range(1, max_iter + 1):
        tA = mf_magnetization(mf_liouvillian("A", mB, p), p.beta)
        tB = mf_magnetization(mf_liouvillian("B", mA, p), p.beta)
        residual = max(abs(tA - mA), abs(tB - mB))
        mA = mA + mixing * (tA - mA)
        mB = mB + mixing * (tB - mB)
        if residual < tol:
            return MFState(mA=mA, mB=mB, converged=True, iterations=it, residual=residual)
    return MFState(mA=mA, mB=mB, converged=False, iterations=max_iter, residual=residual)


def closed_form_ground_state(g: float, zJ: float = 1.0) -> float:
    """gamma=0, beta=inf magnetization: sqrt(1 - (g/zJ)^2) below g = zJ, else 0."""
    x = g / zJ
    return math.sqrt(1.0 - x * x) if x < 1.0 else 0.0


@dataclass
class PhaseDiagram:
    gammas: np.ndarray
    gs: np.ndarray
    m: np.ndarray  # complex, shape (len(gammas), len(gs))
    converged: np.ndarray
    iterations: np.ndarray
    beta: float
    zJ: float

    def ordered_fraction(self, threshold: float = ORDER_THRESHOLD) -> float:
        return float((np.abs(self.m) > threshold).mean())


def _solve_cell(args) -> tuple[int, int, complex, bool, int]:
    i, j, gamma, g, zJ, beta, init = args
    state = solve_self_consistent(MFParams(zJ=zJ, g=g, gamma=gamma, beta=beta), init=init)
    if not state.converged:
        state = solve_self_consistent(
            MFParams(zJ=zJ, g=g, gamma=gamma, beta=beta), init=DEFAULT_INIT, mixing=0.2
        )
    return i, j, state.m, state.converged, state.iterations


def sweep_phase_diagram(
    gamma_range: tuple[float, float],
    g_range: tuple[float, float],
    resolution: tuple[int, int],
    beta: float,
    zJ: float = 1.0,
    workers: int = 1,
) -> PhaseDiagram:
    """Grid of mean-field magnetizations; rows sweep gamma, columns sweep g.

    Cells along a row are warm-started from the previous converged cell when
    running serially; with workers > 1 all cells start cold, which only costs
    iterations, not determinism.
    """
    n_gamma, n_g = resolution
    if n_gamma < 1 or n_g < 1:
        raise ValueError("resolution must be positive")
    gammas = np.linspace(*gamma_range, n_gamma)
    gs = np.linspace(*g_range, n_g)
    m = np.zeros((n_gamma, n_g), dtype=complex)
    converged = np.zeros((n_gamma, n_g), dtype=bool)
    iterations = np.zeros((n_gamma, n_g), dtype=int)

    if workers > 1:
        tasks = [
            (i, j, gammas[i], gs[j], zJ, beta, DEFAULT_INIT)
            for i in range(n_gamma)
            for j in range(n_g)
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, j, mij, conv, its in pool.map(_solve_cell, tasks, chunksize=16):
                m[i, j] = mij
                converged[i, j] = conv
                iterations[i, j] = its
    else:
        for i in range(n_gamma):
            warm = DEFAULT_INIT
            for j in range(n_g):
                _, _, mij, conv, its = _solve_cell((i, j, gammas[i], gs[j], zJ, beta, warm))
                m[i, j] = mij
                converged[i, j] = conv
                iterations[i, j] = its
                if conv and abs(mij) > ORDER_THRESHOLD:
                    warm = mij
                else:
                    warm = DEFAULT_INIT
    return PhaseDiagram(gammas, gs, m, converged, iterations, beta, zJ)


def detect_multistability(p: MFParams, tol: float = 1e-6) -> bool:
    """True if different seeds land on distinct nontrivial |m| fixed points."""
    seeds = (0.5 + 0.0j, 1.2 + 0.0j, 0.1 + 0.1j)
    values = []
    for seed in seeds:
        state = solve_self_consistent(p, init=seed)
        if state.converged:
            values.append(abs(state.m))
    return bool(len(values) >= 2 and (max(values) - min(values)) > tol)


def export_csv(diagram: PhaseDiagram, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["gamma", "g", "re_m", "im_m", "converged", "iterations"])
        for i, gamma in enumerate(diagram.gammas):
            for j, g in enumerate(diagram.gs):
                writer.writerow(
                    [
                        repr(float(gamma)),
                        repr(float(g)),
                        repr(diagram.m[i, j].real),
                        repr(diagram.m[i, j].imag),
                        int(diagram.converged[i, j]),
                        int(diagram.iterations[i, j]),
                    ]
                )


def cmath_isclose(a: complex, b: complex, tol: float) -> bool:
    return cmath.isfinite(a) and cmath.isfinite(b) and abs(a - b) <= tol
