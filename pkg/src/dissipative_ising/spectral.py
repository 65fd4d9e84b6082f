"""Dense eigendecomposition of the Liouvillian with biorthogonal left modes.

Left eigenmodes are obtained from one dense solve against the right
eigenvector matrix (conjugated inverse transpose) rather than a second
eigendecomposition; this enforces (Phi^L_a | Phi^R_b) = delta_ab up to the
conditioning of the eigenbasis, including inside degenerate clusters where
the basis choice itself is solver-dependent.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .liouvillian import dense_liouvillian, get_liouvillian
from .params import LiouvilleParams
from .superket import devectorize, superket_trace

DEGENERACY_TOL = 1e-8
ZERO_TOL_REL = 1e-9


class SpectrumError(RuntimeError):
    """Eigensolver failure or violated spectral invariant."""


@dataclass
class Spectrum:
    """Full Liouvillian eigensystem, sorted by ascending |Im lambda| (ties: Re).

    ``right[:, a]`` is the unit-norm right mode, ``left[:, a]`` the left mode
    rescaled so that (left_a | right_a) = 1.
    """

    params: LiouvilleParams
    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    condition_number: float
    degenerate_clusters: list = field(default_factory=list)
    defective: bool = False

    @property
    def spectral_radius(self) -> float:
        return float(np.abs(self.eigenvalues).max())

    @property
    def zero_tol(self) -> float:
        """Absolute tolerance below which an eigenvalue counts as zero."""
        return ZERO_TOL_REL * max(self.spectral_radius, 1.0)


@dataclass
class SymmetryReport:
    conjugation_ok: bool
    dihedral_ok: bool
    conjugation_error: float
    dihedral_error: float
    tolerance: float
    offending: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.conjugation_ok and self.dihedral_ok


def _cluster_eigenvalues(eigs: np.ndarray, tol: float) -> list:
    """Indices grouped into clusters of eigenvalues closer than ``tol``."""
    order = np.lexsort((eigs.imag, eigs.real))
    clusters = []
    current = [int(order[0])]
    for prev, cur in zip(order[:-1], order[1:]):
        if abs(eigs[cur] - eigs[prev]) < tol:
            current.append(int(cur))
        else:
            clusters.append(current)
            current = [int(cur)]
    clusters.append(current)
    return [c for c in clusters if len(c) > 1]


def full_spectrum(params: LiouvilleParams, degeneracy_tol: float = DEGENERACY_TOL) -> Spectrum:
    """All 4^N eigenpairs of the dense Liouvillian in the requested frame."""
    mat = dense_liouvillian(params)
    try:
        eigs, right = scipy.linalg.eig(mat)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise SpectrumError(f"eigensolver failed for {params}") from exc

    order = np.lexsort((eigs.real, np.abs(eigs.imag)))
    eigs = eigs[order]
    right = right[:, order]

    norms = np.linalg.norm(right, axis=0)
    right = right / norms
    # Rows of inv(right) pair with columns without conjugation; conjugate to
    # express them as superkets under (A|B) = sum conj(A) B.
    try:
        left = np.conj(np.linalg.inv(right)).T
    except np.linalg.LinAlgError as exc:
        raise SpectrumError(
            f"right eigenbasis is numerically singular for {params}; "
            "likely a defective (non-diagonalizable) Liouvillian"
        ) from exc
    cond = float(np.linalg.cond(right))

    spec = Spectrum(
        params=params,
        eigenvalues=eigs,
        right=right,
        left=left,
        condition_number=cond,
        degenerate_clusters=_cluster_eigenvalues(eigs, degeneracy_tol),
    )
    # Defectiveness shows up as a large reconstruction residual.
    if params.dim <= 256:
        recon = (right * eigs) @ np.conj(left).T
        spec.defective = bool(np.abs(recon - mat).max() > 1e-6 * max(spec.spectral_radius, 1.0))
    else:
        spec.defective = not np.isfinite(cond) or cond > 1e12
    return spec


def steady_states(spec: Spectrum) -> list[int]:
    """Indices of zero-eigenvalue (steady) modes; raises if none exist."""
    idx = [int(i) for i in np.flatnonzero(np.abs(spec.eigenvalues) < spec.zero_tol)]
    if not idx:
        raise SpectrumError(
            "no zero eigenvalue found; the Liouvillian must have at least one steady state"
        )
    return idx


def steady_state_matrices(spec: Spectrum) -> list[np.ndarray]:
    """Devectorized steady modes as unit-trace density matrices.

    Modes with nonzero trace are normalized to trace 1; a zero-trace steady
    combination (possible inside the g=0 degenerate cluster) only gets its
    Hermitian phase fixed.
    """
    mats = []
    for i in steady_states(spec):
        rho = devectorize(spec.right[:, i])
        tr = np.trace(rho)
        if abs(tr) > 1e-12:
            rho = rho / tr
        mats.append(rho)
    return mats


def _multiset_match(a: np.ndarray, b: np.ndarray, tol: float) -> float:
    """Max pairing distance between two complex multisets (greedy, sorted)."""
    sa = np.sort_complex(a)
    sb = np.sort_complex(b)
    err = float(np.abs(sa - sb).max())
    if err <= tol or a.size > 4096:
        return err
    # sorted comparison can misorder near-ties; fall back to greedy matching
    used = np.zeros(b.size, dtype=bool)
    worst = 0.0
    for x in a:
        dist = np.abs(b - x)
        dist[used] = np.inf
        j = int(np.argmin(dist))
        used[j] = True
        worst = max(worst, float(dist[j]))
    return worst


def check_symmetries(spec: Spectrum, tol: float = 1e-8) -> SymmetryReport:
    """Verify conjugation symmetry and the PT dihedral symmetry of the spectrum.

    Conjugation (Hermiticity of the evolution): if lambda is an eigenvalue so
    is -conj(lambda), i.e. the multiset is mirror-symmetric about Re = 0.
    Dihedral: additionally mirror-symmetric about the line Im = -gamma*N,
    i.e. invariant under lambda -> conj(lambda) - 2i*gamma*N.
    """
    eigs = spec.eigenvalues
    scale = max(spec.spectral_radius, 1.0)
    gamma_n = spec.params.gamma * spec.params.N

    conj_err = _multiset_match(eigs, -np.conj(eigs), tol * scale)
    mirror = np.conj(eigs) - 2j * gamma_n
    dihedral_err = _multiset_match(eigs, mirror, tol * scale)

    report = SymmetryReport(
        conjugation_ok=conj_err <= tol * scale,
        dihedral_ok=dihedral_err <= tol * scale,
        conjugation_error=conj_err,
        dihedral_error=dihedral_err,
        tolerance=tol * scale,
    )
    if not report.ok:
        partner = -np.conj(eigs) if conj_err > dihedral_err else mirror
        bad = np.abs(np.sort_complex(eigs) - np.sort_complex(partner)).argmax()
        report.offending.append(complex(np.sort_complex(eigs)[bad]))
    return report


def propagate_spectrally(spec: Spectrum, rho0: np.ndarray, t: float) -> np.ndarray:
    """exp(-i L t)|rho0) through the eigenmode expansion."""
    coeffs = np.conj(spec.left).T @ rho0
    return spec.right @ (coeffs * np.exp(-1j * spec.eigenvalues * t))


def g0_eigenvalues(params: LiouvilleParams) -> np.ndarray:
    """Closed-form spectrum at g=0: the Liouvillian is diagonal."""
    if params.g != 0.0:
        raise ValueError("closed-form spectrum only exists at g=0")
    return get_liouvillian(params).diagonal.copy()


def export_csv(spec: Spectrum, path) -> None:
    """One row per eigenmode: index, Re/Im eigenvalue, |trace|, steady flag."""
    steady = set(steady_states(spec))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "re_lambda", "im_lambda", "abs_trace", "steady"])
        for i, lam in enumerate(spec.eigenvalues):
            tr = abs(superket_trace(spec.right[:, i]))
            writer.writerow([i, repr(lam.real), repr(lam.imag), repr(tr), int(i in steady)])
