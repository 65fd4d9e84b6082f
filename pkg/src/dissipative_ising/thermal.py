"""Finite-beta Liouvillian canonical averages for small chains.

<O>_beta = Tr[O exp(-beta Lt)] / Tr[exp(-beta Lt)] evaluated through the
eigendecomposition of the dense transformed-frame Liouvillian, with weights
shifted by min Re[lambda] so the ratio never overflows.  The "Gibbs state"
here is a formal probe of the eigenmode structure, not a physical state, so
the observable value may pick up a small imaginary part.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .liouvillian import dense_liouvillian
from .params import Frame, LiouvilleParams
from .spectral import Spectrum, full_spectrum


@dataclass
class ThermalResult:
    value: complex
    beta: float
    params: LiouvilleParams
    observable: str


def magnetization_diagonal(N: int, power: int = 1) -> np.ndarray:
    """Flat 4^N diagonal of (M_+^z)^power; depends on the + copy bits only."""
    d = 1 << N
    confs = np.arange(d)
    mag = (2 * np.array([bin(s).count("1") for s in confs]) - N) / N
    return np.repeat(mag**power, d)


def _weights(eigenvalues: np.ndarray, beta: float) -> np.ndarray:
    return np.exp(-beta * (eigenvalues - eigenvalues.real.min()))


def canonical_average(
    observable: np.ndarray,
    beta: float,
    params: LiouvilleParams,
    spectrum: Spectrum | None = None,
    observable_name: str = "O",
) -> ThermalResult:
    """Canonical average of a superoperator given as a dense matrix or a
    flat diagonal vector over superket indices."""
    if not math.isfinite(beta):
        raise ValueError("beta must be finite here; use the mcm solver for beta = inf")
    params = params.with_frame(Frame.TRANSFORMED)
    spec = spectrum if spectrum is not None else full_spectrum(params)
    if spec.defective:
        # Eigenbasis unreliable: evaluate both traces by scaling-and-squaring.
        mat = dense_liouvillian(params)
        shift = mat.diagonal().real.min()
        prop = scipy.linalg.expm(-beta * (mat - shift * np.eye(params.dim)))
        obs = np.diag(observable) if observable.ndim == 1 else observable
        value = np.trace(obs @ prop) / np.trace(prop)
        return ThermalResult(complex(value), beta, params, observable_name)

    w = _weights(spec.eigenvalues, beta)
    left_c = np.conj(spec.left)  # (Phi^L| as row vectors
    if observable.ndim == 1:
        matrix_elements = np.einsum("ka,k,ka->a", left_c, observable, spec.right)
    elif observable.ndim == 2:
        matrix_elements = np.einsum("ka,ka->a", left_c, observable @ spec.right)
    else:
        raise ValueError("observable must be a matrix or a diagonal vector")
    value = np.sum(w * matrix_elements) / np.sum(w)
    return ThermalResult(complex(value), beta, params, observable_name)


def squared_magnetization_thermal(
    beta: float, params: LiouvilleParams, spectrum: Spectrum | None = None
) -> float:
    """m = sqrt(Re <(M_+^z)^2>_beta); negative real parts clip to zero.

    The clip is a reporting convention: the non-Hermitian Gibbs weight does
    not guarantee a positive value.
    """
    result = canonical_average(
        magnetization_diagonal(params.N, 2), beta, params, spectrum, "(M_+^z)^2"
    )
    return math.sqrt(max(result.value.real, 0.0))


def _thermal_cell(args) -> tuple[int, int, float]:
    i, j, n, jcoup, gamma, g, beta = args
    params = LiouvilleParams(N=n, J=jcoup, g=g, gamma=gamma, frame=Frame.TRANSFORMED)
    return i, j, squared_magnetization_thermal(beta, params)


def sweep_thermal_heatmap(
    params_template: LiouvilleParams,
    gamma_range: tuple[float, float],
    g_range: tuple[float, float],
    resolution: tuple[int, int],
    beta: float,
    workers: int = 1,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(gammas, gs, m) grid of the thermal magnetization at fixed N."""
    n_gamma, n_g = resolution
    gammas = np.linspace(*gamma_range, n_gamma)
    gs = np.linspace(*g_range, n_g)
    m = np.zeros((n_gamma, n_g))
    tasks = [
        (i, j, params_template.N, params_template.J, gammas[i], gs[j], beta)
        for i in range(n_gamma)
        for j in range(n_g)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, j, value in pool.map(_thermal_cell, tasks, chunksize=4):
                m[i, j] = value
    else:
        for task in tasks:
            i, j, value = _thermal_cell(task)
            m[i, j] = value
    return gammas, gs, m


def export_csv(gammas: np.ndarray, gs: np.ndarray, m: np.ndarray, path) -> None:
    """Same (gamma, g, m) schema as the mean-field sweep for side-by-side plots."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["gamma", "g", "m"])
        for i, gamma in enumerate(gammas):
            for j, g in enumerate(gs):
                writer.writerow([repr(float(gamma)), repr(float(g)), repr(float(m[i, j]))])
