"""Real-time relaxation of Schroedinger-cat states and its frequency analysis.

Includes the master-equation integrator (original frame), the pure-state
fidelity, eigenmode-overlap spectra, a windowed Fourier transform of the
fidelity, and a stochastic-unraveling oracle where dephasing enters as a
Gaussian random longitudinal field kicking otherwise unitary trajectories.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .liouvillian import get_liouvillian
from .params import Frame, LiouvilleParams
from .spectral import Spectrum
from .superket import devectorize, inner, superket_trace, vectorize


@dataclass
class CatState:
    """rho_ini = |psi><psi| with |psi> = (|F> + |Neel>)/sqrt(2)."""

    N: int
    psi: np.ndarray  # pure ket, length 2^N
    superket: np.ndarray  # vectorized rho_ini, length 4^N


@dataclass
class Trajectory:
    times: np.ndarray
    fidelity: np.ndarray
    params: LiouvilleParams
    trace_drift: float = 0.0
    hermiticity_drift: float = 0.0
    states: np.ndarray | None = None  # (n_times, 4^N) superkets when kept

    @property
    def rescaled_times(self) -> np.ndarray:
        return self.times * self.params.J * self.params.N


@dataclass
class FreqSpectrum:
    frequencies: np.ndarray
    amplitudes: np.ndarray
    window: float
    plateau: float

    def rescaled_frequencies(self, N: int, J: float) -> np.ndarray:
        return self.frequencies / (N * J)


def ferro_index(N: int) -> int:
    return (1 << N) - 1


def neel_index(N: int) -> int:
    """Neel configuration with site 0 up: bits 0, 2, 4, ... set."""
    return sum(1 << j for j in range(0, N, 2))


def cat_state(N: int) -> CatState:
    if N % 2 != 0:
        raise ValueError(f"N must be even, got {N}")
    d = 1 << N
    psi = np.zeros(d, dtype=complex)
    psi[ferro_index(N)] = 1.0 / math.sqrt(2.0)
    psi[neel_index(N)] = 1.0 / math.sqrt(2.0)
    return CatState(N=N, psi=psi, superket=vectorize(np.outer(psi, np.conj(psi))))


def fidelity(rho_t: np.ndarray, cat: CatState) -> float:
    """Uhlmann fidelity against the pure cat state: <psi| rho_t |psi>."""
    rho = devectorize(rho_t)
    if np.abs(rho - rho.conj().T).max() > 1e-8:
        raise ValueError("evolved state lost Hermiticity beyond 1e-8")
    value = np.vdot(cat.psi, rho @ cat.psi)
    if value.real < -1e-9:
        raise ValueError(f"fidelity {value.real:.3e} negative beyond tolerance")
    return float(value.real)


def evolve_real_time(
    rho0: np.ndarray,
    params: LiouvilleParams,
    t_grid: np.ndarray,
    dt: float | None = None,
    keep_states: bool = True,
    cat: CatState | None = None,
) -> Trajectory:
    """Fixed-step RK4 integration of d|rho)/dt = -i L |rho) in the original frame.

    ``t_grid`` must be uniform and start at 0; dt is rounded down so an
    integer number of steps lands exactly on each output time.
    """
    params = params.with_frame(Frame.ORIGINAL)
    op = get_liouvillian(params)
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid[0] != 0.0:
        raise ValueError("t_grid must start at 0")
    spacing = np.diff(t_grid)
    if t_grid.size > 1 and not np.allclose(spacing, spacing[0], rtol=1e-10, atol=1e-12):
        raise ValueError("t_grid must be uniform")
    if dt is None:
        dt = 0.1 / params.spectral_scale
    n_sub = max(1, int(math.ceil(spacing[0] / dt))) if t_grid.size > 1 else 1
    h = spacing[0] / n_sub if t_grid.size > 1 else 0.0

    def deriv(x):
        return -1j * op.apply(x)

    v = np.asarray(rho0, dtype=complex).copy()
    trace0 = superket_trace(v)
    states = [v.copy()] if keep_states else None
    fids = [fidelity(v, cat)] if cat is not None else []
    trace_drift = 0.0
    herm_drift = 0.0
    for _ in range(t_grid.size - 1):
        for _ in range(n_sub):
            k1 = deriv(v)
            k2 = deriv(v + (0.5 * h) * k1)
            k3 = deriv(v + (0.5 * h) * k2)
            k4 = deriv(v + h * k3)
            v = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        drift = abs(superket_trace(v) - trace0)
        trace_drift = max(trace_drift, drift)
        if drift > 1e-6:
            raise RuntimeError(
                f"trace drifted by {drift:.3e} > 1e-6; reduce dt (currently {h:.3e})"
            )
        rho = devectorize(v)
        herm_drift = max(herm_drift, float(np.abs(rho - rho.conj().T).max()))
        if keep_states:
            states.append(v.copy())
        if cat is not None:
            fids.append(fidelity(v, cat))
    return Trajectory(
        times=t_grid,
        fidelity=np.array(fids) if cat is not None else np.array([]),
        params=params,
        trace_drift=trace_drift,
        hermiticity_drift=herm_drift,
        states=np.array(states) if keep_states else None,
    )


def cat_fidelity_trajectory(
    params: LiouvilleParams, t_max: float, n_times: int = 401, dt: float | None = None
) -> Trajectory:
    """Convenience run: evolve the cat state and record F(t) only."""
    cat = cat_state(params.N)
    t_grid = np.linspace(0.0, t_max, n_times)
    return evolve_real_time(cat.superket, params, t_grid, dt=dt, keep_states=False, cat=cat)


def overlap_spectrum(cat: CatState, spec: Spectrum) -> list[tuple[complex, float]]:
    """r_alpha = |(rho_ini | Phi^R_alpha)| per eigenmode, paired with lambda_alpha."""
    overlaps = np.abs(np.conj(cat.superket) @ spec.right)
    return [(complex(lam), float(r)) for lam, r in zip(spec.eigenvalues, overlaps)]


def fourier_fidelity(
    traj: Trajectory,
    omega_max: float | None = None,
    n_omega: int | None = None,
    plateau_fraction: float = 0.25,
) -> FreqSpectrum:
    """Windowed transform of the even extension F(|t|) with the late-time
    plateau subtracted (kills the omega = 0 spike).

    For real F the transform reduces to 2 * integral_0^T cos(omega t) G(t) dt,
    evaluated with trapezoid weights.
    """
    t = traj.times
    f = traj.fidelity
    if t.size < 8:
        raise ValueError("trajectory too short for a frequency analysis")
    spacing = np.diff(t)
    if not np.allclose(spacing, spacing[0], rtol=1e-10, atol=1e-12):
        raise ValueError("t_grid must be uniform")
    nj = traj.params.N * traj.params.J
    if omega_max is None:
        omega_max = 4.0 * nj
    if n_omega is None:
        n_omega = max(int(omega_max / (0.05 * nj)) + 1, 64)
    plateau = float(f[int((1.0 - plateau_fraction) * f.size):].mean())
    g = f - plateau
    omegas = np.linspace(0.0, omega_max, n_omega)
    # trapezoid weights over [0, T]
    w = np.full(t.size, spacing[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    amplitudes = 2.0 * (np.cos(np.outer(omegas, t)) * (g * w)).sum(axis=1)
    return FreqSpectrum(
        frequencies=omegas,
        amplitudes=amplitudes.astype(complex),
        window=float(t[-1]),
        plateau=plateau,
    )


def spectral_peak(spec: FreqSpectrum, omega0: float, half_width: float) -> tuple[float, float]:
    """(peak frequency, peak amplitude) of |F~| inside [omega0 +- half_width]."""
    mask = np.abs(spec.frequencies - omega0) <= half_width
    if not mask.any():
        raise ValueError("window contains no frequency samples")
    mags = np.abs(spec.amplitudes[mask])
    idx = int(np.argmax(mags))
    return float(spec.frequencies[mask][idx]), float(mags[idx])


def peak_prominence(spec: FreqSpectrum, omega0: float, half_width: float) -> float:
    """Baseline-subtracted height of the tallest interior maximum of |F~| in
    [omega0 - half_width, omega0 + half_width].

    The baseline is the straight line between the window's edge values, so a
    monotone shoulder scores zero; returns 0.0 when the maximum excess sits
    on an edge.
    """
    mask = np.abs(spec.frequencies - omega0) <= half_width
    w = spec.frequencies[mask]
    mags = np.abs(spec.amplitudes[mask])
    if mags.size < 3:
        raise ValueError("window too narrow for a prominence estimate")
    baseline = mags[0] + (mags[-1] - mags[0]) * (w - w[0]) / (w[-1] - w[0])
    excess = mags - baseline
    idx = int(np.argmax(excess))
    if idx in (0, excess.size - 1):
        return 0.0
    return float(max(excess[idx], 0.0))


def has_local_peak(spec: FreqSpectrum, omega0: float, half_width: float) -> bool:
    """True if |F~| has an interior local maximum near omega0 that exceeds the
    window edges (a bump, not a shoulder)."""
    mask = np.abs(spec.frequencies - omega0) <= half_width
    mags = np.abs(spec.amplitudes[mask])
    if mags.size < 3:
        return False
    idx = int(np.argmax(mags))
    return 0 < idx < mags.size - 1 and mags[idx] > max(mags[0], mags[-1])


# ---------------------------------------------------------------------------
# stochastic unraveling oracle


def ising_field_hamiltonian(params: LiouvilleParams) -> np.ndarray:
    """Dense H0 = -J sum sz sz - g sum sx on the 2^N space (original frame)."""
    N = params.N
    d = 1 << N
    confs = np.arange(d)
    diag = np.zeros(d)
    for j in range(N):
        zj = ((confs >> j) & 1) * 2 - 1
        zk = ((confs >> ((j + 1) % N)) & 1) * 2 - 1
        diag += -params.J * zj * zk
    h = np.diag(diag.astype(complex))
    rows = np.arange(d)
    for j in range(N):
        h[rows, rows ^ (1 << j)] += -params.g
    return h


def site_spins(N: int) -> np.ndarray:
    """(2^N, N) array of sigma^z values per configuration and site."""
    confs = np.arange(1 << N)
    return ((confs[:, None] >> np.arange(N)[None, :]) & 1) * 2 - 1


def unravel_trajectories(
    psi0: np.ndarray,
    params: LiouvilleParams,
    t_final: float,
    dt: float,
    n_traj: int,
    seed: int,
    batch: int = 256,
) -> np.ndarray:
    """Noise-averaged density matrix at t_final from pure-state trajectories.

    Each step applies the exact one-step unitary exp(-i H0 dt) followed by a
    dephasing kick exp(-i sqrt(gamma dt) xi_j sz_j) with fresh standard
    normals per site, trajectory and step.  Streams are counter-based
    (Philox keyed by (seed, trajectory index)), so the average is bitwise
    reproducible for fixed seed and n_traj regardless of batching.
    """
    if n_traj < 10:
        raise ValueError(f"n_traj={n_traj} too small for meaningful statistics")
    if params.N > 6:
        raise ValueError("unraveling oracle is limited to N <= 6")
    d = 1 << params.N
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (d,):
        raise ValueError(f"psi0 must have shape ({d},)")
    n_steps = int(round(t_final / dt))
    if not math.isclose(n_steps * dt, t_final, rel_tol=1e-9):
        raise ValueError("t_final must be an integer multiple of dt")

    u_step = scipy.linalg.expm(-1j * dt * ising_field_hamiltonian(params))
    spins = site_spins(params.N)  # (d, N)
    kick_scale = math.sqrt(params.gamma * dt)

    rho_sum = np.zeros((d, d), dtype=complex)
    for start in range(0, n_traj, batch):
        stop = min(start + batch, n_traj)
        nb = stop - start
        rngs = [
            np.random.Generator(np.random.Philox(key=[seed, idx]))
            for idx in range(start, stop)
        ]
        psis = np.broadcast_to(psi0, (nb, d)).copy()
        for _ in range(n_steps):
            psis = psis @ u_step.T
            if kick_scale != 0.0:
                xi = np.stack([rng.standard_normal(params.N) for rng in rngs])
                phases = np.exp(-1j * kick_scale * (xi @ spins.T))
                psis = psis * phases
        # accumulate one trajectory at a time so the summation order (and
        # hence the bitwise result) does not depend on the batch size
        for t in range(nb):
            rho_sum += np.outer(psis[t], np.conj(psis[t]))
    return rho_sum / n_traj


def master_equation_density(
    psi0: np.ndarray, params: LiouvilleParams, t_final: float, dt: float | None = None
) -> np.ndarray:
    """Master-equation reference for the unraveling oracle."""
    rho0 = vectorize(np.outer(psi0, np.conj(psi0)))
    traj = evolve_real_time(rho0, params, np.array([0.0, t_final]), dt=dt)
    return devectorize(traj.states[-1])


def trace_distance(rho_a: np.ndarray, rho_b: np.ndarray) -> float:
    """0.5 * trace norm of the difference."""
    return float(0.5 * np.abs(np.linalg.eigvalsh(rho_a - rho_b)).sum())


def export_fidelity_csv(traj: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "tJN", "F"])
        for t, tjn, f in zip(traj.times, traj.rescaled_times, traj.fidelity):
            writer.writerow([repr(float(t)), repr(float(tjn)), repr(float(f))])


def export_spectrum_csv(spec: FreqSpectrum, N: int, J: float, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["omega", "omega_over_NJ", "abs_F"])
        for w, wr in zip(spec.frequencies, spec.rescaled_frequencies(N, J)):
            idx = np.searchsorted(spec.frequencies, w)
            writer.writerow([repr(float(w)), repr(float(wr)), repr(float(abs(spec.amplitudes[idx])))])


def export_overlaps_csv(pairs, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["re_lambda", "im_lambda", "r"])
        for lam, r in pairs:
            writer.writerow([repr(lam.real), repr(lam.imag), repr(r)])
