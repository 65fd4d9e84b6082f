"""Most-coherent-mode extraction by normalized imaginary-time propagation.

Integrating d|rho)/dt = -Lt|rho) amplifies each eigenmode by exp(-lambda t),
so the mode with the most negative Re[lambda] (the most coherent mode)
dominates after renormalization.  The propagation runs in the transformed
frame, where that mode is ferromagnetic-like and varies smoothly with the
transverse field; the eigenvalue is read off through the Rayleigh quotient,
so it carries no time-discretization error.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field

import numpy as np

from .liouvillian import Liouvillian, get_liouvillian
from .params import Frame, LiouvilleParams

DEFAULT_TOL = 1e-8
DEFAULT_MAX_STEPS = 500_000
DEFAULT_DT_FACTOR = 0.02
CHECK_EVERY = 25
_PERTURBATION_SEED = 20230517
_PERTURBATION_SCALE = 1e-6

_CHECKPOINT_MAGIC = b"DIMCMCK1"


class McmStabilityError(RuntimeError):
    """Propagation blew up (NaN/overflow); retry with a smaller dt."""


class McmConvergenceError(RuntimeError):
    """Residual target not reached within max_steps.

    Carries the best-so-far ``result`` so callers can treat the point as
    missing data or restart from it.
    """

    def __init__(self, message: str, result: "McmResult"):
        super().__init__(message)
        self.result = result


@dataclass
class McmResult:
    mode: np.ndarray
    eigenvalue: complex
    residual: float
    iterations: int
    frame: Frame
    params: LiouvilleParams
    converged: bool
    history: list = field(default_factory=list)  # (step, eigenvalue, residual)


def default_init(params: LiouvilleParams, rng_seed: int = _PERTURBATION_SEED) -> np.ndarray:
    """Equal superposition of the four ferro x ferro product superkets.

    Covers the whole g=0 degenerate subspace (both global spin flips on each
    copy) so that at small g the propagation lands on the symmetric
    combination; a small fixed-seed perturbation breaks any residual
    degeneracy deterministically.
    """
    d = 1 << params.N
    ferro_up = d - 1
    ferro_dn = 0
    v = np.zeros(params.dim, dtype=complex)
    for s in (ferro_up, ferro_dn):
        for sp in (ferro_up, ferro_dn):
            v[s * d + sp] = 0.5
    rng = np.random.default_rng(rng_seed)
    noise = rng.standard_normal(params.dim) + 1j * rng.standard_normal(params.dim)
    v += _PERTURBATION_SCALE * noise / np.linalg.norm(noise)
    return v / np.linalg.norm(v)


def rayleigh_quotient(state: np.ndarray, params: LiouvilleParams) -> complex:
    """(state | L state) / (state | state) in the frame given by params."""
    norm2 = np.vdot(state, state).real
    if norm2 == 0.0:
        raise ValueError("Rayleigh quotient of the zero vector")
    return complex(np.vdot(state, get_liouvillian(params).apply(state)) / norm2)


def _rk4_step(apply_neg, v: np.ndarray, dt: float) -> np.ndarray:
    k1 = apply_neg(v)
    k2 = apply_neg(v + (0.5 * dt) * k1)
    k3 = apply_neg(v + (0.5 * dt) * k2)
    k4 = apply_neg(v + dt * k3)
    return v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _propagate(
    op: Liouvillian,
    adjoint: bool,
    params: LiouvilleParams,
    dt: float | None,
    tol: float,
    max_steps: int,
    init: np.ndarray | None,
    check_every: int,
) -> McmResult:
    if dt is None:
        dt = DEFAULT_DT_FACTOR / params.spectral_scale
    if dt * params.spectral_scale >= 1.0:
        raise ValueError(
            f"dt={dt} too large for spectral scale {params.spectral_scale:.3g}"
        )
    apply = op.apply_adjoint if adjoint else op.apply
    v = default_init(params) if init is None else np.asarray(init, dtype=complex)
    v = v / np.linalg.norm(v)

    def apply_neg(x):
        return -apply(x)

    history: list = []
    residual = np.inf
    lam = complex(np.nan, np.nan)
    step = 0
    while step < max_steps:
        for _ in range(check_every):
            v = _rk4_step(apply_neg, v, dt)
            norm = np.linalg.norm(v)
            if not np.isfinite(norm) or norm == 0.0:
                raise McmStabilityError(
                    f"propagation diverged at step {step} (dt={dt}); reduce dt"
                )
            v /= norm
            step += 1
        w = apply(v)
        lam = complex(np.vdot(v, w))
        residual = float(np.linalg.norm(w - lam * v))
        history.append((step, lam, residual))
        if residual < tol:
            return McmResult(v, lam, residual, step, params.frame, params, True, history)
    result = McmResult(v, lam, residual, step, params.frame, params, False, history)
    raise McmConvergenceError(
        f"residual {residual:.3e} > tol {tol:.3e} after {step} steps "
        f"(N={params.N}, g={params.g}, gamma={params.gamma})",
        result,
    )


def find_mcm(
    params: LiouvilleParams,
    dt: float | None = None,
    tol: float = DEFAULT_TOL,
    max_steps: int = DEFAULT_MAX_STEPS,
    init: np.ndarray | None = None,
    check_every: int = CHECK_EVERY,
) -> McmResult:
    """Right most coherent mode of the transformed-frame Liouvillian."""
    params = params.with_frame(Frame.TRANSFORMED)
    op = get_liouvillian(params)
    return _propagate(op, False, params, dt, tol, max_steps, init, check_every)


def find_mcm_left(
    params: LiouvilleParams,
    dt: float | None = None,
    tol: float = DEFAULT_TOL,
    max_steps: int = DEFAULT_MAX_STEPS,
    init: np.ndarray | None = None,
    check_every: int = CHECK_EVERY,
) -> McmResult:
    """Left most coherent mode; its eigenvalue is the conjugate of the right one."""
    params = params.with_frame(Frame.TRANSFORMED)
    op = get_liouvillian(params)
    return _propagate(op, True, params, dt, tol, max_steps, init, check_every)


def save_checkpoint(path, result: McmResult) -> None:
    """Binary superket checkpoint: fixed header + interleaved re/im doubles."""
    p = result.params
    header = _CHECKPOINT_MAGIC + struct.pack(
        "<IB3dQ",
        p.N,
        1 if result.frame is Frame.TRANSFORMED else 0,
        p.J,
        p.g,
        p.gamma,
        result.iterations,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(result.mode, dtype="<c16").tobytes())


def load_checkpoint(path) -> tuple[LiouvilleParams, int, np.ndarray]:
    """Read a checkpoint back as (params, iteration, superket)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(_CHECKPOINT_MAGIC))
        if magic != _CHECKPOINT_MAGIC:
            raise ValueError(f"not a checkpoint file: bad magic {magic!r}")
        n, frame_byte, j, g, gamma, iterations = struct.unpack(
            "<IB3dQ", fh.read(struct.calcsize("<IB3dQ"))
        )
        frame = Frame.TRANSFORMED if frame_byte else Frame.ORIGINAL
        params = LiouvilleParams(N=n, J=j, g=g, gamma=gamma, frame=frame)
        mode = np.frombuffer(fh.read(), dtype="<c16").astype(complex)
    if mode.shape[0] != params.dim:
        raise ValueError("checkpoint payload length does not match N")
    return params, iterations, mode


def write_convergence_log(path, result: McmResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "re_lambda", "im_lambda", "residual"])
        for step, lam, residual in result.history:
            writer.writerow([step, repr(lam.real), repr(lam.imag), repr(residual)])
