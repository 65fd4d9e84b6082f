"""Structural invariant suite backing the `verify` subcommand.

Every check is an independent oracle on small systems: closed-form g=0
spectra, algebraic symmetries of the dense Liouvillian, frame similarity,
the mean-field closed form, and stochastic-unraveling agreement.  Each check
returns (name, passed, detail); the CLI maps any failure to a nonzero exit.
"""

from __future__ import annotations

import numpy as np

from .liouvillian import dense_liouvillian, get_liouvillian
from .meanfield import MFParams, closed_form_ground_state, solve_self_consistent
from .params import Frame, LiouvilleParams
from .spectral import (
    _multiset_match,
    check_symmetries,
    full_spectrum,
    g0_eigenvalues,
    steady_states,
)
from .superket import (
    FrameDirection,
    apply_frame_transform,
    devectorize,
    inner,
    random_hermitian_superket,
    superket_trace,
    vectorize,
)

Check = tuple[str, bool, str]


def _check_trace_preservation(params: LiouvilleParams, rng) -> Check:
    """Tr[L rho] = 0 for arbitrary rho (original frame)."""
    op = get_liouvillian(params.with_frame(Frame.ORIGINAL))
    worst = 0.0
    for _ in range(5):
        rho = random_hermitian_superket(params.N, rng)
        worst = max(worst, abs(superket_trace(op.apply(rho))))
    ok = worst < 1e-10 * params.spectral_scale
    return (f"trace_preservation_N{params.N}", ok, f"max |Tr[L rho]| = {worst:.3e}")


def _check_hermiticity_structure(params: LiouvilleParams, rng) -> Check:
    """L(rho) is anti-Hermitian for Hermitian rho: (L rho)^dag = -(L rho)."""
    op = get_liouvillian(params.with_frame(Frame.ORIGINAL))
    worst = 0.0
    for _ in range(5):
        rho = random_hermitian_superket(params.N, rng)
        lrho = devectorize(op.apply(rho))
        worst = max(worst, float(np.abs(lrho.conj().T + lrho).max()))
    ok = worst < 1e-10 * params.spectral_scale
    return (f"hermiticity_structure_N{params.N}", ok, f"max |(L rho)^dag + L rho| = {worst:.3e}")


def _check_adjoint_duality(params: LiouvilleParams, rng) -> Check:
    """(L^dag a | b) = (a | L b) for random superkets, both frames."""
    worst = 0.0
    for frame in (Frame.ORIGINAL, Frame.TRANSFORMED):
        op = get_liouvillian(params.with_frame(frame))
        for _ in range(3):
            a = rng.standard_normal(params.dim) + 1j * rng.standard_normal(params.dim)
            b = rng.standard_normal(params.dim) + 1j * rng.standard_normal(params.dim)
            lhs = inner(op.apply_adjoint(a), b)
            rhs = inner(a, op.apply(b))
            worst = max(worst, abs(lhs - rhs) / (np.linalg.norm(a) * np.linalg.norm(b)))
    ok = worst < 1e-12 * params.spectral_scale
    return (f"adjoint_duality_N{params.N}", ok, f"max relative mismatch = {worst:.3e}")


def _check_g0_spectrum(params: LiouvilleParams) -> Check:
    """Dense eigenvalues at g=0 match the closed-form diagonal multiset."""
    p0 = params.with_frame(Frame.ORIGINAL)
    p0 = LiouvilleParams(N=p0.N, J=p0.J, g=0.0, gamma=p0.gamma, frame=p0.frame)
    computed = np.sort_complex(np.linalg.eigvals(dense_liouvillian(p0)))
    exact = np.sort_complex(g0_eigenvalues(p0))
    err = float(np.abs(computed - exact).max())
    ok = err < 1e-9
    return (f"g0_closed_form_N{params.N}", ok, f"max pairing error = {err:.3e}")


def _check_spectral_symmetries(params: LiouvilleParams) -> Check:
    """Spectrum closed under conjugation and the dihedral reflection."""
    spec = full_spectrum(params.with_frame(Frame.ORIGINAL))
    report = check_symmetries(spec)
    ok = report.conjugation_ok and report.dihedral_ok
    return (
        f"spectrum_symmetries_N{params.N}",
        ok,
        f"conjugation err {report.conjugation_error:.3e}, dihedral err {report.dihedral_error:.3e}",
    )


def _check_frame_similarity(params: LiouvilleParams) -> Check:
    """Original and transformed frames share eigenvalues; U maps eigenvectors."""
    orig = full_spectrum(params.with_frame(Frame.ORIGINAL))
    trans = full_spectrum(params.with_frame(Frame.TRANSFORMED))
    lam_err = _multiset_match(
        orig.eigenvalues, trans.eigenvalues, 1e-8 * params.spectral_scale
    )
    # check the similarity itself on a random vector: L v = U Lt U^dag v
    rng = np.random.default_rng(7)
    v = rng.standard_normal(params.dim) + 1j * rng.standard_normal(params.dim)
    p_orig = params.with_frame(Frame.ORIGINAL)
    p_trans = params.with_frame(Frame.TRANSFORMED)
    direct = get_liouvillian(p_orig).apply(v)
    routed = apply_frame_transform(
        get_liouvillian(p_trans).apply(
            apply_frame_transform(v, FrameDirection.TO_TRANSFORMED, p_trans)
        ),
        FrameDirection.TO_ORIGINAL,
        p_orig,
    )
    act_err = float(np.linalg.norm(direct - routed) / np.linalg.norm(v))
    ok = lam_err < 1e-8 * params.spectral_scale and act_err < 1e-12 * params.spectral_scale
    return (
        f"frame_similarity_N{params.N}",
        ok,
        f"eigenvalue multiset err {lam_err:.3e}, action err {act_err:.3e}",
    )


def _check_steady_state(params: LiouvilleParams) -> Check:
    """A zero mode exists and devectorizes to the maximally mixed state."""
    spec = full_spectrum(params.with_frame(Frame.ORIGINAL))
    idx = steady_states(spec)
    rho = devectorize(spec.right[:, idx[0]])
    rho = rho / np.trace(rho)
    err = float(np.abs(rho - np.eye(rho.shape[0]) / rho.shape[0]).max())
    ok = err < 1e-8
    return (f"steady_state_N{params.N}", ok, f"{len(idx)} zero modes, distance to I/d = {err:.3e}")


def _check_meanfield_closed_form() -> Check:
    """beta=inf, gamma=0 magnetization equals sqrt(1-g^2) below g=1."""
    worst = 0.0
    # 40 points on [0, 2] never hit g = 1 exactly (critical slowing down)
    for g in np.linspace(0.0, 2.0, 40):
        state = solve_self_consistent(MFParams(zJ=1.0, g=float(g), gamma=0.0, beta=np.inf))
        worst = max(worst, abs(state.m - closed_form_ground_state(float(g))))
    ok = worst < 1e-6
    return ("meanfield_closed_form", ok, f"max |m - sqrt(1-g^2)| = {worst:.3e}")


def _check_unraveling(rng) -> Check:
    """Noise-averaged trajectories approach the master equation at N=2."""
    from .dynamics import (
        cat_state,
        master_equation_density,
        trace_distance,
        unravel_trajectories,
    )

    params = LiouvilleParams(N=2, J=1.0, g=1.0, gamma=1.0)
    psi0 = cat_state(2).psi
    rho_unr = unravel_trajectories(psi0, params, t_final=1.0, dt=0.002, n_traj=2000, seed=99)
    rho_me = master_equation_density(psi0, params, t_final=1.0)
    dist = trace_distance(rho_unr, rho_me)
    ok = dist < 0.1
    return ("unraveling_agreement_N2", ok, f"trace distance = {dist:.4f} (2000 trajectories)")


def run_verification(sizes: tuple[int, ...] = (2, 4), g: float = 0.4) -> list[Check]:
    """Full invariant suite; returns one (name, passed, detail) per check."""
    rng = np.random.default_rng(2024)
    checks: list[Check] = []
    for n in sizes:
        params = LiouvilleParams(N=n, J=1.0, g=g, gamma=1.0)
        checks.append(_check_trace_preservation(params, rng))
        checks.append(_check_hermiticity_structure(params, rng))
        checks.append(_check_adjoint_duality(params, rng))
        checks.append(_check_g0_spectrum(params))
        checks.append(_check_spectral_symmetries(params))
        checks.append(_check_frame_similarity(params))
        checks.append(_check_steady_state(params))
    checks.append(_check_meanfield_closed_form())
    checks.append(_check_unraveling(rng))
    return checks
