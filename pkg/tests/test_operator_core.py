"""Superket conventions and the matrix-free/dense Liouvillian kernels."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dissipative_ising import (
    Frame,
    FrameDirection,
    LiouvilleParams,
    apply_adjoint_liouvillian,
    apply_frame_transform,
    apply_liouvillian,
    dense_liouvillian,
    devectorize,
    inner,
    superket_trace,
    vectorize,
)
from dissipative_ising.liouvillian import get_liouvillian
from dissipative_ising.superket import random_hermitian_superket

RNG = np.random.default_rng(7031)


def random_params(N, rng):
    return LiouvilleParams(
        N=N,
        J=float(rng.uniform(0.2, 2.0)),
        g=float(rng.uniform(0.0, 2.0)),
        gamma=float(rng.uniform(0.0, 2.0)),
    )


# --- vectorization ----------------------------------------------------------


def test_vectorize_identity_layout():
    # N=2: identity lands on the flat indices s*2^N + s
    v = vectorize(np.eye(4))
    expected = np.zeros(16)
    expected[[0, 5, 10, 15]] = 1.0
    assert np.array_equal(v, expected.astype(complex))


def test_round_trip_exact():
    a = RNG.standard_normal((4, 4)) + 1j * RNG.standard_normal((4, 4))
    assert np.array_equal(devectorize(vectorize(a)), a)


def test_inner_product_is_hilbert_schmidt():
    a = RNG.standard_normal((4, 4)) + 1j * RNG.standard_normal((4, 4))
    b = RNG.standard_normal((4, 4)) + 1j * RNG.standard_normal((4, 4))
    assert abs(inner(vectorize(a), vectorize(b)) - np.trace(a.conj().T @ b)) < 1e-14


def test_superket_trace():
    assert superket_trace(vectorize(np.eye(4))) == 4
    # orthogonal outer product |F><Neel| has zero trace
    ferro = np.zeros(4)
    ferro[3] = 1.0
    neel = np.zeros(4)
    neel[1] = 1.0  # site 0 up, site 1 down
    assert superket_trace(vectorize(np.outer(ferro, neel))) == 0


def test_vectorize_rejects_non_square():
    with pytest.raises(ValueError):
        vectorize(np.zeros((4, 2)))


# --- parameter validation ---------------------------------------------------


def test_params_reject_odd_and_negative():
    with pytest.raises(ValueError):
        LiouvilleParams(N=3)
    with pytest.raises(ValueError):
        LiouvilleParams(N=0)
    with pytest.raises(ValueError):
        LiouvilleParams(N=2, gamma=-1.0)
    with pytest.raises(ValueError):
        LiouvilleParams(N=2, J=float("inf"))


def test_dimension_mismatch_rejected():
    params = LiouvilleParams(N=2)
    with pytest.raises(ValueError):
        apply_liouvillian(np.zeros(15, dtype=complex), params)


# --- Liouvillian action -----------------------------------------------------


def test_dephasing_only_diagonal_n2():
    # J=g=0: L is diagonal with i*gamma*(sum_j s_j s'_j - N) per flat index
    params = LiouvilleParams(N=2, J=0.0, g=0.0, gamma=1.0)
    mat = dense_liouvillian(params)
    confs = np.arange(4)
    diag = []
    for s in confs:
        for sp in confs:
            zz = sum(
                (2 * ((s >> j) & 1) - 1) * (2 * ((sp >> j) & 1) - 1) for j in range(2)
            )
            diag.append(1j * (zz - 2))
    assert np.allclose(mat, np.diag(diag), atol=1e-15)


def test_ferro_neel_eigenvector_n4():
    # |F> x |Neel> is an exact g=0 eigenvector with eigenvalue -2JN - i*gamma*N
    params = LiouvilleParams(N=4, J=1.0, g=0.0, gamma=1.0)
    d = 1 << 4
    ferro = d - 1
    neel = 0b0101  # up-down-up-down with site 0 up
    v = np.zeros(params.dim, dtype=complex)
    v[ferro * d + neel] = 1.0
    out = apply_liouvillian(v, params)
    assert np.allclose(out, (-8.0 - 4.0j) * v, atol=1e-13)


def test_g0_diagonality_scalar_formula():
    params = LiouvilleParams(N=4, J=0.7, g=0.0, gamma=1.3)
    rng = np.random.default_rng(3)
    for _ in range(10):
        k = int(rng.integers(params.dim))
        e = np.zeros(params.dim, dtype=complex)
        e[k] = 1.0
        out = apply_liouvillian(e, params)
        s, sp = divmod(k, 1 << 4)
        bond = lambda c: sum(
            (2 * ((c >> j) & 1) - 1) * (2 * ((c >> ((j + 1) % 4)) & 1) - 1)
            for j in range(4)
        )
        zz = sum((2 * ((s >> j) & 1) - 1) * (2 * ((sp >> j) & 1) - 1) for j in range(4))
        scalar = -params.J * (bond(s) - bond(sp)) + 1j * params.gamma * (zz - 4)
        assert abs(out[k] - scalar) < 1e-13
        out[k] = 0.0
        assert np.abs(out).max() == 0.0


@pytest.mark.parametrize("N", [2, 4])
def test_trace_preservation(N):
    params = LiouvilleParams(N=N, J=1.0, g=0.8, gamma=0.5)
    rng = np.random.default_rng(11)
    for _ in range(100):
        rho = random_hermitian_superket(N, rng)
        assert abs(superket_trace(apply_liouvillian(rho, params))) < 1e-10


@pytest.mark.parametrize("N", [2, 4])
def test_hermiticity_structure(N):
    # L(rho)^dag = -L(rho) for Hermitian rho
    params = LiouvilleParams(N=N, J=1.0, g=1.1, gamma=0.7)
    rng = np.random.default_rng(12)
    for _ in range(10):
        lrho = devectorize(apply_liouvillian(random_hermitian_superket(N, rng), params))
        assert np.abs(lrho + lrho.conj().T).max() < 1e-12


@given(seed=st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_adjoint_duality_property(seed):
    rng = np.random.default_rng(seed)
    params = random_params(2, rng)
    for frame in (Frame.ORIGINAL, Frame.TRANSFORMED):
        p = params.with_frame(frame)
        a = rng.standard_normal(p.dim) + 1j * rng.standard_normal(p.dim)
        b = rng.standard_normal(p.dim) + 1j * rng.standard_normal(p.dim)
        lhs = inner(a, apply_liouvillian(b, p))
        rhs = inner(apply_adjoint_liouvillian(a, p), b)
        assert abs(lhs - rhs) < 1e-12 * np.linalg.norm(a) * np.linalg.norm(b)


def test_adjoint_of_diagonal_is_conjugate():
    params = LiouvilleParams(N=2, J=1.0, g=0.0, gamma=1.0)
    v = RNG.standard_normal(16) + 1j * RNG.standard_normal(16)
    diag = get_liouvillian(params).diagonal
    assert np.allclose(apply_adjoint_liouvillian(v, params), np.conj(diag) * v)


def test_adjoint_annihilates_identity():
    # L^dag(I) = 0 is the dual statement of trace preservation
    params = LiouvilleParams(N=2, J=0.9, g=0.6, gamma=1.2)
    out = apply_adjoint_liouvillian(vectorize(np.eye(4)), params)
    assert np.abs(out).max() < 1e-12


def test_dense_matches_matrix_free():
    rng = np.random.default_rng(5)
    params = random_params(2, rng)
    mat = dense_liouvillian(params)
    for _ in range(10):
        v = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        assert np.abs(mat @ v - apply_liouvillian(v, params)).max() < 1e-12


def test_dense_cap_enforced(monkeypatch):
    monkeypatch.setenv("DISING_DENSE_CAP", "2")
    with pytest.raises(MemoryError):
        dense_liouvillian(LiouvilleParams(N=4))


def test_numba_and_numpy_paths_agree():
    import dissipative_ising.liouvillian as lv

    if lv._fused_apply is None:
        pytest.skip("numba unavailable")
    params = LiouvilleParams(N=8, J=1.0, g=0.7, gamma=1.0)
    rng = np.random.default_rng(8)
    v = rng.standard_normal(params.dim) + 1j * rng.standard_normal(params.dim)
    fused = apply_liouvillian(v, params)
    op = get_liouvillian(params)
    saved = lv._fused_apply
    lv._fused_apply = None
    try:
        fallback = op.apply(v)
    finally:
        lv._fused_apply = saved
    assert np.abs(fused - fallback).max() < 1e-12


# --- frame transform --------------------------------------------------------


def test_frame_transform_round_trip_and_norm():
    params = LiouvilleParams(N=4, frame=Frame.TRANSFORMED)
    v = RNG.standard_normal(params.dim) + 1j * RNG.standard_normal(params.dim)
    w = apply_frame_transform(v, FrameDirection.TO_TRANSFORMED, params)
    assert abs(np.linalg.norm(w) - np.linalg.norm(v)) < 1e-14 * np.linalg.norm(v)
    back = apply_frame_transform(w, FrameDirection.TO_ORIGINAL, params)
    assert np.abs(back - v).max() < 1e-14


@pytest.mark.parametrize("N", [2, 4])
def test_transformed_frame_is_unitary_conjugation(N):
    # dense(U^dag L U) must equal the directly built transformed Liouvillian
    params = LiouvilleParams(N=N, J=1.0, g=0.8, gamma=1.0)
    d = params.dim
    basis = np.eye(d, dtype=complex)
    u = np.column_stack(
        [apply_frame_transform(basis[:, k], FrameDirection.TO_ORIGINAL, params) for k in range(d)]
    )
    conjugated = u.conj().T @ dense_liouvillian(params.with_frame(Frame.ORIGINAL)) @ u
    direct = dense_liouvillian(params.with_frame(Frame.TRANSFORMED))
    assert np.abs(conjugated - direct).max() < 1e-12


def test_frame_similarity_of_spectra():
    from dissipative_ising.spectral import _multiset_match

    params = LiouvilleParams(N=2, J=1.0, g=0.6, gamma=0.9)
    e_orig = np.linalg.eigvals(dense_liouvillian(params.with_frame(Frame.ORIGINAL)))
    e_trans = np.linalg.eigvals(dense_liouvillian(params.with_frame(Frame.TRANSFORMED)))
    assert _multiset_match(e_orig, e_trans, 1e-9) < 1e-9
