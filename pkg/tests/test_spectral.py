"""Dense eigendecomposition, biorthogonality, and spectrum symmetries."""

import numpy as np
import pytest

from dissipative_ising import Frame, LiouvilleParams, dense_liouvillian, devectorize
from dissipative_ising.liouvillian import get_liouvillian
from dissipative_ising.spectral import (
    _multiset_match,
    check_symmetries,
    export_csv,
    full_spectrum,
    g0_eigenvalues,
    propagate_spectrally,
    steady_state_matrices,
    steady_states,
)


def test_g0_multiset_matches_closed_form_n4():
    params = LiouvilleParams(N=4, J=1.0, g=0.0, gamma=1.0)
    spec = full_spectrum(params)
    err = _multiset_match(spec.eigenvalues, g0_eigenvalues(params), 1e-9)
    assert err < 1e-9


def test_g0_zero_multiplicity_and_leftmost_cluster_n4():
    params = LiouvilleParams(N=4, J=1.0, g=0.0, gamma=1.0)
    spec = full_spectrum(params)
    assert len(steady_states(spec)) == 16  # 2^N product states |s> x |s>
    assert np.any(np.abs(spec.eigenvalues.real - (-8.0)) < 1e-9)


def test_eigenvalue_sum_is_trace():
    params = LiouvilleParams(N=2, J=1.3, g=0.7, gamma=0.4)
    spec = full_spectrum(params)
    assert abs(spec.eigenvalues.sum() - np.trace(dense_liouvillian(params))) < 1e-9


def test_sort_order_and_decay_sign():
    spec = full_spectrum(LiouvilleParams(N=2, J=1.0, g=0.5, gamma=1.0))
    key = np.lexsort((spec.eigenvalues.real, np.abs(spec.eigenvalues.imag)))
    assert np.array_equal(key, np.arange(key.size))
    assert spec.eigenvalues.imag.max() <= 1e-9  # all modes decay


def test_biorthonormality():
    spec = full_spectrum(LiouvilleParams(N=2, J=1.0, g=0.8, gamma=0.9))
    overlap = np.conj(spec.left).T @ spec.right
    flat = [(i, j) for c in spec.degenerate_clusters for i in c for j in c]
    mask = np.ones(overlap.shape, dtype=bool)
    for i, j in flat:
        mask[i, j] = False
    assert np.abs((overlap - np.eye(overlap.shape[0]))[mask]).max() < 1e-8


def test_reconstruction_from_modes():
    params = LiouvilleParams(N=2, J=0.9, g=0.6, gamma=1.1)
    spec = full_spectrum(params)
    if spec.defective:
        pytest.skip("defective block flagged at these params")
    rebuilt = (spec.right * spec.eigenvalues) @ np.conj(spec.left).T
    assert np.abs(rebuilt - dense_liouvillian(params)).max() < 1e-7


def test_unique_steady_state_is_maximally_mixed():
    spec = full_spectrum(LiouvilleParams(N=2, J=1.0, g=1.0, gamma=1.0))
    idx = steady_states(spec)
    assert len(idx) == 1
    rho = steady_state_matrices(spec)[0]
    assert np.abs(rho - np.eye(4) / 4).max() < 1e-9
    assert abs(np.trace(devectorize(spec.right[:, idx[0]]))) > 1e-6


def test_nonzero_modes_are_traceless():
    spec = full_spectrum(LiouvilleParams(N=2, J=1.0, g=0.7, gamma=1.0))
    steady = set(steady_states(spec))
    for k in range(spec.eigenvalues.size):
        if k not in steady:
            assert abs(np.trace(devectorize(spec.right[:, k]))) < 1e-9


def test_steady_modes_positive_semidefinite():
    spec = full_spectrum(LiouvilleParams(N=2, J=1.0, g=0.9, gamma=0.6))
    for rho in steady_state_matrices(spec):
        assert np.linalg.eigvalsh(rho).min() >= -1e-9


def test_symmetries_pass_at_finite_g():
    report = check_symmetries(full_spectrum(LiouvilleParams(N=4, J=1.0, g=0.4, gamma=1.0)))
    assert report.conjugation_ok and report.dihedral_ok


def test_closed_system_spectrum_is_real():
    # gamma=0: L spectrum is the set of Bohr frequencies E_i - E_j, all real
    spec = full_spectrum(LiouvilleParams(N=2, J=1.0, g=0.8, gamma=0.0))
    assert np.abs(spec.eigenvalues.imag).max() < 1e-10
    err = _multiset_match(spec.eigenvalues, -spec.eigenvalues, 1e-9)
    assert err < 1e-9


def test_imaginary_centroid_is_minus_gamma_n():
    spec = full_spectrum(LiouvilleParams(N=2, J=1.0, g=0.5, gamma=1.0))
    assert abs(spec.eigenvalues.imag.mean() - (-2.0)) < 1e-9


def test_spectral_propagation_matches_rk4():
    from dissipative_ising.dynamics import evolve_real_time
    from dissipative_ising.superket import random_hermitian_superket

    params = LiouvilleParams(N=2, J=1.0, g=0.7, gamma=0.8)
    spec = full_spectrum(params)
    rng = np.random.default_rng(21)
    rho0 = random_hermitian_superket(2, rng)
    rho0 /= devectorize(rho0).trace()
    expected = propagate_spectrally(spec, rho0, 1.0)
    traj = evolve_real_time(rho0, params, np.array([0.0, 1.0]))
    assert np.abs(traj.states[-1] - expected).max() < 1e-6


def test_export_csv(tmp_path):
    spec = full_spectrum(LiouvilleParams(N=2, J=1.0, g=0.3, gamma=1.0))
    path = tmp_path / "spec.csv"
    export_csv(spec, path)
    rows = path.read_text().strip().split("\n")
    assert rows[0].split(",")[:3] == ["index", "re_lambda", "im_lambda"]
    assert len(rows) == 1 + 16
