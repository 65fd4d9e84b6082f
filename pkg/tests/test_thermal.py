"""Finite-beta Liouvillian canonical averages."""

import math

import numpy as np
import pytest
import scipy.linalg

from dissipative_ising import Frame, LiouvilleParams, dense_liouvillian
from dissipative_ising.spectral import full_spectrum
from dissipative_ising.thermal import (
    canonical_average,
    export_csv,
    magnetization_diagonal,
    squared_magnetization_thermal,
    sweep_thermal_heatmap,
)


def test_identity_observable_is_one():
    params = LiouvilleParams(N=2, J=1.0, g=0.7, gamma=0.9)
    for beta in (1e-6, 0.5, 5.0):
        res = canonical_average(np.ones(params.dim), beta, params)
        assert abs(res.value - 1.0) < 1e-10


def test_beta_zero_limit_is_flat_average():
    params = LiouvilleParams(N=2, J=1.0, g=0.4, gamma=1.0)
    obs = magnetization_diagonal(2, 2)
    res = canonical_average(obs, 1e-10, params)
    assert abs(res.value - obs.sum() / params.dim) < 1e-8


def test_infinite_beta_rejected():
    with pytest.raises(ValueError):
        canonical_average(np.ones(16), math.inf, LiouvilleParams(N=2))


def test_shift_invariance():
    # adding c*I to L leaves the Gibbs ratio unchanged; compare the
    # eigendecomposition path against an explicitly shifted exponential
    params = LiouvilleParams(N=2, J=1.0, g=0.6, gamma=0.8, frame=Frame.TRANSFORMED)
    beta = 1.3
    obs = magnetization_diagonal(2, 2)
    res = canonical_average(obs, beta, params)
    mat = dense_liouvillian(params) + (2.7 - 0.4j) * np.eye(params.dim)
    prop = scipy.linalg.expm(-beta * (mat - mat.diagonal().real.min() * np.eye(params.dim)))
    direct = np.trace(np.diag(obs) @ prop) / np.trace(prop)
    assert abs(res.value - direct) < 1e-10


def test_eigenbasis_matches_direct_exponential():
    params = LiouvilleParams(N=2, J=0.9, g=0.5, gamma=1.1, frame=Frame.TRANSFORMED)
    beta = 0.7
    obs = magnetization_diagonal(2, 2)
    res = canonical_average(obs, beta, params)
    mat = dense_liouvillian(params)
    prop = scipy.linalg.expm(-beta * (mat - mat.diagonal().real.min() * np.eye(params.dim)))
    direct = np.trace(np.diag(obs) @ prop) / np.trace(prop)
    assert abs(res.value - direct) < 1e-8


def test_imaginary_part_small_for_squared_magnetization():
    params = LiouvilleParams(N=4, J=1.0, g=0.5, gamma=1.0)
    res = canonical_average(magnetization_diagonal(4, 2), 2.0, params)
    assert abs(res.value.imag) < 1e-8


def test_large_beta_approaches_mcm_value():
    # beta=50 Gibbs weights collapse onto the most coherent mode, so the
    # average approaches the biorthogonal matrix element (L_mc|O|R_mc)
    from dissipative_ising.mcm import find_mcm, find_mcm_left

    params = LiouvilleParams(N=4, J=1.0, g=0.2, gamma=1.0)
    right = find_mcm(params, tol=1e-10)
    left = find_mcm_left(params, tol=1e-10)
    obs = magnetization_diagonal(4, 2)
    mcm_value = np.vdot(left.mode, obs * right.mode) / np.vdot(left.mode, right.mode)
    thermal_value = canonical_average(obs, 50.0, params).value
    assert abs(thermal_value - mcm_value) < 1e-3


def test_ordered_corner_magnetization_near_one():
    params = LiouvilleParams(N=4, J=1.0, g=0.1, gamma=1.0)
    m = squared_magnetization_thermal(50.0, params)
    assert m > 0.9


def test_periodicity_in_gamma_at_g0():
    beta = 0.8
    params = lambda gamma: LiouvilleParams(N=4, J=1.0, g=0.0, gamma=gamma)
    for gamma in (0.5, 1.7):
        a = squared_magnetization_thermal(beta, params(gamma))
        b = squared_magnetization_thermal(beta, params(gamma + math.pi / beta))
        assert abs(a - b) < 1e-6


def test_heatmap_and_export(tmp_path):
    template = LiouvilleParams(N=2, J=1.0)
    gammas, gs, m = sweep_thermal_heatmap(template, (0.0, 2.0), (0.0, 1.0), (3, 3), beta=0.8)
    assert m.shape == (3, 3)
    assert np.isfinite(m).all()
    path = tmp_path / "thermal.csv"
    export_csv(gammas, gs, m, path)
    assert len(path.read_text().strip().split("\n")) == 1 + 9


def test_spectrum_reuse_gives_same_answer():
    params = LiouvilleParams(N=2, J=1.0, g=0.4, gamma=1.0, frame=Frame.TRANSFORMED)
    spec = full_spectrum(params)
    a = squared_magnetization_thermal(1.5, params, spectrum=spec)
    b = squared_magnetization_thermal(1.5, params)
    assert abs(a - b) < 1e-12
