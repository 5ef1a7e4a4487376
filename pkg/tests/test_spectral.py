"""Spectral limits: fixed-point solver, in-house eigensolver, limit CDF."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadvar.models import GaussianAR1, covariance_matrix
from quadvar.spectral import (
    ConvergenceError,
    NotPositiveDefiniteError,
    SpectralModel,
    cholesky,
    density_from_stieltjes,
    density_grid,
    effective_spectral_model,
    empirical_stieltjes,
    jacobi_eigenvalues,
    kolmogorov_distance,
    limit_cdf,
    limit_stieltjes,
    mp_stieltjes,
    population_sigma,
    sample_covariance_matrix,
)

UNIT = SpectralModel(atoms=((1.0, 1.0),), c=0.5)
TWO_ATOM = SpectralModel(atoms=((1.0, 0.5), (3.0, 0.5)), c=0.5)


# ---------------------------------------------------------------- model setup


def test_spectral_model_rejects_bad_weights():
    with pytest.raises(ValueError):
        SpectralModel(atoms=((1.0, 0.4), (2.0, 0.4)), c=0.5)
    with pytest.raises(ValueError):
        SpectralModel(atoms=((1.0, 1.0),), c=0.0)


def test_population_sigma_largest_remainder_ties_to_smaller_atom():
    # 5 slots at half weight each: 2.5/2.5 rounds to 3 of the smaller and 2
    # of the larger eigenvalue
    Sigma = population_sigma(TWO_ATOM, 5)
    assert np.array_equal(np.diag(Sigma), np.array([1.0, 1.0, 1.0, 3.0, 3.0]))
    assert np.array_equal(Sigma, np.diag(np.diag(Sigma)))


def test_population_sigma_exact_split():
    Sigma = population_sigma(TWO_ATOM, 4)
    assert sorted(np.diag(Sigma)) == [1.0, 1.0, 3.0, 3.0]


# ------------------------------------------------------------------- cholesky


def test_cholesky_hand_case():
    G = cholesky(np.array([[4.0, 2.0], [2.0, 5.0]]))
    assert np.allclose(G, np.array([[2.0, 0.0], [1.0, 2.0]]), atol=1e-14)


def test_cholesky_reconstructs_random_spd():
    rng = np.random.default_rng(1)
    B = rng.standard_normal((6, 6))
    S = B @ B.T + 6.0 * np.eye(6)
    G = cholesky(S)
    assert np.allclose(G @ G.T, S, atol=1e-10)
    assert np.allclose(G, np.tril(G))


def test_cholesky_flags_indefinite_pivot():
    with pytest.raises(NotPositiveDefiniteError) as err:
        cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert err.value.pivot_index == 1


# ----------------------------------------------------------------- eigenvalues


def test_jacobi_matches_lapack_routes():
    rng = np.random.default_rng(3)
    B = rng.standard_normal((20, 20))
    S = (B + B.T) / 2.0
    ours = jacobi_eigenvalues(S)
    lapack = np.linalg.eigvalsh(S)
    assert np.allclose(np.sort(ours), np.sort(lapack), atol=1e-10)


def test_jacobi_vectors_reconstruct():
    rng = np.random.default_rng(4)
    B = rng.standard_normal((8, 8))
    S = (B + B.T) / 2.0
    vals, vecs = jacobi_eigenvalues(S, return_vectors=True)
    assert np.allclose(vecs @ np.diag(vals) @ vecs.T, S, atol=1e-9)
    assert np.allclose(vecs.T @ vecs, np.eye(8), atol=1e-10)


def test_jacobi_requires_symmetry():
    with pytest.raises(ValueError):
        jacobi_eigenvalues(np.array([[1.0, 2.0], [0.0, 1.0]]))


# ------------------------------------------------------------------ transforms


def test_empirical_stieltjes_single_point():
    # one eigenvalue at 1: m(i) = 1/(1 - i) = (1 + i)/2
    got = empirical_stieltjes(np.array([1.0]), 1j)
    assert got == pytest.approx((1.0 + 1.0j) / 2.0, abs=1e-15)


def test_mp_stieltjes_square_case_frozen_value():
    got = mp_stieltjes(1.0, 1j)
    assert got.real == pytest.approx(0.3002425902201204, abs=1e-13)
    assert got.imag == pytest.approx(0.6248105338438266, abs=1e-13)


@given(
    c=st.floats(min_value=0.05, max_value=4.0),
    x=st.floats(min_value=-3.0, max_value=8.0),
    y=st.floats(min_value=0.05, max_value=4.0),
)
@settings(max_examples=60, deadline=None)
def test_mp_stieltjes_solves_its_quadratic_in_the_upper_half_plane(c, x, y):
    z = complex(x, y)
    m = mp_stieltjes(c, z)
    assert m.imag > 0.0
    residual = c * z * m * m + (z - (1.0 - c)) * m + 1.0
    assert abs(residual) <= 1e-9 * max(1.0, abs(z) ** 2)


def test_limit_stieltjes_matches_closed_form_on_unit_atom():
    for c in (0.1, 0.5, 1.0, 2.0):
        law = SpectralModel(atoms=((1.0, 1.0),), c=c)
        z = 2.0 + 1.0j
        sv = limit_stieltjes(law, z)
        assert abs(sv.m - mp_stieltjes(c, z)) <= 1e-10
        assert sv.residual <= 1e-12
        assert sv.m.imag > 0.0


def test_limit_stieltjes_rejects_lower_half_plane():
    with pytest.raises(ValueError):
        limit_stieltjes(UNIT, 1.0 - 1.0j)


def test_limit_stieltjes_raises_when_budget_too_small():
    with pytest.raises(ConvergenceError):
        limit_stieltjes(UNIT, 1.0 + 1e-6j, tol=1e-14, max_iter=2)


@given(
    lam2=st.floats(min_value=0.5, max_value=5.0),
    c=st.floats(min_value=0.1, max_value=3.0),
    x=st.floats(min_value=-2.0, max_value=8.0),
)
@settings(max_examples=40, deadline=None)
def test_limit_stieltjes_is_herglotz_on_two_atom_models(lam2, c, x):
    """Any solution must map the upper half-plane into itself with |m| <= 1/Im z."""
    law = SpectralModel(atoms=((1.0, 0.5), (lam2, 0.5)), c=c)
    z = complex(x, 0.7)
    sv = limit_stieltjes(law, z)
    assert sv.m.imag > 0.0
    assert abs(sv.m) <= 1.0 / z.imag + 1e-12
    assert sv.residual <= 1e-12


def test_limit_stieltjes_recovers_from_spurious_damped_root():
    """At c=3, z=0.7i the damped iteration settles on a fixed point with
    Im m < 0; the companion finish must replace it with the true branch."""
    law = SpectralModel(atoms=((1.0, 0.5), (2.0, 0.5)), c=3.0)
    sv = limit_stieltjes(law, 0.7j)
    assert sv.residual <= 1e-12
    # the zero atom alone (mass 1 - 1/c) forces Im m(i eta) >= (1 - 1/c)/eta
    assert sv.m.imag >= (1.0 - 1.0 / 3.0) / 0.7
    assert sv.m.real >= 0.0
    # frozen against an empirical transform at p = 1500 (agreement ~1e-4)
    assert sv.m == pytest.approx(0.09955987968406477 + 0.9865336948933542j, abs=1e-12)


# --------------------------------------------------------------------- density


def test_density_square_case_spot_value():
    got = density_from_stieltjes(SpectralModel(atoms=((1.0, 1.0),), c=1.0), 1.0)
    assert got == pytest.approx(np.sqrt(3.0) / (2.0 * np.pi), abs=5e-3)


def test_density_vanishes_off_support():
    law = UNIT
    # support of the quarter-circle-type law at c=0.5 is [(1-sqrt(.5))^2, (1+sqrt(.5))^2]
    assert density_from_stieltjes(law, 4.0) <= 2e-3
    assert density_from_stieltjes(law, -1.0) <= 2e-3


def test_density_grid_matches_pointwise_solves():
    xs = np.array([0.5, 1.0, 1.5])
    grid = density_grid(UNIT, xs, epsilon=1e-2, tol=1e-9)
    single = [density_from_stieltjes(UNIT, float(x), epsilon=1e-2, tol=1e-9) for x in xs]
    assert np.allclose(grid, single, atol=1e-9)


# ------------------------------------------------------------------- limit CDF


def test_limit_cdf_is_a_distribution_function():
    cdf = limit_cdf(UNIT)
    xs = np.linspace(-1.0, 6.0, 200)
    values = np.array([cdf(float(x)) for x in xs])
    assert np.all(np.diff(values) >= -1e-12)
    assert cdf(-0.5) == 0.0
    assert cdf(6.0) == pytest.approx(1.0, abs=1e-6)


def test_limit_cdf_places_point_mass_at_zero_when_c_exceeds_one():
    cdf = limit_cdf(SpectralModel(atoms=((1.0, 1.0),), c=2.0))
    assert cdf(0.02) >= 0.45  # mass 1 - 1/c = 0.5 sits at the origin
    assert cdf(0.02) <= 0.55


def test_limit_cdf_rejects_nonpositive_atoms():
    with pytest.raises(ValueError):
        limit_cdf(SpectralModel(atoms=((0.0, 0.5), (2.0, 0.5)), c=0.5))


# ------------------------------------------------------------------- distances


def test_kolmogorov_distance_point_mass_vs_uniform():
    esd = np.array([1.0])
    assert kolmogorov_distance(esd, lambda t: min(max(t, 0.0), 1.0)) == pytest.approx(1.0)


def test_kolmogorov_distance_hits_quantile_floor():
    # midpoint quantiles of U[0,1] are the best p-point approximation: the
    # two-sided breakpoint measure gives exactly 1/(2p)
    esd = np.array([0.125, 0.375, 0.625, 0.875])
    got = kolmogorov_distance(esd, lambda t: np.clip(t, 0.0, 1.0))
    assert got == pytest.approx(1.0 / 8.0, abs=1e-15)


# ----------------------------------------------------------- effective spectra


def test_effective_spectral_model_passes_white_noise_through():
    model = GaussianAR1(rho=0.0)
    assert effective_spectral_model(model, TWO_ATOM) == TWO_ATOM


def test_effective_spectral_model_widen_under_serial_dependence():
    model = GaussianAR1(rho=0.5)
    eff = effective_spectral_model(model, UNIT, p_ref=400)
    lams = np.array([lam for lam, _ in eff.atoms])
    wts = np.array([w for _, w in eff.atoms])
    # first moment is preserved (unit trace), second moment grows to
    # (1/p) tr(T^2) -> (1 + rho^2)/(1 - rho^2) = 5/3
    assert float(wts @ lams) == pytest.approx(1.0, abs=1e-10)
    assert float(wts @ lams**2) == pytest.approx(5.0 / 3.0, abs=5e-3)
    assert eff.c == UNIT.c


def test_sample_covariance_matrix_shape_and_psd():
    model = GaussianAR1(rho=0.5)
    S = sample_covariance_matrix(model, TWO_ATOM, 12, 24, seed=6)
    assert S.shape == (12, 12)
    assert np.allclose(S, S.T)
    assert np.min(np.linalg.eigvalsh(S)) >= -1e-12
