"""Closed-form engine: frozen reference values and structural properties.

Reference numbers were frozen from high-trial re-sampling oracles of the
same probabilistic model (see tests/test_montecarlo.py for the live
cross-checks); they guard against silent regressions in the quadrature
reductions.
"""

import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from riscov.analytic import (
    ConditionalCoverage,
    RadialProfile,
    SystemParams,
    cond_coverage,
    cond_coverage_direct,
    cond_coverage_reflected,
    ergodic_coverage,
    eta_cdf,
    mean_los_ris_count,
    p_los,
    reflection_prob,
    sector_boundary_distance,
    sum_rate,
    thinned_ris_density,
    user_rate,
)
from riscov.channel import RadioParams
from riscov.numerics import exp1_scaled

RIS_GRID = (0.0, 1.59e-4, 3.18e-4, 6.37e-4, 9.55e-4, 1.59e-3)

# ergodic coverage at threshold 1 over the reflector-density grid
COVERAGE_GRID = (0.388916, 0.619424, 0.815414, 0.955034, 0.987332, 0.998704)


def test_survival_law_reference(params):
    assert p_los(100.0, params.lambda_b, params.mean_block_len) == (
        pytest.approx(0.219076, abs=2e-6))
    assert p_los(0.0, params.lambda_b, params.mean_block_len) == 1.0


def test_survival_law_vector_form(params):
    d = np.array([0.0, 25.0, 50.0, 100.0])
    vals = p_los(d, params.lambda_b, params.mean_block_len)
    c = 2.0 * params.lambda_b * params.mean_block_len / math.pi
    np.testing.assert_allclose(vals, np.exp(-c * d), rtol=1e-12)


def test_los_decay_rate_property(params):
    assert params.los_decay_rate == pytest.approx(
        2.0 * params.lambda_b * 15.0 / math.pi)


def test_mean_reflector_count_at_center(sparse_params):
    assert mean_los_ris_count(0.0, sparse_params) == (
        pytest.approx(1.09431, abs=2e-4))


def test_reflection_prob_matches_count_exponent(sparse_params):
    # P(at least one) = 1 - exp(-mean count) for a thinned PPP
    for xi in (0.0, 30.0, 70.0):
        lam = mean_los_ris_count(xi, sparse_params)
        assert reflection_prob(xi, sparse_params) == (
            pytest.approx(-math.expm1(-lam), abs=1e-7))


def test_reflection_prob_reference_values(sparse_params):
    # availability thins at the sector boundary distance, so this is a
    # different (smaller) number than the eta-CDF saturation level
    assert reflection_prob(0.0, sparse_params) == (
        pytest.approx(0.66523, abs=2e-4))
    assert reflection_prob(50.0, sparse_params) == (
        pytest.approx(0.607986, abs=2e-5))


def test_reflection_prob_zero_density(params):
    degenerate = replace(params, lambda_r=0.0)
    assert reflection_prob(50.0, degenerate) == 0.0


def test_thinned_density_endpoints(params):
    assert thinned_ris_density(0.0, params) == pytest.approx(params.lambda_r)
    assert thinned_ris_density(200.0, params) < params.lambda_r * 0.4


def test_sector_boundary_distance_geometry():
    # straight ahead from the centre: R; from radius xi toward the
    # edge: R - xi; away from it: R + xi
    assert sector_boundary_distance(0.0, 0.0, 100.0) == pytest.approx(100.0)
    assert sector_boundary_distance(0.0, 40.0, 100.0) == pytest.approx(60.0)
    assert sector_boundary_distance(math.pi, 40.0, 100.0) == (
        pytest.approx(140.0))


@given(st.floats(min_value=0.0, max_value=2.0 * math.pi),
       st.floats(min_value=0.0, max_value=99.0))
def test_sector_boundary_distance_bounds(psi, xi):
    d = float(sector_boundary_distance(psi, xi, 100.0))
    assert 100.0 - xi - 1e-9 <= d <= 100.0 + xi + 1e-9


def test_eta_cdf_basics(sparse_params):
    assert float(eta_cdf(0.0, 50.0, sparse_params)) == 0.0
    sat = 100.0 * (100.0 + 50.0)
    f_sat = float(eta_cdf(sat, 50.0, sparse_params))
    assert f_sat == pytest.approx(0.800218173, abs=2e-6)
    # the min product distance cannot exceed R(R+xi): exactly flat above
    assert float(eta_cdf(10.0 * sat, 50.0, sparse_params)) == (
        pytest.approx(f_sat, abs=1e-9))


def test_eta_cdf_monotone_and_bounded(sparse_params):
    x = np.linspace(0.0, 2.0e4, 60)
    f = eta_cdf(x, 50.0, sparse_params)
    assert np.all((f >= 0.0) & (f <= 1.0))
    assert np.all(np.diff(f) >= -1e-12)


def test_eta_cdf_scalar_array_agree(sparse_params):
    xs = np.array([100.0, 5000.0, 12000.0])
    batch = eta_cdf(xs, 50.0, sparse_params)
    singles = [float(eta_cdf(float(x), 50.0, sparse_params)) for x in xs]
    np.testing.assert_allclose(batch, singles, rtol=1e-12)


def test_cond_coverage_direct_fading_quantile(params):
    # with threshold at the fading median point the answer is exactly 1/2
    radio = params.radio
    t = (math.log(2.0) * radio.n_bs * radio.n_u * radio.p0
         * 10.0 ** radio.alpha / (radio.noise_power * 50.0 ** radio.beta))
    assert cond_coverage_direct(50.0, t, params) == pytest.approx(0.5)


@given(st.floats(min_value=1.0, max_value=99.0))
def test_cond_coverage_direct_decreasing_in_distance(xi):
    params = SystemParams()
    t = 1e13
    near = cond_coverage_direct(xi, t, params)
    far = cond_coverage_direct(min(xi * 1.3, 100.0), t, params)
    assert 0.0 <= far <= near <= 1.0


def test_cond_coverage_reflected_reference(sparse_params):
    val = cond_coverage_reflected(0.0, 1.0, sparse_params)
    assert val == pytest.approx(0.856681, abs=5e-5)


def test_cond_coverage_reflected_zero_density(params):
    degenerate = replace(params, lambda_r=0.0)
    assert cond_coverage_reflected(50.0, 1.0, degenerate) == 0.0


def test_cond_coverage_reflected_wide_threshold_range(sparse_params):
    # the log-domain reduction must stay in [0, 1] and decrease in T
    # across many decades
    prev = 1.0
    for t in (1e-6, 1e0, 1e6, 1e12, 1e15, 1e18, 1e24):
        val = cond_coverage_reflected(50.0, t, sparse_params)
        assert 0.0 <= val <= prev + 1e-9
        prev = val
    assert prev < 1e-6


def test_cond_coverage_split_recomposes(params):
    cc = cond_coverage(50.0, 1.0, params)
    assert isinstance(cc, ConditionalCoverage)
    assert cc.p_direct_assoc + cc.p_reflect_assoc <= 1.0 + 1e-12
    total = (cc.p_direct_assoc * cc.p_cov_direct
             + cc.p_reflect_assoc * cc.p_cov_reflect)
    assert cc.p_cov_total == pytest.approx(total, abs=1e-9)


def test_ergodic_coverage_grid(params):
    for lam_r, expected in zip(RIS_GRID, COVERAGE_GRID):
        point = replace(params, lambda_r=lam_r)
        assert ergodic_coverage(1.0, point) == pytest.approx(
            expected, abs=5e-6), lam_r


def test_ergodic_coverage_monotone_in_threshold(params):
    cov = [ergodic_coverage(t, params) for t in (1e-2, 1.0, 1e12, 1e16)]
    assert all(0.0 <= c <= 1.0 for c in cov)
    assert all(a >= b - 1e-9 for a, b in zip(cov, cov[1:]))


def test_ergodic_coverage_radial_profile_collapses_to_constant(params):
    # a flat tabulated profile must reproduce the scalar-density answer
    flat = RadialProfile(radii=(0.0, 50.0, 100.0),
                         values=(3.18e-3, 3.18e-3, 3.18e-3))
    tabulated = replace(params, lambda_u=flat)
    assert ergodic_coverage(1.0, tabulated) == pytest.approx(
        ergodic_coverage(1.0, params), abs=1e-9)


def test_user_rate_reference_values(params, sparse_params):
    assert user_rate(50.0, params) == pytest.approx(1.067106e10, rel=2e-5)
    assert user_rate(50.0, sparse_params) == pytest.approx(7.226583e9,
                                                           rel=2e-5)


def test_user_rate_no_blockage_closed_form(params):
    """With no blockages every user is served direct with LoS, so the
    ergodic rate is W/ln2 * e^a E1(a), a = noise * xi^beta / (linear gain).
    """
    clear = replace(params, lambda_b=0.0)
    radio = clear.radio
    xi = 50.0
    a = (radio.noise_power * xi ** radio.beta
         / (radio.p0 * 10.0 ** radio.alpha * radio.n_bs * radio.n_u))
    closed = radio.bandwidth_hz / math.log(2.0) * float(exp1_scaled(a))
    assert user_rate(xi, clear) == pytest.approx(closed, rel=1e-3)


def test_user_rate_scales_linearly_in_bandwidth(params):
    doubled = replace(params, radio=RadioParams(bandwidth_hz=4.0e8))
    assert user_rate(50.0, doubled) == pytest.approx(2.0 * user_rate(50.0, params),
                                                     rel=1e-12)


def test_sum_rate_zero_reflectors_beats_nothing(params):
    lean = replace(params, lambda_r=0.0)
    r0 = sum_rate(lean)
    assert r0 > 0.0
    # adding reflectors can only add service paths
    assert sum_rate(params) > r0


def test_input_validation(params):
    with pytest.raises(ValueError):
        cond_coverage(0.0, 1.0, params)
    with pytest.raises(ValueError):
        cond_coverage(50.0, -1.0, params)
    with pytest.raises(ValueError):
        mean_los_ris_count(101.0, params)
    with pytest.raises(ValueError):
        SystemParams(lambda_b=-1.0)
    with pytest.raises(ValueError):
        SystemParams(block_len_min=0.0)
    with pytest.raises(ValueError):
        RadialProfile(radii=(0.0,), values=(1.0,))
    with pytest.raises(ValueError):
        RadialProfile(radii=(0.0, 1.0), values=(1.0, -2.0))


@settings(max_examples=15)
@given(st.floats(min_value=1.0, max_value=100.0),
       st.sampled_from(RIS_GRID))
def test_cond_coverage_total_is_probability(xi, lam_r):
    point = SystemParams(lambda_r=lam_r)
    cc = cond_coverage(xi, 1.0, point)
    assert 0.0 <= cc.p_cov_total <= 1.0
