import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qisdensity.bitdensity import PgModel, Quantizer, bit_density, gaussian_cdf_terms, residue_direct
from qisdensity.bounds import (
    TABLE1_ALPHAS,
    IntegerThetaConfig,
    Tolerance,
    integer_theta_residue,
    pwl_cdf_build,
    pwl_cdf_eval,
    sigma_max_coarse,
    sigma_max_general_q,
    sigma_max_theorem1,
    sigma_range_search,
    table1,
)
from qisdensity.special import phi_cdf

from oracles import density_mp, ideal_mp

# printed values, relative error alpha -> upper bound sigma
REFERENCE_TABLE = {
    1e-3: 0.5550, 1e-4: 0.4419, 1e-5: 0.3768, 1e-6: 0.3335, 1e-7: 0.3021,
    1e-8: 0.2781, 1e-9: 0.2589, 1e-10: 0.2432, 1e-11: 0.2299, 1e-12: 0.2187,
}


@pytest.mark.parametrize("alpha", [0.0, 0.5, -1e-3, 0.7])
def test_tolerance_invariant(alpha):
    with pytest.raises(ValueError):
        Tolerance(alpha)


# --- k=2 bound and tolerance table ----------------------------------------

@pytest.mark.parametrize("alpha,sigma", [(1e-4, 0.4419), (1e-3, 0.5550), (1e-12, 0.2187)])
def test_sigma_max_theorem1(alpha, sigma):
    assert sigma_max_theorem1(alpha) == pytest.approx(sigma, abs=5e-4)
    assert sigma_max_theorem1(Tolerance(alpha)) == sigma_max_theorem1(alpha)


def test_sigma_max_theorem1_decreases_with_alpha():
    s = [sigma_max_theorem1(a) for a in TABLE1_ALPHAS]
    assert np.all(np.diff(s) < 0)


def test_sigma_max_theorem1_domain():
    # 1 - alpha D*/P(2) <= 0 once alpha >= P(2)/D* = 0.291
    with pytest.raises(ValueError):
        sigma_max_theorem1(0.3)


def test_table1_full():
    rows = table1(list(REFERENCE_TABLE))
    assert [a for a, _ in rows] == list(REFERENCE_TABLE)
    for alpha, sigma in rows:
        assert sigma == pytest.approx(REFERENCE_TABLE[alpha], abs=5e-4)


def test_table1_singleton_and_empty():
    [(alpha, sigma)] = table1([1e-4])
    assert alpha == 1e-4 and sigma == pytest.approx(0.4419, abs=5e-4)
    assert table1([]) == []


def test_table1_propagates_row_errors():
    with pytest.raises(ValueError):
        table1([1e-3, 0.6])


@pytest.mark.parametrize("alpha", [1e-3, 1e-4, 1e-6])
def test_k2_bound_is_tight(alpha):
    sigma = sigma_max_theorem1(alpha)
    res = bit_density(PgModel(1.0, sigma), Quantizer(0.5))
    assert res.residue / res.d_star == pytest.approx(alpha, rel=0.1)


def test_k_ge_3_cutoff():
    # the cutoff 0.8090 is 2.5 / Phi^-1(0.999)
    for sigma in np.linspace(0.01, 0.8090, 200):
        for k in range(3, 12):
            assert phi_cdf((k - 0.5) / sigma) >= 0.999


# --- piecewise-linear CDF and coarse bound --------------------------------

def test_pwl_breakpoints_at_coarse_sigma():
    pwl = pwl_cdf_build(0.5, 1 / math.sqrt(2 * math.pi))
    assert pwl.u == pytest.approx(1.0, abs=1e-15)
    assert pwl.ell == pytest.approx(0.0, abs=1e-15)


def test_pwl_slope_matches_finite_difference():
    pwl = pwl_cdf_build(0.5, 0.2)
    h = 1e-6
    fd = (phi_cdf(h / 0.2) - phi_cdf(-h / 0.2)) / (2 * h)
    assert pwl.a == pytest.approx(1.99471, abs=1e-5)
    assert pwl.a == pytest.approx(fd, rel=1e-8)


def test_pwl_invariants():
    for q in (-1.0, 0.5, 9.5):
        for s in (0.05, 0.2, 1.3):
            pwl = pwl_cdf_build(q, s)
            assert pwl.ell < q < pwl.u and pwl.a > 0
            assert abs(pwl.a * q + pwl.b - 0.5) <= 1e-14
            assert pwl_cdf_eval(pwl, q) == 0.5


def test_pwl_eval_branches_and_continuity():
    pwl = pwl_cdf_build(0.5, 0.2)
    assert pwl_cdf_eval(pwl, pwl.ell - 1) == 0.0
    assert pwl_cdf_eval(pwl, pwl.u + 1) == 1.0
    for edge, value in ((pwl.ell, 0.0), (pwl.u, 1.0)):
        assert abs(pwl_cdf_eval(pwl, edge) - value) <= 1e-12
        assert abs(pwl.a * edge + pwl.b - value) <= 1e-12


def test_pwl_max_deviation_from_phi():
    # dense-grid oracle: the gap peaks at the breakpoints, 1 - Phi(0.5 sqrt(2 pi))
    pwl = pwl_cdf_build(0.5, 0.2)
    k = np.linspace(pwl.ell, pwl.u, 200001)
    gap = np.max(np.abs(pwl_cdf_eval(pwl, k) - phi_cdf((k - 0.5) / 0.2)))
    assert gap == pytest.approx(0.10505, abs=1e-5)
    assert gap == pytest.approx(1 - phi_cdf(0.5 * math.sqrt(2 * math.pi)), abs=1e-9)


@given(st.floats(-5, 5), st.floats(0.01, 3), st.lists(st.floats(-20, 20), min_size=2, max_size=30))
@settings(max_examples=200, deadline=None)
def test_pwl_monotone_and_bounded(q, sigma, ks):
    pwl = pwl_cdf_build(q, sigma)
    ks = np.sort(np.array(ks))
    v = pwl_cdf_eval(pwl, ks)
    assert np.all((v >= 0) & (v <= 1))
    assert np.all(np.diff(v) >= 0)


@pytest.mark.parametrize("sigma", [0.0, -0.1])
def test_pwl_build_domain(sigma):
    with pytest.raises(ValueError):
        pwl_cdf_build(0.5, sigma)


def test_sigma_max_coarse():
    assert sigma_max_coarse() == pytest.approx(0.39894, abs=1e-5)
    assert sigma_max_coarse() < sigma_max_theorem1(1e-4)
    res = bit_density(PgModel(1.0, sigma_max_coarse()), Quantizer(0.5))
    assert res.residue / res.d_star <= 1e-4


# --- general q ------------------------------------------------------------

def test_general_q_example():
    assert sigma_max_general_q(0.2, 0.001) == pytest.approx(0.0647, abs=5e-4)
    assert sigma_max_general_q(0.8, 0.001) == pytest.approx(sigma_max_general_q(0.2, 0.001),
                                                           abs=1e-15)


def test_general_q_at_half():
    from oracles import bisect, phi_quad
    z = bisect(phi_quad, 0.0, 10.0, 0.999, iters=80)
    assert sigma_max_general_q(0.5, 0.001) == pytest.approx(0.5 / z, abs=1e-9)
    assert sigma_max_general_q(0.5, 0.001) == pytest.approx(0.1618, abs=5e-4)


@given(st.floats(0.01, 0.99), st.sampled_from([1e-2, 1e-3, 1e-6]))
@settings(max_examples=100, deadline=None)
def test_general_q_symmetric(q, alpha):
    assert sigma_max_general_q(q, alpha) == pytest.approx(sigma_max_general_q(1 - q, alpha),
                                                         rel=1e-12)


@pytest.mark.parametrize("q", [0.0, 1.0, -0.5, 1.5])
def test_general_q_domain(q):
    with pytest.raises(ValueError):
        sigma_max_general_q(q, 0.001)


# --- sigma range search ---------------------------------------------------

def test_sigma_range_at_symmetric_point():
    res = sigma_range_search(1.0, 0.5, 1e-4)
    alpha_d_star = 1e-4
    # the criterion holds at the result and fails just above it
    d = bit_density(PgModel(1.0, res.sigma), Quantizer(0.5))
    assert abs(d.residue) / d.d_star <= alpha_d_star
    d2 = bit_density(PgModel(1.0, res.sigma * (1 + 1e-3)), Quantizer(0.5))
    assert abs(d2.residue) / d2.d_star > alpha_d_star
    assert res.sigma == pytest.approx(0.44188, abs=1e-5)


def test_sigma_range_off_center_is_smaller():
    assert sigma_range_search(1.0, 0.3, 1e-4).sigma < sigma_range_search(1.0, 0.5, 1e-4).sigma


def test_sigma_range_alpha_1e3_exceeds_table_value():
    assert sigma_range_search(1.0, 0.5, 1e-3).sigma >= 0.5550 - 5e-4


def test_sigma_range_first_exit_for_non_monotone_error():
    # for q = 0.3 the error dips back below alpha near sigma = 1; the search must stop early
    res = sigma_range_search(1.0, 0.3, 1e-4)
    assert res.method == "grid"
    assert res.sigma < 0.1
    q = Quantizer(0.3)
    for s in np.linspace(1e-6, res.sigma, 50):
        r = bit_density(PgModel(1.0, float(s)), q)
        assert abs(r.residue) / r.d_star <= 1e-4


def test_sigma_range_against_mpmath_boundary():
    # exact relative error at the returned sigma and 0.1% above it
    res = sigma_range_search(1.0, 0.2, 1e-4)
    for s, ok in ((res.sigma, True), (res.sigma * 1.001, False)):
        err = abs(density_mp(1.0, 0.2, s) - ideal_mp(1.0, 0.2)) / ideal_mp(1.0, 0.2)
        assert (err <= 1e-4) is ok


def test_sigma_range_floor_flag():
    # q = 0 puts an integer exactly on the threshold; any noise moves half its mass
    res = sigma_range_search(1.0, 0.0, 1e-4)
    assert res.at_floor and res.sigma == 0.0


def test_sigma_range_requires_positive_ideal_density():
    with pytest.raises(ValueError):
        sigma_range_search(0.0, 0.5, 1e-4)


def test_sigma_range_shape():
    qs = np.round(np.arange(1, 10) / 10, 12)
    r = [sigma_range_search(1.0, float(q), 1e-4).sigma for q in qs]
    assert int(np.argmax(r)) == 4
    for i in range(4):
        assert abs(r[i] - r[8 - i]) <= 2e-3


# --- integer theta --------------------------------------------------------

def test_integer_theta_config():
    cfg = IntegerThetaConfig.from_theta(10)
    assert (cfg.q, cfg.q_bar, cfg.q_under) == (9.5, 10, 9)
    with pytest.raises(ValueError):
        IntegerThetaConfig(theta=10, q=9.0, q_bar=10, q_under=9)
    with pytest.raises(ValueError):
        IntegerThetaConfig.from_theta(0)


def test_integer_theta_residue_theta10():
    cfg = IntegerThetaConfig.from_theta(10)
    oracle = float(density_mp(10, 9.5, 0.8) - ideal_mp(10, 9.5))
    assert abs(oracle) <= 1e-4
    assert integer_theta_residue(cfg, 0.8) == pytest.approx(oracle, abs=1e-14)


def test_integer_theta_residue_zero_noise():
    assert integer_theta_residue(IntegerThetaConfig.from_theta(10), 0.0) == 0.0


def test_integer_theta_residue_sign_convention():
    cfg = IntegerThetaConfig.from_theta(1)
    direct = residue_direct(PgModel(1.0, 0.3), Quantizer(0.5))
    assert integer_theta_residue(cfg, 0.3) == pytest.approx(-direct, abs=1e-14)


@pytest.mark.parametrize("theta", [1, 2, 3, 10, 25])
@pytest.mark.parametrize("sigma", [0.1, 0.4, 0.8, 1.5])
def test_gaussian_cdf_pairing(theta, sigma):
    cfg = IntegerThetaConfig.from_theta(theta)
    for ell in (0, 1, 2):
        g_hi, g_lo = gaussian_cdf_terms([cfg.q_bar + ell, cfg.q_under - ell], cfg.q, sigma)
        assert abs(g_hi + g_lo - 1.0) <= 1e-14
