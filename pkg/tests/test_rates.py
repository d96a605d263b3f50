from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from avgcase.rates import (
    fit_slope,
    gcm_avg_exponent,
    gcm_heatmap,
    gcm_worst_exponent,
    gd_avg_exponent,
    gd_beta_closed_form,
    laguerre_closed_form,
    laguerre_exponent,
    nesterov_avg_exponent,
    optimal_exponent,
    table2,
)

H = Fraction(1, 2)


def test_table_values_exact():
    smooth = table2(H, H)
    mp = table2(H, -H)
    expected = {
        "gcm(alpha=1/2,beta=5/2)": (-5, -3),
        "gcm(alpha=1/2,beta=3/2)": (-4, -3),
        "nesterov": (-4, -3),
        "gd": (-2.5, -1.5),
    }
    for key, (a, b) in expected.items():
        assert smooth[key].exponent == a
        assert mp[key].exponent == b
    assert mp["nesterov"].log_factor and not smooth["nesterov"].log_factor
    assert not any(r.log_factor for k, r in mp.items() if k != "nesterov")


def test_gcm_branches():
    # bulk: alpha < tau + 1/2, beta < xi + 3/2
    r = gcm_avg_exponent(0, 0.5, 0.5, 0.5)
    assert (r.exponent, r.regime) == (-2.0, "bulk")
    r = gcm_avg_exponent(1, 2, 0.5, 0.5)
    assert r.log_factor and r.regime == "critical" and r.exponent == -5
    r = gcm_avg_exponent(1, 1, 0.5, 0.5)
    assert r.regime == "edge-boundary" and not r.log_factor
    r = gcm_avg_exponent(3, 0, 0.5, 0.5)
    assert r.regime == "edge" and r.exponent == 2 * (3 - 0 - 0.5 - 1)


def test_gradient_objective_shifts_thresholds():
    assert gcm_avg_exponent(H, Fraction(5, 2), H, H, 2).regime == "bulk"
    assert gcm_avg_exponent(1, 3, H, H, 2).log_factor


def test_near_equal_parameters_are_flagged():
    r = gcm_avg_exponent(1 + 1e-13, 2, 0.5, 0.5)
    assert r.regime == "critical~"
    with pytest.raises(ValueError):
        gcm_avg_exponent(float("nan"), 1, 0.5, 0.5)


def test_objective_must_be_one_or_two():
    with pytest.raises(ValueError):
        gcm_avg_exponent(0, 0, 0, 0, 0)
    with pytest.raises(ValueError):
        nesterov_avg_exponent(0, 3)


def test_worst_case_branches():
    assert gcm_worst_exponent(H, Fraction(3, 2)).exponent == -2
    assert gcm_worst_exponent(H, Fraction(3, 2)).regime == "lower-bound"
    assert gcm_worst_exponent(-H, -H).exponent == 0
    assert gcm_worst_exponent(-H, -H).regime == "unbalanced"
    r = gcm_worst_exponent(Fraction(-3, 4), Fraction(1, 4))
    assert (r.exponent, r.regime) == (-1.5, "low-beta")
    assert gcm_worst_exponent(3, 1).exponent == 4
    assert gcm_worst_exponent(H, Fraction(5, 2), 2).exponent == -4


def test_nesterov_and_gd():
    assert nesterov_avg_exponent(-0.8).exponent == pytest.approx(-2.4)
    assert nesterov_avg_exponent(1).exponent == -4.5
    assert nesterov_avg_exponent(H, 2).exponent == -5
    assert gd_avg_exponent(0, 2).exponent == -3
    assert laguerre_exponent(0).exponent == -2
    with pytest.raises(ValueError):
        laguerre_exponent(-1)


def test_optimal_tuning():
    rs, (alpha, beta) = optimal_exponent(-H, 1, H)
    assert rs.exponent == -3 and (alpha, beta) == (H, 1.5)
    assert optimal_exponent(H, 2)[0].exponent == -7


@settings(max_examples=200, deadline=None)
@given(
    a=st.fractions(-1, 4, max_denominator=40),
    b=st.fractions(-1, 4, max_denominator=40),
    tau=st.sampled_from([H, -H, Fraction(0), Fraction(3, 2)]),
    xi=st.sampled_from([H, -H, Fraction(0), Fraction(-3, 4)]),
    l=st.sampled_from([1, 2]),
)
def test_no_tuning_beats_the_optimum(a, b, tau, xi, l):
    best = optimal_exponent(xi, l, tau)[0].exponent
    r = gcm_avg_exponent(a, b, tau, xi, l)
    assert r.exponent >= best


def test_heatmap_lattice():
    alphas, betas, exps, logs = gcm_heatmap(H, -H, n=100)
    assert len(alphas) == 100 and alphas[0] == pytest.approx(-0.95) and alphas[-1] == 4
    i, j = list(alphas).index(0.5), list(betas).index(1.5)
    assert exps[i, j] == exps.min() == -3
    assert logs[list(alphas).index(1.0), list(betas).index(1.0)]


@pytest.mark.parametrize("tau,xi,l", [(0.5, 0.5, 1), (0.5, -0.5, 0), (0, 0, 2), (-0.5, 0.5, 1)])
@pytest.mark.parametrize("t", [0, 1, 10, 100])
def test_gd_closed_form_against_numerical_integral(tau, xi, l, t):
    f = lambda u: (1 - u) ** (2 * t + tau) * u ** (xi + l)
    ref, _ = integrate.quad(f, 0, 1, epsabs=0, epsrel=1e-12, limit=400)
    assert gd_beta_closed_form(t, tau, xi, l) == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("alpha", [0, 1, 0.5, 2.5])
def test_laguerre_closed_form_is_inverse_binomial(alpha):
    for t in (0, 1, 5, 50):
        assert laguerre_closed_form(t, alpha) == pytest.approx(1 / special.binom(t + alpha + 2, t), rel=1e-12)


def test_fit_slope_recovers_power_laws():
    t = np.arange(0, 2001, dtype=float)
    v = 3.0 * np.maximum(t, 1) ** -2.5
    fit = fit_slope(v)
    assert fit.slope == pytest.approx(-2.5, abs=1e-12)
    assert fit.window == (1301, 2000) and not fit.shrunk
    with np.errstate(divide="ignore"):
        v = np.maximum(t, 2) ** -3.0 * np.log(np.maximum(t, 2))
    assert fit_slope(v, include_log=True).slope == pytest.approx(-3.0, abs=1e-9)
    assert fit_slope(v).slope > -3.0


def test_fit_slope_shrinks_short_windows():
    v = np.arange(1, 102, dtype=float) ** -1.0
    fit = fit_slope(v, window_len=700)
    assert fit.shrunk and fit.window == (51, 100)
    with pytest.raises(ValueError):
        fit_slope([1.0, 0.5])
    with pytest.raises(ValueError):
        fit_slope(np.r_[np.ones(10), 0.0])
