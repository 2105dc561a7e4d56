"""World model: prior, type distribution, posterior update, seeded draws."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from copesim import rng
from copesim.costs import linear_cost
from copesim.model import (CostTypeDistribution, GaussianPrior, Scenario,
                           TYPE_CLAMP, draw_observation, draw_world,
                           is_no_observation, posterior_mean_var,
                           principal_bayes_risk, agent_bayes_risk,
                           agent_bayes_risk_deriv)


# -- posterior: hand-evaluated conjugate updates ------------------------------

def test_posterior_no_reports_returns_prior():
    mean, var = posterior_mean_var(GaussianPrior(0.0, 1.0), [])
    assert mean == 0.0 and var == 1.0


def test_posterior_single_unit_report():
    # (0*1 + 2*1)/(1 + 1) = 1, variance 1/2
    mean, var = posterior_mean_var(GaussianPrior(0.0, 1.0), [(2.0, 1.0)])
    assert mean == pytest.approx(1.0)
    assert var == pytest.approx(0.5)


def test_posterior_informative_prior():
    # (1*0.5 + 1*5)/(0.5 + 5) = 1, variance 1/5.5
    mean, var = posterior_mean_var(GaussianPrior(1.0, 2.0), [(1.0, 5.0)])
    assert mean == pytest.approx(1.0)
    assert var == pytest.approx(1.0 / 5.5)


def test_posterior_ignores_zero_effort_reports():
    base = posterior_mean_var(GaussianPrior(0.0, 1.0), [(2.0, 1.0)])
    padded = posterior_mean_var(GaussianPrior(0.0, 1.0),
                                [(99.0, 0.0), (2.0, 1.0), (-5.0, 0.0)])
    assert padded == base


def test_posterior_rejects_negative_effort():
    with pytest.raises(ValueError):
        posterior_mean_var(GaussianPrior(0.0, 1.0), [(1.0, -0.5)])


@given(mu0=st.floats(-5, 5), var0=st.floats(0.1, 10),
       reports=st.lists(st.tuples(st.floats(-10, 10), st.floats(0, 10)),
                        max_size=6))
def test_posterior_precision_adds_and_mean_interpolates(mu0, var0, reports):
    mean, var = posterior_mean_var(GaussianPrior(mu0, var0), reports)
    assert 1.0 / var == pytest.approx(
        1.0 / var0 + sum(q for _, q in reports), rel=1e-12)
    anchors = [mu0] + [y for y, q in reports if q > 0]
    assert min(anchors) - 1e-9 <= mean <= max(anchors) + 1e-9


# -- observations -------------------------------------------------------------

def test_zero_effort_yields_sentinel():
    y = draw_observation(0.3, 0.0, seed=1)
    assert is_no_observation(y)
    assert math.isnan(y)


def test_negative_effort_rejected():
    with pytest.raises(ValueError):
        draw_observation(0.0, -1.0, seed=1)


def test_huge_effort_pins_observation_to_state():
    x = 0.3
    y = draw_observation(x, 1e12, seed=7)
    assert abs(y - x) < 1e-5


def test_unit_effort_noise_variance():
    # y - x = eps/sqrt(1); sample variance of 1e5 draws must sit near 1
    draws = rng.normals(42, 1, rng.NOISE, 100_000)
    spot = [draw_observation(0.0, 1.0, seed=42, offset=k) for k in range(50)]
    assert np.allclose(spot, draws[:50])   # the loop path matches the stream
    assert abs(draws.var(ddof=1) - 1.0) < 0.02


def test_draw_world_is_deterministic_and_clamped():
    scen = Scenario(prior=GaussianPrior(0.0, 1.0),
                    type_dist=CostTypeDistribution.uniform(0.0, 1.0),
                    n_agents=4, cost_model=linear_cost())
    x1, t1 = draw_world(scen, seed=3, trial_index=5)
    x2, t2 = draw_world(scen, seed=3, trial_index=5)
    assert x1 == x2 and np.array_equal(t1, t2)
    assert np.all(t1 >= TYPE_CLAMP) and np.all(t1 <= 1.0)
    x3, _ = draw_world(scen, seed=4, trial_index=5)
    assert x3 != x1


# -- prior and type distribution ----------------------------------------------

def test_prior_requires_positive_variance():
    with pytest.raises(ValueError):
        GaussianPrior(0.0, 0.0)
    assert GaussianPrior(0.0, 4.0).precision == 0.25


def test_uniform_virtual_cost_is_two_theta_minus_lo():
    dist = CostTypeDistribution.uniform(0.2, 1.0)
    theta = np.array([0.3, 0.6, 1.0])
    assert np.allclose(dist.virtual_cost(theta), 2.0 * theta - 0.2)
    assert np.allclose(dist.inverse_hazard(theta), theta - 0.2)


def test_uniform_ppf_cdf_roundtrip():
    dist = CostTypeDistribution.uniform(0.0, 1.0)
    u = np.linspace(0, 1, 11)
    assert np.allclose(dist.cdf(dist.ppf(u)), u)


def test_custom_distribution_power_cdf_accepted():
    dist = CostTypeDistribution.custom(
        0.0, 1.0, cdf=lambda t: np.asarray(t) ** 2,
        pdf=lambda t: 2.0 * np.asarray(t))
    # bisection inverse: F(t) = t^2 so ppf(0.25) = 0.5
    assert float(dist.ppf(0.25)) == pytest.approx(0.5, abs=1e-9)
    assert float(dist.virtual_cost(0.5)) == pytest.approx(0.5 + 0.25, rel=1e-12)


def test_custom_distribution_rejects_log_convex_kink():
    # piecewise-linear cdf whose log-slope jumps up at 0.9: not log-concave
    def cdf(t):
        t = np.asarray(t, dtype=float)
        return np.where(t < 0.9, 0.1 * t, 0.09 + (t - 0.9) * 9.1)

    def pdf(t):
        t = np.asarray(t, dtype=float)
        return np.where(t < 0.9, 0.1, 9.1)

    with pytest.raises(ValueError):
        CostTypeDistribution.custom(0.0, 1.0, cdf=cdf, pdf=pdf)


# -- Bayes risks --------------------------------------------------------------

def test_bayes_risk_closed_forms():
    prior = GaussianPrior(0.0, 2.0)
    assert principal_bayes_risk(prior, [1.0, 0.5]) == pytest.approx(1.0 / 2.0)
    assert agent_bayes_risk(prior, 1.5) == pytest.approx(0.5)
    assert agent_bayes_risk_deriv(prior, 1.5) == pytest.approx(-0.25)


@given(var0=st.floats(0.1, 10), q=st.floats(0, 50))
def test_agent_risk_derivative_matches_finite_difference(var0, q):
    prior = GaussianPrior(0.0, var0)
    h = 1e-5
    fd = (agent_bayes_risk(prior, q + h) - agent_bayes_risk(prior, q)) / h
    assert float(agent_bayes_risk_deriv(prior, q + h / 2)) == pytest.approx(
        fd, rel=1e-6, abs=1e-9)
