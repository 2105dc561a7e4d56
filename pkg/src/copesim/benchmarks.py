"""Comparison systems: the integrated (centralized) planner and the
single-belief homogeneous mechanism.

The homogeneous mechanism posts one contract computed as if every agent had
cost type theta_dagger.  Agents respond non-truthfully (their effort solves
their own first-order condition against the posted reward weight), the
principal aggregates reports while wrongly assuming everyone exerted the
designed effort, and she opts out entirely when her exact expected payoff
falls below the no-action baseline.  The opt-out decision is deterministic:
a binomial mixture over the participant count against closed-form / quadrature
type moments, no Monte-Carlo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from . import mechanism
from .agents import optimal_effort_linear, reward_effort_quadratic
from .costs import CostModel, LINEAR, QUADRATIC, cost
from .model import CostTypeDistribution, GaussianPrior, TYPE_CLAMP, principal_bayes_risk


# -- centralized (integrated) planner -----------------------------------------

@dataclass(frozen=True)
class CentralizedSolution:
    efforts: np.ndarray
    W_o: Optional[float] = None   # cubic root, quadratic case only


def centralized_efforts(theta, cost_kind: str, var0: float) -> CentralizedSolution:
    """First-best effort profile for known types: linear cost concentrates all
    effort on the cheapest agent, quadratic cost spreads it through the same
    cubic as the mechanism but with raw instead of virtual costs."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0.0):
        raise ValueError("cost types must be positive")
    prec = 1.0 / var0
    if cost_kind == LINEAR:
        efforts = np.zeros_like(theta)
        winner = int(np.argmin(theta))
        efforts[winner] = max(theta[winner] ** -0.5 - prec, 0.0)
        return CentralizedSolution(efforts=efforts)
    if cost_kind == QUADRATIC:
        b = float(np.sum(1.0 / theta))
        W = float(mechanism.cubic_root(prec, b))
        return CentralizedSolution(efforts=1.0 / (theta * W * W), W_o=W)
    raise ValueError(f"no centralized closed form for cost kind {cost_kind!r}")


def network_profit_bayes(efforts, theta, cost_model: CostModel,
                         prior: GaussianPrior) -> float:
    """Model-implied network profit of an effort profile: minus the
    principal's Bayes risk minus total effort cost."""
    efforts = np.asarray(efforts, dtype=float)
    theta = np.asarray(theta, dtype=float)
    return float(-principal_bayes_risk(prior, efforts)
                 - np.sum(cost(cost_model, efforts, theta)))


# -- homogeneous contract ------------------------------------------------------

@dataclass(frozen=True)
class HomogeneousContract:
    theta_dagger: float
    q_dagger: float
    alpha: float
    beta: float


def homogeneous_contract(theta_dagger: float, n_agents: int, cost_kind: str,
                         var0: float) -> HomogeneousContract:
    """Posted contract under the belief that all N agents share type
    theta_dagger: the per-agent designed effort plus the flat part alpha and
    the squared-error reward weight beta."""
    if theta_dagger <= 0.0:
        raise ValueError("theta_dagger must be positive")
    td = float(theta_dagger)
    prec = 1.0 / var0
    if cost_kind == LINEAR:
        q = max((td ** -0.5 - prec) / n_agents, 0.0)
        alpha = (prec + q) * td * q + td * q
        beta = (prec + q) ** 2 * td
        return HomogeneousContract(td, q, alpha, beta)
    if cost_kind == QUADRATIC:
        # 1/(prec + N q)^2 = theta q; root is below (theta N^2)^(-1/3),
        # exactly there when the prior is uninformative
        q_hi = (td * n_agents ** 2) ** (-1.0 / 3.0)
        if prec == 0.0:
            q = q_hi
        else:
            f = lambda q: 1.0 / (prec + n_agents * q) ** 2 - td * q
            q = brentq(f, 0.0, q_hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)
        alpha = (prec + q) * td * q + 0.5 * td * q ** 2
        beta = (prec + q) ** 2 * td * q
        return HomogeneousContract(td, float(q), alpha, beta)
    raise ValueError(f"no homogeneous contract for cost kind {cost_kind!r}")


def homogeneous_response_batch(theta, contract: HomogeneousContract,
                               cost_kind: str, var0: float
                               ) -> Tuple[np.ndarray, np.ndarray]:
    """(efforts, participate) for an array of true types.  Participation is
    decided on the exact expected payoff alpha - beta/(1/var0+q) - C(q,theta)
    at the agent's own optimal effort."""
    theta = np.asarray(theta, dtype=float)
    prec = 1.0 / var0
    beta = contract.beta
    if cost_kind == LINEAR:
        q = optimal_effort_linear(beta, theta, prec)
        c = theta * q
    elif cost_kind == QUADRATIC:
        q = reward_effort_quadratic(beta, theta, prec)
        c = 0.5 * theta * q ** 2
    else:
        raise ValueError(f"no homogeneous response for cost kind {cost_kind!r}")
    with np.errstate(divide="ignore"):
        risk = np.where(prec + q > 0.0, 1.0 / (prec + q), np.inf)
    payoff = contract.alpha - beta * risk - c
    # quadratic contracts bind exactly at theta_dagger; an indifferent agent
    # participates, so absorb the rounding residue of the zero payoff
    tol = 1e-9 * max(1.0, abs(contract.alpha))
    return q, payoff >= -tol


def homogeneous_agent_response(theta: float, contract: HomogeneousContract,
                               cost_kind: str, var0: float
                               ) -> Tuple[float, bool]:
    q, take = homogeneous_response_batch(np.array([theta]), contract,
                                         cost_kind, var0)
    return float(q[0]), bool(take[0])


def homogeneous_predict(contract: HomogeneousContract, reports, prior:
                        GaussianPrior, n_denominator: Optional[int] = None
                        ) -> float:
    """Principal's aggregate under the (wrong) assumption that every
    participant exerted q_dagger: un-shrink each report as if it were a
    posterior mean at effort q_dagger, then average at the assumed precision.
    The denominator uses the participant count unless n_denominator is given.
    """
    reports = np.asarray(reports, dtype=float)
    q = contract.q_dagger
    if q <= 0.0 or reports.size == 0:
        return prior.mu0
    prec = prior.precision
    g = reports + (reports - prior.mu0) * (prec / q)
    d = reports.size if n_denominator is None else int(n_denominator)
    return float((prior.mu0 * prec + q * g.sum()) / (prec + d * q))


# -- principal's exact expected payoff and the opt-out decision ----------------

def _participation_threshold(contract: HomogeneousContract,
                             type_dist: CostTypeDistribution, var0: float,
                             cost_kind: str) -> float:
    """Largest type that still participates (payoff is decreasing in type,
    then constant once the linear response clamps at zero)."""
    lo, hi = type_dist.theta_lo, type_dist.theta_hi
    prec = 1.0 / var0
    alpha, beta = contract.alpha, contract.beta
    if cost_kind == QUADRATIC:
        # alpha is built to make the type-theta_dagger payoff exactly zero
        return float(np.clip(contract.theta_dagger, lo, hi))
    # linear: payoff = alpha - 2 sqrt(beta t) + t/var0 while the response is
    # positive (t < beta var0^2), then constant alpha - beta var0
    lo_eval = max(lo, TYPE_CLAMP)
    u_live = lambda t: alpha - 2.0 * math.sqrt(beta * t) + t * prec
    edge = min(beta * var0 * var0, hi) if prec > 0 else hi
    if edge <= lo_eval:
        return hi if alpha - beta * var0 >= 0.0 else lo
    if u_live(lo_eval) < 0.0:
        return lo
    if u_live(edge) >= 0.0:
        if edge >= hi:
            return hi
        return hi if alpha - beta * var0 >= 0.0 else edge
    return float(brentq(u_live, lo_eval, edge, xtol=1e-15, maxiter=200))


def _participating_moments(contract: HomogeneousContract,
                           type_dist: CostTypeDistribution, var0: float,
                           cost_kind: str, theta_star: float, n_nodes: int
                           ) -> Tuple[float, float, float, float]:
    """Conditional moments of the participating types: E[b], E[b^2], E[w],
    E[hA] with b = q/(prec+q), w = q/(prec+q)^2, hA = 1/(prec+q) at the
    agent's own best-response effort."""
    prec = 1.0 / var0
    lo = max(type_dist.theta_lo, TYPE_CLAMP)
    x, wts = mechanism._gauss_legendre(n_nodes)
    # the linear response kinks where it clamps at zero; split there
    segments = [(lo, theta_star)]
    if cost_kind == LINEAR and prec > 0:
        edge = contract.beta * var0 * var0
        if lo < edge < theta_star:
            segments = [(lo, edge), (edge, theta_star)]
    num_b = num_b2 = num_w = num_h = mass = 0.0
    for a, b_end in segments:
        if b_end <= a:
            continue
        mid, half = 0.5 * (a + b_end), 0.5 * (b_end - a)
        t = mid + half * x
        q, _ = homogeneous_response_batch(t, contract, cost_kind, var0)
        pdf = type_dist.pdf(t)
        with np.errstate(divide="ignore"):
            inv = np.where(prec + q > 0.0, 1.0 / (prec + q), np.inf)
        b_val = q * inv
        w_val = q * inv * inv
        num_b += half * np.sum(wts * pdf * b_val)
        num_b2 += half * np.sum(wts * pdf * b_val ** 2)
        num_w += half * np.sum(wts * pdf * w_val)
        num_h += half * np.sum(wts * pdf * inv)
        mass += half * np.sum(wts * pdf)
    if mass <= 0.0:
        return 0.0, 0.0, 0.0, var0
    return num_b / mass, num_b2 / mass, num_w / mass, num_h / mass


def homogeneous_expected_payoff(contract: HomogeneousContract,
                                type_dist: CostTypeDistribution,
                                prior: GaussianPrior, n_agents: int,
                                cost_kind: str,
                                n_denominator: Optional[int] = None,
                                n_nodes: int = 200) -> float:
    """Exact ex-ante expected payoff of running the homogeneous mechanism:
    minus the expected squared prediction error (binomial mixture over the
    participant count, Gaussian quadrature over the participating-type
    moments) minus the expected payments.  No Monte-Carlo anywhere."""
    var0 = prior.var0
    prec = prior.precision
    q_dag = contract.q_dagger
    if q_dag <= 0.0:
        return -var0
    theta_star = _participation_threshold(contract, type_dist, var0, cost_kind)
    p = float(np.clip(type_dist.cdf(theta_star), 0.0, 1.0))
    if p <= 0.0:
        return -var0
    eb, eb2, ew, eh = _participating_moments(contract, type_dist, var0,
                                             cost_kind, theta_star, n_nodes)
    # expected squared error given m participants; the predictor weight
    # c_m = (q_dag + prec)/(prec + D q_dag) comes from un-shrinking at q_dag
    def err(m: int) -> float:
        if m == 0:
            return var0
        d = m if n_denominator is None else n_denominator
        c = (q_dag + prec) / (prec + d * q_dag)
        shape = 1.0 - 2.0 * c * m * eb + c * c * (m * (eb2 - eb * eb)
                                                  + m * m * eb * eb)
        return var0 * shape + c * c * m * ew
    mse = sum(math.comb(n_agents, m) * p ** m * (1.0 - p) ** (n_agents - m)
              * err(m) for m in range(n_agents + 1))
    payments = n_agents * p * (contract.alpha - contract.beta * eh)
    return float(-mse - payments)


def homogeneous_fallback(contract: HomogeneousContract,
                         type_dist: CostTypeDistribution,
                         prior: GaussianPrior, n_agents: int, cost_kind: str,
                         n_denominator: Optional[int] = None
                         ) -> Tuple[bool, float]:
    """Deterministic opt-out decision: run the mechanism unless its exact
    expected payoff is strictly below the no-action baseline -var0 (predict
    the prior mean, pay nothing)."""
    value = homogeneous_expected_payoff(contract, type_dist, prior, n_agents,
                                        cost_kind, n_denominator)
    return value >= -prior.var0, value
