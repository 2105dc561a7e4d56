"""Effort-cost families and numeric regularity checks.

A cost model is a marginal cost c(q, theta) plus its integral C(q, theta).
The two closed-form families are linear (C = q*theta) and quadratic
(C = theta*q^2/2); arbitrary marginals are supported with the total obtained
by quadrature.  Regularity of the marginal (signs of its partials) decides
which mechanism guarantees apply, so it is checked numerically, not assumed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import integrate

LINEAR = "linear"
QUADRATIC = "quadratic"
GENERAL = "general"


@dataclass(frozen=True)
class CostModel:
    kind: str
    marginal: Callable   # c(q, theta)
    total: Callable      # C(q, theta) = integral of c from 0 to q
    support: Optional[Tuple[float, float]] = None  # optional theta domain for cost()


def linear_cost(support: Optional[Tuple[float, float]] = None) -> CostModel:
    return CostModel(
        kind=LINEAR,
        marginal=lambda q, theta: np.asarray(theta, float) + 0.0 * np.asarray(q, float),
        total=lambda q, theta: np.asarray(q, float) * np.asarray(theta, float),
        support=support,
    )


def quadratic_cost(support: Optional[Tuple[float, float]] = None) -> CostModel:
    return CostModel(
        kind=QUADRATIC,
        marginal=lambda q, theta: np.asarray(theta, float) * np.asarray(q, float),
        total=lambda q, theta: 0.5 * np.asarray(theta, float) * np.asarray(q, float) ** 2,
        support=support,
    )


def general_cost(marginal: Callable, total: Optional[Callable] = None,
                 support: Optional[Tuple[float, float]] = None) -> CostModel:
    """Cost model from an arbitrary marginal; total by quadrature if omitted."""
    if total is None:
        def total(q, theta, _c=marginal):
            def scalar(qv, tv):
                if qv == 0:
                    return 0.0
                val, _ = integrate.quad(lambda z: _c(z, tv), 0.0, qv,
                                        epsabs=1e-12, epsrel=1e-12, limit=200)
                return val
            return np.vectorize(scalar, otypes=[float])(q, theta)
    return CostModel(kind=GENERAL, marginal=marginal, total=total, support=support)


def cost(model: CostModel, q, theta):
    """Total cost C(q, theta) with domain checks."""
    q_arr = np.asarray(q, dtype=float)
    theta_arr = np.asarray(theta, dtype=float)
    if np.any(q_arr < 0):
        raise ValueError("effort must be >= 0")
    if model.support is not None:
        lo, hi = model.support
        if np.any(theta_arr < lo) or np.any(theta_arr > hi):
            raise ValueError(
                f"cost type outside support [{lo}, {hi}]: {theta}")
    out = model.total(q_arr, theta_arr)
    return float(out) if np.isscalar(q) and np.isscalar(theta) else out


# -- finite differences ------------------------------------------------------

def _step(v: float, rel: float = 1e-6) -> float:
    return rel * max(1.0, abs(v))


def fd_marginal_dq(model: CostModel, q: float, theta: float) -> float:
    h = _step(q)
    return (model.marginal(q + h, theta) - model.marginal(max(q - h, 0.0), theta)) / (
        (q + h) - max(q - h, 0.0))


def fd_marginal_dtheta(model: CostModel, q: float, theta: float) -> float:
    h = _step(theta)
    return (model.marginal(q, theta + h) - model.marginal(q, theta - h)) / (2 * h)


def fd_total_dtheta(model: CostModel, q: float, theta: float) -> float:
    """dC/dtheta by central difference on the total cost."""
    h = _step(theta)
    return (model.total(q, theta + h) - model.total(q, theta - h)) / (2 * h)


def fd_marginal_dtheta2(model: CostModel, q: float, theta: float) -> float:
    h = _step(theta, rel=1e-4)
    return (model.marginal(q, theta + h) - 2.0 * model.marginal(q, theta)
            + model.marginal(q, theta - h)) / h ** 2


def fd_marginal_cross(model: CostModel, q: float, theta: float) -> float:
    hq = _step(q, rel=1e-4)
    ht = _step(theta, rel=1e-4)
    qm = max(q - hq, 0.0)
    return (model.marginal(q + hq, theta + ht) - model.marginal(q + hq, theta - ht)
            - model.marginal(qm, theta + ht) + model.marginal(qm, theta - ht)) / (
        ((q + hq) - qm) * 2 * ht)


# -- regularity report -------------------------------------------------------

@dataclass(frozen=True)
class RegularityReport:
    """Signs of the marginal-cost partials over the sampled grid.

    marginal_in_q_strict asks for dc/dq > 0; linear cost has dc/dq = 0 so it
    only passes the weak (>= 0) version.  The remaining three conditions are
    dc/dtheta > 0, d2c/dtheta2 >= 0 and d2c/(dq dtheta) >= 0.
    """
    marginal_in_q_strict: bool
    marginal_in_q_weak: bool
    marginal_in_theta: bool
    convex_in_theta: bool
    cross_partial: bool
    worst: dict = field(default_factory=dict)

    @property
    def strictly_regular(self) -> bool:
        return (self.marginal_in_q_strict and self.marginal_in_theta
                and self.convex_in_theta and self.cross_partial)

    @property
    def weakly_regular(self) -> bool:
        return (self.marginal_in_q_weak and self.marginal_in_theta
                and self.convex_in_theta and self.cross_partial)


def check_regularity(model: CostModel,
                     theta_range: Tuple[float, float] = (0.05, 1.0),
                     q_max: float = 5.0,
                     n: int = 15,
                     tol: float = 1e-6) -> RegularityReport:
    qs = np.linspace(q_max / n, q_max, n)
    thetas = np.linspace(theta_range[0], theta_range[1], n)
    vals = {"dc_dq": np.inf, "dc_dtheta": np.inf, "d2c_dtheta2": np.inf,
            "d2c_dq_dtheta": np.inf}
    scale = max(1.0, max(abs(float(model.marginal(q, t)))
                         for q in (qs[0], qs[-1]) for t in (thetas[0], thetas[-1])))
    atol = tol * scale
    for q in qs:
        for t in thetas:
            vals["dc_dq"] = min(vals["dc_dq"], fd_marginal_dq(model, q, t))
            vals["dc_dtheta"] = min(vals["dc_dtheta"], fd_marginal_dtheta(model, q, t))
            vals["d2c_dtheta2"] = min(vals["d2c_dtheta2"], fd_marginal_dtheta2(model, q, t))
            vals["d2c_dq_dtheta"] = min(vals["d2c_dq_dtheta"], fd_marginal_cross(model, q, t))
    # second differences see more roundoff than first differences
    atol2 = 100 * atol
    return RegularityReport(
        marginal_in_q_strict=vals["dc_dq"] > atol,
        marginal_in_q_weak=vals["dc_dq"] >= -atol,
        marginal_in_theta=vals["dc_dtheta"] > atol,
        convex_in_theta=vals["d2c_dtheta2"] >= -atol2,
        cross_partial=vals["d2c_dq_dtheta"] >= -atol2,
        worst=vals,
    )


# -- report-sensitivity condition for truthful bidding -----------------------

@dataclass(frozen=True)
class ScheduleConditionReport:
    theta_grid: np.ndarray
    values: np.ndarray        # curvature-weighted sensitivity, needs <= 0
    efforts: np.ndarray
    passes: np.ndarray        # per grid point

    @property
    def ok_where_active(self) -> bool:
        """Pass on every grid point with positive designated effort."""
        active = self.efforts > 0
        return bool(np.all(self.passes[active])) if active.any() else True


def theorem3_condition(model: CostModel, schedule, theta_grid,
                       var0: float = 1.0, tol: float = 1e-6,
                       theta_rest=()) -> ScheduleConditionReport:
    """Check that a lower report never lowers the agent's effective marginal
    cost the wrong way: the curvature-weighted sensitivity

        dc/dtheta(Q(t), t) + 2 c(Q(t), t) Q'(t) / (1/var0 + Q(t))  <=  0

    along the schedule, by finite differences.  This is the quantity whose
    sign drives the truthful-bidding argument; with squared loss the factor
    2/(1/var0 + q) is -hA''/hA' for the agent's posterior risk hA.
    """
    theta_grid = np.asarray(theta_grid, dtype=float)
    prec = 1.0 / var0
    vals = np.empty_like(theta_grid)
    effs = np.empty_like(theta_grid)
    for i, t in enumerate(theta_grid):
        h = _step(t)
        q = schedule.eval(t, theta_rest)
        dq = (schedule.eval(t + h, theta_rest) - schedule.eval(t - h, theta_rest)) / (2 * h)
        c = float(model.marginal(q, t))
        c_t = fd_marginal_dtheta(model, q, t)
        vals[i] = c_t + 2.0 * c * dq / (prec + q)
        effs[i] = q
    scale = max(1.0, np.abs(vals).max())
    return ScheduleConditionReport(theta_grid=theta_grid, values=vals,
                                   efforts=effs, passes=vals <= tol * scale)
