"""Penalty plus quadratic-transform method (bounded-modulus relaxation)."""

import numpy as np

from ..sensing import bcrlb, metric_A
from ..transforms import build_p2_surrogates, sensing_specs, sinr_specs
from .config import SolverReport, Tracer, is_feasible, project_unit, ratio_slacks
from .qcqp import inner_convex_solve

__all__ = ["solve_pnqt", "penalized_objective", "infeasible_report"]


def penalized_objective(x, mu, cache, scen):
    """``A(x) - mu * ||x - exp(j arg x)||^2``."""
    d = x - project_unit(x)
    return metric_A(x, cache, scen) - mu * float(np.vdot(d, d).real)


def infeasible_report(method, x0, cache, scen, tracer):
    return SolverReport(
        method=method, x_final=np.asarray(x0), objective_trace=[], constraint_slacks=list(ratio_slacks(x0, cache, scen)),
        bcrlb_final=bcrlb(x0, cache, scen), iterations={"inner": 0, "outer": 0}, wall_time=tracer.elapsed(),
        status="infeasible-init",
    )


def solve_pnqt(scen, cache, cfg, x0, time_budget=None):
    """Maximize ``A(x)`` under SINR constraints with a growing penalty toward unit modulus.

    Each inner step refreshes ``z = exp(j arg x)`` and the multipliers at the
    current point, then solves the concave QCQP surrogate.  A step is
    accepted only if the penalized objective does not decrease.  With
    ``time_budget`` (seconds) the run stops with status ``max_iter`` once
    the budget is spent and ``extra["budget_hit"]`` is set.
    """
    tr = Tracer(cache, scen)
    x = project_unit(x0)
    if not is_feasible(x, cache, scen):
        return infeasible_report("pnqt", x, cache, scen, tr)
    specs = (sensing_specs(cache, scen), sinr_specs(cache, scen))
    gammas = scen.sinr_thresholds
    mu = cfg.mu0 * max(abs(metric_A(x, cache, scen)), 1e-300)
    a_trace, inner_total, gaps = [], 0, []
    status = "max_iter"
    outer, budget_hit = 0, False
    for outer in range(cfg.max_outer):
        pen = penalized_objective(x, mu, cache, scen)
        tr.record(x, pen, phase=outer)
        a_trace.append(metric_A(x, cache, scen))
        for _ in range(cfg.max_inner):
            z = project_unit(x)
            sur = build_p2_surrogates(x, cache, scen, specs)
            xn, info = inner_convex_solve(
                sur["objective"], sur["constraints"], gammas, mu, z, x_start=x, gap_tol=cfg.kkt_tol)
            inner_total += 1
            gaps.append(float(info["gap"]))
            if info["status"] == "infeasible":
                break
            pn = penalized_objective(xn, mu, cache, scen)
            if pn < pen:
                break
            x, prev, pen = xn, pen, pn
            tr.record(x, pen, phase=outer)
            a_trace.append(metric_A(x, cache, scen))
            if pen - prev <= cfg.inner_tol * max(abs(pen), 1e-300):
                break
            if time_budget is not None and tr.elapsed() >= time_budget:
                budget_hit = True
                break
        if budget_hit:
            break
        if np.abs(x - project_unit(x)).max() <= cfg.penalty_tol:
            status = "converged"
            break
        mu *= cfg.xi
    x = project_unit(x)
    return SolverReport(
        method="pnqt", x_final=x, objective_trace=tr.objective, constraint_slacks=list(ratio_slacks(x, cache, scen)),
        bcrlb_final=bcrlb(x, cache, scen), iterations={"inner": inner_total, "outer": outer + 1},
        wall_time=tr.elapsed(), status=status, trace=tr.rows, phases=tr.phases,
        extra={"A_trace": a_trace, "A_final": metric_A(x, cache, scen), "final_mu": mu, "max_inner_gap": max(gaps, default=0.0),
               "budget_hit": budget_hit},
    )
