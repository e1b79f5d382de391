"""Benchmark methods: projected gradient on a log-barrier objective, and quantized coordinate search."""

import numpy as np

from ..comm import sinr_all
from ..sensing import bcrlb, grad_A, metric_A
from ..transforms import ratio_grad, sinr_specs
from .config import SolverReport, Tracer, is_feasible, project_unit, ratio_slacks
from .pnqt import infeasible_report

__all__ = ["solve_ipga", "solve_ao", "barrier_objective", "barrier_gradient", "batched_metrics"]


def barrier_objective(x, weight, cache, scen):
    """``A(x) + weight * sum_k log(gamma_k(x) - Gamma)``; ``-inf`` outside the domain."""
    A = metric_A(x, cache, scen)
    if scen.K == 0:
        return A
    gap = sinr_all(x, cache, scen) - scen.sinr_threshold
    if np.any(gap <= 0):
        return -np.inf
    return A + weight * float(np.sum(np.log(gap)))


def barrier_gradient(x, weight, cache, scen, specs=None):
    """Gradient ``g`` of :func:`barrier_objective` with ``dJ = Re{g^H dx}``."""
    g = grad_A(x, cache, scen)
    if scen.K == 0:
        return g
    specs = specs or sinr_specs(cache, scen)
    gap = sinr_all(x, cache, scen) - scen.sinr_threshold
    for k, spec in enumerate(specs):
        g = g + weight * scen.powers[k] * ratio_grad(spec, x) / gap[k]
    return g


def solve_ipga(scen, cache, cfg, x0):
    """Projected gradient ascent on the log-barrier objective.

    The barrier weight starts at ``ipga_barrier0 * A(x0)`` and is multiplied
    by ``ipga_decay`` after each of ``ipga_stages`` stages of ``ipga_iters``
    steps.  Steps use ``x <- exp(j arg(x + s g))`` with backtracking on the
    barrier objective.  Returns the best strictly feasible iterate by ``A``.
    """
    tr = Tracer(cache, scen)
    x = project_unit(x0)
    strict = scen.K == 0 or np.all(sinr_all(x, cache, scen) > scen.sinr_threshold)
    if not strict:
        return infeasible_report("ipga", x, cache, scen, tr)
    specs = sinr_specs(cache, scen)
    A = metric_A(x, cache, scen)
    best_x, best_A = x, A
    weight = cfg.ipga_barrier0 * abs(A)
    tr.record(x, A)
    step0, n_iter = None, 0
    for stage in range(cfg.ipga_stages):
        J = barrier_objective(x, weight, cache, scen)
        for _ in range(cfg.ipga_iters):
            g = barrier_gradient(x, weight, cache, scen, specs)
            gmax = np.abs(g).max()
            if gmax == 0:
                break
            step = step0 if step0 is not None else 0.1 / gmax
            moved = False
            for _ in range(40):
                xn = project_unit(x + step * g)
                Jn = barrier_objective(xn, weight, cache, scen)
                if Jn > J:
                    moved = True
                    break
                step *= 0.5
            n_iter += 1
            if not moved:
                break
            x, J, step0 = xn, Jn, 2 * step
            A = metric_A(x, cache, scen)
            tr.record(x, A, phase=stage)
            if A > best_A:
                best_x, best_A = x, A
        weight *= cfg.ipga_decay
    return SolverReport(
        method="ipga", x_final=best_x, objective_trace=tr.objective,
        constraint_slacks=list(ratio_slacks(best_x, cache, scen)), bcrlb_final=bcrlb(best_x, cache, scen),
        iterations={"inner": n_iter, "outer": cfg.ipga_stages}, wall_time=tr.elapsed(),
        status="converged", trace=tr.rows, phases=tr.phases, extra={"A_final": best_A},
    )


def batched_metrics(x, n, values, cache, scen):
    """``A`` and all SINRs when ``x[n]`` is replaced by each entry of ``values``.

    Returns ``(A, gamma)`` with shapes ``(P,)`` and ``(P, K)``.
    """
    x = np.asarray(x, dtype=complex)
    dv = np.asarray(values, dtype=complex) - x[n]  # (P,)
    M = scen.M
    rx = (cache.R_terms @ x)[None] + dv[:, None, None] * cache.R_terms[None, :, :, n]  # (P, R, M)
    hx = (scen.H @ x)[None] + dv[:, None, None] * scen.H[None, :, :, n]  # (P, K, M)
    so = np.broadcast_to(cache.noise, (dv.size, M, M)).copy()
    if scen.K:
        so += np.einsum("k,pkm,pkn->pmn", scen.powers, hx, hx.conj())
    sol = np.linalg.solve(so, np.swapaxes(rx, 1, 2))  # (P, M, R)
    A = np.einsum("r,prm,pmr->p", cache.kappa, rx.conj(), sol).real
    if scen.K == 0:
        return A, np.zeros((dv.size, 0))
    base = np.broadcast_to(cache.noise, (dv.size, M, M)).copy()
    if cache.interf_kappa.size:
        sx = (cache.interf_terms @ x)[None] + dv[:, None, None] * cache.interf_terms[None, :, :, n]
        base += np.einsum("s,psm,psn->pmn", cache.interf_kappa, sx, sx.conj())
    own = scen.powers[None, :, None, None] * hx[..., :, None] * hx[..., None, :].conj()  # (P, K, M, M)
    full = base + own.sum(axis=1)
    Sk = full[:, None] - own
    sol = np.linalg.solve(Sk, hx[..., None])[..., 0]
    gam = scen.powers * np.einsum("pkm,pkm->pk", hx.conj(), sol).real
    return A, gam


def _quantize(x, levels):
    step = 2 * np.pi / levels
    return np.exp(1j * step * np.round(np.angle(x) / step))


def solve_ao(scen, cache, cfg, x0):
    """Coordinate sweeps over ``2**ao_bits`` phase levels.

    Each coordinate takes the level with the largest ``A`` among those that
    keep every SINR at or above the threshold; a coordinate with no
    feasible level keeps its value.  If the quantized start is infeasible,
    sweeps first maximize the smallest SINR margin until it is feasible.
    Stops when a sweep changes nothing.
    """
    tr = Tracer(cache, scen)
    levels = 2 ** cfg.ao_bits
    cand = np.exp(2j * np.pi * np.arange(levels) / levels)
    if not is_feasible(project_unit(x0), cache, scen):
        return infeasible_report("ao", project_unit(x0), cache, scen, tr)
    x = _quantize(x0, levels)
    thr = scen.sinr_threshold
    for _ in range(cfg.ao_max_sweeps):
        if scen.K == 0 or np.all(sinr_all(x, cache, scen) >= thr):
            break
        changed = False
        for n in range(scen.N):
            _, gam = batched_metrics(x, n, cand, cache, scen)
            margin = gam.min(axis=1)
            i = int(np.argmax(margin))
            if margin[i] > margin[np.argmin(np.abs(cand - x[n]))]:
                x = x.copy()
                x[n] = cand[i]
                changed = True
        if not changed:
            break
    if scen.K and np.any(sinr_all(x, cache, scen) < thr):
        return infeasible_report("ao", x, cache, scen, tr)
    A = metric_A(x, cache, scen)
    tr.record(x, A)
    sweeps = 0
    for sweeps in range(1, cfg.ao_max_sweeps + 1):
        changed = False
        for n in range(scen.N):
            Ac, gam = batched_metrics(x, n, cand, cache, scen)
            ok = np.all(gam >= thr, axis=1) if scen.K else np.ones(levels, bool)
            if not ok.any():
                continue
            Ac = np.where(ok, Ac, -np.inf)
            i = int(np.argmax(Ac))
            if Ac[i] > A * (1 + 1e-12) and cand[i] != x[n]:
                x = x.copy()
                x[n] = cand[i]
                A = metric_A(x, cache, scen)
                tr.record(x, A, phase=sweeps)
                changed = True
        if not changed:
            break
    return SolverReport(
        method="ao", x_final=x, objective_trace=tr.objective, constraint_slacks=list(ratio_slacks(x, cache, scen)),
        bcrlb_final=bcrlb(x, cache, scen), iterations={"inner": len(tr.objective) - 1, "outer": sweeps},
        wall_time=tr.elapsed(), status="converged", trace=tr.rows, phases=tr.phases, extra={"A_final": A},
    )
