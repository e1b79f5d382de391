"""Penalty plus quadratic-transform method for the modified BCRLB (unknown alpha).

Every Fisher-information ratio ``(dU_j x)^H Sigma^{-1} (dU_j x)`` is
replaced by its quadratic transform, which turns each per-alpha
denominator ``D_i(x) = sum_j w_ij FI(eta_j | alpha_i) + FIP_i`` into a
concave quadratic.  The unit-modulus penalty enters every denominator,
``sum_i w_i / (D_i(x) - mu_i ||x - z||^2)``, which keeps the inner problem
convex (reciprocal of a positive concave function) on the domain where
the penalized denominators are positive.  With a single alpha node the
inner argmax coincides with the one of the known-alpha penalty method.
"""

import numpy as np

from ..numerics import real_embed
from ..sensing import build_cache, modified_bcrlb, modified_denominators, sensing_interference_cov
from ..transforms import build_p2_surrogates, sensing_specs, sinr_specs
from .barrier import barrier_minimize, phase_one
from .config import SolverReport, Tracer, is_feasible, project_unit, ratio_slacks
from .pnqt import infeasible_report
from .qcqp import RealQuad, _at_least, to_complex, to_real

__all__ = ["solve_unknown_alpha", "DenominatorSurrogates", "DOMAIN_MARGIN"]

DOMAIN_MARGIN = 1e-9


class DenominatorSurrogates:
    """Concave quadratic lower bounds of every ``D_i`` built at a point ``x_t``.

    ``D_i(x) ~ 2 Re{q_i^H x} - sum_k p_k (H_k x)^H Lam_i (H_k x) + k0_i``.
    """

    def __init__(self, x, prior, cache, scen):
        S = sensing_interference_cov(x, scen, cache)
        V = cache.Udot @ x  # (L, M)
        lam = np.linalg.solve(S, V.T).T  # (L, M)
        a2 = np.abs(prior.alpha_nodes) ** 2
        c = 2 * scen.sensing.power * a2[:, None] * prior.cond_weights  # (S, L)
        self.q = c @ np.einsum("lmn,lm->ln", cache.Udot.conj(), lam)
        self.Lam = np.einsum("il,lm,ln->imn", c, lam, lam.conj())
        lCl = np.real(np.einsum("lm,mn,ln->l", lam.conj(), cache.noise, lam))
        self.k0 = -c @ lCl + prior.fip
        self.w = prior.alpha_weights
        self.H, self.p = scen.H, scen.powers

    def values(self, x):
        h = self.H @ x  # (K, M)
        quad = np.real(np.einsum("k,km,imn,kn->i", self.p, h.conj(), self.Lam, h))
        return 2 * np.real(self.q.conj() @ x) + self.k0 - quad

    def grads(self, x):
        """Rows ``g_i`` with ``dD_i = Re{g_i^H dx}``."""
        h = self.H @ x
        Lh = np.einsum("imn,kn->ikm", self.Lam, h)  # Lam_i h_k
        HLh = np.einsum("k,kmn,ikm->in", self.p, self.H.conj(), Lh)
        return 2 * (self.q - HLh)

    def weighted_curvature(self, coef):
        """``sum_i coef_i P_i`` with ``P_i = sum_k p_k H_k^H Lam_i H_k`` (N x N)."""
        L = np.einsum("i,imn->mn", coef, self.Lam)
        return np.einsum("k,kmn,mp,kpq->nq", self.p, self.H.conj(), L, self.H)

    def objective(self, x):
        return float(np.sum(self.w / self.values(x)))


def _reciprocal_objective(sur, mu, z, N, scale):
    """Real-variable callable for ``sum_i w_i / E_i / scale`` with ``E_i = D_i - mu_i ||x - z||^2``."""
    def values(x):
        d = x - z
        return sur.values(x) - mu * np.real(np.vdot(d, d))

    def f(u, order):
        x = to_complex(u, N)
        E = values(x)
        val = np.sum(sur.w / E) / scale
        if order == 0:
            return val
        G = sur.grads(x)
        d = to_real(x - z)
        Gr = np.concatenate([G.real, G.imag], axis=1) - 2 * mu[:, None] * d[None, :]  # dE_i / du
        coef = sur.w / E**2
        grad = -(coef @ Gr)
        H = 2 * (Gr.T * (sur.w / E**3)) @ Gr + 2 * real_embed(sur.weighted_curvature(coef))
        H = 0.5 * (H + H.T) + 2 * float(coef @ mu) * np.eye(2 * N)
        return val, grad / scale, H / scale
    return f, values


def _penalized_B(x, mu, prior, cache, scen):
    """``sum_i w_i / (D_i(x) - mu_i dist^2)`` in rad^2; ``inf`` off the domain."""
    d = x - project_unit(x)
    E = modified_denominators(x, prior, cache, scen) - mu * float(np.vdot(d, d).real)
    if np.any(E <= 0):
        return np.inf
    return float(np.sum(prior.alpha_weights / E))


def solve_unknown_alpha(scen, prior, cfg, x0, cache=None):
    """Minimize the modified BCRLB over unit-modulus ``x`` under SINR constraints.

    The penalty weights start at ``mu0 * (D_i(x0) - FIP_i)`` and grow by
    ``xi`` per outer phase.  ``objective_trace`` holds the negated penalized
    objective in rad^2 so that it is nondecreasing like the other solvers;
    ``extra["B_trace"]`` holds ``B`` in deg^2.
    """
    if not prior.has_alpha:
        raise ValueError("solve_unknown_alpha needs a prior with alpha nodes")
    cache = cache or build_cache(scen, prior)
    tr = Tracer(cache, scen)
    x = project_unit(x0)
    if not is_feasible(x, cache, scen):
        rep = infeasible_report("unknown-alpha", x, cache, scen, tr)
        rep.bcrlb_final = modified_bcrlb(x, prior, cache, scen)
        return rep
    N = scen.N
    specs = (sensing_specs(cache, scen), sinr_specs(cache, scen))
    gammas = scen.sinr_thresholds
    mu = cfg.mu0 * np.maximum(modified_denominators(x, prior, cache, scen) - prior.fip, 1e-300)
    b_trace, inner_total, damped = [], 0, 0
    status, outer = "max_iter", 0
    for outer in range(cfg.max_outer):
        pen = _penalized_B(x, mu, prior, cache, scen)
        if not np.isfinite(pen):
            break
        tr.record(x, -pen, phase=outer)
        b_trace.append(modified_bcrlb(x, prior, cache, scen))
        for _ in range(cfg.max_inner):
            z = project_unit(x)
            sur = DenominatorSurrogates(x, prior, cache, scen)
            _, pen_values = _reciprocal_objective(sur, mu, z, N, 1.0)
            Dx = pen_values(x)
            if np.any(Dx <= DOMAIN_MARGIN * np.abs(Dx).max()):
                damped += 1
                break
            cons_q = build_p2_surrogates(x, cache, scen, specs)["constraints"]
            u0 = to_real(x)
            obj, _ = _reciprocal_objective(sur, mu, z, N, max(float(np.sum(sur.w / Dx)), 1e-300))
            dmin = DOMAIN_MARGIN * np.abs(Dx).max()

            def domain(u, pen_values=pen_values, dmin=dmin):
                return bool(np.all(pen_values(to_complex(u, N)) > dmin))

            cons = []
            for c, g in zip(cons_q, gammas):
                qc = RealQuad(c)
                cons.append(_at_least(qc, float(g), max(abs(g), abs(qc.value(u0)), 1e-300)))
            if cons and not all(c(u0, 0) < 0 for c in cons) or np.any(np.abs(x) >= 1):
                if cons:
                    u0, s = phase_one(cons, u0, N, domain=domain)
                    if not s < 0:
                        break
                else:
                    u0 = u0 * (1 - 1e-6)
            res = barrier_minimize(obj, cons, u0, N, gap_tol=cfg.kkt_tol, domain=domain)
            inner_total += 1
            xn = to_complex(res.y, N)
            pn = _penalized_B(xn, mu, prior, cache, scen)
            if pn > pen:
                break
            x, prev, pen = xn, pen, pn
            tr.record(x, -pen, phase=outer)
            b_trace.append(modified_bcrlb(x, prior, cache, scen))
            if prev - pen <= cfg.inner_tol * max(abs(pen), 1e-300):
                break
        if np.abs(x - project_unit(x)).max() <= cfg.penalty_tol:
            status = "converged"
            break
        mu *= cfg.xi
    x = project_unit(x)
    B = modified_bcrlb(x, prior, cache, scen)
    return SolverReport(
        method="unknown-alpha", x_final=x, objective_trace=tr.objective,
        constraint_slacks=list(ratio_slacks(x, cache, scen)), bcrlb_final=B,
        iterations={"inner": inner_total, "outer": outer + 1}, wall_time=tr.elapsed(), status=status,
        trace=tr.rows, phases=tr.phases, extra={"B_trace": b_trace, "domain_rebuilds": damped},
    )
