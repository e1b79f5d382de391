"""Dual of the constant-modulus linear program.

The primal is ``max 2 Re{x^H d_0} + c_0`` over unit-modulus ``x`` subject to
``2 Re{x^H d_k} + c_k >= Gamma_k``.  Its dual function is
``g(nu) = 2 ||s(nu)||_1 + c_0 + sum_k nu_k (c_k - Gamma_k)`` with
``s(nu) = d_0 + sum_k nu_k d_k`` and primal recovery ``x = exp(j arg s)``.
"""

import numpy as np

from .config import project_unit

__all__ = ["DualProblem", "dual_lp_solve"]


class DualProblem:
    """Dual function of a normalized problem.  Each constraint row is divided by its own scale."""

    def __init__(self, objective, constraints, gammas):
        self.d0 = np.asarray(objective.d, dtype=complex)
        self.c0 = float(objective.const)
        K = len(constraints)
        N = self.d0.size
        D = np.zeros((N, K), complex)
        c = np.zeros(K)
        for k, s in enumerate(constraints):
            D[:, k] = s.d
            c[k] = s.const
        g = np.asarray(gammas, dtype=float).reshape(K)
        self.scale = np.array([2 * np.abs(D[:, k]).sum() + abs(c[k]) + abs(g[k]) for k in range(K)])
        self.scale = np.where(self.scale > 0, self.scale, 1.0)
        self.D = D / self.scale
        self.b = (c - g) / self.scale  # c_k - Gamma_k, normalized
        self.obj_scale = max(2 * np.abs(self.d0).sum() + abs(self.c0), 1e-300)
        self.K, self.N = K, N

    def s(self, nu):
        return self.d0 + self.D @ nu

    def value(self, nu):
        return float(2 * np.abs(self.s(nu)).sum() + self.c0 + self.b @ nu)

    def grad(self, nu):
        s = self.s(nu)
        u = project_unit(s)
        return 2 * np.real(u.conj() @ self.D) + self.b

    def hess(self, nu):
        s = self.s(nu)
        a = np.maximum(np.abs(s), 1e-300)
        u = project_unit(s)
        T = np.imag(u.conj()[:, None] * self.D)  # tangential components, (N, K)
        return 2 * (T.T / a) @ T

    def constraint_values(self, x):
        """Normalized ``f_k(x) - Gamma_k`` for unit-modulus ``x``."""
        return 2 * np.real(x.conj() @ self.D) + self.b

    def unscale(self, nu):
        return nu / self.scale


def _bisect_coordinate(P, nu, k, tol):
    d = P.grad(nu)[k]
    if d >= 0 and nu[k] == 0:
        return nu
    lo, hi = 0.0, max(nu[k], 1e-12 * P.obj_scale)
    e = nu.copy()
    e[k] = hi
    while P.grad(e)[k] < 0:
        lo, hi = hi, 2 * hi
        e[k] = hi
        if hi > 1e30 * P.obj_scale:
            return e
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        e[k] = mid
        if P.grad(e)[k] < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(hi, 1e-300):
            break
    e[k] = 0.5 * (lo + hi)
    return e


def _proj_grad_norm(P, nu):
    g = P.grad(nu)
    return float(np.abs(np.where(nu > 0, g, np.minimum(g, 0.0))).max())


def _projected_newton(P, nu, tol, max_iter=60):
    K = P.K
    for _ in range(max_iter):
        g = P.grad(nu)
        pg = np.where(nu > 0, g, np.minimum(g, 0.0))
        if np.abs(pg).max() <= tol:
            break
        free = ~((nu <= 0) & (g > 0))
        H = P.hess(nu)[np.ix_(free, free)]
        H = H + 1e-14 * max(np.trace(H), 1e-300) * np.eye(H.shape[0])
        d = np.zeros(K)
        try:
            d[free] = -np.linalg.solve(H, g[free])
        except np.linalg.LinAlgError:
            d[free] = -g[free]
        f0 = P.value(nu)
        step, moved = 1.0, False
        for _ in range(60):
            cand = np.maximum(nu + step * d, 0.0)
            if P.value(cand) <= f0 + 1e-4 * g @ (cand - nu):
                nu, moved = cand, True
                break
            step *= 0.5
        if not moved:
            break
    return nu


def _polyak(P, nu, iters=40):
    best, fbest = nu.copy(), P.value(nu)
    delta = 0.1 * max(abs(fbest), 1e-300)
    for _ in range(iters):
        g = P.grad(nu)
        gg = g @ g
        if gg == 0:
            break
        nu = np.maximum(nu - (P.value(nu) - fbest + delta) / gg * g, 0.0)
        f = P.value(nu)
        if f < fbest:
            best, fbest = nu.copy(), f
        else:
            delta *= 0.5
    return best


def dual_lp_solve(objective, constraints, gammas, cfg, x_prev=None, nu0=None):
    """Minimize the dual over ``nu >= 0`` and recover the unit-modulus primal.

    Returns ``(nu, x, zero_hit, info)`` with ``nu`` in the original
    constraint units.  ``zero_hit`` flags entries of ``s(nu)`` below
    ``zero_coeff_eps * ||s||_inf / N``; those entries keep the phase of
    ``x_prev``.  A previous ``nu0`` warm-starts the Newton stage; the
    subgradient and bisection stages run only if that fails to converge.
    """
    P = DualProblem(objective, constraints, gammas)
    nu = np.zeros(P.K)
    tol = cfg.dual_tol
    warm = False
    if P.K and nu0 is not None and np.all(np.isfinite(nu0)):
        nu = _projected_newton(P, np.maximum(np.asarray(nu0, float), 0.0) * P.scale, tol, max_iter=30)
        warm = _proj_grad_norm(P, nu) <= tol
        if not warm:
            nu = np.zeros(P.K)
    if P.K and not warm:
        g0 = P.grad(nu)
        if np.any(g0 < 0):
            nu = _polyak(P, nu)
            for _ in range(20):
                prev = nu.copy()
                for k in range(P.K):
                    nu = _bisect_coordinate(P, nu, k, 1e-6)
                if np.abs(nu - prev).max() <= 1e-6 * max(np.abs(nu).max(), 1e-300):
                    break
            nu = _projected_newton(P, nu, tol)
    s = P.s(nu)
    a = np.abs(s)
    mask = a < cfg.zero_coeff_eps * a.max() / P.N if a.max() > 0 else np.ones(P.N, bool)
    x = project_unit(s)
    zero_hit = bool(mask.any())
    if zero_hit:
        x[mask] = project_unit(x_prev)[mask] if x_prev is not None else 1.0
    dual_value = P.value(nu)
    primal = float(2 * np.real(np.vdot(x, P.d0)) + P.c0)
    info = {
        "dual_value": dual_value,
        "primal_value": primal,
        "slack": P.constraint_values(x) * P.scale if P.K else np.zeros(0),
        "zero_hit_count": int(mask.sum()),
        "proj_grad": _proj_grad_norm(P, nu) if P.K else 0.0,
        "warm": warm,
    }
    return P.unscale(nu), x, zero_hit, info
