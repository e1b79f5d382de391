"""Log-barrier Newton method for small dense convex programs.

The variable ``y`` is real; its first ``2 n_ball`` entries hold
``[Re x; Im x]`` and are kept strictly inside the unit-modulus ball
``|x_n| < 1`` by a built-in barrier.  All other constraints are convex
callables ``g(y) < 0``.
"""

import numpy as np
import scipy.linalg

__all__ = ["BarrierResult", "barrier_minimize", "phase_one"]

NEWTON_TOL = 1e-10
MAX_NEWTON = 100
MAX_BACKTRACK = 60


class BarrierResult:
    __slots__ = ("y", "status", "gap", "newton_iters", "t")

    def __init__(self, y, status, gap, newton_iters, t):
        self.y, self.status, self.gap, self.newton_iters, self.t = y, status, gap, newton_iters, t


def _ball_slack(y, n):
    if n == 0:
        return np.ones(0)
    return 1.0 - y[:n] ** 2 - y[n:2 * n] ** 2


def _ball_terms(y, n, dim):
    """Value, gradient and Hessian of ``-sum log(1 - |x_n|^2)``."""
    g = np.zeros(dim)
    H = np.zeros((dim, dim))
    if n == 0:
        return 0.0, g, H
    s = _ball_slack(y, n)
    xr, xi = y[:n], y[n:2 * n]
    g[:n] = 2 * xr / s
    g[n:2 * n] = 2 * xi / s
    idx = np.arange(n)
    H[idx, idx] = 2 / s + 4 * xr**2 / s**2
    H[idx + n, idx + n] = 2 / s + 4 * xi**2 / s**2
    H[idx, idx + n] = H[idx + n, idx] = 4 * xr * xi / s**2
    return -np.sum(np.log(s)), g, H


def _ball_max_step(y, dy, n):
    """Largest ``s`` with ``|x + s dx| < 1`` elementwise (``inf`` if unbounded)."""
    if n == 0:
        return np.inf
    xr, xi, dr, di = y[:n], y[n:2 * n], dy[:n], dy[n:2 * n]
    a = dr**2 + di**2
    b = 2 * (xr * dr + xi * di)
    c = xr**2 + xi**2 - 1.0
    ok = a > 0
    root = (-b[ok] + np.sqrt(np.maximum(b[ok] ** 2 - 4 * a[ok] * c[ok], 0.0))) / (2 * a[ok])
    return float(root.min()) if root.size else np.inf


def _domain_ok(y, n, cons, domain=None):
    if n and np.any(_ball_slack(y, n) <= 0):
        return False
    if domain is not None and not domain(y):
        return False
    return all(c(y, 0) < 0 for c in cons)


def _phi(y, t, obj, cons, n):
    val = t * obj(y, 0)
    if n:
        val -= np.sum(np.log(_ball_slack(y, n)))
    for c in cons:
        val -= np.log(-c(y, 0))
    return val


def _solve_newton(H, g):
    try:
        cf = scipy.linalg.cho_factor(H, lower=True, check_finite=False)
        return -scipy.linalg.cho_solve(cf, g, check_finite=False)
    except np.linalg.LinAlgError:
        reg = 1e-12 * max(np.abs(np.diag(H)).max(), 1.0)
        return -np.linalg.lstsq(H + reg * np.eye(H.shape[0]), g, rcond=None)[0]


def _center(y, t, obj, cons, n, stop=None, domain=None):
    """Newton centering on ``t f + barrier``; returns (y, iterations)."""
    dim = y.size
    for it in range(MAX_NEWTON):
        f, gf, Hf = obj(y, 2)
        _, g, H = _ball_terms(y, n, dim)
        g = g + t * gf
        H = H + t * Hf
        for c in cons:
            v, gc, Hc = c(y, 2)
            g = g - gc / v
            H = H - Hc / v + np.outer(gc, gc) / v**2
        dy = _solve_newton(H, g)
        dec = -g @ dy
        phi0 = _phi(y, t, obj, cons, n)
        # below this the decrease is lost in the roundoff of phi
        if dec / 2 <= NEWTON_TOL + 1e-13 * abs(phi0):
            return y, it
        step = min(1.0, 0.99 * _ball_max_step(y, dy, n))
        for _ in range(MAX_BACKTRACK):
            yn = y + step * dy
            if _domain_ok(yn, n, cons, domain) and _phi(yn, t, obj, cons, n) <= phi0 - 0.25 * step * dec:
                break
            step *= 0.5
        else:
            return y, it
        y = yn
        if stop is not None and stop(y):
            return y, it + 1
    return y, MAX_NEWTON


def barrier_minimize(obj, cons, y0, n_ball, gap_tol=1e-9, t0=None, mu=20.0, max_outer=60, stop=None, domain=None):
    """Minimize ``obj`` from a strictly feasible ``y0``.

    ``obj(y, order)`` and each ``c(y, order)`` return the value when
    ``order == 0`` and ``(value, grad, hess)`` otherwise.  Stops once the
    barrier duality-gap bound ``m / t`` is below ``gap_tol * max(1, |f|)``.
    ``domain(y)`` optionally restricts line-search steps further.
    """
    y = np.asarray(y0, dtype=float).copy()
    if not _domain_ok(y, n_ball, cons, domain):
        raise ValueError("barrier start point is not strictly feasible")
    m = len(cons) + n_ball
    if m == 0:
        y, k = _center(y, 1.0, obj, cons, n_ball, domain=domain)
        return BarrierResult(y, "optimal", 0.0, k, np.inf)
    t = t0 if t0 is not None else max(m / max(abs(obj(y, 0)), 1e-12), 1e-6)
    total = 0
    for _ in range(max_outer):
        y, k = _center(y, t, obj, cons, n_ball, stop, domain)
        total += k
        if stop is not None and stop(y):
            return BarrierResult(y, "stopped", m / t, total, t)
        if m / t <= gap_tol * max(1.0, abs(obj(y, 0))):
            return BarrierResult(y, "optimal", m / t, total, t)
        t *= mu
    return BarrierResult(y, "max_iter", m / t, total, t)


def phase_one(cons, y0, n_ball, target=1e-7, domain=None):
    """Find ``y`` with every ``c(y) < 0`` while staying strictly inside the ball.

    Minimizes a shared slack ``s`` with ``c(y) <= s`` and ``s >= -1``.
    Returns ``(y, s)``; the point is usable when ``s < 0``.
    """
    y0 = np.asarray(y0, dtype=float)
    if n_ball:
        r = np.sqrt(y0[:n_ball] ** 2 + y0[n_ball:2 * n_ball] ** 2)
        shrink = np.where(r >= 1 - 1e-9, (1 - 1e-6) / np.maximum(r, 1e-300), 1.0)
        y0 = y0.copy()
        y0[:n_ball] *= shrink
        y0[n_ball:2 * n_ball] *= shrink
    s0 = max(c(y0, 0) for c in cons) + 1.0
    dim = y0.size

    def obj(ys, order):
        if order == 0:
            return ys[-1]
        g = np.zeros(dim + 1)
        g[-1] = 1.0
        return ys[-1], g, np.zeros((dim + 1, dim + 1))

    def lift(c):
        def f(ys, order):
            if order == 0:
                return c(ys[:-1], 0) - ys[-1]
            v, g, H = c(ys[:-1], 2)
            G = np.append(g, -1.0)
            HH = np.zeros((dim + 1, dim + 1))
            HH[:dim, :dim] = H
            return v - ys[-1], G, HH
        return f

    def floor(ys, order):
        if order == 0:
            return -1.0 - ys[-1]
        g = np.zeros(dim + 1)
        g[-1] = -1.0
        return -1.0 - ys[-1], g, np.zeros((dim + 1, dim + 1))

    lifted = [lift(c) for c in cons] + [floor]
    ys0 = np.append(y0, max(s0, -0.5))
    dom = None if domain is None else (lambda ys: domain(ys[:-1]))
    res = barrier_minimize(obj, lifted, ys0, n_ball, gap_tol=1e-10, t0=1.0,
                           stop=lambda ys: ys[-1] < -target, domain=dom)
    return res.y[:-1], res.y[-1]
