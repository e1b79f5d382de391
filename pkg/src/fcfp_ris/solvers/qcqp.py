"""Inner convex QCQP: maximize a concave quadratic under concave quadratic constraints."""

import numpy as np

from ..numerics import real_embed
from ..transforms import QuadraticSurrogate
from .barrier import barrier_minimize, phase_one

__all__ = ["RealQuad", "inner_convex_solve", "to_real", "to_complex"]


def to_real(x):
    x = np.asarray(x, dtype=complex)
    return np.concatenate([x.real, x.imag])


def to_complex(u, n):
    return u[:n] + 1j * u[n:2 * n]


class RealQuad:
    """``q(u) = -u^T E u + 2 b^T u + c`` for a :class:`QuadraticSurrogate`."""

    def __init__(self, surr):
        self.E = real_embed(surr.M_mat)
        self.E = 0.5 * (self.E + self.E.T)
        self.b = to_real(surr.lin)
        self.c = float(surr.const)

    def value(self, u):
        return float(-u @ self.E @ u + 2 * self.b @ u + self.c)

    def grad(self, u):
        return -2 * self.E @ u + 2 * self.b


def _maximize(q, scale):
    # minimize -q / scale
    def f(u, order):
        if order == 0:
            return -q.value(u) / scale
        return -q.value(u) / scale, -q.grad(u) / scale, 2 * q.E / scale
    return f


def _at_least(q, gamma, scale):
    # (gamma - q(u)) / scale < 0
    def f(u, order):
        v = (gamma - q.value(u)) / scale
        if order == 0:
            return v
        return v, -q.grad(u) / scale, 2 * q.E / scale
    return f


def inner_convex_solve(objective, constraints, gammas=(), mu=0.0, z=None, x_start=None, gap_tol=1e-9):
    """Solve ``max obj(x) - mu ||x - z||^2`` s.t. ``f_k(x) >= Gamma_k``, ``|x_n| <= 1``.

    Returns ``(x, info)``.  ``info["status"]`` is ``"optimal"``,
    ``"max_iter"`` or ``"infeasible"`` (no strictly feasible point found,
    in which case ``x`` is ``x_start``); ``info["gap"]`` is the barrier
    duality-gap bound relative to the objective scale.
    """
    N = objective.lin.size
    surr = objective
    if mu > 0:
        z = np.asarray(z, dtype=complex)
        surr = QuadraticSurrogate(
            objective.M_mat + mu * np.eye(N), objective.lin + mu * z,
            objective.const - mu * float(np.vdot(z, z).real),
        )
    x0 = np.zeros(N, complex) if x_start is None else np.asarray(x_start, dtype=complex)
    u0 = to_real(x0)
    q0 = RealQuad(surr)
    scale = max(abs(q0.value(u0)), np.abs(q0.b).sum(), 1e-300)
    obj = _maximize(q0, scale)
    cons = []
    for c, g in zip(constraints, gammas):
        qc = RealQuad(c)
        cons.append(_at_least(qc, float(g), max(abs(g), abs(qc.value(u0)), 1e-300)))
    info = {"phase_one": False, "newton_iters": 0}
    r = np.abs(x0)
    strict = np.all(r < 1 - 1e-12) and all(c(u0, 0) < 0 for c in cons)
    if not strict:
        if cons:
            u0, s = phase_one(cons, u0, N)
            info["phase_one"] = True
            if not s < 0:
                info.update(status="infeasible", gap=np.inf, phase_one_slack=float(s))
                return x0, info
        else:
            u0 = to_real(x0 * np.where(r >= 1 - 1e-12, (1 - 1e-6) / np.maximum(r, 1e-300), 1.0))
    res = barrier_minimize(obj, cons, u0, N, gap_tol=gap_tol)
    info.update(status=res.status, gap=res.gap, newton_iters=info["newton_iters"] + res.newton_iters)
    return to_complex(res.y, N), info
