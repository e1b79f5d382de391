"""Feasible starting point for the SINR-constrained problems."""

import numpy as np
import scipy.optimize

from ..comm import sinr_all
from ..transforms import cm_linear_surrogate, optimal_multiplier, sinr_specs
from .config import project_unit

__all__ = ["feasible_init", "relative_margin"]

MAX_STEPS = 200


def relative_margin(x, cache, scen):
    """``min_k gamma_k / Gamma - 1`` (``inf`` when unconstrained)."""
    if scen.K == 0 or scen.sinr_threshold == 0:
        return np.inf
    return float(np.min(sinr_all(x, cache, scen)) / scen.sinr_threshold - 1.0)


def _maxmin_step(specs, x, gammas):
    """One linearized max-min step: solve the simplex dual and recover phases."""
    surr = [cm_linear_surrogate(s, optimal_multiplier(s, x), x) for s in specs]
    D = np.stack([s.d / g for s, g in zip(surr, gammas)], axis=1)  # (N, K)
    b = np.array([s.const / g - 1.0 for s, g in zip(surr, gammas)])
    K = D.shape[1]
    scale = max(2 * np.abs(D).sum(axis=0).max(), 1e-300)

    def h(pi):
        return (2 * np.abs(D @ pi).sum() + b @ pi) / scale

    def dh(pi):
        return (2 * np.real(project_unit(D @ pi).conj() @ D) + b) / scale

    res = scipy.optimize.minimize(
        h, np.full(K, 1.0 / K), jac=dh, method="SLSQP", bounds=[(0, 1)] * K,
        constraints=[{"type": "eq", "fun": lambda p: p.sum() - 1, "jac": lambda p: np.ones(K)}],
        options={"ftol": 1e-12, "maxiter": 200},
    )
    pi = np.clip(res.x, 0, None)
    s = D @ (pi / pi.sum())
    return np.where(np.abs(s) > 0, project_unit(s), x)


def feasible_init(scen, cache, rng, cfg):
    """Unit-modulus ``x`` meeting every SINR threshold, if one is found.

    Starts from random phases and repeats linearized max-min steps on the
    normalized slacks, stopping once the margin reaches ``cfg.init_margin``.
    Up to ``cfg.init_restarts`` random starts are tried; the best point is
    returned either way (check it with :func:`relative_margin`).
    """
    x = np.exp(1j * rng.uniform(-np.pi, np.pi, scen.N))
    if scen.K == 0 or scen.sinr_threshold == 0:
        return x
    specs = sinr_specs(cache, scen)
    gammas = scen.sinr_thresholds
    best_x, best_m = x, relative_margin(x, cache, scen)
    for restart in range(cfg.init_restarts):
        if restart:
            x = np.exp(1j * rng.uniform(-np.pi, np.pi, scen.N))
        m = relative_margin(x, cache, scen)
        for _ in range(MAX_STEPS):
            if m > best_m:
                best_x, best_m = x, m
            if m >= cfg.init_margin:
                return x
            xn = _maxmin_step(specs, x, gammas)
            mn = relative_margin(xn, cache, scen)
            if mn <= m + 1e-9 * max(1.0, abs(m)):
                break
            x, m = xn, mn
        if m > best_m:
            best_x, best_m = x, m
        if best_m >= 0:
            return best_x
    return best_x
