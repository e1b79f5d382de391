"""Sensing metrics: Fisher information, the BCRLB and its x-dependent part A(x).

Expectations over the eta prior are fixed-node quadrature sums.  The
second-moment matrix of ``vec(dU/deta)`` is never formed in production; its
eigen terms come from a thin SVD of the weighted sample matrix, which has the
same nonzero spectrum.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .numerics import ContractError, kron, psd_eig, unvec
from .scenario import sensing_matrix, sensing_matrix_derivative

__all__ = [
    "SensingMetricCache",
    "RAD2_TO_DEG2",
    "build_cache",
    "noise_cov",
    "sensing_interference_cov",
    "fisher_information",
    "second_moment_matrix",
    "second_moment_eigen",
    "eigen_terms",
    "metric_A",
    "metric_A_direct",
    "metric_A_kron",
    "grad_A",
    "per_node_fi",
    "bcrlb",
    "modified_bcrlb",
    "modified_denominators",
]

RAD2_TO_DEG2 = (180.0 / np.pi) ** 2
EPS_TRUNC = 1e-10


@dataclass(frozen=True)
class SensingMetricCache:
    """Prior-dependent quantities reused by every metric and solver step.

    ``kappa``/``R_terms`` decompose the second moment of ``dU/deta``;
    ``interf_kappa``/``interf_terms`` decompose ``p E[|alpha|^2 U x x^H U^H]``
    (the sensing user's interference seen by communication users).
    """

    eta_nodes: np.ndarray
    eta_weights: np.ndarray
    U: np.ndarray
    Udot: np.ndarray
    kappa: np.ndarray
    R_terms: np.ndarray
    interf_kappa: np.ndarray
    interf_terms: np.ndarray
    noise: np.ndarray
    fip: float

    @property
    def R(self):
        return self.kappa.size

    @property
    def eigen_terms(self):
        return list(zip(self.kappa, self.R_terms))

    @property
    def U_samples(self):
        return self.U

    @property
    def Udot_samples(self):
        return self.Udot


def _stack_vec(mats):
    # column-stacked vec of each (M, N) slice -> rows of an (L, M*N) array
    L, M, N = mats.shape
    return mats.transpose(0, 2, 1).reshape(L, M * N)


def eigen_terms(mats, weights, eps_trunc=EPS_TRUNC):
    """Eigen terms of ``sum_j w_j vec(X_j) vec(X_j)^H`` for a stack ``X``.

    Returns ``(kappa, terms)`` with ``kappa`` descending and
    ``terms[r] = unvec(r_r)`` of shape (M, N).  Eigenvalues below
    ``eps_trunc * kappa_max`` are dropped.
    """
    mats = np.asarray(mats)
    L, M, N = mats.shape
    w = np.asarray(weights, dtype=float)
    keep = w > 0
    if not np.any(keep):
        return np.zeros(0), np.zeros((0, M, N), dtype=complex)
    F = (_stack_vec(mats[keep]) * np.sqrt(w[keep])[:, None]).T
    Q, s, _ = scipy.linalg.svd(F, full_matrices=False, lapack_driver="gesvd")
    kappa = s**2
    if kappa.size == 0 or kappa[0] == 0:
        return np.zeros(0), np.zeros((0, M, N), dtype=complex)
    r = int(np.sum(kappa > eps_trunc * kappa[0]))
    terms = Q[:, :r].T.reshape(r, N, M).transpose(0, 2, 1)
    return kappa[:r].copy(), np.ascontiguousarray(terms)


def noise_cov(scen):
    """``sigma^2 I`` plus the expected Rician scattering of the sensing user."""
    C = scen.noise_power * np.eye(scen.M, dtype=complex)
    if scen.rician_zeta > 0:
        C = C + scen.sensing.power * scen.alpha_second_moment() * scen.nlos_scale**2 * scen.gram_G
    return C


def _interference_weights(scen, prior):
    p = scen.sensing.power
    if prior.has_alpha:
        a2 = np.abs(prior.alpha_nodes) ** 2
        return p * (prior.alpha_weights * a2) @ prior.cond_weights
    return p * scen.alpha_second_moment() * prior.eta_weights


def build_cache(scen, prior, eps_trunc=EPS_TRUNC):
    """Precompute samples and eigen terms for a scenario and prior."""
    a = scen.los_scale
    U = a * sensing_matrix(prior.eta_nodes, scen.G, scen.geometry)
    Udot = a * sensing_matrix_derivative(prior.eta_nodes, scen.G, scen.geometry)
    w = prior.eta_weights
    kappa, R_terms = eigen_terms(Udot, w, eps_trunc)
    ik, it = eigen_terms(U, _interference_weights(scen, prior), eps_trunc)
    return SensingMetricCache(
        eta_nodes=prior.eta_nodes, eta_weights=w, U=U, Udot=Udot, kappa=kappa, R_terms=R_terms,
        interf_kappa=ik, interf_terms=it, noise=noise_cov(scen), fip=float(prior.fip[0]),
    )


def sensing_interference_cov(x, scen, cache=None):
    """Covariance of interference plus noise seen by the sensing user."""
    x = np.asarray(x)
    if np.any(np.abs(x) > 1 + 1e-9):
        raise ContractError("reflection coefficients must satisfy |x_n| <= 1")
    C = noise_cov(scen) if cache is None else cache.noise
    if scen.K == 0:
        return C.copy()
    h = scen.H @ x
    return C + np.einsum("k,km,kn->mn", scen.powers, h, h.conj())


def _chol(S):
    return scipy.linalg.cho_factor(S, lower=True, check_finite=False)


def _quad_inv(cf, V):
    """``Re(v^H S^{-1} v)`` for each column of ``V`` given a Cholesky factor."""
    sol = scipy.linalg.cho_solve(cf, V, check_finite=False)
    return np.real(np.sum(V.conj() * sol, axis=0)), sol


def fisher_information(eta, alpha, x, scen):
    """Fisher information of eta at a single angle (rad^-2)."""
    Ud = scen.los_scale * sensing_matrix_derivative(eta, scen.G, scen.geometry)
    S = sensing_interference_cov(x, scen)
    q, _ = _quad_inv(_chol(S), (Ud @ x)[:, None])
    return float(2.0 * scen.sensing.power * abs(alpha) ** 2 * q[0])


def second_moment_matrix(prior, scen):
    """Dense ``E[vec(dU) vec(dU)^H]`` (MN x MN).  Oracle path for small N."""
    Ud = scen.los_scale * sensing_matrix_derivative(prior.eta_nodes, scen.G, scen.geometry)
    V = _stack_vec(Ud)
    return (V.T * prior.eta_weights) @ V.conj()


def second_moment_eigen(prior, scen, eps_trunc=0.0):
    """Eigen terms of the dense second-moment matrix via :func:`hermitian_eig`."""
    Rdot = second_moment_matrix(prior, scen)
    w, V = psd_eig(Rdot)
    keep = w > max(eps_trunc * w[0], 0.0)
    terms = np.stack([unvec(V[:, r], scen.M, scen.N) for r in np.flatnonzero(keep)])
    return w[keep], terms


def metric_A(x, cache, scen):
    """``A(x) = sum_r kappa_r (R_r x)^H Sigma^{-1} (R_r x)`` via eigen terms."""
    if cache.R == 0:
        return 0.0
    S = sensing_interference_cov(x, scen, cache)
    q, _ = _quad_inv(_chol(S), (cache.R_terms @ x).T)
    return float(cache.kappa @ q)


def per_node_fi(x, cache, scen):
    """``(dU_j x)^H Sigma^{-1} (dU_j x)`` for every eta node (no 2p|alpha|^2 factor)."""
    S = sensing_interference_cov(x, scen, cache)
    q, _ = _quad_inv(_chol(S), (cache.Udot @ x).T)
    return q


def metric_A_direct(x, cache, scen):
    """``A(x)`` by direct quadrature over the eta nodes."""
    return float(cache.eta_weights @ per_node_fi(x, cache, scen))


def metric_A_kron(x, Rdot, Sigma):
    """Oracle: ``Tr((x* x^T kron Sigma^{-1}) Rdot)`` with a dense second-moment matrix."""
    x = np.asarray(x)
    Sinv = np.linalg.inv(Sigma)
    K = kron(np.outer(x.conj(), x), Sinv)
    return float(np.real(np.trace(K @ Rdot)))


def grad_A(x, cache, scen):
    """Gradient ``g`` of A with ``dA = Re(g^H dx)``."""
    x = np.asarray(x, dtype=complex)
    if cache.R == 0:
        return np.zeros_like(x)
    S = sensing_interference_cov(x, scen, cache)
    _, lam = _quad_inv(_chol(S), (cache.R_terms @ x).T)  # (M, R)
    g = np.einsum("r,rmn,mr->n", cache.kappa, cache.R_terms.conj(), lam)
    if scen.K:
        HL = np.einsum("kmn,mr->krn", scen.H.conj(), lam)  # H_k^H lambda_r
        hx = np.einsum("krn,n->kr", HL.conj(), x)
        g = g - np.einsum("r,k,krn,kr->n", cache.kappa, scen.powers, HL, hx)
    return 2.0 * g


def bcrlb(x, cache, scen, alpha=None):
    """Bayesian CRLB of eta in deg^2; ``inf`` when the information is zero."""
    if alpha is None:
        alpha = scen.sensing.alpha if scen.alpha_known else scen.sensing.alpha_true
    info = 2.0 * scen.sensing.power * abs(alpha) ** 2 * metric_A(x, cache, scen) + cache.fip
    if info <= 0:
        return float("inf")
    return RAD2_TO_DEG2 / info


def modified_denominators(x, prior, cache, scen):
    """Per-alpha-node denominators ``sum_j w_ij FI(eta_j | alpha_i) + FIP_i`` (rad^-2)."""
    if not prior.has_alpha:
        raise ContractError("modified BCRLB needs a prior with alpha nodes")
    q = per_node_fi(x, cache, scen)
    fi = 2.0 * scen.sensing.power * (np.abs(prior.alpha_nodes) ** 2)[:, None] * q[None, :]
    return np.sum(prior.cond_weights * fi, axis=1) + prior.fip


def modified_bcrlb(x, prior, cache, scen):
    """Modified BCRLB for unknown alpha, in deg^2.

    ``sum_i w_i / (sum_j w_ij FI(eta_j | alpha_i) + FIP_i)``.
    """
    denom = modified_denominators(x, prior, cache, scen)
    if np.any(denom <= 0):
        raise ValueError("modified BCRLB denominator is not strictly positive")
    return float(RAD2_TO_DEG2 * np.sum(prior.alpha_weights / denom))

