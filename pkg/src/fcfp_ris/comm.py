"""Communication-side covariances, LMMSE combiners, SINR and beampatterns."""

import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .scenario import DEG, array_response

__all__ = [
    "CombinerSet",
    "comm_interference_cov",
    "comm_interference_covs",
    "lmmse_combiner",
    "sinr",
    "sinr_all",
    "rayleigh_sinr",
    "sensing_combiner",
    "combiners",
    "beampattern",
    "beampattern_db",
    "default_phi_grid",
    "write_beampattern_csv",
]


@dataclass(frozen=True)
class CombinerSet:
    w_comm: np.ndarray  # (K, M), unit-norm rows
    w_sense: np.ndarray  # (M,)


def _sensing_term(x, cache):
    """``p E[|alpha|^2 (U x)(U x)^H]`` from the cached eigen terms."""
    if cache.interf_kappa.size == 0:
        return np.zeros(cache.noise.shape, dtype=complex)
    V = cache.interf_terms @ x  # (S, M)
    return (V.T * cache.interf_kappa) @ V.conj()


def comm_interference_covs(x, cache, scen):
    """Interference-plus-noise covariances for all users, shape (K, M, M)."""
    x = np.asarray(x, dtype=complex)
    base = cache.noise + _sensing_term(x, cache)
    h = scen.H @ x  # (K, M)
    full = np.einsum("k,km,kn->mn", scen.powers, h, h.conj())
    own = scen.powers[:, None, None] * h[:, :, None] * h[:, None, :].conj()
    return base[None] + full[None] - own


def comm_interference_cov(k, x, cache, scen):
    """Interference-plus-noise covariance of user ``k``."""
    if not 0 <= k < scen.K:
        raise IndexError(f"user index {k} out of range for K={scen.K}")
    x = np.asarray(x, dtype=complex)
    S = cache.noise + _sensing_term(x, cache)
    for j in range(scen.K):
        if j != k:
            h = scen.H[j] @ x
            S = S + scen.powers[j] * np.outer(h, h.conj())
    return S


def lmmse_combiner(k, x, cache, scen):
    """Unit-norm ``Sigma_k^{-1} H_k x``."""
    S = comm_interference_cov(k, x, cache, scen)
    w = scipy.linalg.solve(S, scen.H[k] @ x, assume_a="pos")
    n = np.linalg.norm(w)
    return w / n if n > 0 else w


def sinr(k, x, cache, scen):
    """``p_k (H_k x)^H Sigma_k^{-1} (H_k x)`` (linear)."""
    S = comm_interference_cov(k, x, cache, scen)
    h = scen.H[k] @ x
    return float(scen.powers[k] * np.real(h.conj() @ scipy.linalg.solve(S, h, assume_a="pos")))


def sinr_all(x, cache, scen):
    """SINR of every user as a length-K vector."""
    if scen.K == 0:
        return np.zeros(0)
    x = np.asarray(x, dtype=complex)
    S = comm_interference_covs(x, cache, scen)
    h = scen.H @ x
    sol = np.linalg.solve(S, h[..., None])[..., 0]
    return scen.powers * np.real(np.sum(h.conj() * sol, axis=1))


def rayleigh_sinr(w, k, x, cache, scen):
    """SINR achieved by an arbitrary combiner ``w``."""
    S = comm_interference_cov(k, x, cache, scen)
    h = scen.H[k] @ x
    num = scen.powers[k] * abs(np.vdot(w, h)) ** 2
    return float(num / np.real(np.vdot(w, S @ w)))


def sensing_combiner(x, cache, scen):
    """Principal direction of ``Sigma^{-1} E[(dU x)(dU x)^H]``.

    Solved as the Hermitian generalized problem ``E u = mu Sigma u``.
    """
    from .sensing import sensing_interference_cov

    x = np.asarray(x, dtype=complex)
    S = sensing_interference_cov(x, scen, cache)
    V = cache.R_terms @ x
    E = (V.T * cache.kappa) @ V.conj()
    E = 0.5 * (E + E.conj().T)
    _, vecs = scipy.linalg.eigh(E, S)
    u = vecs[:, -1]
    return u / np.linalg.norm(u)


def combiners(x, cache, scen):
    w = np.array([lmmse_combiner(k, x, cache, scen) for k in range(scen.K)]).reshape(scen.K, scen.M)
    return CombinerSet(w, sensing_combiner(x, cache, scen))


def default_phi_grid(points=721):
    """Angles in radians covering [0, 180] degrees."""
    return np.linspace(0.0, 180.0, points) * DEG


def beampattern(w, x, phi_grid, scen):
    """``|w^H G diag(x) v(phi)|^2`` on a grid of angles (linear)."""
    w = np.asarray(w, dtype=complex)
    a = w.conj() @ (scen.G * np.asarray(x)[None, :])  # (N,)
    V = array_response(np.asarray(phi_grid, dtype=float), scen.geometry)  # (P, N)
    return np.abs(V @ a) ** 2


def beampattern_db(Q, floor_db=-300.0):
    """Pattern in dB relative to its peak."""
    Q = np.asarray(Q, dtype=float)
    peak = Q.max()
    if peak <= 0:
        return np.full(Q.shape, floor_db)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(Q / peak)
    return np.maximum(out, floor_db)


def write_beampattern_csv(path, phi_grid, Q_db):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        wr.writerow(["phi_deg", "Q_dB"])
        for phi, q in zip(np.asarray(phi_grid) / DEG, Q_db):
            wr.writerow([f"{phi:.4f}", f"{q:.6f}"])
