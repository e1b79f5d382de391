"""Fractional-programming surrogates for matrix ratios.

A ratio is ``f(x) = (Ax)^H D(x)^{-1} (Ax)`` with
``D(x) = sum_m rho_m (B_m x)(B_m x)^H + C``.  The quadratic transform gives
the concave lower bound ``2 Re{lam^H A x} - lam^H D(x) lam``; for
unit-modulus ``x`` the quadratic term is further majorized by ``delta I``
(``delta = tr M``), which yields a bound linear in ``x``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .numerics import ContractError

__all__ = [
    "RatioSpec",
    "QuadraticSurrogate",
    "LinearSurrogate",
    "ratio_value",
    "optimal_multiplier",
    "quadratic_surrogate",
    "cm_linear_surrogate",
    "ratio_grad",
    "sensing_specs",
    "sinr_specs",
    "build_p2_surrogates",
    "build_p3_surrogates",
    "UNIT_MODULUS_TOL",
]

UNIT_MODULUS_TOL = 1e-9


@dataclass(frozen=True)
class RatioSpec:
    """``A`` (P x N), ``rho`` (m,), ``B`` (m, P, N) and Hermitian PD ``C`` (P x P)."""

    A: np.ndarray
    rho: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=complex)
        rho = np.asarray(self.rho, dtype=float).reshape(-1)
        B = np.asarray(self.B, dtype=complex).reshape(rho.size, *A.shape)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", np.asarray(self.C, dtype=complex))
        if np.any(rho <= 0):
            raise ContractError("denominator weights must be positive")

    def D(self, x):
        Bx = self.B @ x  # (m, P)
        return self.C + (Bx.T * self.rho) @ Bx.conj()


@dataclass(frozen=True)
class QuadraticSurrogate:
    """``-x^H M x + 2 Re{lin^H x} + const`` with PSD ``M``."""

    M_mat: np.ndarray
    lin: np.ndarray
    const: float

    def value(self, x):
        x = np.asarray(x)
        return float(-np.real(np.vdot(x, self.M_mat @ x)) + 2 * np.real(np.vdot(self.lin, x)) + self.const)

    def grad(self, x):
        """``g`` with ``d value = Re{g^H dx}``."""
        return 2.0 * (self.lin - self.M_mat @ x)

    def scaled(self, c):
        return QuadraticSurrogate(c * self.M_mat, c * self.lin, c * self.const)

    def shifted(self, c):
        return QuadraticSurrogate(self.M_mat, self.lin, self.const + c)

    def __add__(self, other):
        return QuadraticSurrogate(self.M_mat + other.M_mat, self.lin + other.lin, self.const + other.const)


@dataclass(frozen=True)
class LinearSurrogate:
    """``2 Re{x^H d} + const``."""

    d: np.ndarray
    const: float

    def value(self, x):
        return float(2 * np.real(np.vdot(x, self.d)) + self.const)

    def scaled(self, c):
        return LinearSurrogate(c * self.d, c * self.const)

    def __add__(self, other):
        return LinearSurrogate(self.d + other.d, self.const + other.const)


def ratio_value(spec, x):
    x = np.asarray(x, dtype=complex)
    a = spec.A @ x
    return float(np.real(np.vdot(a, scipy.linalg.solve(spec.D(x), a, assume_a="pos"))))


def optimal_multiplier(spec, x):
    """``lam* = D(x)^{-1} A x``."""
    x = np.asarray(x, dtype=complex)
    return scipy.linalg.solve(spec.D(x), spec.A @ x, assume_a="pos")


def ratio_grad(spec, x):
    """Gradient ``g`` of the ratio with ``df = Re{g^H dx}``: ``2 (A^H lam - M(lam) x)``."""
    x = np.asarray(x, dtype=complex)
    lam = optimal_multiplier(spec, x)
    b = np.einsum("mpn,p->mn", spec.B.conj(), lam)
    Mx = (spec.rho * (b.conj() @ x)) @ b
    return 2.0 * (spec.A.conj().T @ lam - Mx)


def _lam_const(spec, lam):
    return -float(np.real(np.vdot(lam, spec.C @ lam)))


def quadratic_surrogate(spec, lam):
    lam = np.asarray(lam, dtype=complex)
    b = np.einsum("mpn,p->mn", spec.B.conj(), lam)  # rows b_m = B_m^H lam
    M = (b.T * spec.rho) @ b.conj()
    return QuadraticSurrogate(M, spec.A.conj().T @ lam, _lam_const(spec, lam))


def _check_unit(z):
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(np.abs(z) - 1.0) > UNIT_MODULUS_TOL):
        raise ContractError("z must be unit-modulus")
    return z


def cm_linear_surrogate(spec, lam, z):
    """Linear lower bound valid for unit-modulus ``x``, tight at ``x = z``.

    ``d = (delta I - M) z + A^H lam`` and
    ``const = z^H M z - 2 delta N - lam^H C lam``.
    """
    z = _check_unit(z)
    lam = np.asarray(lam, dtype=complex)
    b = np.einsum("mpn,p->mn", spec.B.conj(), lam)
    bz = b.conj() @ z  # b_m^H z
    Mz = (spec.rho * bz) @ b
    delta = float(np.sum(spec.rho * np.sum(np.abs(b) ** 2, axis=1)))
    zMz = float(np.sum(spec.rho * np.abs(bz) ** 2))
    d = delta * z - Mz + spec.A.conj().T @ lam
    return LinearSurrogate(d, zMz - 2 * delta * z.size + _lam_const(spec, lam))


# --- adapters for the sensing objective and SINR constraints ------------------


def sensing_specs(cache, scen):
    """One ratio per eigen term; the objective is ``sum_r kappa_r f_r``."""
    return [RatioSpec(R, scen.powers, scen.H, cache.noise) for R in cache.R_terms]


def sinr_specs(cache, scen):
    """Ratio ``gamma_k / p_k`` for every communication user."""
    specs = []
    for k in range(scen.K):
        others = [j for j in range(scen.K) if j != k]
        rho = np.concatenate([scen.powers[others], cache.interf_kappa])
        B = np.concatenate([scen.H[others], cache.interf_terms], axis=0)
        specs.append(RatioSpec(scen.H[k], rho, B, cache.noise))
    return specs


def _weighted_sum(items, weights, zero):
    out = zero
    for w, s in zip(weights, items):
        out = out + s.scaled(w)
    return out


def build_p2_surrogates(x, cache, scen, specs=None):
    """Quadratic surrogates of ``A`` and of each ``gamma_k / p_k`` at ``x``."""
    x = np.asarray(x, dtype=complex)
    sens, comm = specs or (sensing_specs(cache, scen), sinr_specs(cache, scen))
    N = scen.N
    zero = QuadraticSurrogate(np.zeros((N, N), complex), np.zeros(N, complex), 0.0)
    obj = _weighted_sum([quadratic_surrogate(s, optimal_multiplier(s, x)) for s in sens], cache.kappa, zero)
    cons = [quadratic_surrogate(s, optimal_multiplier(s, x)) for s in comm]
    return {"objective": obj, "constraints": cons}


def build_p3_surrogates(x, cache, scen, specs=None):
    """Linear surrogates (unit-modulus ``x``) of ``A`` and each ``gamma_k / p_k``."""
    x = _check_unit(x)
    sens, comm = specs or (sensing_specs(cache, scen), sinr_specs(cache, scen))
    zero = LinearSurrogate(np.zeros(scen.N, complex), 0.0)
    obj = _weighted_sum([cm_linear_surrogate(s, optimal_multiplier(s, x), x) for s in sens], cache.kappa, zero)
    cons = [cm_linear_surrogate(s, optimal_multiplier(s, x), x) for s in comm]
    return {"objective": obj, "constraints": cons}
