from dataclasses import replace

import numpy as np
from numpy.testing import assert_allclose

from fcfp_ris.comm import (
    beampattern,
    beampattern_db,
    comm_interference_cov,
    default_phi_grid,
    lmmse_combiner,
    rayleigh_sinr,
    sensing_combiner,
    sinr,
    sinr_all,
)
from fcfp_ris.numerics import kron, vec
from fcfp_ris.scenario import DEG, PriorGrid, array_response
from fcfp_ris.sensing import build_cache

from conftest import crandn, small_scenario

PRIOR = PriorGrid.uniform(40 * DEG, 80 * DEG, 21)


def _unit(rng, n):
    return np.exp(2j * np.pi * rng.random(n))


def _silent(scen):
    """Same scenario with a zero sensing gain, so the sensing user adds no interference."""
    return replace(scen, sensing=replace(scen.sensing, alpha=0j, alpha_true=0j))


def test_single_user_without_sensing_interference():
    scen = _silent(small_scenario(users=(110,)))
    cache = build_cache(scen, PRIOR)
    x = _unit(np.random.default_rng(0), scen.N)
    assert_allclose(comm_interference_cov(0, x, cache, scen), scen.noise_power * np.eye(scen.M))
    h = scen.H[0] @ x
    w = lmmse_combiner(0, x, cache, scen)
    assert_allclose(abs(np.vdot(w, h)), np.linalg.norm(h), rtol=1e-12)
    assert_allclose(sinr(0, x, cache, scen), scen.powers[0] * np.vdot(h, h).real / scen.noise_power, rtol=1e-12)


def test_sensing_term_matches_kronecker_oracle():
    scen = small_scenario(users=(110,))
    cache = build_cache(scen, PRIOR, eps_trunc=0.0)
    x = _unit(np.random.default_rng(1), scen.N)
    U = cache.U
    Ru = sum(w * np.outer(vec(u), vec(u).conj()) for w, u in zip(PRIOR.eta_weights, U))
    T = kron(x[None, :], np.eye(scen.M))  # vec(U x) = (x^T kron I) vec(U)
    E = scen.sensing.power * scen.alpha_second_moment() * T @ Ru @ T.conj().T
    S = comm_interference_cov(0, x, cache, scen)
    assert np.linalg.norm(S - (scen.noise_power * np.eye(scen.M) + E)) <= 1e-9 * np.linalg.norm(S)
    assert np.linalg.norm(S - S.conj().T) <= 1e-12 * np.linalg.norm(S)
    assert np.linalg.eigvalsh(E).min() >= -1e-12 * np.linalg.norm(E)


def test_lmmse_optimal_and_unit_norm():
    scen = small_scenario()
    cache = build_cache(scen, PRIOR)
    rng = np.random.default_rng(2)
    x = _unit(rng, scen.N)
    for k in range(scen.K):
        w = lmmse_combiner(k, x, cache, scen)
        assert abs(np.linalg.norm(w) - 1) <= 1e-10
        best = sinr(k, x, cache, scen)
        assert abs(rayleigh_sinr(w, k, x, cache, scen) - best) <= 1e-9 * best
        assert abs(sinr_all(x, cache, scen)[k] - best) <= 1e-9 * best
        for _ in range(100):
            u = crandn(rng, scen.M)
            assert rayleigh_sinr(u / np.linalg.norm(u), k, x, cache, scen) <= best * (1 + 1e-12)


def test_adding_interferer_power_lowers_sinr():
    rng = np.random.default_rng(3)
    for seed in range(5):
        scen = small_scenario(seed=seed)
        cache = build_cache(scen, PRIOR)
        x = _unit(rng, scen.N)
        before = sinr(0, x, cache, scen)
        users = list(scen.users)
        users[1] = replace(users[1], power=4 * users[1].power)
        louder = scen.with_users(users)
        assert sinr(0, x, build_cache(louder, PRIOR), louder) <= before * (1 + 1e-12)


def test_beampattern_matched_phase_peak():
    scen = small_scenario(M=3, rows=1, cols=8, users=(110,))
    scen = replace(scen, G=np.ones((3, 8), dtype=complex))
    phi = default_phi_grid()
    assert phi.size == 721
    phi0 = 63 * DEG
    x = array_response(phi0, scen.geometry).conj()
    w = np.ones(3) / np.sqrt(3)
    Q = beampattern(w, x, phi, scen)
    assert np.all(Q >= 0)
    assert abs(phi[np.argmax(Q)] - phi0) <= 0.25 * DEG
    assert_allclose(beampattern(np.exp(0.7j) * w, x, phi, scen), Q, rtol=1e-12, atol=1e-14)
    db = beampattern_db(Q)
    assert db.max() == 0.0


def test_sensing_combiner_rank_one_direction():
    scen = _silent(small_scenario(users=()))
    eta0 = 1.1
    cache = build_cache(scen, PriorGrid.point(eta0))
    x = _unit(np.random.default_rng(4), scen.N)
    w = sensing_combiner(x, cache, scen)
    assert abs(np.linalg.norm(w) - 1) <= 1e-10
    v = cache.Udot[0] @ x
    assert_allclose(abs(np.vdot(w, v)), np.linalg.norm(v), rtol=1e-10)


def test_sensing_combiner_scale_invariant():
    scen = small_scenario()
    cache = build_cache(scen, PRIOR)
    x = _unit(np.random.default_rng(5), scen.N)
    w1 = sensing_combiner(x, cache, scen)
    w2 = sensing_combiner(x, replace(cache, kappa=7.0 * cache.kappa), scen)
    assert_allclose(abs(np.vdot(w1, w2)), 1.0, rtol=1e-10)
