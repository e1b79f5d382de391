from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fcfp_ris.numerics import kron, vec
from fcfp_ris.scenario import DEG, PriorGrid, sensing_matrix_derivative
from fcfp_ris.sensing import (
    RAD2_TO_DEG2,
    bcrlb,
    build_cache,
    fisher_information,
    grad_A,
    metric_A,
    metric_A_direct,
    metric_A_kron,
    modified_bcrlb,
    second_moment_eigen,
    second_moment_matrix,
    sensing_interference_cov,
)

from conftest import crandn, small_scenario


def _unit(rng, n):
    return np.exp(2j * np.pi * rng.random(n))


def test_interference_cov_without_users():
    scen = small_scenario(users=())
    x = _unit(np.random.default_rng(0), scen.N)
    assert_allclose(sensing_interference_cov(x, scen), scen.noise_power * np.eye(scen.M))


def test_interference_cov_rank_one_structure():
    scen = small_scenario(users=(110,))
    x = _unit(np.random.default_rng(1), scen.N)
    S = sensing_interference_cov(x, scen)
    assert np.linalg.norm(S - S.conj().T) < 1e-12 * np.linalg.norm(S)
    h = scen.H[0] @ x
    expect = [scen.powers[0] * np.vdot(h, h).real + scen.noise_power] + [scen.noise_power] * (scen.M - 1)
    assert_allclose(np.linalg.eigvalsh(S)[::-1], expect, rtol=1e-9)


def test_fisher_information_closed_form_and_homogeneity():
    scen = small_scenario(users=())
    rng = np.random.default_rng(2)
    x = _unit(rng, scen.N)
    eta, a = 1.1, 0.3 - 0.4j
    Ud = sensing_matrix_derivative(eta, scen.G, scen.geometry)
    expect = 2 * scen.sensing.power * abs(a) ** 2 / scen.noise_power * np.linalg.norm(Ud @ x) ** 2
    assert_allclose(fisher_information(eta, a, x, scen), expect, rtol=1e-12)
    assert fisher_information(eta, 0.0, x, scen) == 0.0
    assert fisher_information(0.0, a, x, scen) == pytest.approx(0.0, abs=1e-20)
    scen3 = small_scenario()
    c = 2.5 - 1.5j
    assert_allclose(fisher_information(eta, c * a, x, scen3), abs(c) ** 2 * fisher_information(eta, a, x, scen3), rtol=1e-12)


def test_second_moment_single_node_rank_one():
    scen = small_scenario()
    eta0 = 1.2
    kappa, terms = second_moment_eigen(PriorGrid.point(eta0), scen)
    assert kappa.size == 1
    Ud = sensing_matrix_derivative(eta0, scen.G, scen.geometry)
    assert_allclose(np.abs(np.vdot(terms[0].ravel(), Ud.ravel())), np.linalg.norm(Ud), rtol=1e-10)
    cache = build_cache(scen, PriorGrid.point(eta0))
    assert cache.R == 1


def test_second_moment_trace_rank_and_psd():
    scen = small_scenario()
    two = PriorGrid(np.array([60 * DEG, 120 * DEG]), np.array([[0.5, 0.5]]))
    assert second_moment_eigen(two, scen)[0].size <= 2
    prior = PriorGrid.uniform(40 * DEG, 80 * DEG, 21)
    Rd = second_moment_matrix(prior, scen)
    Ud = sensing_matrix_derivative(prior.eta_nodes, scen.G, scen.geometry)
    tr = prior.eta_weights @ np.sum(np.abs(Ud) ** 2, axis=(1, 2))
    assert abs(np.trace(Rd).real - tr) <= 1e-10 * max(tr, 1)
    w = np.linalg.eigvalsh(Rd)
    assert w.min() >= -1e-10 * w.max()


def test_metric_three_paths_agree():
    rng = np.random.default_rng(3)
    scen = small_scenario()
    prior = PriorGrid.uniform(40 * DEG, 80 * DEG, 21)
    cache = build_cache(scen, prior, eps_trunc=0.0)
    Rd = second_moment_matrix(prior, scen)
    for _ in range(10):
        x = _unit(rng, scen.N) * rng.uniform(0.2, 1, scen.N)
        a = metric_A(x, cache, scen)
        d = metric_A_direct(x, cache, scen)
        k = metric_A_kron(x, Rd, sensing_interference_cov(x, scen))
        assert abs(a - d) <= 1e-8 * abs(d)
        assert abs(k - d) <= 1e-8 * abs(d)
    assert metric_A(np.zeros(scen.N), cache, scen) == 0.0


def test_kron_trace_identity_matches_quadratic_form():
    # Tr((x* x^T kron S^-1) vec(U) vec(U)^H) = (Ux)^H S^-1 (Ux)
    rng = np.random.default_rng(4)
    U, x = crandn(rng, 3, 5), crandn(rng, 5)
    B = crandn(rng, 3, 3)
    S = B @ B.conj().T + np.eye(3)
    v = vec(U)
    lhs = np.trace(kron(np.outer(x.conj(), x), np.linalg.inv(S)) @ np.outer(v, v.conj()))
    y = U @ x
    assert_allclose(lhs, np.vdot(y, np.linalg.solve(S, y)), rtol=1e-10)


def test_rank_one_metric_equals_fisher_scaling():
    scen = small_scenario()
    eta0 = 1.0
    cache = build_cache(scen, PriorGrid.point(eta0))
    x = _unit(np.random.default_rng(5), scen.N)
    fi = fisher_information(eta0, 1.0, x, scen)
    assert_allclose(metric_A(x, cache, scen), fi / (2 * scen.sensing.power), rtol=1e-10)


def test_gradient_finite_difference():
    rng = np.random.default_rng(6)
    scen = small_scenario()
    cache = build_cache(scen, PriorGrid.uniform(40 * DEG, 80 * DEG, 21))
    for _ in range(5):
        x = 0.7 * _unit(rng, scen.N)
        g = grad_A(x, cache, scen)
        d = crandn(rng, scen.N)
        h = 1e-6
        fd = (metric_A(x + h * d, cache, scen) - metric_A(x - h * d, cache, scen)) / (2 * h)
        assert_allclose(np.real(np.vdot(g, d)), fd, rtol=1e-5)


def test_bcrlb_formula_and_power_scaling():
    scen = small_scenario()
    cache = build_cache(scen, PriorGrid.uniform(40 * DEG, 80 * DEG, 21))
    x = _unit(np.random.default_rng(7), scen.N)
    a = scen.sensing.alpha
    A = metric_A(x, cache, scen)
    assert_allclose(bcrlb(x, cache, scen), RAD2_TO_DEG2 / (2 * scen.sensing.power * abs(a) ** 2 * A), rtol=1e-12)
    assert bcrlb(np.zeros(scen.N), cache, scen) == float("inf")
    # without communication users A does not depend on p
    s0 = small_scenario(users=())
    c0 = build_cache(s0, PriorGrid.uniform(40 * DEG, 80 * DEG, 21))
    s2 = replace(s0, sensing=replace(s0.sensing, power=2 * s0.sensing.power))
    assert_allclose(bcrlb(x, c0, s2), 0.5 * bcrlb(x, c0, s0), rtol=1e-12)


def _alpha_prior(eta_prior, nodes, weights):
    W = np.repeat(eta_prior.eta_weights[None], len(nodes), axis=0)
    return PriorGrid(eta_prior.eta_nodes, W, np.asarray(nodes), np.asarray(weights))


def test_modified_bcrlb_single_and_two_nodes():
    scen = small_scenario()
    base = PriorGrid.uniform(40 * DEG, 80 * DEG, 21)
    cache = build_cache(scen, base)
    x = _unit(np.random.default_rng(8), scen.N)
    a1, a2 = 1e-3 * (0.7 + 0.7j), 1e-3 * (0.2 - 0.9j)
    one = _alpha_prior(base, [a1], [1.0])
    assert_allclose(modified_bcrlb(x, one, cache, scen), bcrlb(x, cache, scen, alpha=a1), rtol=1e-12)
    two = _alpha_prior(base, [a1, a2], [0.3, 0.7])
    expect = 0.3 * bcrlb(x, cache, scen, alpha=a1) + 0.7 * bcrlb(x, cache, scen, alpha=a2)
    assert_allclose(modified_bcrlb(x, two, cache, scen), expect, rtol=1e-12)
    sym = _alpha_prior(base, [a1, -a1], [0.5, 0.5])
    assert_allclose(modified_bcrlb(x, sym, cache, scen), bcrlb(x, cache, scen, alpha=a1), rtol=1e-12)
    with pytest.raises(ValueError):
        modified_bcrlb(np.zeros(scen.N), one, cache, scen)


def test_modified_bcrlb_decreasing_in_metric():
    scen = small_scenario()
    base = PriorGrid.uniform(40 * DEG, 80 * DEG, 21)
    cache = build_cache(scen, base)
    prior = base.with_alpha_lattice(scen.sensing.alpha_prior_mean, scen.sensing.alpha_prior_var, per_axis=5)
    rng = np.random.default_rng(9)
    xs = [_unit(rng, scen.N) for _ in range(20)]
    order = np.argsort([metric_A(x, cache, scen) for x in xs])
    B = np.array([modified_bcrlb(xs[i], prior, cache, scen) for i in order])
    assert np.all(np.diff(B) < 0)
