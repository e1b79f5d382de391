import numpy as np
import pytest

from fcfp_ris.scenario import build_scenario, default_prior
from fcfp_ris.sensing import build_cache
from fcfp_ris.solvers import SolverConfig, feasible_init


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def small_scenario(seed=0, M=3, rows=2, cols=3, users=(110, 130), gamma_db=-10, nodes=21, **extra):
    cfg = {
        "bs_antennas": M,
        "ris": {"rows": rows, "cols": cols},
        "sinr_threshold": f"{gamma_db} dB",
        "comm_users": [{"angle": f"{a} deg", "power": "15 dBm"} for a in users],
        "sensing": {"prior": {"nodes": nodes}},
    }
    cfg.update(extra)
    return build_scenario(cfg, seed)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def desk():
    """Desk-profile scenario with its cache and a feasible start."""
    scen = build_scenario({}, 0, desk=True)
    prior = default_prior(scen)
    cache = build_cache(scen, prior)
    cfg = SolverConfig()
    x0 = feasible_init(scen, cache, np.random.default_rng(0), cfg)
    return scen, prior, cache, cfg, x0


# --- acceptance summary ----------------------------------------------------------

ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record ``(criterion, passed, detail)``; printed as one line each at the end of the run."""

    def record(key, passed, detail):
        ACCEPTANCE[key] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[2:])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key} {'PASS' if ok else 'FAIL'}: {detail}")
