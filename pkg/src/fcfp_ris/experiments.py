"""Named experiments: each writes canonical CSVs, optional SVGs and a JSON manifest.

Every sweep point derives its generator from ``SeedSequence([seed, ...])``
with the point's indices, so results do not depend on worker count or
evaluation order.
"""

import copy
import csv
import hashlib
import json
import math
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .bayes import PosteriorState, marginals, monte_carlo_mse, posterior_update, simulate_rx, write_mse_csv, write_posterior_csv
from .comm import beampattern, beampattern_db, combiners, default_phi_grid
from .plotting import PlotSpec, emit_plot
from .scenario import DEFAULT_CONFIG, DEG, ConfigError, PriorGrid, build_scenario, default_prior
from .sensing import build_cache
from .solvers import (
    SolverConfig,
    feasible_init,
    is_feasible,
    solve_ao,
    solve_cmlt,
    solve_ipga,
    solve_pnqt,
    solve_unknown_alpha,
)

__all__ = [
    "EXPERIMENTS",
    "SOLVER_NAMES",
    "ExperimentSpec",
    "run_experiment",
    "validate_experiment",
    "design",
    "worker_count",
    "WORKERS_ENV",
    "TABLE2_SCENARIOS",
]

EXPERIMENTS = (
    "beampattern", "posterior-evolution", "mse-vs-power", "bcrlb-vs-power",
    "bcrlb-vs-sinr", "bcrlb-vs-rician", "runtime-bench", "table2",
)
SOLVER_NAMES = ("pnqt", "cmlt", "ipga", "ao", "unknown-alpha")
WORKERS_ENV = "FCFP_RIS_WORKERS"
TABLE2_SCENARIOS = {1: (110, 130), 2: (110, 120, 130), 3: (100, 110, 120, 130)}
BENCH_METHODS = ("cmlt", "pnqt", "ipga", "ao")
ORDER_RTOL = 1e-9

# default sweeps (full scale, desk scale)
DEFAULT_SWEEPS = {
    "beampattern": (["uniform", "deterministic"], ["uniform", "deterministic"]),
    "posterior-evolution": (["known", "unknown"], ["known", "unknown"]),
    "mse-vs-power": ([9, 12, 15, 18, 21], [9, 12, 15, 18, 21]),
    "bcrlb-vs-power": ([9, 12, 15, 18, 21], [9, 12, 15, 18, 21]),
    "bcrlb-vs-sinr": ([0, 5, 10, 15], [-10, -5, 0, 5]),
    "bcrlb-vs-rician": ([0, 1, 5, 10], [0, 1, 5, 10]),
    "runtime-bench": ([100, 225, 400], [36, 64, 100]),
    "table2": ([1, 2, 3], [1, 2, 3]),
}
DEFAULT_SOLVER = {
    "beampattern": "pnqt", "posterior-evolution": "pnqt", "mse-vs-power": "cmlt",
    "bcrlb-vs-sinr": "cmlt", "bcrlb-vs-rician": "cmlt",
}
EXPERIMENT_KEYS = {
    "solver", "sweep", "trials", "iterations", "realizations", "methods", "solver_options",
    "pnqt_budget_factor", "deterministic_eta",
}


@dataclass
class ExperimentSpec:
    """A resolved experiment request.

    ``scenario`` is the scenario config dict (without the ``experiment``
    section); ``options`` holds that section.
    """

    name: str
    scenario: dict
    seed: int
    out_dir: str
    desk: bool = False
    plots: bool = True
    scenario_path: str | None = None
    options: dict = field(default_factory=dict)

    @property
    def solver(self):
        return self.options.get("solver", DEFAULT_SOLVER.get(self.name, "cmlt"))

    @property
    def sweep(self):
        full, desk = DEFAULT_SWEEPS[self.name]
        return list(self.options.get("sweep", desk if self.desk else full))

    @property
    def solver_config(self):
        return SolverConfig.from_dict(self.options.get("solver_options", {}))

    def digest(self):
        blob = json.dumps(
            {"name": self.name, "scenario": self.scenario, "options": self.options, "seed": self.seed, "desk": self.desk},
            sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()


def validate_experiment(name, options, desk=False):
    """Raise :class:`ConfigError` for an unusable experiment section."""
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    if not isinstance(options, dict):
        raise ConfigError("'experiment' must be a JSON object")
    unknown = set(options) - EXPERIMENT_KEYS
    if unknown:
        raise ConfigError(f"unknown experiment options: {sorted(unknown)}")
    spec = ExperimentSpec(name, {}, 0, ".", desk=desk, options=options)
    if spec.solver not in SOLVER_NAMES:
        raise ConfigError(f"unknown solver {spec.solver!r}; choose from {', '.join(SOLVER_NAMES)}")
    for m in options.get("methods", []):
        if m not in SOLVER_NAMES:
            raise ConfigError(f"unknown method {m!r}")
    sweep = spec.sweep
    if not sweep:
        raise ConfigError("sweep must not be empty")
    if name in ("beampattern",):
        bad = [s for s in sweep if s not in ("uniform", "deterministic")]
    elif name == "posterior-evolution":
        bad = [s for s in sweep if s not in ("known", "unknown")]
    elif name == "table2":
        bad = [s for s in sweep if s not in TABLE2_SCENARIOS]
    else:
        bad = [s for s in sweep if not isinstance(s, (int, float)) or isinstance(s, bool) or not math.isfinite(s)]
    if bad:
        raise ConfigError(f"invalid sweep values for {name}: {bad}")
    if name == "runtime-bench":
        for n in sweep:
            if n < 1 or int(math.isqrt(int(n))) ** 2 != n:
                raise ConfigError(f"runtime-bench sweep values must be square element counts, got {n}")
    if name == "bcrlb-vs-rician" and any(z < 0 for z in sweep):
        raise ConfigError("Rician factors must be nonnegative")
    for key in ("trials", "iterations", "realizations"):
        if key in options and (not isinstance(options[key], int) or options[key] < 1):
            raise ConfigError(f"{key} must be a positive integer")
    try:
        spec.solver_config
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid solver_options: {exc}") from None


def worker_count():
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(n, 1)


def _rng(*key):
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in key]))


def _scenario(spec, seed=None, **override):
    return build_scenario(copy.deepcopy(spec.scenario), spec.seed if seed is None else seed, desk=spec.desk,
                          override=override)


def _power_override(spec, dbm):
    """Override setting every user's transmit power to ``dbm``."""
    users = spec.scenario.get("comm_users", DEFAULT_CONFIG["comm_users"])
    return {"comm_users": [dict(u, power=f"{dbm} dBm") for u in users], "sensing": {"power": f"{dbm} dBm"}}


_SOLVE = {"pnqt": solve_pnqt, "cmlt": solve_cmlt, "ipga": solve_ipga, "ao": solve_ao}


def design(scen, prior, method, cfg, rng, x0=None, cache=None):
    """Optimize ``x`` with ``method`` from ``x0`` (or a feasible random start)."""
    cache = cache or build_cache(scen, prior)
    if x0 is None:
        x0 = feasible_init(scen, cache, rng, cfg)
    if method == "unknown-alpha":
        return solve_unknown_alpha(scen, prior, cfg, x0, cache=cache), cache
    return _SOLVE[method](scen, cache, cfg, x0), cache


def _map(fn, args, workers):
    if workers <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=min(workers, len(args))) as ex:
        return list(ex.map(fn, *zip(*args)))


def _f(v):
    """Canonical float text (round-trips, platform-stable)."""
    return repr(float(v))


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for r in rows:
            wr.writerow([_f(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return path


# ---------------------------------------------------------------- beampattern

def _beampattern_point(spec, idx, mode):
    scen = _scenario(spec)
    if mode == "uniform":
        prior = default_prior(scen)
    else:
        prior = PriorGrid.point(spec.options.get("deterministic_eta", 60) * DEG)
    rep, cache = design(scen, prior, spec.solver, spec.solver_config, _rng(spec.seed, idx))
    cs = combiners(rep.x_final, cache, scen)
    phi = default_phi_grid()
    cols = [beampattern_db(beampattern(w, rep.x_final, phi, scen)) for w in cs.w_comm]
    cols.append(beampattern_db(beampattern(cs.w_sense, rep.x_final, phi, scen)))
    return {"mode": mode, "phi": phi, "cols": cols, "K": scen.K, "status": rep.status, "bcrlb": rep.bcrlb_final,
            "wall": rep.wall_time}


def _run_beampattern(spec, out, workers):
    res = _map(_beampattern_point, [(spec, i, m) for i, m in enumerate(spec.sweep)], workers)
    files, notes, plots = [], [], []
    for r in res:
        header = ["phi_deg"] + [f"Q_dB_user{k + 1}" for k in range(r["K"])] + ["Q_dB_sensing"]
        rows = [[round(float(p / DEG), 6), *[float(c[i]) for c in r["cols"]]] for i, p in enumerate(r["phi"])]
        path = _write_csv(out / f"beampattern_{r['mode']}.csv", header, rows)
        files.append(path)
        plots.append((path, PlotSpec("phi_deg", tuple(header[1:]), title=f"Beampattern ({r['mode']} prior)",
                                     xlabel="phi [deg]", ylabel="Q [dB]")))
        notes.append({"mode": r["mode"], "status": r["status"], "bcrlb_deg2": r["bcrlb"], "wall_time_s": r["wall"]})
    return files, plots, notes


# ------------------------------------------------------- posterior evolution

def _alpha_cell(grid):
    re = np.unique(np.round(grid.alpha_nodes.real, 15))
    return float(np.min(np.diff(re))) if re.size > 1 else float("inf")


def _posterior_point(spec, idx, case):
    known = case == "known"
    scen = _scenario(spec, sensing={"alpha_known": known})
    prior = default_prior(scen)
    method = spec.solver if known else "unknown-alpha"
    iters = spec.options.get("iterations", 3 if known else 5)
    cfg = spec.solver_config
    state = PosteriorState.from_prior(prior)
    snaps, summary = [state], []
    eta0 = scen.sensing.eta_true
    cell = _alpha_cell(prior) if prior.has_alpha else None
    for t in range(1, iters + 1):
        cur = state.as_prior()
        rep, cache = design(scen, cur, method, cfg, _rng(spec.seed, idx, t))
        rng = _rng(spec.seed, idx, t, 1)
        Y = np.array([simulate_rx(rep.x_final, scen, rng, s) for s in range(scen.coherence_T)])
        state = posterior_update(state, Y, rep.x_final, scen)
        snaps.append(state)
        m = marginals(state)
        row = [case, t, method, rep.status, float(rep.bcrlb_final), state.mass_within(eta0, 2 * DEG),
               float(state.grid.eta_nodes[np.argmax(m["eta_marginal"])] / DEG)]
        if prior.has_alpha:
            a = state.grid.alpha_nodes[np.argmax(m["alpha_marginal"])]
            at = scen.sensing.alpha_true
            ok = abs(a.real - at.real) <= cell * (1 + 1e-9) and abs(a.imag - at.imag) <= cell * (1 + 1e-9)
            row += [float(a.real), float(a.imag), int(ok)]
        else:
            row += ["", "", ""]
        summary.append(row)
    return {"case": case, "snaps": snaps, "summary": summary}


def _run_posterior(spec, out, workers):
    res = _map(_posterior_point, [(spec, i, c) for i, c in enumerate(spec.sweep)], workers)
    files, plots, rows = [], [], []
    for r in res:
        path = out / f"posterior_{r['case']}.csv"
        write_posterior_csv(path, r["snaps"])
        files.append(path)
        plots.append((path, PlotSpec("node", ("weight",), group="iteration", filters={"variable": "eta_deg"},
                                     title=f"Posterior of eta (alpha {r['case']})", xlabel="eta [deg]")))
        rows += r["summary"]
    header = ["case", "iteration", "solver", "status", "design_bcrlb_deg2", "mass_within_2deg", "eta_map_deg",
              "alpha_mode_re", "alpha_mode_im", "alpha_mode_within_cell"]
    files.append(_write_csv(out / "posterior_summary.csv", header, rows))
    return files, plots, [{"case": r[0], "iteration": r[1], "status": r[3]} for r in rows]


# ------------------------------------------------------------ MSE vs power

def _mse_point(spec, idx, dbm, trials):
    scen = _scenario(spec, **_power_override(spec, dbm))
    uniform = PriorGrid.uniform(*scen.eta_prior, scen.prior_nodes)
    designs = {"bcrlb": uniform, "crlb": PriorGrid.point(0.5 * sum(scen.eta_prior))}
    rows, notes = [], []
    for j, (name, prior) in enumerate(designs.items()):
        rep, _ = design(scen, prior, spec.solver, spec.solver_config, _rng(spec.seed, idx, j))
        mc = monte_carlo_mse(scen, rep.x_final, trials, _rng(spec.seed, idx, j, 1), prior=uniform)
        rows.append({"power_dbm": float(dbm), "design": name, "mse_deg2": mc["mse_deg2"], "bcrlb_deg2": float(mc["bcrlb_deg2"]),
                     "trials": trials, "crlb_true_deg2": mc["crlb_true_deg2"], "mse_stderr_deg2": mc["mse_stderr_deg2"],
                     "boundary_hits": mc["boundary_hits"], "status": rep.status})
        notes.append({"power_dbm": dbm, "design": name, "status": rep.status, "wall_time_s": rep.wall_time})
    return rows, notes


def _run_mse(spec, out, workers):
    trials = spec.options.get("trials", 1000 if spec.desk else 10000)
    res = _map(_mse_point, [(spec, i, p, trials) for i, p in enumerate(spec.sweep)], workers)
    rows = [r for rs, _ in res for r in rs]
    path = out / "mse_vs_power.csv"
    write_mse_csv(path, rows)
    plot = PlotSpec("power_dbm", ("mse_deg2", "bcrlb_deg2"), group="design", log_y=True,
                    title="MSE and BCRLB vs power", xlabel="power [dBm]", ylabel="deg^2")
    return [path], [(path, plot)], [n for _, ns in res for n in ns]


# ----------------------------------------------------------- BCRLB sweeps

def _bcrlb_point(spec, idx, override, methods, tag):
    scen = _scenario(spec, **override)
    prior = default_prior(scen)
    cache = build_cache(scen, prior)
    x0 = feasible_init(scen, cache, _rng(spec.seed, idx), spec.solver_config)
    rows, notes = [], []
    for m in methods:
        rep, _ = design(scen, prior, m, spec.solver_config, None, x0=x0, cache=cache)
        ok = rep.status != "infeasible-init"
        rows.append([tag, m, float(rep.bcrlb_final) if ok else float("nan"), rep.status])
        notes.append({"point": tag, "method": m, "status": rep.status, "wall_time_s": rep.wall_time})
    return rows, notes


def _run_bcrlb_power(spec, out, workers):
    methods = spec.options.get("methods", list(BENCH_METHODS))
    args = [(spec, i, _power_override(spec, p), methods, float(p)) for i, p in enumerate(spec.sweep)]
    res = _map(_bcrlb_point, args, workers)
    path = _write_csv(out / "bcrlb_vs_power.csv", ["power_dbm", "method", "bcrlb_deg2", "status"],
                      [r for rs, _ in res for r in rs])
    plot = PlotSpec("power_dbm", ("bcrlb_deg2",), group="method", log_y=True, title="BCRLB vs power",
                    xlabel="power [dBm]", ylabel="BCRLB [deg^2]")
    return [path], [(path, plot)], [n for _, ns in res for n in ns]


def _run_bcrlb_sinr(spec, out, workers):
    methods = spec.options.get("methods", [spec.solver])
    args = [(spec, i, {"sinr_threshold": f"{g} dB"}, methods, float(g)) for i, g in enumerate(spec.sweep)]
    res = _map(_bcrlb_point, args, workers)
    path = _write_csv(out / "bcrlb_vs_sinr.csv", ["sinr_threshold_db", "method", "bcrlb_deg2", "status"],
                      [r for rs, _ in res for r in rs])
    plot = PlotSpec("sinr_threshold_db", ("bcrlb_deg2",), group="method", log_y=True, title="BCRLB vs SINR threshold",
                    xlabel="SINR threshold [dB]", ylabel="BCRLB [deg^2]")
    return [path], [(path, plot)], [n for _, ns in res for n in ns]


def _rician_point(spec, r, zetas):
    """One channel realization swept over ``zetas``; each factor keeps the best of a fresh start and the previous optimum."""
    seed = spec.seed + r
    rows, notes, prev = [], [], None
    for i, z in enumerate(zetas):
        scen = _scenario(spec, seed=seed, rician_factor=float(z))
        prior = default_prior(scen)
        cache = build_cache(scen, prior)
        cfg = spec.solver_config
        starts = [feasible_init(scen, cache, _rng(spec.seed, r, i), cfg)]
        if prev is not None and is_feasible(prev, cache, scen):
            starts.append(prev)
        best = None
        for x0 in starts:
            rep, _ = design(scen, prior, spec.solver, cfg, None, x0=x0, cache=cache)
            if rep.status != "infeasible-init" and (best is None or rep.bcrlb_final < best.bcrlb_final):
                best = rep
        if best is None:
            rows.append([r, float(z), float("nan"), "infeasible-init"])
            notes.append({"realization": r, "zeta": z, "status": "infeasible-init"})
            continue
        prev = best.x_final
        rows.append([r, float(z), float(best.bcrlb_final), best.status])
        notes.append({"realization": r, "zeta": z, "status": best.status, "starts": len(starts)})
    return rows, notes


def _run_bcrlb_rician(spec, out, workers):
    n = spec.options.get("realizations", 1)
    res = _map(_rician_point, [(spec, r, spec.sweep) for r in range(n)], workers)
    rows = [row for rs, _ in res for row in rs]
    path = _write_csv(out / "bcrlb_vs_rician.csv", ["realization", "zeta", "bcrlb_deg2", "status"], rows)
    mono = []
    for r in range(n):
        b = [row[2] for row in rows if row[0] == r]
        ok = all(np.isfinite(b)) and all(b[i + 1] >= b[i] * (1 - ORDER_RTOL) for i in range(len(b) - 1))
        mono.append([r, int(ok)])
    files = [path, _write_csv(out / "rician_monotone.csv", ["realization", "nondecreasing"], mono)]
    plot = PlotSpec("zeta", ("bcrlb_deg2",), group="realization", log_y=True, title="BCRLB vs Rician factor",
                    xlabel="Rician factor", ylabel="BCRLB [deg^2]")
    return files, [(path, plot)], [x for _, ns in res for x in ns]


# ----------------------------------------------------------- runtime bench

def _run_runtime(spec, out, workers):
    factor = float(spec.options.get("pnqt_budget_factor", 3.0))
    rows, notes = [], []
    cfg = spec.solver_config
    for i, n in enumerate(spec.sweep):
        side = math.isqrt(int(n))
        scen = _scenario(spec, ris={"rows": side, "cols": side})
        prior = default_prior(scen)
        cache = build_cache(scen, prior)
        x0 = feasible_init(scen, cache, _rng(spec.seed, i), cfg)
        cm = solve_cmlt(scen, cache, cfg, x0)
        pn = solve_pnqt(scen, cache, cfg, x0, time_budget=factor * max(cm.wall_time, 1e-3))
        for rep in (cm, pn):
            it = rep.iterations["inner"]
            if rep.status == "infeasible-init":
                per = float("nan")
            elif rep.method == "cmlt":
                per = rep.extra["iter_ms_mean"] / 1e3
            else:
                per = rep.wall_time / max(it, 1)
            rows.append([int(n), rep.method, it, per, rep.wall_time, rep.status, int(rep.extra.get("budget_hit", False)),
                         float(rep.bcrlb_final)])
            notes.append({"N": n, "method": rep.method, "status": rep.status})
    header = ["N", "method", "iterations", "per_iter_s", "total_s", "status", "budget_hit", "bcrlb_deg2"]
    path = _write_csv(out / "runtime_bench.csv", header, rows)
    plot = PlotSpec("N", ("per_iter_s",), group="method", log_y=True, title="Per-iteration runtime",
                    xlabel="N", ylabel="seconds")
    return [path], [(path, plot)], notes


# ----------------------------------------------------------------- table 2

def _table2_point(spec, sid, r, methods):
    users = [{"angle": f"{a} deg", "power": "15 dBm"} for a in TABLE2_SCENARIOS[sid]]
    scen = _scenario(spec, seed=spec.seed + r, comm_users=users)
    prior = default_prior(scen)
    cache = build_cache(scen, prior)
    x0 = feasible_init(scen, cache, _rng(spec.seed, sid, r), spec.solver_config)
    rows, notes = [], []
    for m in methods:
        rep, _ = design(scen, prior, m, spec.solver_config, None, x0=x0, cache=cache)
        ok = rep.status != "infeasible-init"
        rows.append([sid, r, m, float(rep.bcrlb_final) if ok else float("nan"), rep.status, rep.iterations["inner"]])
        notes.append({"scenario": sid, "realization": r, "method": m, "status": rep.status, "wall_time_s": rep.wall_time})
    return rows, notes


def _ordering_holds(b, methods):
    vals = [b[m] for m in methods]
    if not all(np.isfinite(vals)):
        return False
    return all(vals[i] <= vals[i + 1] * (1 + ORDER_RTOL) for i in range(len(vals) - 1))


def _run_table2(spec, out, workers):
    methods = list(spec.options.get("methods", BENCH_METHODS))
    n = spec.options.get("realizations", 10)
    args = [(spec, sid, r, methods) for sid in spec.sweep for r in range(n)]
    res = _map(_table2_point, args, workers)
    rows = [row for rs, _ in res for row in rs]
    runs = _write_csv(out / "table2_runs.csv", ["scenario", "realization", "method", "bcrlb_deg2", "status", "iterations"], rows)
    summary, order = [], []
    for sid in spec.sweep:
        for m in methods:
            b = np.array([row[3] for row in rows if row[0] == sid and row[2] == m])
            fin = b[np.isfinite(b)]
            summary.append([sid, m, float(fin.mean()) if fin.size else float("nan"),
                            float(np.median(fin)) if fin.size else float("nan"), int(fin.size), int(b.size)])
        holds = 0
        for r in range(n):
            b = {row[2]: row[3] for row in rows if row[0] == sid and row[1] == r}
            holds += _ordering_holds(b, [m for m in BENCH_METHODS if m in b]) if set(BENCH_METHODS) <= set(b) else 0
        order.append([sid, n, holds])
    files = [
        runs,
        _write_csv(out / "table2_summary.csv", ["scenario", "method", "mean_bcrlb_deg2", "median_bcrlb_deg2", "feasible_runs", "runs"], summary),
        _write_csv(out / "table2_ordering.csv", ["scenario", "realizations", "ordering_holds"], order),
    ]
    plot = PlotSpec("scenario", ("mean_bcrlb_deg2",), group="method", log_y=True, title="Mean optimized BCRLB",
                    xlabel="scenario", ylabel="BCRLB [deg^2]")
    return files, [(files[1], plot)], [x for _, ns in res for x in ns]


_RUNNERS = {
    "beampattern": _run_beampattern,
    "posterior-evolution": _run_posterior,
    "mse-vs-power": _run_mse,
    "bcrlb-vs-power": _run_bcrlb_power,
    "bcrlb-vs-sinr": _run_bcrlb_sinr,
    "bcrlb-vs-rician": _run_bcrlb_rician,
    "runtime-bench": _run_runtime,
    "table2": _run_table2,
}


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_experiment(spec, workers=None):
    """Run ``spec`` and write its outputs plus ``manifest.json`` into ``spec.out_dir``.

    Returns ``(exit_status, manifest)``.  Exit status is 0 when every point
    ran, 3 when some solver started from an infeasible point (outputs are
    kept and the points are listed under ``infeasible``).
    """
    validate_experiment(spec.name, spec.options, spec.desk)
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    workers = worker_count() if workers is None else workers
    t0 = time.perf_counter()
    files, plots, notes = _RUNNERS[spec.name](spec, out, workers)
    svgs, plot_errors = [], []
    if spec.plots:
        for csv_path, ps in plots:
            try:
                svgs.append(emit_plot(csv_path, ps))
            except ValueError as exc:
                plot_errors.append(f"{Path(csv_path).name}: {exc}")
    infeasible = [n for n in notes if n.get("status") == "infeasible-init"]
    manifest = {
        "experiment": spec.name,
        "seed": spec.seed,
        "desk": spec.desk,
        "config_path": spec.scenario_path,
        "spec_hash": spec.digest(),
        "options": spec.options,
        "versions": {"fcfp_ris": __version__, "python": platform.python_version(), "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "workers": workers,
        "wall_time_s": time.perf_counter() - t0,
        "files": [{"path": Path(f).name, "sha256": _sha256(f), "kind": Path(f).suffix[1:]} for f in [*files, *svgs]],
        "points": notes,
        "infeasible": infeasible,
        "plot_errors": plot_errors,
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, default=_json_default)
    return (3 if infeasible else 0), manifest


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    return str(o)
