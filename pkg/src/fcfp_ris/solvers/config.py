"""Solver configuration, run reports and shared helpers."""

import csv
import json
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ..comm import sinr_all

__all__ = [
    "SolverConfig",
    "SolverReport",
    "STATUSES",
    "project_unit",
    "ratio_slacks",
    "is_feasible",
    "Tracer",
]

STATUSES = ("converged", "max_iter", "infeasible-init", "zero-coefficient-fallback")
FEAS_RTOL = 1e-6


@dataclass(frozen=True)
class SolverConfig:
    """Tuning knobs shared by all solvers.

    ``mu0`` is relative: the initial penalty is ``mu0 * |A(x0)|``.
    """

    mu0: float = 1e-3
    xi: float = 3.0
    max_outer: int = 20
    inner_tol: float = 1e-5
    kkt_tol: float = 1e-8
    dual_tol: float = 1e-10
    max_inner: int = 200
    zero_coeff_eps: float = 1e-8
    ao_bits: int = 8
    penalty_tol: float = 1e-6
    max_iter: int = 20000
    init_restarts: int = 20
    init_margin: float = 0.05
    ipga_stages: int = 8
    ipga_iters: int = 60
    ipga_barrier0: float = 1e-2
    ipga_decay: float = 0.3
    ao_max_sweeps: int = 50

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"SolverConfig.{f.name} must be positive")
        if not self.xi > 1:
            raise ValueError("penalty growth xi must exceed 1")

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown solver options: {sorted(unknown)}")
        return cls(**d)


def project_unit(x):
    """``exp(j arg x)`` with ``arg 0 = 0``."""
    return np.exp(1j * np.angle(np.asarray(x, dtype=complex)))


def ratio_slacks(x, cache, scen):
    """``gamma_k / p_k - Gamma_k`` for every user."""
    if scen.K == 0:
        return np.zeros(0)
    return sinr_all(x, cache, scen) / scen.powers - scen.sinr_thresholds


def is_feasible(x, cache, scen, rtol=FEAS_RTOL):
    s = ratio_slacks(x, cache, scen)
    return bool(np.all(s >= -rtol * np.maximum(scen.sinr_thresholds, 1e-300)))


@dataclass
class SolverReport:
    method: str
    x_final: np.ndarray
    objective_trace: list
    constraint_slacks: list
    bcrlb_final: float
    iterations: dict
    wall_time: float
    status: str
    trace: list = field(default_factory=list)
    phases: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        x = np.asarray(self.x_final)
        d["x_final"] = {"re": x.real.tolist(), "im": x.imag.tolist()}
        d["constraint_slacks"] = [float(s) for s in self.constraint_slacks]
        return d

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2, default=float)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text

    def write_trace_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow(["iteration", "objective", "min_slack", "wall_ms"])
            for row in self.trace:
                wr.writerow([row[0], repr(float(row[1])), repr(float(row[2])), f"{row[3]:.3f}"])


class Tracer:
    """Collects (iteration, objective, min_slack, wall_ms) rows on a monotonic clock."""

    def __init__(self, cache, scen):
        self.cache, self.scen = cache, scen
        self.t0 = time.perf_counter()
        self.rows, self.objective, self.phases = [], [], []

    def record(self, x, objective, phase=0):
        s = ratio_slacks(x, self.cache, self.scen)
        ms = (time.perf_counter() - self.t0) * 1e3
        self.rows.append((len(self.rows), float(objective), float(s.min()) if s.size else 0.0, ms))
        self.objective.append(float(objective))
        self.phases.append(int(phase))

    def elapsed(self):
        return time.perf_counter() - self.t0
