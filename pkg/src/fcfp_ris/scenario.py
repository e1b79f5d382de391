"""Physical world: array responses, cascaded channels, priors and config loading."""

import json
import re
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

__all__ = [
    "ConfigError",
    "ArrayGeometry",
    "CommUser",
    "SensingUser",
    "Scenario",
    "PriorGrid",
    "array_response",
    "array_response_derivative",
    "sensing_matrix",
    "sensing_matrix_derivative",
    "comm_matrix",
    "sample_rician_sensing_channel",
    "db_to_linear",
    "dbm_to_watts",
    "parse_quantity",
    "load_scenario",
    "load_scenario_file",
    "build_scenario",
    "default_prior",
    "DEFAULT_CONFIG",
    "DESK_OVERRIDES",
]

DEG = np.pi / 180.0


class ConfigError(ValueError):
    """Invalid or incomplete scenario configuration."""


@dataclass(frozen=True)
class ArrayGeometry:
    n_row: int
    n_col: int
    spacing_ratio: float = 0.5

    def __post_init__(self):
        if self.n_row < 1 or self.n_col < 1:
            raise ConfigError("RIS must have at least one row and one column")
        if not self.spacing_ratio > 0:
            raise ConfigError("spacing_ratio must be positive")

    @property
    def N(self):
        return self.n_row * self.n_col

    @property
    def tau(self):
        return 2.0 * np.pi * self.spacing_ratio

    @cached_property
    def column_index(self):
        """``v(n) = mod(n - 1, n_col)`` for n = 1..N."""
        return np.arange(self.N) % self.n_col


def array_response(eta, geom):
    """RIS response ``exp(j tau cos(eta) v(n))``; vectorized over ``eta``."""
    eta = np.asarray(eta, dtype=float)
    phase = geom.tau * np.cos(eta)[..., None] * geom.column_index
    return np.exp(1j * phase)


def array_response_derivative(eta, geom):
    """Derivative of :func:`array_response` with respect to ``eta``."""
    eta = np.asarray(eta, dtype=float)
    v = array_response(eta, geom)
    return (-1j * geom.tau * np.sin(eta)[..., None] * geom.column_index) * v


def sensing_matrix(eta, G, geom):
    """``U(eta) = G diag(v(eta))``; returns shape (..., M, N)."""
    G = np.asarray(G)
    v = array_response(eta, geom)
    if G.shape[-1] != v.shape[-1]:
        raise ConfigError(f"G has {G.shape[-1]} columns but the RIS has {v.shape[-1]} elements")
    return G * v[..., None, :]


def sensing_matrix_derivative(eta, G, geom):
    """``dU/deta = G diag(dv/deta)``; returns shape (..., M, N)."""
    G = np.asarray(G)
    dv = array_response_derivative(eta, geom)
    if G.shape[-1] != dv.shape[-1]:
        raise ConfigError(f"G has {G.shape[-1]} columns but the RIS has {dv.shape[-1]} elements")
    return G * dv[..., None, :]


@dataclass(frozen=True)
class CommUser:
    angle: float
    beta: complex
    power: float


@dataclass(frozen=True)
class SensingUser:
    """Sensing user.

    ``alpha`` is the fading coefficient used by the optimizer; ``None``
    means it is unknown and a prior over ``alpha`` must be supplied.
    ``alpha_true`` is the simulation ground truth in both cases.
    """

    power: float
    eta_true: float
    alpha_true: complex
    alpha: complex | None
    alpha_prior_mean: complex
    alpha_prior_var: float


@dataclass(frozen=True)
class Scenario:
    M: int
    geometry: ArrayGeometry
    G: np.ndarray
    users: tuple
    sensing: SensingUser
    noise_power: float
    sinr_threshold: float
    eta_prior: tuple = (40 * DEG, 80 * DEG)
    prior_nodes: int = 101
    rician_zeta: float = 0.0
    coherence_T: int = 1
    seed: int = 0
    config: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.G.shape != (self.M, self.geometry.N):
            raise ConfigError(f"G must be {self.M}x{self.geometry.N}, got {self.G.shape}")
        if self.K >= min(self.M, self.N):
            raise ConfigError(
                f"need K < min(M, N) for spatial separation, got K={self.K}, M={self.M}, N={self.N}"
            )
        powers = [u.power for u in self.users] + [self.sensing.power, self.noise_power]
        if any(not p > 0 for p in powers):
            raise ConfigError("all powers must be positive")
        if self.sinr_threshold < 0:
            raise ConfigError("SINR threshold must be nonnegative")
        if self.rician_zeta < 0:
            raise ConfigError("Rician factor must be nonnegative")

    @property
    def N(self):
        return self.geometry.N

    @property
    def K(self):
        return len(self.users)

    @cached_property
    def powers(self):
        return np.array([u.power for u in self.users], dtype=float)

    @cached_property
    def H(self):
        """Stacked communication matrices, shape (K, M, N)."""
        if self.K == 0:
            return np.zeros((0, self.M, self.N), dtype=complex)
        return np.stack([comm_matrix(k, self) for k in range(self.K)])

    @property
    def sinr_thresholds(self):
        """Per-user thresholds on gamma_k / p_k, i.e. Gamma / p_k."""
        return self.sinr_threshold / self.powers

    @property
    def los_scale(self):
        return np.sqrt(1.0 / (1.0 + self.rician_zeta))

    @property
    def nlos_scale(self):
        return np.sqrt(self.rician_zeta / (1.0 + self.rician_zeta))

    @cached_property
    def gram_G(self):
        return self.G @ self.G.conj().T

    @property
    def alpha_known(self):
        return self.sensing.alpha is not None

    def alpha_second_moment(self):
        """``E|alpha|^2`` under the optimizer's knowledge of alpha."""
        s = self.sensing
        if s.alpha is not None:
            return float(abs(s.alpha) ** 2)
        return float(abs(s.alpha_prior_mean) ** 2 + s.alpha_prior_var)

    def with_users(self, users):
        return replace(self, users=tuple(users))


def comm_matrix(k, scen):
    """``H_k = beta_k G diag(v(phi_k))``."""
    if not 0 <= k < scen.K:
        raise IndexError(f"user index {k} out of range for K={scen.K}")
    u = scen.users[k]
    return u.beta * sensing_matrix(u.angle, scen.G, scen.geometry)


def sample_rician_sensing_channel(eta, zeta, alpha, G, geom, rng):
    """Draw the sensing user's cascaded channel matrix under Rician fading.

    Returns ``alpha (sqrt(1/(1+zeta)) U(eta) + sqrt(zeta/(1+zeta)) G diag(v~))``
    with ``v~ ~ CN(0, I)``.  At ``zeta == 0`` no random numbers are drawn.
    """
    if zeta < 0:
        raise ConfigError("Rician factor must be nonnegative")
    U = sensing_matrix(eta, G, geom)
    if zeta == 0:
        return alpha * U
    n = U.shape[-1]
    vt = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    return alpha * (np.sqrt(1.0 / (1.0 + zeta)) * U + np.sqrt(zeta / (1.0 + zeta)) * (G * vt))


@dataclass(frozen=True)
class PriorGrid:
    """Discrete prior over eta, optionally joint with a lattice over alpha.

    ``cond_weights[i, j]`` is the weight of ``eta_nodes[j]`` given
    ``alpha_nodes[i]``; for an eta-only grid it has a single row.
    ``fip`` holds the prior Fisher information per alpha node (rad^-2).
    """

    eta_nodes: np.ndarray
    cond_weights: np.ndarray
    alpha_nodes: np.ndarray | None = None
    alpha_weights: np.ndarray | None = None
    fip: np.ndarray | None = None

    def __post_init__(self):
        eta = np.asarray(self.eta_nodes, dtype=float)
        W = np.atleast_2d(np.asarray(self.cond_weights, dtype=float))
        object.__setattr__(self, "eta_nodes", eta)
        object.__setattr__(self, "cond_weights", W)
        if eta.ndim != 1 or eta.size < 1:
            raise ConfigError("eta_nodes must be a nonempty vector")
        if eta.size > 1 and np.any(np.diff(eta) <= 0):
            raise ConfigError("eta_nodes must be strictly increasing")
        if W.shape[1] != eta.size:
            raise ConfigError("cond_weights columns must match eta_nodes")
        if np.any(W < 0) or not np.allclose(W.sum(axis=1), 1.0, atol=1e-12):
            raise ConfigError("each eta weight family must be nonnegative and sum to 1")
        S = W.shape[0]
        if self.alpha_nodes is not None:
            a = np.asarray(self.alpha_nodes, dtype=complex)
            w = np.asarray(self.alpha_weights, dtype=float)
            if a.shape != (S,) or w.shape != (S,):
                raise ConfigError("alpha nodes/weights must match cond_weights rows")
            if np.any(w < 0) or not np.isclose(w.sum(), 1.0, atol=1e-12):
                raise ConfigError("alpha weights must be nonnegative and sum to 1")
            object.__setattr__(self, "alpha_nodes", a)
            object.__setattr__(self, "alpha_weights", w)
        elif S != 1:
            raise ConfigError("a joint grid needs alpha nodes")
        fip = np.zeros(S) if self.fip is None else np.broadcast_to(np.asarray(self.fip, float), (S,)).copy()
        object.__setattr__(self, "fip", fip)

    @classmethod
    def uniform(cls, low, high, nodes):
        """Uniform eta prior on ``[low, high]`` (radians) with FIP = 0."""
        if nodes == 1:
            eta = np.array([0.5 * (low + high)])
        else:
            eta = np.linspace(low, high, nodes)
        return cls(eta, np.full((1, eta.size), 1.0 / eta.size))

    @classmethod
    def point(cls, eta):
        return cls(np.array([float(eta)]), np.ones((1, 1)))

    @property
    def L(self):
        return self.eta_nodes.size

    @property
    def S(self):
        return self.cond_weights.shape[0]

    @property
    def has_alpha(self):
        return self.alpha_nodes is not None

    @property
    def eta_weights(self):
        """Marginal eta weights."""
        if not self.has_alpha:
            return self.cond_weights[0]
        return self.alpha_weights @ self.cond_weights

    def joint_weights(self):
        """Joint lattice weights, shape (S, L)."""
        if not self.has_alpha:
            return self.cond_weights.copy()
        return self.alpha_weights[:, None] * self.cond_weights

    def with_alpha_lattice(self, mean, var, per_axis=11, span=3.0):
        """Attach an independent complex-Gaussian alpha prior on a square lattice.

        The lattice spans ``mean +- span * sqrt(var / 2)`` on each of the real
        and imaginary axes.
        """
        sd = np.sqrt(var / 2.0)
        offs = np.linspace(-span * sd, span * sd, per_axis)
        re, im = np.meshgrid(mean.real + offs, mean.imag + offs, indexing="ij")
        nodes = (re + 1j * im).ravel()
        logw = -np.abs(nodes - mean) ** 2 / var
        w = np.exp(logw - logw.max())
        w /= w.sum()
        W = np.repeat(self.eta_weights[None, :], nodes.size, axis=0)
        return PriorGrid(self.eta_nodes, W, nodes, w, np.full(nodes.size, self.fip[0]))

    def with_joint_weights(self, joint):
        """Rebuild from a joint (S, L) weight array over the same nodes."""
        joint = np.asarray(joint, dtype=float)
        if not self.has_alpha:
            return PriorGrid(self.eta_nodes, joint / joint.sum(), fip=self.fip)
        wa = joint.sum(axis=1)
        safe = np.where(wa > 0, wa, 1.0)
        cond = np.where(wa[:, None] > 0, joint / safe[:, None], 1.0 / self.L)
        return PriorGrid(self.eta_nodes, cond, self.alpha_nodes, wa / wa.sum(), self.fip)


def default_prior(scen, nodes=None):
    """Eta prior from the scenario (plus an alpha lattice when alpha is unknown)."""
    low, high = scen.eta_prior
    prior = PriorGrid.uniform(low, high, nodes or scen.prior_nodes)
    if not scen.alpha_known:
        prior = prior.with_alpha_lattice(scen.sensing.alpha_prior_mean, scen.sensing.alpha_prior_var)
    return prior


# --- units and configuration -------------------------------------------------

_QUANTITY = re.compile(r"^\s*([-+−]?\d+(?:\.\d*)?(?:[eE][-+]?\d+)?|[-+−]?\.\d+)\s*([A-Za-z]+)\s*$")


def db_to_linear(x_db):
    return 10.0 ** (x_db / 10.0)


def dbm_to_watts(x_dbm):
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def parse_quantity(text, kind):
    """Parse a unit-suffixed string.

    ``kind`` is ``"power"`` (dBm or W, returns watts), ``"ratio"`` (dB or
    lin, returns a linear ratio) or ``"angle"`` (deg or rad, returns radians).
    """
    if not isinstance(text, str):
        raise ConfigError(f"expected a unit-suffixed string for {kind}, got {text!r}")
    m = _QUANTITY.match(text)
    if m is None:
        raise ConfigError(f"cannot parse {text!r}: a number followed by a unit tag is required")
    value = float(m.group(1).replace("−", "-"))
    unit = m.group(2).lower()
    table = {
        "power": {"dbm": dbm_to_watts, "w": lambda v: v},
        "ratio": {"db": db_to_linear, "lin": lambda v: v},
        "angle": {"deg": lambda v: v * DEG, "rad": lambda v: v},
    }[kind]
    if unit not in table:
        raise ConfigError(f"unit {m.group(2)!r} not valid for {kind} (allowed: {sorted(table)})")
    return table[unit](value)


DEFAULT_CONFIG = {
    "bs_antennas": 8,
    "ris": {"rows": 10, "cols": 10, "spacing_ratio": 0.5},
    "pathloss": {"user_ris": "-56 dB", "ris_bs": "-70 dB"},
    "noise_power": "-90 dBm",
    "sinr_threshold": "10 dB",
    "channel_model": "iid",
    "comm_users": [
        {"angle": "110 deg", "power": "15 dBm"},
        {"angle": "120 deg", "power": "15 dBm"},
        {"angle": "130 deg", "power": "15 dBm"},
    ],
    "sensing": {
        "power": "15 dBm",
        "eta_true": "70 deg",
        "alpha": {"re": 0.7, "im": 0.7},
        "alpha_known": True,
        "alpha_prior": {"mean": {"re": 1.0, "im": 0.0}, "var": 1.0},
        "prior": {"low": "40 deg", "high": "80 deg", "nodes": 101},
    },
    "rician_factor": 0.0,
    "coherence_T": 1,
}

# The 10 dB threshold is out of reach with 36 elements and 4 antennas
# (single-user optimum is near 7 dB), so the desk profile lowers it.
DESK_OVERRIDES = {
    "bs_antennas": 4, "ris": {"rows": 6, "cols": 6}, "max_users": 2, "prior_nodes": 41,
    "sinr_threshold": "0 dB",
}


def _merge(base, over):
    out = dict(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def _complex(obj, what):
    if isinstance(obj, dict) and set(obj) <= {"re", "im"}:
        return complex(float(obj.get("re", 0.0)), float(obj.get("im", 0.0)))
    raise ConfigError(f"{what} must be an object with 're'/'im' fields")


def _ris_bs_channel(model, M, geom, pl_amp, rng):
    if model == "iid":
        return pl_amp * (rng.standard_normal((M, geom.N)) + 1j * rng.standard_normal((M, geom.N))) / np.sqrt(2.0)
    if model == "los":
        # M deterministic paths between a half-wavelength BS ULA and the RIS.
        aod = np.linspace(30, 150, M) * DEG
        aoa = np.linspace(50, 130, M)[::-1] * DEG
        bs = np.exp(1j * np.pi * np.cos(aoa)[:, None] * np.arange(M)[None, :])
        ris = array_response(aod, geom)
        return pl_amp * (bs.T @ ris) / np.sqrt(M)
    raise ConfigError(f"unknown channel_model {model!r} (expected 'iid' or 'los')")


def build_scenario(cfg, seed, desk=False, override=None):
    """Construct a :class:`Scenario` from a parsed config dict and a seed.

    ``desk`` applies the small profile (M, RIS size, user count, prior
    nodes, SINR threshold) on top of ``cfg``; ``override`` is merged last,
    so sweeps can set fields the profile would otherwise replace.
    """
    if seed is None:
        raise ConfigError("an integer seed is required")
    cfg = _merge(DEFAULT_CONFIG, cfg)
    if desk:
        cfg = _merge(cfg, {"bs_antennas": DESK_OVERRIDES["bs_antennas"], "ris": DESK_OVERRIDES["ris"],
                           "sinr_threshold": DESK_OVERRIDES["sinr_threshold"]})
        cfg["sensing"] = _merge(cfg["sensing"], {"prior": {"nodes": DESK_OVERRIDES["prior_nodes"]}})
    if override:
        cfg = _merge(cfg, override)
    if desk:
        cfg["comm_users"] = list(cfg["comm_users"])[: DESK_OVERRIDES["max_users"]]
    try:
        M = int(cfg["bs_antennas"])
        ris = cfg["ris"]
        geom = ArrayGeometry(int(ris["rows"]), int(ris["cols"]), float(ris.get("spacing_ratio", 0.5)))
        pl_user = parse_quantity(cfg["pathloss"]["user_ris"], "ratio")
        pl_bs = parse_quantity(cfg["pathloss"]["ris_bs"], "ratio")
        noise = parse_quantity(cfg["noise_power"], "power")
        gamma = parse_quantity(cfg["sinr_threshold"], "ratio")
        sens = cfg["sensing"]
        prior = sens["prior"]
        eta_prior = (parse_quantity(prior["low"], "angle"), parse_quantity(prior["high"], "angle"))
        nodes = int(prior["nodes"])
    except KeyError as exc:
        raise ConfigError(f"missing required field {exc.args[0]!r}") from None
    if eta_prior[1] < eta_prior[0]:
        raise ConfigError("prior high must not be below low")
    rng = np.random.default_rng(seed)
    G = _ris_bs_channel(cfg["channel_model"], M, geom, np.sqrt(pl_bs), rng)
    g_user = np.sqrt(pl_user)
    users = []
    for i, u in enumerate(cfg["comm_users"]):
        if "angle" not in u or "power" not in u:
            raise ConfigError(f"comm_users[{i}] needs 'angle' and 'power'")
        phase = rng.uniform(-np.pi, np.pi)
        users.append(CommUser(parse_quantity(u["angle"], "angle"), g_user * np.exp(1j * phase),
                              parse_quantity(u["power"], "power")))
    alpha_true = g_user * _complex(sens["alpha"], "sensing.alpha")
    ap = sens["alpha_prior"]
    sensing = SensingUser(
        power=parse_quantity(sens["power"], "power"),
        eta_true=parse_quantity(sens["eta_true"], "angle"),
        alpha_true=alpha_true,
        alpha=alpha_true if sens.get("alpha_known", True) else None,
        alpha_prior_mean=g_user * _complex(ap["mean"], "alpha_prior.mean"),
        alpha_prior_var=pl_user * float(ap["var"]),
    )
    zeta = float(cfg.get("rician_factor", 0.0))
    return Scenario(
        M=M, geometry=geom, G=G, users=tuple(users), sensing=sensing, noise_power=noise,
        sinr_threshold=gamma, eta_prior=eta_prior, prior_nodes=nodes, rician_zeta=zeta,
        coherence_T=int(cfg.get("coherence_T", 1)), seed=int(seed), config=cfg,
    )


def load_scenario(config_text, seed=None, desk=False):
    """Parse a JSON config string into a :class:`Scenario`.

    The seed comes from ``seed`` if given, otherwise from the config's
    top-level ``"seed"`` field, which is then required.
    """
    try:
        cfg = json.loads(config_text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    if seed is None:
        if "seed" not in cfg:
            raise ConfigError("missing required field 'seed'")
        seed = cfg["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed must be an integer")
    cfg = {k: v for k, v in cfg.items() if k != "seed"}
    return build_scenario(cfg, seed, desk=desk)


def load_scenario_file(path, seed=None, desk=False):
    with open(path, encoding="utf-8") as fh:
        return load_scenario(fh.read(), seed=seed, desk=desk)
