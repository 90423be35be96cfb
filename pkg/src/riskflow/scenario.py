"""Calibration, experiment configuration, and simulation runs.

An :class:`ExperimentConfig` fully describes a regime-switching risk study:
a return family with one parameter set per chain state, a transition matrix
(accepted row- or column-stochastic and stored column-stochastic), an
initial state, confidence level, horizon, number of seeded paths, and which
measures to evaluate.  :func:`run_experiment` simulates each path's chain
and returns, evaluates the static, recursive, and modulated trajectories,
and aggregates summary statistics; :func:`emit_trajectories` writes the
fixed-schema CSV/JSON tables.  Reruns of the same config are byte-identical.

The two bundled reference configurations (:func:`build_reference_experiment`)
cover a Gaussian index-level study and a Weibull daily-increment study: base
parameters are split into a calm and a stressed state at +/-5%, with a
two-state chain, p = 0.99 and a 10-day horizon.  Gaussian base values are an
annual index mean/standard deviation; Weibull base values are the scale and
shape fitted to daily increments.  Scale/location parameters vary by state;
the Weibull shape is held constant across states.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import date
from enum import Enum
from importlib.resources import files as _resource_files
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .distributions import (
    GaussianParams,
    ModelFamily,
    ReturnModel,
    WeibullParams,
    sample,
)
from .dynamic_risk import (
    GAUSSIAN_MODULATED_CVAR_NOTE,
    CvarMode,
    RiskTrajectory,
    modulated_cvar_trajectory,
    modulated_var_trajectory,
    recursive_cvar,
    recursive_var_gaussian_closed,
    recursive_var_weibull_closed,
)
from .errors import ConfigError, DataError, DomainError, NumericError
from .markov import StateLinkedParams, TransitionMatrix, simulate_path
from .static_risk import MeasureKind, cvar_tail, var

__all__ = [
    "ReferenceStudy",
    "ExperimentConfig",
    "PathTrajectories",
    "SummaryStats",
    "fit_gaussian",
    "fit_weibull",
    "load_returns",
    "bundled_returns_path",
    "build_reference_experiment",
    "run_experiment",
    "emit_trajectories",
    "config_to_json",
    "config_from_json",
    "worker_count",
]

_MEASURE_NAMES = ("var", "cvar")
_CSV_COLUMNS = (
    "static_var",
    "recursive_var",
    "modulated_var",
    "static_cvar",
    "recursive_cvar",
    "modulated_cvar",
)


class ReferenceStudy(str, Enum):
    """The two bundled reference experiments."""

    GAUSSIAN_MSCI = "gaussian_msci"
    WEIBULL_BBGEX = "weibull_bbgex"


def worker_count() -> int:
    """Parallel path workers: ``RISKFLOW_THREADS`` if set, else logical cores."""
    raw = os.environ.get("RISKFLOW_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"RISKFLOW_THREADS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError(f"RISKFLOW_THREADS must be >= 1, got {n}")
    return n


_FAMILY_PARAM_KEYS = {
    ModelFamily.GAUSSIAN: ("mu", "sigma"),
    ModelFamily.WEIBULL: ("lambda", "alpha", "theta"),
}
_POSITIVE_PARAM_KEYS = {"sigma", "lambda", "alpha"}


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully specified regime-switching risk experiment."""

    family: ModelFamily
    params: Mapping[str, tuple[float, ...]]
    transition_matrix: tuple[tuple[float, ...], ...]
    orientation: str
    initial_state: int
    p: float
    horizon: int
    n_paths: int
    seed: int
    measures: tuple[str, ...]
    cvar_mode: CvarMode = CvarMode.PIECEWISE
    output: str | None = None

    def __post_init__(self) -> None:
        try:
            family = ModelFamily(self.family)
        except ValueError as exc:
            raise ConfigError(f"unknown family {self.family!r}") from exc
        object.__setattr__(self, "family", family)
        if self.orientation not in ("row", "column"):
            raise ConfigError(
                f'orientation must be "row" or "column", got {self.orientation!r}'
            )
        rows = tuple(tuple(float(v) for v in row) for row in self.transition_matrix)
        object.__setattr__(self, "transition_matrix", rows)
        chain = self.chain()  # validates stochasticity
        n = chain.n_states
        try:
            chain.require_state(self.initial_state)
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc
        if not 0.0 < self.p < 1.0:
            raise ConfigError(f"p must lie in (0, 1), got {self.p!r}")
        if self.horizon < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon!r}")
        if self.n_paths < 1:
            raise ConfigError(f"n_paths must be >= 1, got {self.n_paths!r}")
        measures = tuple(str(m) for m in self.measures)
        if not measures or len(set(measures)) != len(measures):
            raise ConfigError(f"measures must be a non-empty set, got {measures!r}")
        for m in measures:
            if m not in _MEASURE_NAMES:
                raise ConfigError(f"unknown measure {m!r}; choose from {_MEASURE_NAMES}")
        object.__setattr__(self, "measures", measures)
        object.__setattr__(self, "cvar_mode", CvarMode(self.cvar_mode))
        expected_keys = _FAMILY_PARAM_KEYS[family]
        given = {k: tuple(float(v) for v in vec) for k, vec in dict(self.params).items()}
        if set(given) != set(expected_keys):
            raise ConfigError(
                f"{family.value} params need keys {sorted(expected_keys)}, "
                f"got {sorted(given)}"
            )
        for key, vec in given.items():
            if len(vec) != n:
                raise ConfigError(
                    f"param {key!r} has {len(vec)} entries for {n} chain states"
                )
            if any(not math.isfinite(v) for v in vec):
                raise ConfigError(f"param {key!r} contains non-finite entries")
            if key in _POSITIVE_PARAM_KEYS and any(v <= 0.0 for v in vec):
                raise ConfigError(f"param {key!r} entries must be positive")
        object.__setattr__(self, "params", {k: given[k] for k in expected_keys})

    def chain(self) -> TransitionMatrix:
        if self.orientation == "row":
            return TransitionMatrix.from_rows(self.transition_matrix)
        return TransitionMatrix.from_columns(self.transition_matrix)

    @property
    def n_states(self) -> int:
        return len(self.transition_matrix)

    def state_model(self, state: int) -> ReturnModel:
        """The return model realized in the given 1-based chain state."""
        i = int(state) - 1
        if self.family is ModelFamily.GAUSSIAN:
            return GaussianParams(self.params["mu"][i], self.params["sigma"][i])
        return WeibullParams(
            self.params["lambda"][i], self.params["alpha"][i], self.params["theta"][i]
        )

    def state_linked_params(self) -> dict[str, StateLinkedParams]:
        return {k: StateLinkedParams(vec) for k, vec in self.params.items()}

    def to_json_dict(self) -> dict[str, object]:
        return {
            "family": self.family.value,
            "params": {k: list(v) for k, v in self.params.items()},
            "transition_matrix": [list(row) for row in self.transition_matrix],
            "orientation": self.orientation,
            "initial_state": self.initial_state,
            "p": self.p,
            "horizon": self.horizon,
            "n_paths": self.n_paths,
            "seed": self.seed,
            "measures": list(self.measures),
            "cvar_mode": self.cvar_mode.value,
            "output": self.output,
        }


def config_to_json(config: ExperimentConfig) -> str:
    """Canonical JSON text for a config (stable across reruns)."""
    return json.dumps(config.to_json_dict(), sort_keys=True, indent=2) + "\n"


_CONFIG_KEYS = {
    "family",
    "params",
    "transition_matrix",
    "orientation",
    "initial_state",
    "p",
    "horizon",
    "n_paths",
    "seed",
    "measures",
    "cvar_mode",
    "output",
}
_OPTIONAL_CONFIG_KEYS = {"cvar_mode", "output"}


def config_from_json(text: str) -> ExperimentConfig:
    """Parse and validate a config from its JSON representation."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config JSON must be an object")
    unknown = set(data) - _CONFIG_KEYS
    missing = _CONFIG_KEYS - _OPTIONAL_CONFIG_KEYS - set(data)
    if unknown or missing:
        raise ConfigError(
            f"config keys: missing {sorted(missing)}, unknown {sorted(unknown)}"
        )
    try:
        return ExperimentConfig(
            family=data["family"],
            params={k: tuple(v) for k, v in dict(data["params"]).items()},
            transition_matrix=tuple(tuple(row) for row in data["transition_matrix"]),
            orientation=data["orientation"],
            initial_state=int(data["initial_state"]),
            p=float(data["p"]),
            horizon=int(data["horizon"]),
            n_paths=int(data["n_paths"]),
            seed=int(data["seed"]),
            measures=tuple(data["measures"]),
            cvar_mode=data.get("cvar_mode", CvarMode.PIECEWISE),
            output=data.get("output"),
        )
    except (TypeError, ValueError, AttributeError) as exc:
        raise ConfigError(f"malformed config value: {exc}") from exc


# --------------------------------------------------------------------------
# Calibration
# --------------------------------------------------------------------------


def fit_gaussian(returns: Sequence[float]) -> GaussianParams:
    """Sample mean and sample standard deviation (denominator ``n - 1``)."""
    xs = [float(v) for v in returns]
    if len(xs) < 2:
        raise DataError(f"gaussian fit needs at least 2 observations, got {len(xs)}")
    if any(not math.isfinite(v) for v in xs):
        raise DataError("gaussian fit: observations must be finite")
    n = len(xs)
    mean = math.fsum(xs) / n
    ss = math.fsum((v - mean) ** 2 for v in xs)
    if ss == 0.0:
        raise DataError("gaussian fit: zero sample variance (all observations equal)")
    return GaussianParams(mean, math.sqrt(ss / (n - 1)))


def _weibull_profile(alpha: float, lx: np.ndarray) -> tuple[float, float]:
    """Value and derivative of the shape profile-likelihood equation.

    ``g(alpha) = S1/S0 - 1/alpha - mean(ln x)`` with
    ``S_j = sum(x**alpha * (ln x)**j)``; ``g`` is increasing with a unique
    root.  Computed on shifted exponentials for overflow safety.
    """
    w = alpha * lx
    w_max = float(np.max(w))
    e = np.exp(w - w_max)
    s0 = float(np.sum(e))
    s1 = float(np.sum(e * lx))
    s2 = float(np.sum(e * lx * lx))
    mean_lx = float(np.mean(lx))
    g = s1 / s0 - 1.0 / alpha - mean_lx
    dg = (s2 * s0 - s1 * s1) / (s0 * s0) + 1.0 / (alpha * alpha)
    return g, dg


def fit_weibull(returns: Sequence[float]) -> WeibullParams:
    """Two-parameter maximum-likelihood Weibull fit (location fixed at 0).

    Solves the shape profile equation by safeguarded Newton iteration —
    bracketed, falling back to bisection whenever a Newton step leaves the
    bracket — to 1e-10, then plugs the shape into the closed-form scale.
    """
    xs = np.asarray([float(v) for v in returns], dtype=float)
    if xs.size < 2:
        raise DataError(f"weibull fit needs at least 2 observations, got {xs.size}")
    if not np.all(np.isfinite(xs)) or np.any(xs <= 0.0):
        raise DataError("weibull fit: observations must be positive and finite")
    lx = np.log(xs)
    std_lx = float(np.std(lx))
    if std_lx < 1e-12:
        raise NumericError(
            "weibull fit: degenerate likelihood (observations nearly identical)"
        )
    alpha = math.pi / (math.sqrt(6.0) * std_lx)

    # Bracket the root of the increasing profile function.
    lo, hi = alpha, alpha
    g_lo, _ = _weibull_profile(lo, lx)
    for _ in range(80):
        if g_lo < 0.0:
            break
        lo /= 2.0
        g_lo, _ = _weibull_profile(lo, lx)
    else:
        raise NumericError("weibull fit: could not bracket the shape from below")
    g_hi, _ = _weibull_profile(hi, lx)
    for _ in range(80):
        if g_hi > 0.0:
            break
        hi *= 2.0
        g_hi, _ = _weibull_profile(hi, lx)
    else:
        raise NumericError("weibull fit: could not bracket the shape from above")

    for _ in range(200):
        g, dg = _weibull_profile(alpha, lx)
        if abs(g) <= 1e-10:
            break
        if g > 0.0:
            hi = alpha
        else:
            lo = alpha
        step = alpha - g / dg if dg > 0.0 else math.nan
        if not (lo < step < hi):
            step = 0.5 * (lo + hi)
        if hi - lo < 1e-15 * (1.0 + alpha):
            break
        alpha = step
    else:
        raise NumericError("weibull fit: shape iteration did not converge")
    g, _ = _weibull_profile(alpha, lx)
    if abs(g) > 1e-8:
        raise NumericError(f"weibull fit: profile equation residual {g!r} too large")

    # lam = (S0/n)**(1/alpha), computed in log space.
    w = alpha * lx
    w_max = float(np.max(w))
    log_s0 = w_max + math.log(float(np.sum(np.exp(w - w_max))))
    lam = math.exp((log_s0 - math.log(xs.size)) / alpha)
    return WeibullParams(lam, alpha, 0.0)


# --------------------------------------------------------------------------
# Returns data
# --------------------------------------------------------------------------


def load_returns(path: str | Path, mode: str = "diff") -> list[float]:
    """Read a ``date,value`` CSV and turn the level series into returns.

    Dates must be ISO-8601 and strictly ascending.  ``diff`` takes
    successive differences; ``ratio`` successive ratios.
    """
    if mode not in ("diff", "ratio"):
        raise DataError(f'returns mode must be "diff" or "ratio", got {mode!r}')
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header != ["date", "value"]:
                raise DataError(
                    f'{path}: header must be exactly "date,value", got {header!r}'
                )
            dates: list[date] = []
            values: list[float] = []
            for lineno, row in enumerate(reader, start=2):
                if len(row) != 2:
                    raise DataError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
                try:
                    d = date.fromisoformat(row[0])
                except ValueError as exc:
                    raise DataError(f"{path}:{lineno}: bad ISO date {row[0]!r}") from exc
                try:
                    v = float(row[1])
                except ValueError as exc:
                    raise DataError(f"{path}:{lineno}: bad value {row[1]!r}") from exc
                if not math.isfinite(v):
                    raise DataError(f"{path}:{lineno}: non-finite value")
                if dates and d <= dates[-1]:
                    raise DataError(
                        f"{path}:{lineno}: dates must be strictly ascending"
                    )
                dates.append(d)
                values.append(v)
    except OSError as exc:
        raise DataError(f"cannot read returns file {path}: {exc}") from exc
    if len(values) < 2:
        raise DataError(f"{path}: need at least two rows to form returns")
    if mode == "diff":
        return [values[i + 1] - values[i] for i in range(len(values) - 1)]
    if any(v == 0.0 for v in values[:-1]):
        raise DataError(f"{path}: ratio returns need non-zero values")
    return [values[i + 1] / values[i] for i in range(len(values) - 1)]


def bundled_returns_path() -> Path:
    """Path of the packaged synthetic daily-level series."""
    return Path(str(_resource_files("riskflow").joinpath("data", "bbgex_synthetic.csv")))


# --------------------------------------------------------------------------
# Reference experiments
# --------------------------------------------------------------------------

_GAUSSIAN_BASE_MEAN = 1113.3425
_GAUSSIAN_BASE_STD = 186.29
_WEIBULL_BASE_SCALE = 6.7679
_WEIBULL_BASE_SHAPE = 0.8016
_REFERENCE_ROWS = ((0.25, 0.75), (0.35, 0.65))
_REFERENCE_SEED = 1729


def build_reference_experiment(study: ReferenceStudy | str) -> ExperimentConfig:
    """The bundled two-state reference configs (see module docstring).

    State parameters are the base values scaled by 1.05 (state 1) and 0.95
    (state 2), except the Weibull shape which is constant; the products are
    carried at full float precision.
    """
    study = ReferenceStudy(study)
    if study is ReferenceStudy.GAUSSIAN_MSCI:
        family = ModelFamily.GAUSSIAN
        params = {
            "mu": (_GAUSSIAN_BASE_MEAN * 1.05, _GAUSSIAN_BASE_MEAN * 0.95),
            "sigma": (_GAUSSIAN_BASE_STD * 1.05, _GAUSSIAN_BASE_STD * 0.95),
        }
    else:
        family = ModelFamily.WEIBULL
        params = {
            "lambda": (_WEIBULL_BASE_SCALE * 1.05, _WEIBULL_BASE_SCALE * 0.95),
            "alpha": (_WEIBULL_BASE_SHAPE, _WEIBULL_BASE_SHAPE),
            "theta": (0.0, 0.0),
        }
    return ExperimentConfig(
        family=family,
        params=params,
        transition_matrix=_REFERENCE_ROWS,
        orientation="row",
        initial_state=1,
        p=0.99,
        horizon=10,
        n_paths=1,
        seed=_REFERENCE_SEED,
        measures=("var", "cvar"),
        cvar_mode=CvarMode.PIECEWISE,
        output=None,
    )


# --------------------------------------------------------------------------
# Execution
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PathTrajectories:
    """Everything produced for one simulated path."""

    path_id: int
    chain_seed: int
    returns_seed: int
    states: tuple[int, ...]
    returns: tuple[float, ...]
    var: RiskTrajectory | None
    cvar: RiskTrajectory | None
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class SummaryStats:
    """Aggregates over all paths of one experiment run.

    ``fraction_dynamic_le_static`` counts, over every time step of every
    path, how often each dynamic column sits at or below its static column.
    ``recursive_var_alternation`` is true when the recursive value-at-risk is
    exactly zero at every odd step of every path (the constant-parameter
    signature).
    """

    n_paths: int
    horizon: int
    fraction_dynamic_le_static: Mapping[str, float]
    columns: Mapping[str, Mapping[str, float]]
    recursive_var_alternation: bool | None
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        for key, frac in dict(self.fraction_dynamic_le_static).items():
            if not 0.0 <= frac <= 1.0:
                raise DomainError(f"fraction {key!r} outside [0, 1]: {frac!r}")

    def to_json_dict(self) -> dict[str, object]:
        return {
            "n_paths": self.n_paths,
            "horizon": self.horizon,
            "fraction_dynamic_le_static": dict(self.fraction_dynamic_le_static),
            "columns": {k: dict(v) for k, v in self.columns.items()},
            "recursive_var_alternation": self.recursive_var_alternation,
            "notes": list(self.notes),
        }


def _run_single_path(
    config: ExperimentConfig,
    matrix: TransitionMatrix,
    path_id: int,
    chain_seed: int,
    returns_seed: int,
) -> PathTrajectories:
    T = config.horizon
    chain = simulate_path(matrix, config.initial_state, T, chain_seed)
    period_models = [config.state_model(chain.states[t + 1]) for t in range(T + 1)]
    rng = np.random.default_rng(returns_seed)
    realized = tuple(float(sample(m, 1, rng)[0]) for m in period_models)
    linked = config.state_linked_params()
    times = tuple(range(T + 1))
    notes: list[str] = []

    static_var: list[float] = []
    static_cvar: list[float] = []
    for t, model in enumerate(period_models):
        try:
            if "var" in config.measures:
                static_var.append(var(model, config.p))
            if "cvar" in config.measures:
                static_cvar.append(cvar_tail(model, config.p))
        except NumericError as exc:
            raise NumericError(f"path {path_id}, t={t}: {exc}") from exc

    var_traj = cvar_traj = None
    try:
        if "var" in config.measures:
            if config.family is ModelFamily.GAUSSIAN:
                recursive = recursive_var_gaussian_closed(
                    [m.mu for m in period_models],
                    [m.sigma for m in period_models],
                    config.p,
                    T,
                )
            else:
                recursive = recursive_var_weibull_closed(
                    [m.lam for m in period_models],
                    [m.alpha for m in period_models],
                    [m.theta for m in period_models],
                    config.p,
                    T,
                )
            modulated = modulated_var_trajectory(
                config.family, linked, matrix, chain, config.p, T
            )
            var_traj = RiskTrajectory(
                kind=MeasureKind.VAR,
                p=config.p,
                times=times,
                static=tuple(static_var),
                recursive=tuple(recursive),
                modulated=tuple(modulated),
            )
        if "cvar" in config.measures:
            recursive_c = recursive_cvar(
                period_models, config.p, T, config.cvar_mode, realized
            )
            modulated_c = modulated_cvar_trajectory(
                config.family, linked, matrix, chain, realized, config.p, T
            )
            if config.family is ModelFamily.GAUSSIAN:
                notes.append(GAUSSIAN_MODULATED_CVAR_NOTE)
            cvar_traj = RiskTrajectory(
                kind=MeasureKind.CVAR,
                p=config.p,
                times=times,
                static=tuple(static_cvar),
                recursive=tuple(recursive_c),
                modulated=tuple(modulated_c),
            )
    except NumericError as exc:
        raise NumericError(f"path {path_id} (trajectories): {exc}") from exc

    return PathTrajectories(
        path_id=path_id,
        chain_seed=chain_seed,
        returns_seed=returns_seed,
        states=chain.states,
        returns=realized,
        var=var_traj,
        cvar=cvar_traj,
        notes=tuple(notes),
    )


def _summarize(config: ExperimentConfig, paths: Sequence[PathTrajectories]) -> SummaryStats:
    columns: dict[str, list[float]] = {}

    def collect(name: str, values: Sequence[float] | None) -> None:
        if values is not None:
            columns.setdefault(name, []).extend(values)

    for res in paths:
        if res.var is not None:
            collect("static_var", res.var.static)
            collect("recursive_var", res.var.recursive)
            collect("modulated_var", res.var.modulated)
        if res.cvar is not None:
            collect("static_cvar", res.cvar.static)
            collect("recursive_cvar", res.cvar.recursive)
            collect("modulated_cvar", res.cvar.modulated)

    fractions: dict[str, float] = {}
    for dyn, stat in (
        ("recursive_var", "static_var"),
        ("modulated_var", "static_var"),
        ("recursive_cvar", "static_cvar"),
        ("modulated_cvar", "static_cvar"),
    ):
        if dyn in columns:
            d = np.array(columns[dyn])
            s = np.array(columns[stat])
            fractions[dyn] = float(np.mean(d <= s))

    stats = {
        name: {
            "min": float(np.min(vals)),
            "max": float(np.max(vals)),
            "mean": float(np.mean(vals)),
        }
        for name, vals in columns.items()
    }
    alternation: bool | None = None
    if "recursive_var" in columns:
        alternation = all(
            res.var is not None
            and all(v == 0.0 for t, v in enumerate(res.var.recursive) if t % 2 == 1)
            for res in paths
        )
    notes = tuple(dict.fromkeys(note for res in paths for note in res.notes))
    return SummaryStats(
        n_paths=config.n_paths,
        horizon=config.horizon,
        fraction_dynamic_le_static=fractions,
        columns=stats,
        recursive_var_alternation=alternation,
        notes=notes,
    )


def run_experiment(
    config: ExperimentConfig,
) -> tuple[list[PathTrajectories], SummaryStats]:
    """Simulate all paths and aggregate; deterministic for a fixed seed.

    Paths draw independent chain/returns seed pairs from one root sequence
    and may evaluate in parallel (``RISKFLOW_THREADS`` caps workers); results
    are folded in path order regardless of scheduling.
    """
    matrix = config.chain()
    seed_words = np.random.SeedSequence(config.seed).generate_state(
        2 * config.n_paths, dtype=np.uint64
    )
    jobs = [
        (i, int(seed_words[2 * i]), int(seed_words[2 * i + 1]))
        for i in range(config.n_paths)
    ]

    def work(job: tuple[int, int, int]) -> PathTrajectories:
        path_id, chain_seed, returns_seed = job
        try:
            return _run_single_path(config, matrix, path_id, chain_seed, returns_seed)
        except NumericError as exc:
            raise NumericError(f"[chain seed {chain_seed}] {exc}") from exc

    workers = min(config.n_paths, worker_count())
    if workers <= 1:
        paths = [work(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            paths = list(pool.map(work, jobs))
    return paths, _summarize(config, paths)


# --------------------------------------------------------------------------
# Output
# --------------------------------------------------------------------------


def _trajectory_cell(traj: RiskTrajectory | None, series: str, t: int) -> float | None:
    if traj is None:
        return None
    values = getattr(traj, series)
    return None if values is None else values[t]


def _csv_cell(value: object) -> object:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return value


def _path_records(paths: Sequence[PathTrajectories]) -> list[dict[str, object]]:
    records: list[dict[str, object]] = []
    multi = len(paths) > 1
    for res in paths:
        horizon_source = res.var or res.cvar
        if horizon_source is None:
            raise DataError(f"path {res.path_id} carries no trajectories to emit")
        for t in horizon_source.times:
            record: dict[str, object] = {}
            if multi:
                record["path"] = res.path_id
            record["t"] = t
            for column in _CSV_COLUMNS:
                series, kind = column.split("_", 1)
                traj = res.var if kind == "var" else res.cvar
                record[column] = _trajectory_cell(traj, series, t)
            records.append(record)
    return records


def emit_trajectories(
    paths: Sequence[PathTrajectories], fmt: str, path: str | Path
) -> None:
    """Write the per-time trajectory table with a fixed schema.

    CSV header is exactly
    ``t,static_var,recursive_var,modulated_var,static_cvar,recursive_cvar,modulated_cvar``
    (a ``path`` column is prepended when several paths are present); absent
    measures leave their fields empty.  JSON mirrors the same records with
    ``null`` for absent values.
    """
    if fmt not in ("csv", "json"):
        raise DomainError(f'format must be "csv" or "json", got {fmt!r}')
    records = _path_records(paths)
    multi = len(paths) > 1
    header = (("path",) if multi else ()) + ("t",) + _CSV_COLUMNS
    try:
        if fmt == "csv":
            with open(path, "w", newline="", encoding="utf-8") as handle:
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(header)
                for record in records:
                    writer.writerow([_csv_cell(record.get(col)) for col in header])
        else:
            with open(path, "w", encoding="utf-8") as handle:
                json.dump(records, handle, indent=2)
                handle.write("\n")
    except OSError as exc:
        raise DataError(f"cannot write trajectories to {path}: {exc}") from exc
