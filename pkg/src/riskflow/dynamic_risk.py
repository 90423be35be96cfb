"""Multi-period risk: the backward recursion and its closed forms.

The core object is the one-step recursion

    R_0 = R(X_0),        R_t = R(X_t shifted by R_{t-1}),

where ``R`` is any translation-invariant static measure.  Under upper-tail
orientation the shift is ``-R_{t-1}`` (so ``R_t = R(X_t) - R_{t-1}``); under
lower-tail orientation the measure itself is monetary and the literal form
``R(X_t + R_{t-1})`` yields the same difference.  Iterating gives the
alternating sum ``R_t = sum_k (-1)**(t-k) * R(X_k)``, which the
``*_closed`` functions evaluate directly — a numerically independent route
used to cross-check the step-by-step recursion.

Markov modulation replaces realized parameters by their one-step conditional
expectations along a chain path: at time ``t`` the engine stands in state
``Z_t`` and prices the coming return (whose parameters are linked to
``Z_{t+1}``) by averaging the per-state values over the outgoing
distribution.  Time 0 is the exception everywhere: the value is the plain
static measure of ``X_0`` with its realized parameters.

The conditional value-at-risk recursion ships in two modes.  ``exact``
evaluates the static measure of the shifted position at every step, which is
deterministic.  ``piecewise`` follows the branch form: against a realized
return path, each step picks between a shifted-quantile expression and a
tail-average expression depending on whether the realized return stays below
a threshold.  The modulated branch forms differ by family on purpose:
Gaussian branches carry no dependence on the previous step (they are
memoryless), while Weibull branches keep the previous value with alternating
sign.  That asymmetry is surfaced as output metadata rather than papered
over.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from .distributions import (
    GaussianParams,
    ModelFamily,
    ReturnModel,
    WeibullParams,
    _require_probability,
    gaussian_pdf,
    gaussian_quantile,
    model_mean,
    shift_model,
)
from .errors import DomainError
from .markov import (
    ChainPath,
    StateLinkedParams,
    TransitionMatrix,
    one_step_linked_expectation,
)
from .static_risk import (
    MeasureKind,
    Orientation,
    RiskMeasureSpec,
    cvar_tail,
    evaluate,
    var,
)

__all__ = [
    "CvarMode",
    "RecursiveState",
    "VectorialMeasure",
    "RiskTrajectory",
    "GAUSSIAN_MODULATED_CVAR_NOTE",
    "recursive_risk_generic",
    "recursive_var_gaussian_closed",
    "recursive_var_weibull_closed",
    "recursive_cvar",
    "modulated_scalar",
    "modulated_vector",
    "modulated_recursive_vector",
    "vector_recursive_trajectories",
    "modulated_var_trajectory",
    "modulated_cvar_trajectory",
    "is_acceptable",
]

#: Attached to run metadata whenever the Gaussian modulated cvar branches are
#: used: unlike the Weibull form, they carry no dependence on the previous
#: step's value, so the trajectory is memoryless past t = 0.
GAUSSIAN_MODULATED_CVAR_NOTE = (
    "gaussian modulated cvar branches are memoryless: "
    "no dependence on the previous step's value"
)


class CvarMode(str, Enum):
    """Evaluation mode for the conditional value-at-risk recursion."""

    EXACT = "exact"
    PIECEWISE = "piecewise"


@dataclass(frozen=True)
class RecursiveState:
    """Carried state of the recursion: the step index and ``R_{t-1}``."""

    t: int
    prev_risk: float

    def __post_init__(self) -> None:
        if self.t < 0:
            raise DomainError(f"time index must be non-negative, got {self.t!r}")
        if not math.isfinite(self.prev_risk):
            raise DomainError(f"carried risk must be finite, got {self.prev_risk!r}")


@dataclass(frozen=True)
class VectorialMeasure:
    """One static measure per chain state.

    Components normally share kind, level and orientation (only the numbers
    they produce differ, through the state-linked models); pass
    ``allow_heterogeneous=True`` to mix on purpose.
    """

    specs: tuple[RiskMeasureSpec, ...]
    allow_heterogeneous: bool = False

    def __post_init__(self) -> None:
        if len(self.specs) == 0:
            raise DomainError("a vectorial measure needs at least one component")
        if not self.allow_heterogeneous:
            first = self.specs[0]
            for s in self.specs[1:]:
                if (s.kind, s.p, s.orientation) != (first.kind, first.p, first.orientation):
                    raise DomainError(
                        "vectorial measure components differ; "
                        "pass allow_heterogeneous=True if intended"
                    )

    @property
    def n_states(self) -> int:
        return len(self.specs)


@dataclass(frozen=True)
class RiskTrajectory:
    """Aligned per-time values of the static, recursive and modulated measures.

    ``times`` is ``0..T``; ``recursive`` and ``modulated`` may be absent when
    a run only requested a subset of measures.
    """

    kind: MeasureKind
    p: float
    times: tuple[int, ...]
    static: tuple[float, ...]
    recursive: tuple[float, ...] | None = None
    modulated: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        _require_probability(self.p)
        if tuple(self.times) != tuple(range(len(self.times))) or len(self.times) == 0:
            raise DomainError(f"times must be 0..T, got {self.times!r}")
        for name in ("static", "recursive", "modulated"):
            vals = getattr(self, name)
            if vals is None:
                continue
            if len(vals) != len(self.times):
                raise DomainError(
                    f"{name} column has {len(vals)} entries for {len(self.times)} times"
                )
            if any(not math.isfinite(v) for v in vals):
                raise DomainError(f"{name} column contains non-finite values")

    @property
    def horizon(self) -> int:
        return len(self.times) - 1


MeasureLike = Union[RiskMeasureSpec, Callable[[ReturnModel], float]]


def _shift_sign(orientation: Orientation) -> float:
    # Upper tail: R(X + c) = R(X) + c, so realizing R(X_t) - R_prev needs a
    # -R_prev shift.  Lower tail: the measure is monetary, R(X + c) = R(X) - c,
    # and the literal +R_prev shift produces the same difference.
    return -1.0 if orientation is Orientation.UPPER_TAIL else 1.0


def recursive_risk_generic(
    models: Sequence[ReturnModel],
    measure: MeasureLike,
    T: int,
    *,
    orientation: Orientation = Orientation.UPPER_TAIL,
) -> list[float]:
    """Run the backward recursion step by step and return ``R_0 .. R_T``.

    ``measure`` is either a :class:`RiskMeasureSpec` (its orientation is then
    used) or a plain ``model -> value`` callable, in which case
    ``orientation`` must state the translation convention the callable obeys.
    """
    if T < 0:
        raise DomainError(f"horizon must be non-negative, got {T!r}")
    if len(models) != T + 1:
        raise DomainError(f"need {T + 1} period models, got {len(models)}")
    if isinstance(measure, RiskMeasureSpec):
        orientation = measure.orientation
        fn: Callable[[ReturnModel], float] = lambda m: evaluate(m, measure)
    else:
        fn = measure
    sign = _shift_sign(orientation)
    out = [fn(models[0])]
    for t in range(1, T + 1):
        state = RecursiveState(t=t, prev_risk=out[-1])
        out.append(fn(shift_model(models[t], sign * state.prev_risk)))
    return out


def _alternating_sum(values: np.ndarray) -> list[float]:
    # R_t = sum_{k<=t} (-1)**(t-k) v_k, evaluated for all t in one pass:
    # with s_k = (-1)**k, R = s * cumsum(s * v).
    signs = np.where(np.arange(len(values)) % 2 == 0, 1.0, -1.0)
    return [float(x) for x in signs * np.cumsum(signs * values)]


def _as_positive_array(name: str, values: Sequence[float], n: int) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (n,):
        raise DomainError(f"{name} must have length {n}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError(f"{name} entries must be positive and finite")
    return arr


def recursive_var_gaussian_closed(
    mus: Sequence[float], sigmas: Sequence[float], p: float, T: int
) -> list[float]:
    """Closed-form recursive value-at-risk for Gaussian period returns.

    Evaluates ``R_t = sum_k (-1)**(t-k) (mu_k + sigma_k * q_p)`` directly
    from the parameter sequences (lists of length ``T + 1``).
    """
    p = _require_probability(p)
    if T < 0:
        raise DomainError(f"horizon must be non-negative, got {T!r}")
    mu = np.asarray(mus, dtype=float)
    if mu.shape != (T + 1,) or not np.all(np.isfinite(mu)):
        raise DomainError(f"mus must be {T + 1} finite values")
    sigma = _as_positive_array("sigmas", sigmas, T + 1)
    q = gaussian_quantile(p)
    return _alternating_sum(mu + sigma * q)


def recursive_var_weibull_closed(
    lambdas: Sequence[float],
    alphas: Sequence[float],
    thetas: Sequence[float],
    p: float,
    T: int,
) -> list[float]:
    """Closed-form recursive value-at-risk for Weibull period returns.

    Evaluates ``R_t = sum_k (-1)**(t-k) (theta_k + lam_k * (-ln(1-p))**(1/alpha_k))``.
    """
    p = _require_probability(p)
    if T < 0:
        raise DomainError(f"horizon must be non-negative, got {T!r}")
    lam = _as_positive_array("lambdas", lambdas, T + 1)
    alpha = _as_positive_array("alphas", alphas, T + 1)
    theta = np.asarray(thetas, dtype=float)
    if theta.shape != (T + 1,) or not np.all(np.isfinite(theta)):
        raise DomainError(f"thetas must be {T + 1} finite values")
    c = (-math.log1p(-p)) ** (1.0 / alpha)
    return _alternating_sum(theta + lam * c)


def recursive_cvar(
    models: Sequence[ReturnModel],
    p: float,
    T: int,
    mode: CvarMode = CvarMode.EXACT,
    realized_path: Sequence[float] | None = None,
) -> list[float]:
    """Recursive conditional value-at-risk ``C_0 .. C_T`` (upper tail).

    ``exact`` mode evaluates ``C_t = cvar(X_t shifted by -C_{t-1})`` — the
    static measure of the carried position, deterministic per step.

    ``piecewise`` mode follows the branch form against a realized return
    path of length ``T + 1``: when the realized ``X_t`` stays at or below
    ``var_t - 2*C_{t-1}`` the step value is ``var_t - C_{t-1}``; otherwise it
    is ``var_t - C_{t-1} + (mean_t - var_t + 2*C_{t-1})/(1-p)`` (the
    tail-average expression, equivalent to the per-family spelled-out
    forms).
    """
    p = _require_probability(p)
    mode = CvarMode(mode)
    if T < 0:
        raise DomainError(f"horizon must be non-negative, got {T!r}")
    if len(models) != T + 1:
        raise DomainError(f"need {T + 1} period models, got {len(models)}")
    if realized_path is not None and len(realized_path) != T + 1:
        raise DomainError(
            f"realized path must have length {T + 1}, got {len(realized_path)}"
        )
    if mode is CvarMode.PIECEWISE and realized_path is None:
        raise DomainError("piecewise mode needs a realized return path")

    out = [cvar_tail(models[0], p)]
    for t in range(1, T + 1):
        prev = RecursiveState(t=t, prev_risk=out[-1]).prev_risk
        if mode is CvarMode.EXACT:
            out.append(cvar_tail(shift_model(models[t], -prev), p))
            continue
        v_t = var(models[t], p)
        x_t = float(realized_path[t])  # type: ignore[index]
        if x_t <= v_t - 2.0 * prev:
            out.append(v_t - prev)
        else:
            mean_t = model_mean(models[t])
            out.append(v_t - prev + (mean_t - v_t + 2.0 * prev) / (1.0 - p))
    return out


# --------------------------------------------------------------------------
# Markov modulation
# --------------------------------------------------------------------------


def modulated_scalar(
    value: float,
    aggregator: StateLinkedParams,
    matrix: TransitionMatrix,
    state: int,
) -> float:
    """Scale a scalar risk value by the predicted aggregator weight.

    ``value * E[<aggregator, Z_next> | Z = e_state]``.
    """
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"risk value must be finite, got {value!r}")
    return value * one_step_linked_expectation(matrix, aggregator, state)


def modulated_vector(
    risks: Sequence[float], matrix: TransitionMatrix, state: int
) -> float:
    """Predicted per-state risk: ``E[<risks, Z_next> | Z = e_state]``.

    At time 0 callers bypass this and use the realized static value directly.
    """
    return one_step_linked_expectation(
        matrix, StateLinkedParams(tuple(risks)), state
    )


def modulated_recursive_vector(
    component_risks: Sequence[float], matrix: TransitionMatrix, state: int
) -> float:
    """Blend the time-t values of per-state recursions over the next state.

    ``component_risks`` holds, for each chain state, the value at time t of
    that state's own recursion (see :func:`vector_recursive_trajectories`).
    """
    return modulated_vector(component_risks, matrix, state)


def vector_recursive_trajectories(
    models: Sequence[ReturnModel], measure: VectorialMeasure, T: int
) -> list[list[float]]:
    """Run each component's recursion independently over the same returns.

    Returns one trajectory per chain state, each of length ``T + 1``.
    """
    return [recursive_risk_generic(models, spec, T) for spec in measure.specs]


def _validated_path(
    chain_path: ChainPath, matrix: TransitionMatrix, T: int
) -> tuple[int, ...]:
    if T < 0:
        raise DomainError(f"horizon must be non-negative, got {T!r}")
    if chain_path.horizon != T:
        raise DomainError(
            f"chain path covers horizon {chain_path.horizon}, expected {T}"
        )
    for s in chain_path.states:
        matrix.require_state(s)
    return chain_path.states


def _state_vector(
    params: Mapping[str, StateLinkedParams],
    key: str,
    n_states: int,
    *,
    positive: bool,
    default: float | None = None,
) -> np.ndarray:
    if key not in params:
        if default is None:
            raise DomainError(f"state-linked parameters missing {key!r}")
        return np.full(n_states, float(default))
    vec = params[key]
    if len(vec) != n_states:
        raise DomainError(
            f"state-linked {key!r} has {len(vec)} states, matrix has {n_states}"
        )
    arr = vec.as_array()
    if positive and np.any(arr <= 0.0):
        raise DomainError(f"state-linked {key!r} entries must be positive")
    return arr


def _gaussian_state_vectors(
    params: Mapping[str, StateLinkedParams], n_states: int
) -> tuple[np.ndarray, np.ndarray]:
    mu = _state_vector(params, "mu", n_states, positive=False)
    sigma = _state_vector(params, "sigma", n_states, positive=True)
    return mu, sigma


def _weibull_state_vectors(
    params: Mapping[str, StateLinkedParams], n_states: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    lam = _state_vector(params, "lambda", n_states, positive=True)
    alpha = _state_vector(params, "alpha", n_states, positive=True)
    theta = _state_vector(params, "theta", n_states, positive=False, default=0.0)
    return lam, alpha, theta


def _predict(matrix: TransitionMatrix, values: np.ndarray, state: int) -> float:
    return one_step_linked_expectation(
        matrix, StateLinkedParams(tuple(values)), state
    )


def modulated_var_trajectory(
    family: ModelFamily | str,
    params: Mapping[str, StateLinkedParams],
    matrix: TransitionMatrix,
    chain_path: ChainPath,
    p: float,
    T: int,
) -> list[float]:
    """Value-at-risk recursion along a realized chain path.

    Time 0 uses the realized parameters of ``X_0`` (linked to the state at
    ``Z_1``); every later term replaces parameters by their one-step
    predictions from the state occupied when the step is priced:

        R_t = (-1)**t (mu_0 + sigma_0 q) + sum_{k=1..t} (-1)**(t-k) (mubar_k + sigbar_k q)

    and the Weibull analogue with ``thetabar_k + lambdabar_k * cbar_k``,
    where ``c_i = (-ln(1-p))**(1/alpha_i)`` is predicted as its own
    state-linked vector.
    """
    p = _require_probability(p)
    family = ModelFamily(family)
    states = _validated_path(chain_path, matrix, T)
    n = matrix.n_states
    if family is ModelFamily.GAUSSIAN:
        mu, sigma = _gaussian_state_vectors(params, n)
        q = gaussian_quantile(p)
        per_state = mu + sigma * q
        realized0 = per_state[states[1] - 1]
    else:
        lam, alpha, theta = _weibull_state_vectors(params, n)
        c = (-math.log1p(-p)) ** (1.0 / alpha)
        s1 = states[1] - 1
        realized0 = theta[s1] + lam[s1] * c[s1]
    terms = [float(realized0)]
    for k in range(1, T + 1):
        z_k = states[k]
        if family is ModelFamily.GAUSSIAN:
            terms.append(_predict(matrix, per_state, z_k))
        else:
            terms.append(
                _predict(matrix, theta, z_k)
                + _predict(matrix, lam, z_k) * _predict(matrix, c, z_k)
            )
    return _alternating_sum(np.array(terms))


def modulated_cvar_trajectory(
    family: ModelFamily | str,
    params: Mapping[str, StateLinkedParams],
    matrix: TransitionMatrix,
    chain_path: ChainPath,
    realized_returns: Sequence[float],
    p: float,
    T: int,
) -> list[float]:
    """Conditional value-at-risk branch recursion along a realized chain path.

    Time 0 is the realized static value.  For ``t >= 1`` the realized return
    is compared against the family's branch threshold; barred quantities are
    one-step predictions from the state occupied at ``t``:

    * Gaussian (memoryless; see :data:`GAUSSIAN_MODULATED_CVAR_NOTE`) —
      threshold is the realized-parameter quantile of ``X_t``; branches
      ``mubar_t + sigbar_t q`` and ``mubar_t + (p/(1-p)) sigbar_t q``.
    * Weibull — threshold ``(thetabar_t + lambdabar_t cbar_t) + 2*C_{t-1}``;
      branches ``thetabar_t + lambdabar_t cbar_t - C_{t-1}`` and
      ``meanbar_t/(1-p) - (p/(1-p))(thetabar_t + lambdabar_t cbar_t)
      + ((1+p)/(1-p)) C_{t-1}``.
    """
    p = _require_probability(p)
    family = ModelFamily(family)
    states = _validated_path(chain_path, matrix, T)
    if len(realized_returns) != T + 1:
        raise DomainError(
            f"realized returns must have length {T + 1}, got {len(realized_returns)}"
        )
    n = matrix.n_states
    q = gaussian_quantile(p)
    if family is ModelFamily.GAUSSIAN:
        mu, sigma = _gaussian_state_vectors(params, n)
        s1 = states[1] - 1
        out = [float(mu[s1] + sigma[s1] * gaussian_pdf(q) / (1.0 - p))]
        for t in range(1, T + 1):
            z_t = states[t]
            mubar = _predict(matrix, mu, z_t)
            sigbar = _predict(matrix, sigma, z_t)
            s_next = states[t + 1] - 1
            threshold = mu[s_next] + sigma[s_next] * q
            if float(realized_returns[t]) <= threshold:
                out.append(mubar + sigbar * q)
            else:
                out.append(mubar + (p / (1.0 - p)) * sigbar * q)
        return out
    lam, alpha, theta = _weibull_state_vectors(params, n)
    c = (-math.log1p(-p)) ** (1.0 / alpha)
    means = np.array(
        [model_mean(WeibullParams(lam[i], alpha[i], theta[i])) for i in range(n)]
    )
    s1 = states[1] - 1
    out = [cvar_tail(WeibullParams(lam[s1], alpha[s1], theta[s1]), p)]
    for t in range(1, T + 1):
        prev = out[-1]
        z_t = states[t]
        varbar = _predict(matrix, theta, z_t) + _predict(matrix, lam, z_t) * _predict(
            matrix, c, z_t
        )
        if float(realized_returns[t]) <= varbar + 2.0 * prev:
            out.append(varbar - prev)
        else:
            meanbar = _predict(matrix, means, z_t)
            out.append(
                meanbar / (1.0 - p)
                - (p / (1.0 - p)) * varbar
                + ((1.0 + p) / (1.0 - p)) * prev
            )
    return out


def is_acceptable(risk_value: float) -> bool:
    """Whether a position with this risk value needs no extra capital."""
    risk_value = float(risk_value)
    if not math.isfinite(risk_value):
        raise DomainError(f"risk value must be finite, got {risk_value!r}")
    return risk_value <= 0.0
