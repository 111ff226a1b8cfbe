"""Numeric core: state/control containers, fixed-step RK4 integration,
duration costs, and an empirical control-divergence bound check.

States and controls are plain float64 numpy arrays.  The hot integration
path works on tuples of Python floats (roughly 7x faster than numpy for
the small vectors involved); arrays appear only at API boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "IntegrationDivergenceError",
    "state_vector",
    "control_input",
    "PiecewiseControl",
    "Trajectory",
    "DurationCost",
    "DURATION_COST",
    "AnalysisConstants",
    "rk4_step",
    "integrate_step",
    "steps_for_duration",
    "propagate",
    "validate_divergence_bound",
]


class IntegrationDivergenceError(RuntimeError):
    """Forward integration produced a non-finite state (blow-up or bad dt)."""


def state_vector(values: Iterable[float], dim: int | None = None) -> np.ndarray:
    """Validate and convert a state to a float64 array.

    Raises ValueError on non-finite entries or a dimension mismatch.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"state must be a flat vector, got shape {x.shape}")
    if dim is not None and x.size != dim:
        raise ValueError(f"state has dimension {x.size}, expected {dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"state has non-finite entries: {x}")
    return x


def control_input(values: Iterable[float], dim: int | None = None) -> np.ndarray:
    """Validate and convert a control to a float64 array."""
    u = np.asarray(values, dtype=float)
    if u.ndim != 1:
        raise ValueError(f"control must be a flat vector, got shape {u.shape}")
    if dim is not None and u.size != dim:
        raise ValueError(f"control has dimension {u.size}, expected {dim}")
    if not np.all(np.isfinite(u)):
        raise ValueError(f"control has non-finite entries: {u}")
    return u


@dataclass(frozen=True)
class PiecewiseControl:
    """Piecewise-constant control: an ordered run of (control, duration) segments.

    Durations are seconds and must be positive.  Code that builds controls
    for planning quantizes durations to multiples of the system integration
    resolution so that trajectories stay sampled on the dt grid.
    """

    segments: tuple[tuple[np.ndarray, float], ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("piecewise control needs at least one segment")
        norm = []
        for u, dur in self.segments:
            dur = float(dur)
            if not (math.isfinite(dur) and dur > 0.0):
                raise ValueError(f"segment duration must be positive and finite, got {dur}")
            norm.append((control_input(u), dur))
        object.__setattr__(self, "segments", tuple(norm))

    @staticmethod
    def single(u: Iterable[float], duration: float) -> "PiecewiseControl":
        """A one-segment control holding u constant for the given duration."""
        return PiecewiseControl(((np.asarray(u, dtype=float), float(duration)),))

    @property
    def duration(self) -> float:
        return float(sum(d for _, d in self.segments))

    def concat(self, other: "PiecewiseControl") -> "PiecewiseControl":
        """The control that plays self, then other."""
        return PiecewiseControl(self.segments + other.segments)


@dataclass(frozen=True)
class Trajectory:
    """A forward-propagated path.

    states holds every integration sample including the start, shape
    (n_steps + 1, d).  duration is the total control duration and cost is
    whatever the active cost functional assigned.
    """

    states: np.ndarray
    control: PiecewiseControl
    duration: float
    cost: float

    @property
    def start(self) -> np.ndarray:
        return self.states[0]

    @property
    def end(self) -> np.ndarray:
        return self.states[-1]


class DurationCost:
    """Cost functional charging elapsed time: cost equals trajectory duration.

    Additivity and monotonicity under concatenation hold exactly because
    durations add and are positive.
    """

    kind = "duration"

    def __call__(self, trajectory: Trajectory) -> float:
        return float(trajectory.duration)

    def of_duration(self, duration: float) -> float:
        """Cost contribution of a segment known only by its duration."""
        return float(duration)


DURATION_COST = DurationCost()


@dataclass(frozen=True)
class AnalysisConstants:
    """Empirical sensitivity constants of a system's dynamics.

    k_u bounds ||f(x,u0)-f(x,u1)|| / ||u0-u1||, k_x bounds
    ||f(x0,u)-f(x1,u)|| / ||x0-x1||, both estimated by sampled
    finite-difference ratios (see systems.estimate_constants).  k_c is the
    cost Lipschitz rate (1/s for the duration functional) and m_2 bounds
    the second difference of f along states.
    """

    k_u: float
    k_x: float
    k_c: float = 1.0
    m_2: float = 0.0

    def __post_init__(self) -> None:
        for name in ("k_u", "k_x", "k_c", "m_2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"{name} must be finite and nonnegative, got {v}")


Derivative = Callable[[tuple, tuple], tuple]


def rk4_step(deriv: Derivative, x: tuple, u: tuple, dt: float) -> tuple:
    """One classical fourth-order Runge-Kutta update of x under constant u.

    Operates on tuples of floats; see integrate_step for the array API.
    """
    k1 = deriv(x, u)
    half = 0.5 * dt
    k2 = deriv(tuple(xi + half * ki for xi, ki in zip(x, k1)), u)
    k3 = deriv(tuple(xi + half * ki for xi, ki in zip(x, k2)), u)
    k4 = deriv(tuple(xi + dt * ki for xi, ki in zip(x, k3)), u)
    sixth = dt / 6.0
    return tuple(
        xi + sixth * (a + 2.0 * (b + c) + e)
        for xi, a, b, c, e in zip(x, k1, k2, k3, k4)
    )


def integrate_step(system, x, u, dt: float) -> np.ndarray:
    """Single RK4 update of the system state under constant control over dt.

    Raises IntegrationDivergenceError if the result is non-finite.
    """
    if not (dt > 0.0 and math.isfinite(dt)):
        raise ValueError(f"dt must be positive and finite, got {dt}")
    xt = tuple(map(float, state_vector(x, system.d)))
    ut = tuple(map(float, control_input(u, system.l)))
    try:
        out = rk4_step(system.derivative, xt, ut, dt)
    except (ValueError, OverflowError) as exc:
        raise IntegrationDivergenceError(
            f"{system.name}: dynamics diverged during a dt={dt} step"
        ) from exc
    if not all(map(math.isfinite, out)):
        raise IntegrationDivergenceError(
            f"{system.name}: non-finite state after a dt={dt} step: {out}"
        )
    return np.array(out)


def steps_for_duration(duration: float, dt: float) -> int:
    """Number of dt steps in a duration that is a positive multiple of dt.

    Raises ValueError when the duration is off the dt grid by more than a
    relative 1e-6, which would silently distort costs.
    """
    n = round(duration / dt)
    if n < 1 or abs(n * dt - duration) > 1e-6 * dt:
        raise ValueError(
            f"duration {duration} is not a positive multiple of dt={dt}"
        )
    return n


def propagate(system, x0, control: PiecewiseControl, dt: float | None = None,
              cost_functional: DurationCost = DURATION_COST) -> Trajectory:
    """Forward-integrate the system from x0 under a piecewise-constant control.

    States are sampled every dt (the system default when not given).  Each
    segment duration must sit on the dt grid.  Integration is raw: angular
    coordinates are not wrapped here, distance functions handle periodicity.

    Raises IntegrationDivergenceError when the state leaves float range.
    """
    dt = float(system.dt if dt is None else dt)
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    x0 = state_vector(x0, system.d)
    counts = [steps_for_duration(dur, dt) for _, dur in control.segments]
    total = sum(counts)
    states = np.empty((total + 1, system.d))
    states[0] = x0
    deriv = system.derivative
    x = tuple(map(float, x0))
    row = 1
    try:
        for (u, _), n in zip(control.segments, counts):
            ut = tuple(map(float, u))
            for _ in range(n):
                x = rk4_step(deriv, x, ut, dt)
                states[row] = x
                row += 1
            if not all(map(math.isfinite, x)):
                raise IntegrationDivergenceError(
                    f"{system.name}: non-finite state during propagation: {x}"
                )
    except (ValueError, OverflowError) as exc:
        raise IntegrationDivergenceError(
            f"{system.name}: dynamics diverged during propagation"
        ) from exc
    duration = float(total * dt)
    traj = Trajectory(states=states, control=control, duration=duration, cost=0.0)
    return Trajectory(states=states, control=control, duration=duration,
                      cost=cost_functional(traj))


def validate_divergence_bound(system, x0, u0, u1, T: float,
                              constants: AnalysisConstants) -> bool:
    """Check the endpoint divergence of two constant controls against the
    exponential sensitivity bound ||end0 - end1|| < k_u * T * exp(k_x * T) * du.

    T is quantized to the system dt grid before propagation.  When the
    controls coincide (du == 0) both sides are zero and the comparison
    relaxes to <=, returning true.
    """
    if T <= 0.0:
        raise ValueError(f"T must be positive, got {T}")
    dt = system.dt
    n = max(1, round(T / dt))
    tq = n * dt
    u0 = control_input(u0, system.l)
    u1 = control_input(u1, system.l)
    end0 = propagate(system, x0, PiecewiseControl.single(u0, tq)).end
    end1 = propagate(system, x0, PiecewiseControl.single(u1, tq)).end
    lhs = float(np.linalg.norm(end0 - end1))
    du = float(np.linalg.norm(u0 - u1))
    rhs = constants.k_u * tq * math.exp(constants.k_x * tq) * du
    if du == 0.0:
        return lhs <= rhs
    return lhs < rhs
