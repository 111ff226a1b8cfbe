"""Benchmark system models: dynamics, bounds, distance functions, sampling.

Seven systems are provided through make_system():

    point2d    kinematic point, controls (speed, heading)
    rigid3d    kinematic rigid body in SE(3), direct velocity controls
    pendulum   torque-limited single link pivoting against gravity
    cartpole   force-driven cart with an unactuated pole on a rail
    acrobot    two-link arm actuated only at the elbow
    quadrotor  Euler-angle quadrotor with thrust and body torques
    airplane   fixed-wing point-mass model with lagged control surfaces

Model coefficients live in the factory functions below and are chosen for
well-conditioned planning problems; the library's invariants and tests do
not depend on their exact values.  Angular state dimensions carry a wrap
flag and are compared modulo 2*pi by the distance functions; integration
itself never wraps (see core.propagate).
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .core import AnalysisConstants, state_vector

__all__ = [
    "SystemModel",
    "SYSTEM_NAMES",
    "make_system",
    "wrap_angles",
    "estimate_constants",
]

TWO_PI = 2.0 * math.pi


def wrap_angles(values: np.ndarray, wraps: np.ndarray) -> np.ndarray:
    """Wrap the flagged dimensions of values into (-pi, pi].

    Accepts a single state (d,) or a batch (n, d); returns a copy.
    """
    out = np.array(values, dtype=float)
    if not wraps.any():
        return out
    sel = out[..., wraps]
    sel = np.mod(sel, TWO_PI)
    sel = np.where(sel > math.pi, sel - TWO_PI, sel)
    out[..., wraps] = sel
    return out


class SystemModel:
    """Bundle of dynamics, bounds, distance, and integration resolution.

    Immutable after construction.  derivative is the scalar-tuple form of
    the dynamics used by the integrator hot path; dynamics() is the array
    facade over it.
    """

    def __init__(
        self,
        name: str,
        state_lo: Sequence[float],
        state_hi: Sequence[float],
        wraps: Sequence[bool],
        control_lo: Sequence[float],
        control_hi: Sequence[float],
        derivative: Callable[[tuple, tuple], tuple],
        dt: float,
        t_prop: float,
        delta_s: float,
        delta_bn: float,
        distance_weights: Sequence[float] | None = None,
        workspace_dim: int | None = None,
        collision_points: Callable[[np.ndarray], np.ndarray] | None = None,
        phase_dims: tuple[int, int] = (0, 1),
    ) -> None:
        self.name = name
        self.state_lo = np.asarray(state_lo, dtype=float)
        self.state_hi = np.asarray(state_hi, dtype=float)
        self.wraps = np.asarray(wraps, dtype=bool)
        self.control_lo = np.asarray(control_lo, dtype=float)
        self.control_hi = np.asarray(control_hi, dtype=float)
        self.derivative = derivative
        self.dt = float(dt)
        self.t_prop = float(t_prop)
        self.delta_s = float(delta_s)
        self.delta_bn = float(delta_bn)
        self.d = self.state_lo.size
        self.l = self.control_lo.size
        self.phase_dims = phase_dims
        if self.state_hi.size != self.d or self.wraps.size != self.d:
            raise ValueError(f"{name}: inconsistent state bound shapes")
        if self.control_hi.size != self.l:
            raise ValueError(f"{name}: inconsistent control bound shapes")
        # Degenerate [a, a] state dimensions are allowed; they sample and
        # bound-check as the constant a.
        if np.any(self.state_hi < self.state_lo) or np.any(self.control_hi < self.control_lo):
            raise ValueError(f"{name}: bounds must satisfy lo <= hi")
        if not (0.0 < self.delta_s < self.delta_bn):
            raise ValueError(f"{name}: need 0 < delta_s < delta_bn")
        if workspace_dim is None:
            workspace_dim = min(self.d, 3) if name != "pendulum" else 2
        self.workspace_dim = workspace_dim
        self._collision_points = collision_points
        weights = None
        if distance_weights is not None:
            weights = np.asarray(distance_weights, dtype=float)
            if weights.size != self.d:
                raise ValueError(f"{name}: distance weight shape mismatch")
        self._weights = weights
        self._wrap_any = bool(self.wraps.any())
        # Bounds on non-wrapping dims only: wrapped angles are periodic and
        # never out of range.  Used by collision checking.
        self._hard = ~self.wraps

    # -- dynamics -----------------------------------------------------------

    def dynamics(self, x, u) -> np.ndarray:
        """Derivative f(x, u) as a float64 array."""
        xt = tuple(map(float, state_vector(np.asarray(x, dtype=float), self.d)))
        ut = tuple(map(float, np.atleast_1d(np.asarray(u, dtype=float))))
        return np.array(self.derivative(xt, ut))

    # -- distance -----------------------------------------------------------

    def distance(self, a, b) -> float:
        """System metric between two states (wrap-aware, possibly weighted)."""
        delta = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        if self._wrap_any:
            w = delta[self.wraps]
            w = np.mod(w, TWO_PI)
            w = np.where(w > math.pi, w - TWO_PI, w)
            delta[self.wraps] = w
        if self._weights is None:
            return float(math.sqrt(float(np.dot(delta, delta))))
        return float(math.sqrt(float(np.dot(delta * delta, self._weights))))

    def distance_many(self, q, points: np.ndarray) -> np.ndarray:
        """Distances from one query state to a batch of states (n, d)."""
        delta = points - np.asarray(q, dtype=float)
        if self._wrap_any:
            w = delta[:, self.wraps]
            w = np.mod(w, TWO_PI)
            np.subtract(w, TWO_PI, out=w, where=w > math.pi)
            delta[:, self.wraps] = w
        if self._weights is None:
            return np.sqrt(np.einsum("ij,ij->i", delta, delta))
        return np.sqrt(np.einsum("ij,ij,j->i", delta, delta, self._weights))

    # -- sampling -----------------------------------------------------------

    def sample_state(self, rng: np.random.Generator) -> np.ndarray:
        """Uniform sample of the state box (angles over their full circle)."""
        return rng.uniform(self.state_lo, self.state_hi)

    def sample_control(self, rng: np.random.Generator) -> np.ndarray:
        """Uniform sample of the control box."""
        return rng.uniform(self.control_lo, self.control_hi)

    # -- collision geometry -------------------------------------------------

    def collision_points(self, states: np.ndarray) -> np.ndarray:
        """Workspace points to test against obstacles, shape (n, k, w).

        The default maps a state to its leading workspace coordinates;
        articulated systems override this with body sample points.
        """
        states = np.atleast_2d(states)
        if self._collision_points is not None:
            return self._collision_points(states)
        return states[:, : self.workspace_dim][:, None, :]

    def in_bounds(self, states: np.ndarray) -> bool:
        """True when every non-wrapping dimension of every state is in range."""
        states = np.atleast_2d(states)
        hard = self._hard
        if not hard.any():
            return True
        s = states[:, hard]
        return bool(np.all(s >= self.state_lo[hard]) and np.all(s <= self.state_hi[hard]))

    def __repr__(self) -> str:
        return f"SystemModel({self.name!r}, d={self.d}, l={self.l})"


# ---------------------------------------------------------------------------
# model factories
# ---------------------------------------------------------------------------

_G = 9.81


def _make_point2d() -> SystemModel:
    def deriv(x: tuple, u: tuple) -> tuple:
        v, heading = u
        return (v * math.cos(heading), v * math.sin(heading))

    return SystemModel(
        name="point2d",
        state_lo=(0.0, 0.0),
        state_hi=(5.0, 5.0),
        wraps=(False, False),
        control_lo=(0.0, -math.pi),
        control_hi=(2.0, math.pi),
        derivative=deriv,
        dt=0.02,
        t_prop=1.0,
        delta_s=0.5,
        delta_bn=1.0,
        workspace_dim=2,
    )


def _make_rigid3d() -> SystemModel:
    def deriv(x: tuple, u: tuple) -> tuple:
        return u

    return SystemModel(
        name="rigid3d",
        state_lo=(0.0, 0.0, 0.0, -math.pi, -math.pi, -math.pi),
        state_hi=(10.0, 10.0, 10.0, math.pi, math.pi, math.pi),
        wraps=(False, False, False, True, True, True),
        control_lo=(-1.0, -1.0, -1.0, -0.6, -0.6, -0.6),
        control_hi=(1.0, 1.0, 1.0, 0.6, 0.6, 0.6),
        derivative=deriv,
        dt=0.02,
        t_prop=2.0,
        delta_s=2.0,
        delta_bn=4.0,
        workspace_dim=3,
    )


# Pendulum: unit-mass unit-length rod pivoting at one end, angle measured
# from horizontal so the upright goal sits at pi/2.  Gravity torque peaks
# at 3*g/2 in angular-acceleration units while the control contributes at
# most 3*tau_max = 6, so the system is underactuated and must pump energy.
_PEND_TORQUE = 1.5 * _G  # m*g*L/2 * 3/(m*L^2) with m = L = 1


def _make_pendulum() -> SystemModel:
    def deriv(x: tuple, u: tuple) -> tuple:
        return (x[1], 3.0 * u[0] - _PEND_TORQUE * math.cos(x[0]))

    return SystemModel(
        name="pendulum",
        state_lo=(-math.pi, -8.0),
        state_hi=(math.pi, 8.0),
        wraps=(True, False),
        control_lo=(-2.0,),
        control_hi=(2.0,),
        derivative=deriv,
        dt=0.002,
        t_prop=0.5,
        delta_s=0.2,
        delta_bn=0.3,
        workspace_dim=2,
    )


def _make_cartpole() -> SystemModel:
    # Cart of mass mc on a rail with a uniform pole (half-length lp) hinged
    # on top; th is the pole angle from upright.  Frictionless Lagrangian
    # dynamics, solved analytically from the 2x2 mass matrix.
    mc, mp, lp = 1.0, 0.5, 1.0
    total = mc + mp
    ml = mp * lp
    i_term = (4.0 / 3.0) * mp * lp * lp

    def deriv(x: tuple, u: tuple) -> tuple:
        _, th, xd, thd = x
        force = u[0]
        c = math.cos(th)
        s = math.sin(th)
        b0 = force + ml * thd * thd * s
        b1 = ml * _G * s
        det = total * i_term - (ml * c) ** 2
        xdd = (b0 * i_term - b1 * ml * c) / det
        thdd = (b1 * total - b0 * ml * c) / det
        return (xd, thd, xdd, thdd)

    def pole_points(states: np.ndarray) -> np.ndarray:
        # Sample the cart pivot, pole midpoint, and pole tip in the rail's
        # vertical plane (horizontal position, elevation above the rail).
        xs = states[:, 0]
        th = states[:, 1]
        sx = 2.0 * lp * np.sin(th)
        sy = 2.0 * lp * np.cos(th)
        pts = np.empty((states.shape[0], 3, 2))
        pts[:, 0, 0] = xs
        pts[:, 0, 1] = 0.0
        pts[:, 1, 0] = xs + 0.5 * sx
        pts[:, 1, 1] = 0.5 * sy
        pts[:, 2, 0] = xs + sx
        pts[:, 2, 1] = sy
        return pts

    return SystemModel(
        name="cartpole",
        state_lo=(-10.0, -math.pi, -5.0, -5.0),
        state_hi=(10.0, math.pi, 5.0, 5.0),
        wraps=(False, True, False, False),
        control_lo=(-15.0,),
        control_hi=(15.0,),
        derivative=deriv,
        dt=0.002,
        t_prop=0.5,
        delta_s=1.0,
        delta_bn=2.0,
        workspace_dim=2,
        collision_points=pole_points,
        phase_dims=(0, 1),
    )


def _make_acrobot() -> SystemModel:
    # Two uniform unit links, shoulder passive, elbow actuated; angles
    # measured from straight down, (0, 0) is the hanging rest state.
    m1 = m2 = 1.0
    l1 = 1.0
    lc1 = lc2 = 0.5
    i1 = i2 = 1.0 / 12.0
    d22 = m2 * lc2 * lc2 + i2
    h_coef = m2 * l1 * lc2
    g1 = (m1 * lc1 + m2 * l1) * _G
    g2 = m2 * lc2 * _G

    def deriv(x: tuple, u: tuple) -> tuple:
        th1, th2, w1, w2 = x
        tau = u[0]
        c2 = math.cos(th2)
        s2 = math.sin(th2)
        s1 = math.sin(th1)
        s12 = math.sin(th1 + th2)
        d11 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * c2) + i1 + i2
        d12 = m2 * (lc2 * lc2 + l1 * lc2 * c2) + i2
        h = h_coef * s2
        c_1 = -h * (2.0 * w1 * w2 + w2 * w2)
        c_2 = h * w1 * w1
        phi1 = g1 * s1 + g2 * s12
        phi2 = g2 * s12
        rhs1 = -(c_1 + phi1)
        rhs2 = tau - (c_2 + phi2)
        det = d11 * d22 - d12 * d12
        a1 = (rhs1 * d22 - rhs2 * d12) / det
        a2 = (rhs2 * d11 - rhs1 * d12) / det
        return (w1, w2, a1, a2)

    return SystemModel(
        name="acrobot",
        state_lo=(-math.pi, -math.pi, -6.0, -6.0),
        state_hi=(math.pi, math.pi, 6.0, 6.0),
        wraps=(True, True, False, False),
        control_lo=(-4.0,),
        control_hi=(4.0,),
        derivative=deriv,
        dt=0.002,
        t_prop=0.5,
        delta_s=0.5,
        delta_bn=1.0,
        workspace_dim=2,
        phase_dims=(0, 1),
    )


def _make_quadrotor() -> SystemModel:
    # Euler-angle quadrotor: thrust u0 along the body z axis plus roll,
    # pitch, yaw torques; angular rates treated as Euler-angle rates.
    mass = 1.0
    arm = 0.25
    ix = iy = 5.0e-3
    iz = 1.0e-2

    def deriv(x: tuple, u: tuple) -> tuple:
        roll, pitch, yaw = x[3], x[4], x[5]
        vx, vy, vz = x[6], x[7], x[8]
        p, q, r = x[9], x[10], x[11]
        thrust = u[0] / mass
        sr, cr = math.sin(roll), math.cos(roll)
        sp, cp = math.sin(pitch), math.cos(pitch)
        sy, cy = math.sin(yaw), math.cos(yaw)
        ax = thrust * (cr * sp * cy + sr * sy)
        ay = thrust * (cr * sp * sy - sr * cy)
        az = thrust * cr * cp - _G
        ap = q * r * (iy - iz) / ix + u[1] * arm / ix
        aq = p * r * (iz - ix) / iy + u[2] * arm / iy
        ar = p * q * (ix - iy) / iz + u[3] / iz
        return (vx, vy, vz, p, q, r, ax, ay, az, ap, aq, ar)

    weights = np.zeros(12)
    weights[:3] = 1.0   # position, meters
    weights[3:6] = 1.0  # attitude, radians weighted 1:1 against meters
    return SystemModel(
        name="quadrotor",
        state_lo=(0.0, 0.0, 0.0, -math.pi, -math.pi, -math.pi,
                  -3.0, -3.0, -3.0, -3.0, -3.0, -3.0),
        state_hi=(10.0, 10.0, 6.0, math.pi, math.pi, math.pi,
                  3.0, 3.0, 3.0, 3.0, 3.0, 3.0),
        wraps=(False, False, False, True, True, True,
               False, False, False, False, False, False),
        control_lo=(0.0, -0.1, -0.1, -0.05),
        control_hi=(15.0, 0.1, 0.1, 0.05),
        derivative=deriv,
        dt=0.02,
        t_prop=1.0,
        delta_s=3.0,
        delta_bn=5.0,
        distance_weights=weights,
        workspace_dim=3,
    )


def _make_airplane() -> SystemModel:
    # Fixed-wing point mass: position, airspeed, angle of attack, bank,
    # flight-path angle, heading, and thrust, with first-order lag between
    # commanded and actual (thrust, attack, bank).
    cl = 8.0
    cd0 = 0.1
    cdk = 2.0
    lag = 1.0 / 0.3

    def deriv(x: tuple, u: tuple) -> tuple:
        v, alpha, bank = x[3], x[4], x[5]
        path, heading, thrust = x[6], x[7], x[8]
        v2 = v * v
        lift = cl * alpha * v2
        drag = (cd0 + cdk * alpha * alpha) * v2
        cpath = math.cos(path)
        return (
            v * math.cos(heading) * cpath,
            v * math.sin(heading) * cpath,
            v * math.sin(path),
            thrust - drag - _G * math.sin(path),
            lag * (u[1] - alpha),
            lag * (u[2] - bank),
            (lift * math.cos(bank) - _G * cpath) / v,
            lift * math.sin(bank) / (v * cpath),
            lag * (u[0] - thrust),
        )

    weights = np.zeros(9)
    weights[:3] = 1.0  # distance in the position coordinates only
    return SystemModel(
        name="airplane",
        state_lo=(0.0, 0.0, 0.0, 1.0, -0.3, -0.8, -0.5, -math.pi, 0.0),
        state_hi=(20.0, 20.0, 10.0, 4.0, 0.3, 0.8, 0.5, math.pi, 8.0),
        wraps=(False, False, False, False, False, False, False, True, False),
        control_lo=(0.0, -0.3, -0.8),
        control_hi=(8.0, 0.3, 0.8),
        derivative=deriv,
        dt=0.02,
        t_prop=1.0,
        delta_s=2.0,
        delta_bn=6.0,
        distance_weights=weights,
        workspace_dim=3,
    )


_FACTORIES = {
    "point2d": _make_point2d,
    "rigid3d": _make_rigid3d,
    "pendulum": _make_pendulum,
    "cartpole": _make_cartpole,
    "acrobot": _make_acrobot,
    "quadrotor": _make_quadrotor,
    "airplane": _make_airplane,
}

SYSTEM_NAMES = tuple(_FACTORIES)


def make_system(name: str, dt: float | None = None) -> SystemModel:
    """Construct a benchmark system by name; see SYSTEM_NAMES.

    dt overrides the system's default integration step (costs and edge
    durations then quantize to the new grid).
    """
    try:
        factory = _FACTORIES[name]
    except KeyError:
        raise ValueError(
            f"unknown system {name!r}; available: {', '.join(SYSTEM_NAMES)}"
        ) from None
    system = factory()
    if dt is not None:
        if not (0.0 < dt and math.isfinite(dt)):
            raise ValueError(f"dt must be positive and finite, got {dt}")
        system.dt = float(dt)
    return system


# ---------------------------------------------------------------------------
# empirical dynamics constants
# ---------------------------------------------------------------------------

_CONSTANTS_CACHE: dict[tuple, AnalysisConstants] = {}


def estimate_constants(
    system: SystemModel,
    samples: int = 100_000,
    margin: float = 1.1,
    inflate: float = 1.75,
    seed: int = 20240901,
) -> AnalysisConstants:
    """Estimate the control/state sensitivity constants of a system's dynamics.

    Takes the maximum finite-difference ratio of f over random pairs: for
    k_u, pairs of controls at a shared state; for k_x, pairs of states under
    a shared control.  Half of the pairs are independent draws, half are
    small perturbations, so both global and local slopes are seen.

    Non-wrapping state dimensions are sampled from a box inflated around
    the nominal bounds (factor `inflate` on the half-width) because raw
    propagation may leave the bounds before a trajectory is rejected; the
    estimated constants must cover that excursion region.  The returned
    k_u/k_x carry the safety margin factor.  Results are cached per system.
    """
    key = (system.name, samples, margin, inflate, seed)
    cached = _CONSTANTS_CACHE.get(key)
    if cached is not None:
        return cached

    rng = np.random.Generator(np.random.PCG64(seed))
    center = 0.5 * (system.state_lo + system.state_hi)
    half = 0.5 * (system.state_hi - system.state_lo)
    grow = np.where(system.wraps, 1.0, inflate)
    lo = center - half * grow
    hi = center + half * grow
    deriv = system.derivative
    c_lo, c_hi = system.control_lo, system.control_hi
    c_span = np.maximum(c_hi - c_lo, 1e-12)
    s_span = np.maximum(hi - lo, 1e-12)

    def f(x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return np.array(deriv(tuple(x), tuple(u)))

    k_u = 0.0
    k_x = 0.0
    m_2 = 0.0
    half_n = samples // 2
    for i in range(samples):
        x = rng.uniform(lo, hi)
        ua = rng.uniform(c_lo, c_hi)
        if i < half_n:
            ub = rng.uniform(c_lo, c_hi)
        else:
            ub = np.clip(ua + rng.uniform(-1e-3, 1e-3, size=system.l) * c_span, c_lo, c_hi)
        du = float(np.linalg.norm(ua - ub))
        if du > 0.0:
            k_u = max(k_u, float(np.linalg.norm(f(x, ua) - f(x, ub))) / du)

        u = rng.uniform(c_lo, c_hi)
        xa = rng.uniform(lo, hi)
        if i < half_n:
            xb = rng.uniform(lo, hi)
        else:
            xb = np.clip(xa + rng.uniform(-1e-3, 1e-3, size=system.d) * s_span, lo, hi)
        dx = float(np.linalg.norm(xa - xb))
        if dx > 0.0:
            fa = f(xa, u)
            fb = f(xb, u)
            k_x = max(k_x, float(np.linalg.norm(fa - fb)) / dx)
            if i % 16 == 0:
                mid = f(0.5 * (xa + xb), u)
                second = float(np.linalg.norm(fa + fb - 2.0 * mid))
                m_2 = max(m_2, 4.0 * second / (dx * dx))

    result = AnalysisConstants(k_u=margin * k_u, k_x=margin * k_x, k_c=1.0, m_2=m_2)
    _CONSTANTS_CACHE[key] = result
    return result
