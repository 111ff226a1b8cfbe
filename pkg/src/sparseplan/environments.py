"""Obstacle environments: geometry, builtin scenario maps, file loading,
and trajectory collision checking.

Environment files are plain text, one `key: value` pair per line with
`#` comments.  Keys:

    system:       system name the environment belongs to
    name:         label used in output files
    start:        whitespace-separated start state (d values)
    goal:         goal center state (d values)
    goal_radius:  goal region radius under the system distance
    obstacle:     one of
                    box <lo...> <hi...>          (2*w values)
                    sphere <center...> <radius>  (w+1 values)
                    cylinder <cx> <cy> <radius> <z_lo> <z_hi>  (3D only)

Collision semantics: a trajectory is collision free when every sampled
state stays inside the state bounds on non-wrapping dimensions and none
of its workspace collision points fall inside an obstacle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Trajectory
from .systems import SystemModel, make_system

__all__ = [
    "Box",
    "Sphere",
    "VerticalCylinder",
    "GoalRegion",
    "Environment",
    "EnvironmentFormatError",
    "collision_free",
    "states_collision_free",
    "make_environment",
    "environment_names",
    "load_environment",
    "save_environment",
]


class EnvironmentFormatError(ValueError):
    """Raised for malformed environment files or inconsistent geometry."""


@dataclass(frozen=True)
class Box:
    """Axis-aligned box obstacle in workspace coordinates."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.lo) != len(self.hi) or any(a >= b for a, b in zip(self.lo, self.hi)):
            raise EnvironmentFormatError(f"degenerate box {self.lo}..{self.hi}")

    def contains(self, points: np.ndarray) -> np.ndarray:
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return np.all((points >= lo) & (points <= hi), axis=-1)

    def spec(self) -> str:
        return "box " + " ".join(map(repr, self.lo + self.hi))


@dataclass(frozen=True)
class Sphere:
    """Ball obstacle in workspace coordinates."""

    center: tuple[float, ...]
    radius: float

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise EnvironmentFormatError(f"sphere radius must be positive: {self.radius}")

    def contains(self, points: np.ndarray) -> np.ndarray:
        delta = points - np.asarray(self.center)
        return np.einsum("...i,...i->...", delta, delta) <= self.radius * self.radius

    def spec(self) -> str:
        return "sphere " + " ".join(map(repr, self.center + (self.radius,)))


@dataclass(frozen=True)
class VerticalCylinder:
    """Cylinder with a vertical (z) axis, for 3D workspaces."""

    cx: float
    cy: float
    radius: float
    z_lo: float
    z_hi: float

    def __post_init__(self) -> None:
        if self.radius <= 0 or self.z_hi <= self.z_lo:
            raise EnvironmentFormatError("degenerate cylinder")

    def contains(self, points: np.ndarray) -> np.ndarray:
        dx = points[..., 0] - self.cx
        dy = points[..., 1] - self.cy
        radial = dx * dx + dy * dy <= self.radius * self.radius
        z = points[..., 2]
        return radial & (z >= self.z_lo) & (z <= self.z_hi)

    def spec(self) -> str:
        return "cylinder " + " ".join(map(repr, (self.cx, self.cy, self.radius, self.z_lo, self.z_hi)))


Obstacle = Box | Sphere | VerticalCylinder


@dataclass(frozen=True)
class GoalRegion:
    """Ball in state space under the system distance."""

    center: np.ndarray
    radius: float


@dataclass(frozen=True)
class Environment:
    """A planning scenario: start state, goal region, and obstacles."""

    name: str
    system_name: str
    start: np.ndarray
    goal: GoalRegion
    obstacles: tuple[Obstacle, ...]

    def in_goal(self, system: SystemModel, state) -> bool:
        return system.distance(state, self.goal.center) <= self.goal.radius


def states_collision_free(system: SystemModel, env: Environment,
                          states: np.ndarray) -> bool:
    """Collision check for a batch of states, shape (n, d) or (d,)."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    if not system.in_bounds(states):
        return False
    if not env.obstacles:
        return True
    pts = system.collision_points(states)
    flat = pts.reshape(-1, pts.shape[-1])
    for obstacle in env.obstacles:
        if obstacle.contains(flat).any():
            return False
    return True


def collision_free(system: SystemModel, env: Environment,
                   trajectory: Trajectory) -> bool:
    """True when every dt-sampled state of the trajectory is valid."""
    return states_collision_free(system, env, trajectory.states)


# ---------------------------------------------------------------------------
# builtin scenarios
# ---------------------------------------------------------------------------


def _point2d_blocks() -> Environment:
    # Two offset slabs forming an S-shaped detour between start and goal.
    return Environment(
        name="blocks",
        system_name="point2d",
        start=np.array([0.75, 2.5]),
        goal=GoalRegion(np.array([4.25, 2.5]), 0.5),
        obstacles=(
            Box((2.0, 0.0), (2.4, 3.25)),
            Box((3.1, 1.75), (3.5, 5.0)),
        ),
    )


def _point2d_corridor() -> Environment:
    # A single wide corridor across the middle of the workspace.
    return Environment(
        name="corridor",
        system_name="point2d",
        start=np.array([0.5, 2.5]),
        goal=GoalRegion(np.array([4.5, 2.5]), 0.5),
        obstacles=(
            Box((0.0, 0.0), (5.0, 1.75)),
            Box((0.0, 3.25), (5.0, 5.0)),
        ),
    )


def _point2d_open() -> Environment:
    return Environment(
        name="open",
        system_name="point2d",
        start=np.array([0.75, 2.5]),
        goal=GoalRegion(np.array([4.25, 2.5]), 0.5),
        obstacles=(),
    )


def _pendulum_free() -> Environment:
    # Swing from the horizontal rest state up to the inverted configuration.
    return Environment(
        name="free",
        system_name="pendulum",
        start=np.array([0.0, 0.0]),
        goal=GoalRegion(np.array([math.pi / 2.0, 0.0]), 0.3),
        obstacles=(),
    )


def _cartpole_rail() -> Environment:
    # Drive the cart along the rail while the hanging pole clears two
    # overhead ledges; the goal keeps the pole hanging at the far side.
    return Environment(
        name="rail",
        system_name="cartpole",
        start=np.array([-7.0, math.pi, 0.0, 0.0]),
        goal=GoalRegion(np.array([7.0, math.pi, 0.0, 0.0]), 1.5),
        obstacles=(
            Box((-4.0, 0.8), (-2.0, 2.4)),
            Box((2.0, 0.8), (4.0, 2.4)),
        ),
    )


def _acrobot_free() -> Environment:
    return Environment(
        name="free",
        system_name="acrobot",
        start=np.array([0.0, 0.0, 0.0, 0.0]),
        goal=GoalRegion(np.array([math.pi, 0.0, 0.0, 0.0]), 2.0),
        obstacles=(),
    )


def _rigid3d_boxes() -> Environment:
    return Environment(
        name="boxes",
        system_name="rigid3d",
        start=np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0]),
        goal=GoalRegion(np.array([9.0, 9.0, 9.0, 0.0, 0.0, 0.0]), 1.5),
        obstacles=(
            Box((3.5, 0.0, 0.0), (4.5, 7.0, 10.0)),
            Box((6.0, 3.0, 0.0), (7.0, 10.0, 10.0)),
            Sphere((5.0, 8.5, 5.0), 1.2),
        ),
    )


def _quadrotor_window() -> Environment:
    # A wall across the middle with a single window to fly through.
    return Environment(
        name="window",
        system_name="quadrotor",
        start=np.array([2.0, 2.0, 2.0] + [0.0] * 9),
        goal=GoalRegion(np.array([8.0, 8.0, 3.0] + [0.0] * 9), 1.5),
        obstacles=(
            Box((0.0, 4.8, 0.0), (4.0, 5.2, 6.0)),
            Box((6.0, 4.8, 0.0), (10.0, 5.2, 6.0)),
            Box((4.0, 4.8, 0.0), (6.0, 5.2, 2.0)),
            Box((4.0, 4.8, 4.0), (6.0, 5.2, 6.0)),
        ),
    )


def _airplane_forest() -> Environment:
    # Fly between vertical pylons; start near a trimmed cruise condition.
    start = np.array([2.0, 10.0, 5.0, 2.5, 0.196, 0.0, 0.0, 0.0, 1.1])
    pylons = ((6.0, 6.0), (6.5, 13.5), (10.0, 9.5), (13.5, 5.5), (14.0, 14.0))
    return Environment(
        name="forest",
        system_name="airplane",
        start=start,
        goal=GoalRegion(np.array([18.0, 10.0, 5.0, 2.5, 0.0, 0.0, 0.0, 0.0, 0.0]), 2.0),
        obstacles=tuple(
            VerticalCylinder(cx, cy, 0.8, 0.0, 10.0) for cx, cy in pylons
        ),
    )


_BUILTINS: dict[str, dict[str, object]] = {
    "point2d": {"blocks": _point2d_blocks, "corridor": _point2d_corridor, "open": _point2d_open},
    "rigid3d": {"boxes": _rigid3d_boxes},
    "pendulum": {"free": _pendulum_free},
    "cartpole": {"rail": _cartpole_rail},
    "acrobot": {"free": _acrobot_free},
    "quadrotor": {"window": _quadrotor_window},
    "airplane": {"forest": _airplane_forest},
}

_DEFAULTS = {
    "point2d": "blocks",
    "rigid3d": "boxes",
    "pendulum": "free",
    "cartpole": "rail",
    "acrobot": "free",
    "quadrotor": "window",
    "airplane": "forest",
}


def environment_names(system_name: str) -> tuple[str, ...]:
    """Builtin environment names for a system."""
    return tuple(_BUILTINS.get(system_name, {}))


def make_environment(system: SystemModel | str, name: str | None = None) -> Environment:
    """Builtin environment for a system; the system default when unnamed."""
    system_name = system if isinstance(system, str) else system.name
    table = _BUILTINS.get(system_name)
    if not table:
        raise ValueError(f"no builtin environments for system {system_name!r}")
    name = name or _DEFAULTS[system_name]
    try:
        factory = table[name]
    except KeyError:
        raise ValueError(
            f"unknown environment {name!r} for {system_name}; "
            f"available: {', '.join(table)}"
        ) from None
    return factory()  # type: ignore[operator]


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------


def _parse_obstacle(spec: str, workspace_dim: int) -> Obstacle:
    parts = spec.split()
    kind, values = parts[0], parts[1:]
    try:
        nums = [float(v) for v in values]
    except ValueError as exc:
        raise EnvironmentFormatError(f"bad obstacle numbers in {spec!r}") from exc
    w = workspace_dim
    if kind == "box":
        if len(nums) != 2 * w:
            raise EnvironmentFormatError(f"box needs {2*w} numbers, got {len(nums)}")
        return Box(tuple(nums[:w]), tuple(nums[w:]))
    if kind == "sphere":
        if len(nums) != w + 1:
            raise EnvironmentFormatError(f"sphere needs {w+1} numbers, got {len(nums)}")
        return Sphere(tuple(nums[:w]), nums[w])
    if kind == "cylinder":
        if w != 3 or len(nums) != 5:
            raise EnvironmentFormatError("cylinder obstacles need a 3D workspace and 5 numbers")
        return VerticalCylinder(*nums)
    raise EnvironmentFormatError(f"unknown obstacle kind {kind!r}")


def load_environment(path: str | Path, system: SystemModel | None = None) -> Environment:
    """Parse an environment file; validates against the named system.

    When `system` is given it must match the file's system line.
    """
    path = Path(path)
    fields: dict[str, str] = {}
    obstacle_specs: list[str] = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise EnvironmentFormatError(f"{path}:{lineno}: expected 'key: value'")
        key, value = (part.strip() for part in line.split(":", 1))
        if key == "obstacle":
            obstacle_specs.append(value)
        elif key in fields:
            raise EnvironmentFormatError(f"{path}:{lineno}: duplicate key {key!r}")
        else:
            fields[key] = value

    for required in ("system", "start", "goal", "goal_radius"):
        if required not in fields:
            raise EnvironmentFormatError(f"{path}: missing required key {required!r}")
    system_name = fields["system"]
    if system is not None and system.name != system_name:
        raise EnvironmentFormatError(
            f"{path}: environment is for {system_name!r}, not {system.name!r}"
        )
    model = system or make_system(system_name)
    try:
        start = np.array([float(v) for v in fields["start"].split()])
        goal_center = np.array([float(v) for v in fields["goal"].split()])
        goal_radius = float(fields["goal_radius"])
    except ValueError as exc:
        raise EnvironmentFormatError(f"{path}: bad numeric field") from exc
    if start.size != model.d or goal_center.size != model.d:
        raise EnvironmentFormatError(
            f"{path}: start/goal must have {model.d} values for {model.name}"
        )
    if goal_radius <= 0:
        raise EnvironmentFormatError(f"{path}: goal_radius must be positive")
    obstacles = tuple(_parse_obstacle(s, model.workspace_dim) for s in obstacle_specs)
    env = Environment(
        name=fields.get("name", path.stem),
        system_name=system_name,
        start=start,
        goal=GoalRegion(goal_center, goal_radius),
        obstacles=obstacles,
    )
    if not states_collision_free(model, env, start):
        raise EnvironmentFormatError(f"{path}: start state is in collision")
    return env


def save_environment(env: Environment, path: str | Path) -> None:
    """Write an environment in the text format load_environment reads."""
    lines = [
        f"system: {env.system_name}",
        f"name: {env.name}",
        "start: " + " ".join(repr(float(v)) for v in env.start),
        "goal: " + " ".join(repr(float(v)) for v in env.goal.center),
        f"goal_radius: {env.goal.radius!r}",
    ]
    lines += [f"obstacle: {obs.spec()}" for obs in env.obstacles]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
