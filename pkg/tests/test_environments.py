"""Scenario environments: obstacles, goal regions, files, collision checks."""

from __future__ import annotations

import math

import numpy as np
import pytest

import sparseplan as sp
from sparseplan.environments import (
    Box,
    Environment,
    EnvironmentFormatError,
    GoalRegion,
    Sphere,
    VerticalCylinder,
    environment_names,
    load_environment,
    make_environment,
    save_environment,
    states_collision_free,
)
from sparseplan.systems import SYSTEM_NAMES


class TestObstacles:
    def test_box_containment_inclusive(self):
        box = Box((0.0, 0.0), (1.0, 2.0))
        pts = np.array([[0.5, 1.0], [1.0, 2.0], [1.01, 1.0], [-0.1, 0.5]])
        np.testing.assert_array_equal(
            box.contains(pts), [True, True, False, False]
        )

    def test_sphere_containment(self):
        s = Sphere((1.0, 1.0), 0.5)
        pts = np.array([[1.0, 1.4], [1.0, 1.5], [1.0, 1.51]])
        np.testing.assert_array_equal(s.contains(pts), [True, True, False])

    def test_cylinder_containment(self):
        c = VerticalCylinder(0.0, 0.0, 1.0, 0.0, 2.0)
        pts = np.array([[0.5, 0.0, 1.0], [0.5, 0.0, 2.5], [1.5, 0.0, 1.0]])
        np.testing.assert_array_equal(c.contains(pts), [True, False, False])

    def test_degenerate_shapes_rejected(self):
        with pytest.raises(EnvironmentFormatError):
            Box((1.0, 0.0), (1.0, 2.0))
        with pytest.raises(EnvironmentFormatError):
            Sphere((0.0, 0.0), 0.0)
        with pytest.raises(EnvironmentFormatError):
            VerticalCylinder(0.0, 0.0, 1.0, 2.0, 2.0)


class TestGoalRegion:
    def test_in_goal_wrap_aware(self, pendulum):
        env = Environment(
            name="t", system_name="pendulum",
            start=np.array([0.0, 0.0]),
            goal=GoalRegion(np.array([math.pi - 0.05, 0.0]), 0.2),
            obstacles=(),
        )
        assert env.in_goal(pendulum, np.array([-math.pi + 0.05, 0.0]))
        assert not env.in_goal(pendulum, np.array([math.pi - 0.5, 0.0]))


class TestBuiltins:
    @pytest.mark.parametrize("name", SYSTEM_NAMES)
    def test_every_system_has_default(self, name):
        system = sp.make_system(name)
        names = environment_names(name)
        assert names
        env = make_environment(system)
        assert env.system_name == name
        assert env.start.shape == (system.d,)
        assert env.goal.center.shape == (system.d,)
        assert env.goal.radius > 0

    @pytest.mark.parametrize("name", SYSTEM_NAMES)
    def test_start_free_and_goal_reachable_space(self, name):
        system = sp.make_system(name)
        for env_name in environment_names(name):
            env = make_environment(system, env_name)
            assert states_collision_free(system, env, env.start)
            assert states_collision_free(system, env, env.goal.center)

    def test_unknown_names_rejected(self):
        with pytest.raises(ValueError):
            make_environment("point2d", "labyrinth")
        with pytest.raises(ValueError):
            make_environment("nosuch")


class TestCollisionChecks:
    def test_empty_obstacles_true(self, point2d):
        env = make_environment(point2d, "open")
        traj = sp.propagate(
            point2d, (1.0, 1.0), sp.PiecewiseControl.single((1.0, 0.5), 1.0)
        )
        assert sp.collision_free(point2d, env, traj)

    def test_through_box_false(self, point2d, point_env):
        control = sp.PiecewiseControl.single((2.0, 0.0), 2.0)
        traj = sp.propagate(point2d, (1.0, 2.5), control)
        assert not sp.collision_free(point2d, point_env, traj)

    def test_out_of_bounds_counts_as_collision(self, point2d):
        env = make_environment(point2d, "open")
        control = sp.PiecewiseControl.single((2.0, math.pi), 1.0)
        traj = sp.propagate(point2d, (0.5, 2.5), control)
        assert not sp.collision_free(point2d, env, traj)

    def test_prefixes_of_free_trajectory_are_free(self, point2d, point_env):
        traj = sp.propagate(
            point2d, tuple(point_env.start),
            sp.PiecewiseControl.single((1.0, 0.1), 0.5),
        )
        assert sp.collision_free(point2d, point_env, traj)
        for stop in range(1, traj.states.shape[0] + 1):
            assert states_collision_free(point2d, point_env, traj.states[:stop])

    def test_fine_resample_agreement(self, point2d, point_env):
        """dt-resolution checks agree with a 10x finer oracle >= 99%."""
        fine = sp.make_system("point2d", dt=point2d.dt / 10.0)
        rng = np.random.default_rng(2024)
        agree = 0
        total = 1000
        for _ in range(total):
            while True:
                x0 = point2d.sample_state(rng)
                if states_collision_free(point2d, point_env, x0):
                    break
            u = point2d.sample_control(rng)
            duration = point2d.dt * int(rng.integers(1, 26))
            control = sp.PiecewiseControl.single(u, duration)
            coarse_traj = sp.propagate(point2d, x0, control)
            fine_traj = sp.propagate(fine, x0, control)
            coarse_ok = sp.collision_free(point2d, point_env, coarse_traj)
            fine_ok = sp.collision_free(fine, point_env, fine_traj)
            agree += coarse_ok == fine_ok
        assert agree / total >= 0.99


class TestFileFormat:
    def _sample_env(self):
        return Environment(
            name="roundtrip",
            system_name="point2d",
            start=np.array([0.123456789012345, 2.5]),
            goal=GoalRegion(np.array([4.25, 2.5]), 0.37),
            obstacles=(
                Box((2.0, 0.0), (2.4, 3.25)),
                Sphere((1.0, 4.0), 0.3333333333333333),
            ),
        )

    def test_round_trip_exact(self, tmp_path):
        env = self._sample_env()
        path = tmp_path / "env.txt"
        save_environment(env, path)
        loaded = load_environment(path)
        assert loaded.name == env.name
        assert loaded.system_name == env.system_name
        np.testing.assert_array_equal(loaded.start, env.start)
        np.testing.assert_array_equal(loaded.goal.center, env.goal.center)
        assert loaded.goal.radius == env.goal.radius
        assert loaded.obstacles == env.obstacles

    def test_comments_and_blank_lines_ignored(self, tmp_path):
        path = tmp_path / "env.txt"
        path.write_text(
            "# demo scenario\n"
            "system: point2d\n\n"
            "start: 0.5 2.5   # free spot\n"
            "goal: 4.5 2.5\n"
            "goal_radius: 0.5\n"
            "obstacle: box 2.0 0.0 2.4 1.0\n",
            encoding="utf-8",
        )
        env = load_environment(path)
        assert len(env.obstacles) == 1
        np.testing.assert_array_equal(env.start, [0.5, 2.5])

    def test_missing_key_rejected(self, tmp_path):
        path = tmp_path / "env.txt"
        path.write_text("system: point2d\nstart: 0 0\n", encoding="utf-8")
        with pytest.raises(EnvironmentFormatError):
            load_environment(path)

    def test_system_mismatch_rejected(self, tmp_path, pendulum):
        env = self._sample_env()
        path = tmp_path / "env.txt"
        save_environment(env, path)
        with pytest.raises(EnvironmentFormatError):
            load_environment(path, system=pendulum)

    def test_start_in_collision_rejected(self, tmp_path):
        path = tmp_path / "env.txt"
        path.write_text(
            "system: point2d\n"
            "start: 2.2 1.0\n"
            "goal: 4.5 2.5\n"
            "goal_radius: 0.5\n"
            "obstacle: box 2.0 0.0 2.4 3.25\n",
            encoding="utf-8",
        )
        with pytest.raises(EnvironmentFormatError):
            load_environment(path)

    def test_bad_obstacle_spec_rejected(self, tmp_path):
        path = tmp_path / "env.txt"
        path.write_text(
            "system: point2d\n"
            "start: 0.5 2.5\n"
            "goal: 4.5 2.5\n"
            "goal_radius: 0.5\n"
            "obstacle: torus 1 2 3\n",
            encoding="utf-8",
        )
        with pytest.raises(EnvironmentFormatError):
            load_environment(path)

    def test_missing_file_raises(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_environment(tmp_path / "missing.txt")
