"""Shared test fixtures and the independent integration oracle.

The oracle is a tiny explicit-Euler integrator at step 1e-7, written
against the raw derivative callable so it shares no code with the
production integrator.  Frozen endpoint values for the torque-limited
pendulum are checked against live recomputation in the tests that use
them, so a drifting oracle cannot silently validate anything.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

import sparseplan as sp


def euler_oracle(derivative, x0, u, duration: float, h: float = 1e-7):
    """Explicit Euler at tiny fixed step; independent reference integrator."""
    steps = round(duration / h)
    x = tuple(float(v) for v in x0)
    ut = tuple(float(v) for v in u)
    for _ in range(steps):
        dx = derivative(x, ut)
        x = tuple(xi + h * di for xi, di in zip(x, dx))
    return x


# Pendulum endpoints from euler_oracle(pendulum.derivative, (0, 0), (1,), T):
# frozen so regressions are visible, recomputed live where used.
PEND_EULER_T01 = (-0.05856652850554981, -1.1709952870963556)
PEND_EULER_T04 = (-0.9043243341841207, -4.207881286358708)
PEND_EULER_T05 = (-1.3466083315712958, -4.540250209239484)


@pytest.fixture(scope="session")
def point2d():
    return sp.make_system("point2d")


@pytest.fixture(scope="session")
def pendulum():
    return sp.make_system("pendulum")


@pytest.fixture(scope="session")
def cartpole():
    return sp.make_system("cartpole")


@pytest.fixture(scope="session")
def point_env(point2d):
    return sp.make_environment(point2d)


@pytest.fixture(scope="session")
def pend_env(pendulum):
    return sp.make_environment(pendulum)


def grown_tree(system, env, planner="sst", iterations=2000, seed=0,
               delta_s=None, delta_bn=None, t_prop=None, observer=None, **kw):
    """Convenience: run a planner with system-preset radii by default."""
    config = sp.PlannerConfig(
        delta_bn=system.delta_bn if delta_bn is None else delta_bn,
        delta_s=system.delta_s if delta_s is None else delta_s,
        t_prop=system.t_prop if t_prop is None else t_prop,
        iterations=iterations,
        seed=seed,
        **kw,
    )
    return sp.run_planner(planner, system, env, config, observer=observer)
