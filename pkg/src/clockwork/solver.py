"""Stiff integration of the clock model with dense output and switchover detection."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import OdeSolution, Radau
from scipy.optimize import brentq

from .kinetics import (
    DimensionlessGroups,
    InitialConcentrations,
    RateConstants,
    derive_groups,
    jacobian_full,
)


class SolverError(RuntimeError):
    """Integration stopped early. ``trajectory`` holds what was computed."""

    def __init__(self, message: str, trajectory: Optional["Trajectory"] = None):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass(frozen=True)
class SolverConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_steps: int = 100_000
    t_end: Optional[float] = None
    initial_step: Optional[float] = None
    n_samples: Optional[int] = None  # None: report every accepted step

    def __post_init__(self):
        if not 0 < self.rel_tol < 1:
            raise ValueError(f"rel_tol must lie in (0, 1), got {self.rel_tol}")
        if not self.abs_tol > 0:
            raise ValueError(f"abs_tol must be positive, got {self.abs_tol}")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")
        if self.t_end is not None and not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if self.initial_step is not None and not self.initial_step > 0:
            raise ValueError("initial_step must be positive")
        if self.n_samples is not None and self.n_samples < 2:
            raise ValueError("n_samples must be at least 2")


@dataclass(frozen=True)
class Trajectory:
    """Solver output.

    ``states`` columns are (beta, gamma) when ``kind == "dimensionless"`` and
    (a, b, c) in mol/l when ``kind == "dimensional"``; ``times`` is tau or
    seconds accordingly. ``dense`` interpolates the state between accepted
    steps over the whole integrated interval.
    """

    times: np.ndarray
    states: np.ndarray
    kind: str
    groups: DimensionlessGroups
    rates: Optional[RateConstants] = None
    init: Optional[InitialConcentrations] = None
    rel_tol: float = 0.0
    abs_tol: float = 0.0
    n_steps: int = 0
    nfev: int = 0
    njev: int = 0
    nlu: int = 0
    dense: Optional[OdeSolution] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if len(self.times) == 0:
            raise ValueError("trajectory must be non-empty")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("sample times must be strictly increasing")
        self.times.flags.writeable = False
        self.states.flags.writeable = False

    @property
    def dimensional(self) -> bool:
        return self.kind == "dimensional"

    @property
    def tau(self) -> np.ndarray:
        if self.dimensional:
            return self.times * (self.rates.k1 * self.init.c0)
        return self.times

    @property
    def beta(self) -> np.ndarray:
        if self.dimensional:
            return self.states[:, 1] / self.init.m0
        return self.states[:, 0]

    @property
    def gamma(self) -> np.ndarray:
        if self.dimensional:
            return self.states[:, 2] / self.init.c0
        return self.states[:, 1]

    def beta_at(self, t):
        """Dense-output beta at time(s) ``t`` in the trajectory's own time unit."""
        y = self.dense(t)
        if self.dimensional:
            return y[1] / self.init.m0
        return y[0]

    def at(self, t) -> np.ndarray:
        """Dense-output state at time(s) ``t``; shape (n_vars,) or (n_vars, len(t))."""
        return self.dense(t)


@dataclass(frozen=True)
class SwitchoverEvent:
    tau_event: float
    threshold: float
    t_event: float  # same value in the trajectory's own time unit (tau or seconds)


def corner_threshold(groups: DimensionlessGroups) -> float:
    """Iodine level at the centre of the switchover corner, sqrt(2 eps / pi).

    This is the leading-order value of beta where the induction line meets the
    post-switchover curve, so the upward crossing of this level marks the
    numeric switchover.
    """
    return math.sqrt(2.0 * groups.eps / math.pi)


def _default_first_step(groups: DimensionlessGroups) -> float:
    # region-I relaxation rate is 1 - rho*phi in tau units
    rate = max(1.0 - groups.rho * groups.phi, 1e-3)
    return 1e-3 / rate


def _default_t_end(groups: DimensionlessGroups) -> float:
    if groups.valid:
        return max(3.0 * groups.tau_switch, 20.0)
    return 5.0 / (groups.eps * groups.rho)


def _run(fun, jac, y0, t_end, rtol, atol, first_step, max_steps):
    solver = Radau(fun, 0.0, y0, t_end, rtol=rtol, atol=atol, jac=jac,
                   first_step=min(first_step, t_end))
    ts = [0.0]
    ys = [np.array(y0, dtype=float)]
    interpolants = []
    error = None
    while solver.status == "running":
        if len(interpolants) >= max_steps:
            error = f"step budget of {max_steps} exhausted at t={solver.t:.6g}"
            break
        message = solver.step()
        if solver.status == "failed":
            error = f"integration failed at t={solver.t:.6g}: {message}"
            break
        interpolants.append(solver.dense_output())
        ts.append(solver.t)
        ys.append(solver.y.copy())
    dense = OdeSolution(ts, interpolants) if interpolants else None
    stats = dict(n_steps=len(interpolants), nfev=solver.nfev, njev=solver.njev, nlu=solver.nlu)
    return np.array(ts), np.array(ys), dense, stats, error


def _resample(ts, ys, dense, n_samples):
    if n_samples is None or dense is None:
        return ts, ys
    grid = np.linspace(0.0, ts[-1], n_samples)
    return grid, dense(grid).T


def integrate(groups: DimensionlessGroups, config: Optional[SolverConfig] = None, *,
              beta0: Optional[float] = None, gamma0: float = 1.0) -> Trajectory:
    """Integrate the dimensionless system from (beta0, gamma0).

    ``beta0`` defaults to ``groups.phi``. Raises :class:`SolverError`, carrying
    the partial trajectory, if the step budget runs out or a step fails.
    """
    config = config or SolverConfig()
    if not groups.valid:
        warnings.warn(f"rho*phi = {groups.rho * groups.phi:.6g} >= 1: no induction period",
                      stacklevel=2)
    eps, rho = groups.eps, groups.rho
    er = eps * rho

    def fun(_t, y):
        b, g = y
        al = 1.0 - 2.0 * b
        return np.array([-b * g + er * al * al, -rho * b * g])

    def jac(_t, y):
        b, g = y
        return np.array([[-g - 4.0 * er * (1.0 - 2.0 * b), -b], [-rho * g, -rho * b]])

    y0 = [groups.phi if beta0 is None else beta0, gamma0]
    t_end = config.t_end or _default_t_end(groups)
    first = config.initial_step or _default_first_step(groups)
    ts, ys, dense, stats, error = _run(fun, jac, y0, t_end, config.rel_tol, config.abs_tol,
                                       first, config.max_steps)
    ts, ys = _resample(ts, ys, dense, config.n_samples)
    traj = Trajectory(ts, ys, "dimensionless", groups, rel_tol=config.rel_tol,
                      abs_tol=config.abs_tol, dense=dense, **stats)
    if error:
        raise SolverError(error, traj)
    return traj


def integrate_dimensional(rates: RateConstants, init: InitialConcentrations,
                          config: Optional[SolverConfig] = None) -> Trajectory:
    """Integrate the three mass-action equations for (a, b, c) in seconds.

    ``abs_tol`` is taken relative to the natural concentration scales (m0 for
    iodide and iodine, c0 for ascorbic acid); ``t_end`` and ``initial_step``
    are in seconds.
    """
    config = config or SolverConfig()
    groups = derive_groups(rates, init)
    if not groups.valid:
        warnings.warn(f"b0/c0 = {init.b0 / init.c0:.6g} >= 1: no induction period", stacklevel=2)
    k0, k1 = rates.k0, rates.k1
    time_scale = 1.0 / (k1 * init.c0)

    def fun(_t, y):
        a, b, c = y
        fast = k1 * b * c
        slow = k0 * a * a
        return np.array([2.0 * fast - 2.0 * slow, slow - fast, -fast])

    def jac(_t, y):
        return jacobian_full(y[0], y[1], y[2], rates)

    y0 = [init.a0, init.b0, init.c0]
    atol = config.abs_tol * np.array([init.m0, init.m0, init.c0])
    t_end = config.t_end or _default_t_end(groups) * time_scale
    first = config.initial_step or _default_first_step(groups) * time_scale
    ts, ys, dense, stats, error = _run(fun, jac, y0, t_end, config.rel_tol, atol,
                                       first, config.max_steps)
    ts, ys = _resample(ts, ys, dense, config.n_samples)
    traj = Trajectory(ts, ys, "dimensional", groups, rates=rates, init=init,
                      rel_tol=config.rel_tol, abs_tol=config.abs_tol, dense=dense, **stats)
    if error:
        raise SolverError(error, traj)
    return traj


def detect_switchover(traj: Trajectory, threshold: Optional[float] = None) -> Optional[SwitchoverEvent]:
    """First upward crossing of beta = ``threshold``, refined on the dense output.

    ``threshold`` defaults to :func:`corner_threshold`. The search runs over
    the accepted solver steps, so the result does not depend on how the
    trajectory was sampled for output. Returns None when beta never crosses
    upward.
    """
    if threshold is None:
        threshold = corner_threshold(traj.groups)
    if traj.dense is None:
        grid = traj.times
        values = traj.beta - threshold
        refine = None
    else:
        grid = np.asarray(traj.dense.ts)
        values = np.asarray(traj.beta_at(grid)) - threshold
        refine = traj.beta_at

    hits = np.nonzero((values[:-1] < 0) & (values[1:] >= 0))[0]
    if hits.size == 0:
        return None
    i = int(hits[0])
    lo, hi = grid[i], grid[i + 1]
    if refine is None:
        # linear interpolation between samples
        t = lo + (hi - lo) * (-values[i]) / (values[i + 1] - values[i])
    elif values[i + 1] == 0:
        t = hi
    else:
        t = brentq(lambda s: refine(s) - threshold, lo, hi, xtol=1e-12 * max(abs(hi), 1.0),
                   rtol=4 * np.finfo(float).eps, maxiter=200)
    tau = t * traj.rates.k1 * traj.init.c0 if traj.dimensional else t
    return SwitchoverEvent(tau_event=float(tau), threshold=float(threshold), t_event=float(t))
