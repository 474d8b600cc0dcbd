"""Forward solver for the nonlocal size-structured transport equation.

First-order upwind finite volumes in size, explicit Euler in time.  The
crowding index is frozen over each step; inflow enters as an exact flux p at
the left edge and individuals reaching l_m leave through a free upwind
outflux.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from structured_harvest.errors import CFLError
from structured_harvest.grid import SizeGrid, cfl_timestep
from structured_harvest.model import ModelParams

POLICY_MODES = ("cell-average", "center")


@dataclass(frozen=True)
class PopulationState:
    t: float
    density: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.density, dtype=float)
        if np.any(d < 0):
            raise ValueError("density must be non-negative")
        object.__setattr__(self, "density", d)


@dataclass(frozen=True, eq=False)
class ThresholdPolicy:
    """Minimum-harvest-size rule realised as a per-cell harvest rate.

    ``l_star is None`` is the no-harvest policy.  ``effective_l_star`` is the
    threshold actually imposed on the mesh: l_star itself for the default
    cell-average realisation, the nearest edge for the center rule.
    """

    l_star: float | None
    u_max: float
    realized: np.ndarray
    effective_l_star: float | None = None
    mode: str = "cell-average"

    def rate_at(self, l):
        """Harvest rate of the underlying step function (right-continuous above l*)."""
        l = np.asarray(l, dtype=float)
        if self.effective_l_star is None:
            return np.zeros_like(l)
        return np.where(l > self.effective_l_star, self.u_max, 0.0)


def threshold_policy(l_star: float | None, params: ModelParams, grid: SizeGrid,
                     mode: str = "cell-average") -> ThresholdPolicy:
    """Map a threshold size onto the mesh.

    ``cell-average`` assigns each cell the mean of the step function over the
    cell, so only the cell straddling l* carries a fractional rate.
    ``center`` harvests a cell at full rate iff its center exceeds l*.
    """
    if mode not in POLICY_MODES:
        raise ValueError(f"unknown policy mode {mode!r}")
    u = params.u_max
    if l_star is None:
        return ThresholdPolicy(None, u, np.zeros(grid.n_cells), None, mode)
    l_star = float(l_star)
    if mode == "center":
        realized = np.where(grid.centers > l_star, u, 0.0)
        idx = int(np.argmax(grid.centers > l_star)) if np.any(grid.centers > l_star) else grid.n_cells
        eff = float(grid.edges[idx])
    else:
        frac = np.clip((grid.edges[1:] - l_star) / grid.dl, 0.0, 1.0)
        realized = u * frac
        eff = min(max(l_star, grid.l0), grid.lm)
    realized.setflags(write=False)
    return ThresholdPolicy(l_star, u, realized, eff, mode)


def no_policy(params: ModelParams, grid: SizeGrid) -> ThresholdPolicy:
    return threshold_policy(None, params, grid)


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    E_series: np.ndarray
    N_series: np.ndarray
    harvest_value_rate: np.ndarray
    snapshots: list = field(default_factory=list)
    final_state: PopulationState | None = None
    dt: float = float("nan")
    policy: ThresholdPolicy | None = None
    min_density: float = float("nan")


def crowding_index(state: PopulationState, grid: SizeGrid, params: ModelParams) -> float:
    w = params.f.kernel(params, grid.centers)
    return float(np.sum(w * state.density) * grid.dl)


def total_population(state: PopulationState, grid: SizeGrid) -> float:
    return float(np.sum(state.density) * grid.dl)


def harvest_value_rate(state: PopulationState, policy: ThresholdPolicy,
                       params: ModelParams, grid: SizeGrid) -> float:
    c = params.f.price(params, grid.centers)
    return float(np.sum(c * policy.realized * state.density) * grid.dl)


def boundary_density(E: float, params: ModelParams, p_t: float | None = None) -> float:
    """Density at l0 whose growth flux equals the inflow p_t."""
    p_t = params.p if p_t is None else p_t
    return float(p_t / params.f.growth(params, E, params.l0))


class _Stepper:
    """Precomputed per-run arrays for the explicit update."""

    def __init__(self, params: ModelParams, grid: SizeGrid, policy: ThresholdPolicy):
        self.params = params
        self.grid = grid
        self.policy = policy
        f = params.f
        self.kernel_dl = f.kernel(params, grid.centers) * grid.dl
        self.price_u_dl = f.price(params, grid.centers) * policy.realized * grid.dl
        self.u = np.asarray(policy.realized, dtype=float)

    def crowding(self, x):
        return float(np.dot(self.kernel_dl, x))

    def harvest(self, x):
        return float(np.dot(self.price_u_dl, x))

    def __call__(self, x, dt, p_t, check=True):
        prm, grid = self.params, self.grid
        f = prm.f
        E = self.crowding(x)
        g_out = f.growth(prm, E, grid.edges[1:])
        loss = f.mortality(prm, E, grid.centers) + self.u
        ratio = dt / grid.dl
        keep = 1.0 - ratio * g_out - dt * loss
        if check:
            worst = float(np.min(keep))
            if worst < 0:
                raise CFLError(dt, float(np.max(g_out)), grid.dl, worst)
        flux = g_out * x
        inflow = np.empty_like(x)
        inflow[0] = p_t
        inflow[1:] = flux[:-1]
        return keep * x + ratio * inflow, E


def step(state: PopulationState, dt: float, policy: ThresholdPolicy, params: ModelParams,
         grid: SizeGrid, p_t: float | None = None) -> PopulationState:
    """One explicit upwind step of length dt; refuses steps that break positivity."""
    p_t = params.p if p_t is None else p_t
    x_new, _ = _Stepper(params, grid, policy)(state.density, dt, p_t)
    return PopulationState(state.t + dt, x_new)


def simulate(initial: PopulationState, policy: ThresholdPolicy, params: ModelParams,
             grid: SizeGrid, horizon: float | None = None,
             snapshot_times: Sequence[float] = (), safety: float = 0.8,
             inflow: Callable[[float], float] | None = None) -> TrajectoryRecord:
    """Integrate from ``initial`` to ``initial.t + horizon`` with the constant CFL step.

    The last step is shortened to land on the horizon.  Snapshots are taken at
    the first step time at or after each requested time.
    """
    horizon = params.T if horizon is None else float(horizon)
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    dt = cfl_timestep(params, grid, safety)
    stepper = _Stepper(params, grid, policy)
    t0 = float(initial.t)
    t_end = t0 + horizon
    n_full = int(math.floor(horizon / dt * (1 + 1e-12)))
    n_steps = n_full + (1 if t0 + n_full * dt < t_end - 1e-12 * max(1.0, t_end) else 0)

    times = np.empty(n_steps + 1)
    E = np.empty(n_steps + 1)
    N = np.empty(n_steps + 1)
    H = np.empty(n_steps + 1)
    pending = sorted(float(s) for s in snapshot_times)
    snaps = []
    x = np.array(initial.density, dtype=float)
    lowest = float(x.min())
    p_const = params.p
    dl = grid.dl
    for k in range(n_steps + 1):
        t = t_end if k == n_steps else t0 + k * dt
        times[k] = t
        N[k] = x.sum() * dl
        H[k] = stepper.harvest(x)
        while pending and pending[0] <= t + 1e-12:
            snaps.append((t, x.copy()))
            pending.pop(0)
        if k == n_steps:
            E[k] = stepper.crowding(x)
            break
        h = dt if k < n_full else t_end - t
        p_t = p_const if inflow is None else inflow(t)
        x, E[k] = stepper(x, h, p_t)
        lowest = min(lowest, float(x.min()))
    return TrajectoryRecord(times, E, N, H, snaps, PopulationState(t_end, x), dt, policy, lowest)


def convergence_time(times, series, tolerance: float = 0.01) -> float | None:
    """Earliest time after which the series stays within tolerance of its terminal value.

    Returns ``None`` when only the terminal sample qualifies (not converged
    within the horizon).
    """
    times = np.asarray(times, dtype=float)
    s = np.asarray(series, dtype=float)
    if s.size == 0:
        raise ValueError("empty series")
    target = s[-1]
    outside = np.abs(s - target) > tolerance * abs(target)
    if not outside.any():
        return float(times[0])
    last = int(np.nonzero(outside)[0][-1])
    if last + 1 >= s.size - 1:
        return None
    return float(times[last + 1])


def record_convergence(record: TrajectoryRecord, tolerance: float = 0.01) -> dict:
    return {
        "E": convergence_time(record.times, record.E_series, tolerance),
        "N": convergence_time(record.times, record.N_series, tolerance),
    }
