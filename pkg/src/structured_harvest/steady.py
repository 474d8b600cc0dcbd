"""Stationary profiles and the scalar closure equation for the crowding index."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from structured_harvest.errors import BracketError
from structured_harvest.grid import SizeGrid, cumulative_trapezoid, simpson_sampled
from structured_harvest.model import ModelParams, closure_bound
from structured_harvest.transport import PopulationState, ThresholdPolicy


@dataclass(frozen=True, eq=False)
class StationaryProfile:
    E: float
    nodes: np.ndarray
    profile: np.ndarray
    N: float
    policy: ThresholdPolicy | None = None
    residual: float = 0.0


def hazard_integral(E: float, params: ModelParams, nodes: np.ndarray,
                    policy: ThresholdPolicy | None = None) -> np.ndarray:
    """int_{l0}^{l} (mu + u)/g dxi at each node, trapezoid on the nodes.

    The harvest part is the exact step u_max on (l*, lm], integrated from l*
    itself so the kink is not smeared over a cell.
    """
    f = params.f
    g = f.growth(params, E, nodes)
    H = cumulative_trapezoid(f.mortality(params, E, nodes) / g, nodes)
    l_star = None if policy is None else policy.effective_l_star
    if l_star is not None and l_star < nodes[-1]:
        above = nodes > l_star
        pts = np.concatenate([[l_star], nodes[above]])
        q = policy.u_max / f.growth(params, E, pts)
        H = H.copy()
        H[above] += cumulative_trapezoid(q, pts)[1:]
    return H


def stationary_profile(E: float, params: ModelParams, policy: ThresholdPolicy | None,
                       grid: SizeGrid) -> StationaryProfile:
    """x(l) = p/g(E,l) exp(-hazard) sampled on the grid edges."""
    if E < 0:
        raise ValueError("crowding index must be non-negative")
    nodes = grid.edges
    g = params.f.growth(params, E, nodes)
    x = params.p / g * np.exp(-hazard_integral(E, params, nodes, policy))
    N = simpson_sampled(x, grid.dl)
    return StationaryProfile(float(E), nodes, x, N, policy)


def closure_residual(E: float, params: ModelParams, policy: ThresholdPolicy | None,
                     grid: SizeGrid) -> float:
    """F(E) = E - int chi(l) x(l; E) dl, Simpson on the edge nodes."""
    prof = stationary_profile(E, params, policy, grid)
    w = params.f.kernel(params, prof.nodes)
    return float(E - simpson_sampled(w * prof.profile, grid.dl))


def solve_steady_crowding(params: ModelParams, policy: ThresholdPolicy | None,
                          grid: SizeGrid, rel_tol: float = 1e-6) -> StationaryProfile:
    """Root of the closure residual on [0, C] by Brent's method.

    Raises BracketError (carrying both end residuals) when the residual does
    not change sign on the bracket.
    """
    if params.p == 0:
        return stationary_profile(0.0, params, policy, grid)
    C = closure_bound(params)

    def F(E):
        return closure_residual(E, params, policy, grid)

    f_lo, f_hi = F(0.0), F(C)
    if not (f_lo < 0 < f_hi):
        raise BracketError(0.0, C, f_lo, f_hi, "closure residual")
    E_star = brentq(F, 0.0, C, xtol=rel_tol * C, rtol=4 * np.finfo(float).eps, maxiter=200)
    prof = stationary_profile(E_star, params, policy, grid)
    return StationaryProfile(prof.E, prof.nodes, prof.profile, prof.N, policy, F(E_star))


def closure_curve(params: ModelParams, grid: SizeGrid, E_values,
                  policy: ThresholdPolicy | None = None) -> np.ndarray:
    return np.array([closure_residual(float(E), params, policy, grid) for E in E_values])


# -- discrete fixed point of the finite-volume scheme ------------------------

def discrete_profile(E: float, params: ModelParams, grid: SizeGrid,
                     policy: ThresholdPolicy | None = None) -> np.ndarray:
    """Cell averages that the upwind scheme leaves unchanged at frozen E.

    Stationarity of the update gives F_{i+1/2} = F_{i-1/2} g_{i+1/2} /
    (g_{i+1/2} + dl (mu_i + u_i)) with F_{1/2} = p.
    """
    f = params.f
    g_out = f.growth(params, E, grid.edges[1:])
    loss = f.mortality(params, E, grid.centers)
    if policy is not None:
        loss = loss + policy.realized
    flux = params.p * np.cumprod(g_out / (g_out + grid.dl * loss))
    return flux / g_out


def discrete_stationary_state(params: ModelParams, grid: SizeGrid,
                              policy: ThresholdPolicy | None = None) -> PopulationState:
    """Exact steady state of the discrete scheme, closure solved with cell sums."""
    if params.p == 0:
        return PopulationState(0.0, np.zeros(grid.n_cells))
    w = params.f.kernel(params, grid.centers) * grid.dl

    def F(E):
        return E - float(np.dot(w, discrete_profile(E, params, grid, policy)))

    C = closure_bound(params)
    f_lo, f_hi = F(0.0), F(C)
    if not (f_lo < 0 < f_hi):
        raise BracketError(0.0, C, f_lo, f_hi, "discrete closure residual")
    E = brentq(F, 0.0, C, xtol=1e-13 * C, rtol=4 * np.finfo(float).eps, maxiter=500)
    return PopulationState(0.0, discrete_profile(E, params, grid, policy))
