"""Intrinsic replacement index R(E) and the crowding level where R = 1."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from structured_harvest.grid import SizeGrid, cumulative_trapezoid, simpson_sampled
from structured_harvest.model import ModelParams, closure_bound


@dataclass(frozen=True)
class ViabilityReport:
    E: float
    R: float
    viable: bool


@dataclass(frozen=True)
class CriticalCrowding:
    E_crit: float | None
    status: str  # "ok", "never-viable" or "no-crossing"
    R0: float


def _mortality_hazard(E, params, nodes):
    f = params.f
    return cumulative_trapezoid(f.mortality(params, E, nodes) / f.growth(params, E, nodes), nodes)


def survival_probability(E: float, l, params: ModelParams, grid: SizeGrid):
    """exp(-int_{l0}^{l} mu/g), trapezoid on the grid edges plus the query points."""
    l = np.asarray(l, dtype=float)
    nodes = np.union1d(grid.edges, l.ravel())
    H = _mortality_hazard(E, params, nodes)
    out = np.exp(-H[np.searchsorted(nodes, l)])
    return float(out) if out.ndim == 0 else out


def _maturity_nodes(params: ModelParams, grid: SizeGrid):
    """Grid edges below l_mat followed by an odd Simpson mesh on [l_mat, lm].

    The fertility jumps at l_mat, so the Simpson range starts exactly there;
    its spacing is the grid width rounded to an even interval count.
    """
    span = params.lm - params.l_mat
    n_int = max(2, 2 * int(round(span / grid.dl / 2.0)))
    mature = np.linspace(params.l_mat, params.lm, n_int + 1)
    below = grid.edges[grid.edges < params.l_mat]
    return np.concatenate([below, mature]), below.size, span / n_int


def replacement_index(E: float, params: ModelParams, grid: SizeGrid) -> float:
    """R(E) = int m(l)/g(E,l) * survival(E,l) dl."""
    if E < 0:
        raise ValueError("crowding index must be non-negative")
    if params.m0 == 0 or params.l_mat >= params.lm:
        return 0.0
    nodes, j, h = _maturity_nodes(params, grid)
    f = params.f
    g = f.growth(params, E, nodes)
    H = _mortality_hazard(E, params, nodes)
    mature = nodes[j:]
    integrand = f.fertility(params, mature) / g[j:] * np.exp(-H[j:])
    return float(simpson_sampled(integrand, h))


def viability(E: float, params: ModelParams, grid: SizeGrid) -> ViabilityReport:
    R = replacement_index(E, params, grid)
    return ViabilityReport(float(E), R, R >= 1.0)


def replacement_curve(params: ModelParams, grid: SizeGrid, E_values) -> np.ndarray:
    return np.array([replacement_index(float(E), params, grid) for E in E_values])


def critical_crowding(params: ModelParams, grid: SizeGrid,
                      bracket_hint: tuple[float, float] | None = None,
                      rel_tol: float = 1e-10) -> CriticalCrowding:
    """Crowding level at which R(E) = 1.

    Without a hint the upper end starts at the closure bound and is doubled
    (at most 40 times) until R drops below one.
    """
    R0 = replacement_index(0.0, params, grid)
    if R0 <= 1.0:
        return CriticalCrowding(None, "never-viable", R0)

    def h(E):
        return replacement_index(E, params, grid) - 1.0

    if bracket_hint is not None:
        lo, hi = map(float, bracket_hint)
        if not (h(lo) > 0 > h(hi)):
            return CriticalCrowding(None, "no-crossing", R0)
    else:
        lo, hi = 0.0, max(closure_bound(params), 1.0)
        for _ in range(40):
            if h(hi) < 0:
                break
            lo, hi = hi, 2.0 * hi
        else:
            return CriticalCrowding(None, "no-crossing", R0)
    E = brentq(h, lo, hi, xtol=1e-12 * hi, rtol=rel_tol, maxiter=300)
    return CriticalCrowding(float(E), "ok", R0)
