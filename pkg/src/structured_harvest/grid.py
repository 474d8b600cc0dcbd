"""Uniform size mesh, quadrature rules and the CFL time step."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from structured_harvest.model import ModelParams, closure_bound


@dataclass(frozen=True, eq=False)
class SizeGrid:
    l0: float
    lm: float
    n_cells: int
    dl: float
    edges: np.ndarray
    centers: np.ndarray

    def __eq__(self, other):
        return (
            isinstance(other, SizeGrid)
            and (self.l0, self.lm, self.n_cells) == (other.l0, other.lm, other.n_cells)
        )

    def __hash__(self):
        return hash((self.l0, self.lm, self.n_cells))


def build_grid(l0: float, lm: float, n_cells: int) -> SizeGrid:
    if int(n_cells) != n_cells or n_cells < 2:
        raise ValueError(f"need at least 2 cells, got {n_cells}")
    if not l0 < lm:
        raise ValueError(f"inverted bounds: l0={l0}, lm={lm}")
    n_cells = int(n_cells)
    dl = (lm - l0) / n_cells
    edges = l0 + dl * np.arange(n_cells + 1)
    edges[-1] = lm
    centers = 0.5 * (edges[:-1] + edges[1:])
    edges.setflags(write=False)
    centers.setflags(write=False)
    return SizeGrid(float(l0), float(lm), n_cells, dl, edges, centers)


def grid_for(params: ModelParams, n_cells: int = 400) -> SizeGrid:
    return build_grid(params.l0, params.lm, n_cells)


def integrate_cells(values, grid: SizeGrid) -> float:
    """Midpoint rule on cell averages: sum(values) * dl."""
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n_cells,):
        raise ValueError(f"expected {grid.n_cells} cell values, got shape {values.shape}")
    return float(np.sum(values) * grid.dl)


def simpson_sampled(y, h: float) -> float:
    """Composite Simpson on equally spaced samples.

    An even number of samples is handled by closing the last three intervals
    with the 3/8 rule.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if n < 2:
        return 0.0
    if n == 2:
        return 0.5 * h * (y[0] + y[1])
    if n % 2 == 1:
        return h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())
    if n == 4:
        return 3.0 * h / 8.0 * (y[0] + 3.0 * y[1] + 3.0 * y[2] + y[3])
    head = simpson_sampled(y[:-3], h)
    return head + 3.0 * h / 8.0 * (y[-4] + 3.0 * y[-3] + 3.0 * y[-2] + y[-1])


def integrate_simpson(f: Callable | np.ndarray, a: float, b: float, n_nodes: int) -> float:
    """Composite Simpson over [a, b] on ``n_nodes`` equally spaced nodes.

    ``f`` is either a vectorised callable or an array already sampled on
    ``np.linspace(a, b, n_nodes)``.
    """
    if n_nodes < 3 or n_nodes % 2 == 0:
        raise ValueError(f"Simpson needs an odd node count >= 3, got {n_nodes}")
    if not a < b:
        raise ValueError("need a < b")
    if callable(f):
        y = np.asarray(f(np.linspace(a, b, n_nodes)), dtype=float)
        if y.ndim == 0:
            y = np.full(n_nodes, float(y))
    else:
        y = np.asarray(f, dtype=float)
        if y.shape != (n_nodes,):
            raise ValueError("sample count does not match n_nodes")
    return simpson_sampled(y, (b - a) / (n_nodes - 1))


def cumulative_trapezoid(y, x) -> np.ndarray:
    """Running trapezoid integral, starting at 0 on x[0]."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
    return out


def max_growth(params: ModelParams) -> float:
    """Largest growth rate over [l0, lm] and the admissible crowding range."""
    f = params.f
    if hasattr(f, "growth_max"):
        return float(f.growth_max(params))
    # fallback for forms without an analytic bound
    E_hi = 2.0 * closure_bound(params)
    l = np.linspace(params.l0, params.lm, 201)
    E = np.linspace(0.0, E_hi, 65)
    return float(np.max(f.growth(params, E[:, None], l[None, :])))


def cfl_timestep(params: ModelParams, grid: SizeGrid, safety: float = 0.8) -> float:
    if not 0 < safety <= 1:
        raise ValueError(f"CFL safety factor must lie in (0, 1], got {safety}")
    return safety * grid.dl / max_growth(params)
