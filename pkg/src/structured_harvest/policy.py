"""Truncated discounted revenue and the threshold-policy optimiser."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from structured_harvest.errors import NumericalFailure
from structured_harvest.grid import SizeGrid
from structured_harvest.model import ModelParams
from structured_harvest.replacement import replacement_index
from structured_harvest.steady import discrete_stationary_state
from structured_harvest.transport import (
    PopulationState,
    TrajectoryRecord,
    record_convergence,
    simulate,
    threshold_policy,
)

log = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class PolicyEvaluation:
    l_star: float
    J_T: float
    E_terminal: float
    N_terminal: float
    R_terminal: float
    viable: bool
    conv_time_E: float | None
    conv_time_N: float | None
    error: str | None = None

    def as_row(self) -> dict:
        return asdict(self)


def discounted_revenue(record: TrajectoryRecord, params: ModelParams) -> float:
    """Left-endpoint sum of exp(-r t) * harvest value rate over the steps."""
    t = record.times
    dt = np.diff(t)
    return float(np.sum(np.exp(-params.r * t[:-1]) * record.harvest_value_rate[:-1] * dt))


def default_initial_state(params: ModelParams, grid: SizeGrid) -> PopulationState:
    """No-harvest steady state of the discrete scheme."""
    return discrete_stationary_state(params, grid)


def evaluate_threshold(l_star: float, params: ModelParams, grid: SizeGrid,
                       initial: PopulationState | None = None, safety: float = 0.8,
                       mode: str = "cell-average", tolerance: float = 0.01,
                       keep_record: bool = False):
    """Simulate the threshold rule over [0, T] and summarise revenue and terminal state."""
    if not params.l0 <= l_star <= params.lm:
        raise ValueError(f"threshold {l_star} outside [{params.l0}, {params.lm}]")
    if initial is None:
        initial = default_initial_state(params, grid)
    pol = threshold_policy(l_star, params, grid, mode)
    rec = simulate(initial, pol, params, grid, params.T, safety=safety)
    J = discounted_revenue(rec, params)
    E_T = float(rec.E_series[-1])
    R = replacement_index(E_T, params, grid)
    conv = record_convergence(rec, tolerance)
    ev = PolicyEvaluation(float(l_star), J, E_T, float(rec.N_series[-1]), R, R >= 1.0,
                          conv["E"], conv["N"])
    return (ev, rec) if keep_record else ev


def _safe_eval(args):
    l_star, params, grid, initial, safety, mode = args
    try:
        return evaluate_threshold(l_star, params, grid, initial, safety, mode)
    except (NumericalFailure, FloatingPointError, ValueError) as exc:
        nan = float("nan")
        return PolicyEvaluation(float(l_star), nan, nan, nan, nan, False, None, None, str(exc))


def _pick_argmax(evals):
    best = None
    for ev in evals:
        if ev.error is not None or not np.isfinite(ev.J_T):
            continue
        # ties go to the larger (more protective) threshold
        if best is None or ev.J_T >= best.J_T:
            best = ev
    return best


@dataclass
class SweepResult:
    evaluations: list
    best: PolicyEvaluation | None


def sweep_thresholds(l_grid, params: ModelParams, grid: SizeGrid, jobs: int = 1,
                     initial: PopulationState | None = None, safety: float = 0.8,
                     mode: str = "cell-average") -> SweepResult:
    """Evaluate every candidate threshold; results are ordered by l_star whatever the job count."""
    l_grid = sorted(float(v) for v in l_grid)
    if not l_grid:
        raise ValueError("empty threshold grid")
    if initial is None:
        initial = default_initial_state(params, grid)
    tasks = [(l, params, grid, initial, safety, mode) for l in l_grid]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            evals = list(pool.map(_safe_eval, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        evals = [_safe_eval(t) for t in tasks]
    evals.sort(key=lambda e: e.l_star)
    return SweepResult(evals, _pick_argmax(evals))


@dataclass
class RefinedOptimum:
    l_star: float
    J_T: float
    evaluation: PolicyEvaluation | None
    bracket: tuple
    probes: list = field(default_factory=list)
    warning: str | None = None


def golden_section_max(func, a: float, b: float, width: float = 0.05):
    """Maximise a unimodal function on [a, b] until the bracket is narrower than ``width``.

    Returns (x_best, f_best, probes, warning).
    """
    probes = {}

    def F(x):
        if x not in probes:
            probes[x] = func(x)
        return probes[x]

    fa, fb = F(a), F(b)
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = F(c), F(d)
    vals = [fa, fb, fc, fd]
    scale = max(abs(v) for v in vals) or 1.0
    if max(vals) - min(vals) <= 1e-12 * scale:
        mid = 0.5 * (a + b)
        return mid, F(mid), sorted(probes.items()), "objective is flat on the bracket"
    if min(fc, fd) < min(fa, fb):
        return None, None, sorted(probes.items()), "bracket is not unimodal"
    while b - a > width:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = F(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = F(d)
    x_best, f_best = max(probes.items(), key=lambda kv: (kv[1], kv[0]))
    return x_best, f_best, sorted(probes.items()), None


def refine_optimum(coarse_argmax: float, params: ModelParams, grid: SizeGrid,
                   spacing: float = 1.0, width: float = 0.05,
                   initial: PopulationState | None = None, safety: float = 0.8,
                   mode: str = "cell-average", bounds: tuple | None = None) -> RefinedOptimum:
    """Golden-section search on [argmax - spacing, argmax + spacing].

    The bracket is clipped to the domain and, if given, to ``bounds``.
    """
    if initial is None:
        initial = default_initial_state(params, grid)
    lo, hi = (params.l0, params.lm) if bounds is None else bounds
    a = max(params.l0, lo, coarse_argmax - spacing)
    b = min(params.lm, hi, coarse_argmax + spacing)
    if b - a <= width:
        ev = evaluate_threshold(coarse_argmax, params, grid, initial, safety, mode)
        return RefinedOptimum(float(coarse_argmax), ev.J_T, ev, (a, b), [], None)
    cache = {}

    def J(l):
        ev = evaluate_threshold(l, params, grid, initial, safety, mode)
        cache[l] = ev
        return ev.J_T

    x, fx, probes, warning = golden_section_max(J, a, b, width)
    if x is None:
        log.warning("refine_optimum: %s; keeping coarse argmax %.4g", warning, coarse_argmax)
        ev = evaluate_threshold(coarse_argmax, params, grid, initial, safety, mode)
        return RefinedOptimum(float(coarse_argmax), ev.J_T, ev, (a, b), probes, warning)
    if warning:
        log.warning("refine_optimum: %s", warning)
    ev = cache.get(x) or evaluate_threshold(x, params, grid, initial, safety, mode)
    return RefinedOptimum(float(x), float(fx), ev, (a, b), probes, warning)


def viability_filter(evaluations):
    """Split evaluations into (viable, non_viable) and flag whether the best one is viable."""
    viable = [e for e in evaluations if e.viable]
    non_viable = [e for e in evaluations if not e.viable]
    best = _pick_argmax(evaluations)
    return viable, non_viable, (best.viable if best is not None else None)
