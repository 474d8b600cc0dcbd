"""Stationary reduced adjoint, switching function and threshold extraction.

Only the stationary weak-coupling adjoint is solved.  The nonlocal term that
the reduction drops is evaluated afterwards as a diagnostic.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from structured_harvest.errors import NumericalFailure
from structured_harvest.grid import SizeGrid, simpson_sampled
from structured_harvest.model import ModelParams
from structured_harvest.transport import ThresholdPolicy, threshold_policy

log = logging.getLogger(__name__)

ALL_PROTECT = "all-protect"
ALL_HARVEST = "all-harvest"
THRESHOLD = "threshold"
NON_MONOTONE = "non-monotone switching"


@dataclass(frozen=True, eq=False)
class AdjointProfile:
    E: float
    nodes: np.ndarray
    lam: np.ndarray
    policy: ThresholdPolicy


@dataclass(frozen=True, eq=False)
class SwitchingOutcome:
    case: str
    l_star: float | None
    S_values: np.ndarray
    sign_changes: int = 0


def _segment(lam_right, a, b, h):
    # exact solution of dlam/ds = -a lam + b over a length-h step in s = lm - l
    decay = np.exp(-a * h)
    return decay * lam_right + (b / a) * (1.0 - decay) if a > 0 else lam_right + b * h


def solve_stationary_adjoint(E: float, policy: ThresholdPolicy, params: ModelParams,
                             grid: SizeGrid) -> AdjointProfile:
    """Solve -g lam' = c u - (r + mu + u) lam backward from lam(lm) = 0.

    Each node interval is advanced with the exact exponential step for
    coefficients frozen at the interval midpoint; an interval containing the
    threshold is split there so the control jump is resolved exactly.
    """
    f = params.f
    nodes = grid.edges
    l_star = policy.effective_l_star

    def coeffs(l):
        g = float(f.growth(params, E, l))
        u = float(policy.rate_at(l))
        a = (params.r + float(f.mortality(params, E, l)) + u) / g
        b = float(f.price(params, l)) * u / g
        return a, b

    lam = np.zeros(nodes.size)
    for k in range(nodes.size - 2, -1, -1):
        lo, hi = nodes[k], nodes[k + 1]
        val = lam[k + 1]
        if l_star is not None and lo < l_star < hi:
            pieces = [(l_star, hi), (lo, l_star)]
        else:
            pieces = [(lo, hi)]
        for a_, b_ in pieces:
            a, b = coeffs(0.5 * (a_ + b_))
            val = _segment(val, a, b, b_ - a_)
        lam[k] = val
    return AdjointProfile(float(E), nodes, lam, policy)


def switching_function(adjoint: AdjointProfile, params: ModelParams, grid: SizeGrid) -> np.ndarray:
    """S(l) = c(l) - lambda(l) on the nodes."""
    return params.f.price(params, adjoint.nodes) - adjoint.lam


def extract_threshold(S, grid: SizeGrid) -> SwitchingOutcome:
    """Classify the sign pattern of S into the three threshold alternatives.

    More than one sign change is reported as non-monotone switching rather
    than picking one of the crossings.
    """
    S = np.asarray(S, dtype=float)
    nodes = grid.edges
    if S.shape != nodes.shape:
        raise ValueError("S must be sampled on the grid edges")
    if np.all(S < 0):
        return SwitchingOutcome(ALL_PROTECT, None, S)
    if np.all(S > 0):
        return SwitchingOutcome(ALL_HARVEST, None, S)
    sign = np.sign(S)
    nz = np.nonzero(sign)[0]
    changes = int(np.count_nonzero(np.diff(sign[nz]) != 0))
    if changes != 1:
        if changes == 0:
            # S touches zero without crossing; treat by the sign it keeps
            case = ALL_HARVEST if np.all(S >= 0) else ALL_PROTECT
            return SwitchingOutcome(case, None, S, 0)
        return SwitchingOutcome(NON_MONOTONE, None, S, changes)
    i, j = nz[np.nonzero(np.diff(sign[nz]))[0][0]], nz[np.nonzero(np.diff(sign[nz]))[0][0] + 1]
    if S[i] > 0:
        # decreasing crossing: harvest below, protect above
        return SwitchingOutcome(NON_MONOTONE, None, S, changes)
    # any exact zeros between i and j sit at the crossing
    if j - i > 1:
        l_star = float(nodes[i + 1])
    else:
        l_star = float(nodes[i] - S[i] * (nodes[j] - nodes[i]) / (S[j] - S[i]))
    return SwitchingOutcome(THRESHOLD, l_star, S, 1)


def nonlocal_coupling_term(state, adjoint: AdjointProfile, params: ModelParams,
                           grid: SizeGrid) -> float:
    """int x [lam' dg/dE - lam dmu/dE] dl, the factor dropped by the weak-coupling reduction.

    lam' uses backward differences at interior nodes (forward at the first).
    """
    f = params.f
    nodes = adjoint.nodes
    x = np.asarray(state.profile, dtype=float)
    lam = adjoint.lam
    dlam = np.empty_like(lam)
    dlam[1:] = np.diff(lam) / np.diff(nodes)
    dlam[0] = dlam[1]
    integrand = x * (dlam * f.growth_dE(params, adjoint.E, nodes)
                     - lam * f.mortality_dE(params, adjoint.E, nodes))
    return float(simpson_sampled(integrand, grid.dl))


def weak_coupling_ratio(state, adjoint: AdjointProfile, params: ModelParams,
                        grid: SizeGrid) -> float | None:
    """max|chi(l) C| over max|(r + mu + u) lam - c u|; None when the denominator vanishes."""
    f = params.f
    nodes = adjoint.nodes
    C = nonlocal_coupling_term(state, adjoint, params, grid)
    num = float(np.max(np.abs(f.kernel(params, nodes) * C)))
    u = adjoint.policy.rate_at(nodes)
    lead = (params.r + f.mortality(params, adjoint.E, nodes) + u) * adjoint.lam - f.price(params, nodes) * u
    den = float(np.max(np.abs(lead)))
    if den == 0.0:
        return None
    return num / den


@dataclass
class AdjointReport:
    E: float
    adjoint: AdjointProfile
    S: np.ndarray
    outcome: SwitchingOutcome
    coupling_term: float
    weak_coupling_ratio: float | None
    monotone_S: bool
    lambda_nonincreasing: bool
    notes: list = field(default_factory=list)


def analyze(state, policy: ThresholdPolicy, params: ModelParams, grid: SizeGrid) -> AdjointReport:
    """Adjoint, switching outcome and coupling diagnostics at a stationary state."""
    adj = solve_stationary_adjoint(state.E, policy, params, grid)
    S = switching_function(adj, params, grid)
    out = extract_threshold(S, grid)
    C = nonlocal_coupling_term(state, adj, params, grid)
    ratio = weak_coupling_ratio(state, adj, params, grid)
    monotone = bool(np.all(np.diff(S) > 0))
    lam_ok = bool(np.all(np.diff(adj.lam) <= 1e-12 * max(1.0, float(np.max(np.abs(adj.lam))))))
    notes = []
    if not monotone:
        notes.append("switching function is not strictly increasing in size")
    if not lam_ok:
        notes.append("shadow value increases with size somewhere")
    return AdjointReport(adj.E, adj, S, out, C, ratio, monotone, lam_ok, notes)


@dataclass
class FixedPointResult:
    thresholds: list
    converged: bool
    reason: str


def adjoint_fixed_point(params: ModelParams, grid: SizeGrid, l_start: float,
                        damping: float = 0.5, max_iter: int = 50, tol: float = 0.05) -> FixedPointResult:
    """threshold -> stationary state -> adjoint -> new threshold, damped.

    A validation tool only: non-convergence is returned, never raised.
    """
    from structured_harvest.steady import solve_steady_crowding

    l_cur = float(l_start)
    history = [l_cur]
    for _ in range(max_iter):
        pol = threshold_policy(l_cur, params, grid)
        try:
            st = solve_steady_crowding(params, pol, grid)
        except NumericalFailure as exc:
            return FixedPointResult(history, False, f"closure failed: {exc}")
        out = extract_threshold(switching_function(
            solve_stationary_adjoint(st.E, pol, params, grid), params, grid), grid)
        if out.case != THRESHOLD:
            return FixedPointResult(history, False, f"switching outcome {out.case}")
        l_new = (1.0 - damping) * l_cur + damping * out.l_star
        history.append(l_new)
        if abs(l_new - l_cur) < tol:
            return FixedPointResult(history, True, "converged")
        l_cur = l_new
    return FixedPointResult(history, False, "iteration limit reached")
