"""Scenario drivers behind the CLI subcommands.  Each writes its files and returns a summary dict."""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from structured_harvest import adjoint as adj
from structured_harvest import io, plotting
from structured_harvest.config import RunConfig, initial_state
from structured_harvest.errors import NumericalFailure
from structured_harvest.grid import cfl_timestep
from structured_harvest.policy import (
    discounted_revenue,
    refine_optimum,
    sweep_thresholds,
    viability_filter,
)
from structured_harvest.replacement import critical_crowding, replacement_curve, replacement_index
from structured_harvest.steady import closure_curve, solve_steady_crowding, stationary_profile
from structured_harvest.transport import record_convergence, simulate, threshold_policy

log = logging.getLogger(__name__)

TABLE_THRESHOLDS = (40.0, 60.0, 80.0)
SWEEP_HEADER = ("l_star", "J_T", "E_terminal", "N_terminal", "R_terminal", "viable",
                "conv_time_E", "conv_time_N")


def _stamp(cfg: RunConfig) -> dict:
    return {"config_hash": cfg.digest(), "n_cells": cfg.n_cells}


def _tag(value: float) -> str:
    return format(value, "g").replace(".", "p")


def run_steady(cfg: RunConfig, out, figures: bool = False, prefix: str = "") -> dict:
    out = Path(out)
    P, G = cfg.params, cfg.grid()
    st = solve_steady_crowding(P, None, G)
    R = replacement_index(st.E, P, G)
    warnings = []
    if P.p == 0:
        warnings.append("p = 0: the stationary profile is identically zero")
    files = [io.write_csv(out / f"{prefix}steady_profile.csv", ("l", "x"), (st.nodes, st.profile))]
    E_hi = 3.0 * st.E if st.E > 0 else 1.0
    E_vals = np.linspace(0.0, E_hi, 61)
    files.append(io.write_csv(out / f"{prefix}closure_curve.csv", ("E", "F"),
                              (E_vals, closure_curve(P, G, E_vals))))
    summary = {
        "E_star": st.E,
        "N_star": st.N,
        "R_at_E_star": R,
        "closure_residual": st.residual,
        "warnings": warnings,
        **_stamp(cfg),
    }
    files.append(io.write_json(out / f"{prefix}steady_summary.json", summary))
    if figures:
        files.append(plotting.steady_profile(st.nodes, st.profile, st.E, st.N, R,
                                             out / "figures" / f"{prefix}steady_profile.png"))
    summary["files"] = [str(f.relative_to(out)) for f in files]
    return summary


def run_replacement_curve(cfg: RunConfig, out, E_range=None, n_points: int = 201,
                          figures: bool = False, prefix: str = "") -> dict:
    out = Path(out)
    P, G = cfg.params, cfg.grid()
    crit = critical_crowding(P, G)
    try:
        E_star = solve_steady_crowding(P, None, G).E
    except NumericalFailure:
        E_star = None
    if E_range is None:
        ref = crit.E_crit or E_star or 1.0
        E_range = (0.0, 2.0 * ref)
    E_vals = np.linspace(E_range[0], E_range[1], n_points)
    marks = [v for v in (E_star, crit.E_crit) if v is not None and E_range[0] <= v <= E_range[1]]
    E_vals = np.unique(np.concatenate([E_vals, marks]))
    R_vals = replacement_curve(P, G, E_vals)
    files = [io.write_csv(out / f"{prefix}replacement_curve.csv", ("E", "R"), (E_vals, R_vals))]
    summary = {
        "E_crit": crit.E_crit,
        "status": crit.status,
        "R_at_zero": crit.R0,
        "E_star": E_star,
        "R_at_E_star": replacement_index(E_star, P, G) if E_star is not None else None,
        "strictly_decreasing": bool(np.all(np.diff(R_vals) < 0)),
        **_stamp(cfg),
    }
    files.append(io.write_json(out / f"{prefix}replacement_summary.json", summary))
    if figures and E_star is not None:
        files.append(plotting.replacement_curve(E_vals, R_vals, E_star, crit.E_crit,
                                                out / "figures" / f"{prefix}replacement_curve.png"))
    summary["files"] = [str(f.relative_to(out)) for f in files]
    return summary


def run_simulate(cfg: RunConfig, out, l_star=None, horizon=None, snapshot_times=(),
                 prefix: str = "", name: str | None = None, initial=None):
    """Returns (summary, record)."""
    out = Path(out)
    P, G = cfg.params, cfg.grid()
    pol = threshold_policy(l_star, P, G, cfg.policy_mode)
    x0 = initial_state(cfg, G) if initial is None else initial
    rec = simulate(x0, pol, P, G, horizon, snapshot_times, cfg.cfl_safety)
    conv = record_convergence(rec, cfg.convergence_tolerance)
    name = name or ("trajectory" if l_star is None else f"trajectory_l{_tag(l_star)}")
    files = [io.write_csv(out / f"{prefix}{name}.csv", ("t", "E", "N", "harvest_value_rate"),
                          (rec.times, rec.E_series, rec.N_series, rec.harvest_value_rate))]
    for t, x in rec.snapshots:
        files.append(io.write_csv(out / f"{prefix}{name}_snapshot_t{_tag(round(t, 6))}.csv",
                                  ("l", "x"), (G.centers, x)))
    summary = {
        "l_star": l_star,
        "E_terminal": rec.E_series[-1],
        "N_terminal": rec.N_series[-1],
        "R_terminal": replacement_index(float(rec.E_series[-1]), P, G),
        "J_T": discounted_revenue(rec, P),
        "conv_time_E": conv["E"],
        "conv_time_N": conv["N"],
        "dt": rec.dt,
        "n_steps": len(rec.times) - 1,
        **_stamp(cfg),
    }
    files.append(io.write_json(out / f"{prefix}{name}.json", summary))
    summary["files"] = [str(f.relative_to(out)) for f in files]
    return summary, rec


def run_sweep(cfg: RunConfig, out, jobs: int = 1, figures: bool = False, prefix: str = "",
              initial=None) -> dict:
    out = Path(out)
    P, G = cfg.params, cfg.grid()
    x0 = initial_state(cfg, G) if initial is None else initial
    l_grid = cfg.sweep.grid(P)
    res = sweep_thresholds(l_grid, P, G, jobs, x0, cfg.cfl_safety, cfg.policy_mode)
    rows = [tuple(getattr(e, k) for k in SWEEP_HEADER) for e in res.evaluations]
    files = [io.write_rows(out / f"{prefix}sweep.csv", SWEEP_HEADER, rows)]
    failures = [{"l_star": e.l_star, "error": e.error} for e in res.evaluations if e.error]
    viable, non_viable, best_viable = viability_filter(res.evaluations)
    summary = {"failures": failures, "all_viable": not non_viable, "n_candidates": len(rows)}
    warnings = []
    if res.best is None:
        summary.update(l_star_opt=None, warnings=["no successful candidate"])
    else:
        coarse = res.best.l_star
        lo, hi = float(l_grid[0]), float(l_grid[-1])
        if len(l_grid) > 1 and coarse in (lo, hi):
            warnings.append(f"optimum at the boundary of the swept range [{lo:g}, {hi:g}]")
        step = cfg.sweep.step if len(l_grid) > 1 else 0.0
        if step > 0:
            ref = refine_optimum(coarse, P, G, step, cfg.sweep.refine_width, x0,
                                 cfg.cfl_safety, cfg.policy_mode, bounds=(lo, hi))
            if ref.warning:
                warnings.append(ref.warning)
            best = ref.evaluation
        else:
            best = res.best
        summary.update(
            l_star_opt=best.l_star,
            J_T_opt=best.J_T,
            R=best.R_terminal,
            E=best.E_terminal,
            N=best.N_terminal,
            viable=best.viable,
            conv_time_E=best.conv_time_E,
            conv_time_N=best.conv_time_N,
            coarse_argmax=coarse,
            coarse_J_T=res.best.J_T,
            argmax_viable=best_viable,
            warnings=warnings,
        )
    summary.update(_stamp(cfg))
    files.append(io.write_json(out / f"{prefix}optimum.json", summary))
    if figures:
        files.append(plotting.revenue_curve([e.l_star for e in res.evaluations],
                                            [e.J_T for e in res.evaluations],
                                            [e.viable for e in res.evaluations],
                                            summary.get("l_star_opt"),
                                            out / "figures" / f"{prefix}revenue_curve.png"))
    summary["files"] = [str(f.relative_to(out)) for f in files]
    summary["_evaluations"] = res.evaluations
    return summary


def harvested_state(cfg: RunConfig, l_star: float):
    """Stationary state under a threshold rule; falls back to a long PDE run if the closure fails."""
    P, G = cfg.params, cfg.grid()
    pol = threshold_policy(l_star, P, G, cfg.policy_mode)
    try:
        return solve_steady_crowding(P, pol, G), pol, "closure"
    except NumericalFailure as exc:
        log.warning("harvested closure failed (%s); using the terminal PDE state", exc)
    rec = simulate(initial_state(cfg, G), pol, P, G, 4 * P.T, safety=cfg.cfl_safety)
    from structured_harvest.steady import StationaryProfile
    x_nodes = np.interp(G.edges, G.centers, rec.final_state.density)
    E = float(rec.E_series[-1])
    return StationaryProfile(E, G.edges, x_nodes, float(rec.N_series[-1]), pol), pol, "pde"


def run_adjoint(cfg: RunConfig, out, l_star: float, figures: bool = False, prefix: str = "",
                sweep_l_star: float | None = None) -> dict:
    out = Path(out)
    P, G = cfg.params, cfg.grid()
    state, pol, source = harvested_state(cfg, l_star)
    rep = adj.analyze(state, pol, P, G)
    files = [io.write_csv(out / f"{prefix}adjoint.csv", ("l", "lambda", "S"),
                          (rep.adjoint.nodes, rep.adjoint.lam, rep.S))]
    summary = {
        "case": rep.outcome.case,
        "adjoint_l_star": rep.outcome.l_star,
        "weak_coupling_ratio": rep.weak_coupling_ratio,
        "weak_coupling_ratio_status": "ok" if rep.weak_coupling_ratio is not None
        else "undefined (zero leading terms)",
        "monotone_S": rep.monotone_S,
        "lambda_nonincreasing": rep.lambda_nonincreasing,
        "coupling_term": rep.coupling_term,
        "policy_l_star": l_star,
        "E": rep.E,
        "state_source": source,
        "notes": rep.notes,
        **_stamp(cfg),
    }
    ref = sweep_l_star if sweep_l_star is not None else l_star
    if rep.outcome.l_star is not None:
        summary["gap_to_policy_threshold"] = rep.outcome.l_star - ref
    files.append(io.write_json(out / f"{prefix}switching.json", summary))
    if figures:
        files.append(plotting.adjoint_profile(rep.adjoint.nodes, rep.adjoint.lam, rep.S,
                                              P.f.price(P, rep.adjoint.nodes), rep.outcome.l_star,
                                              out / "figures" / f"{prefix}adjoint.png"))
    summary["files"] = [str(f.relative_to(out)) for f in files]
    return summary


# anchors name what each output reproduces
ANCHORS = {
    "steady": "no-harvest stationary profile and closure",
    "replacement": "replacement index curve and critical crowding",
    "table": "terminal states and 1% convergence times for representative thresholds",
    "dynamics": "time evolution of crowding and population",
    "sweep": "revenue versus threshold and the optimal threshold",
    "adjoint": "shadow value and switching function at the optimum",
    "comparison": "stationary profiles with and without the optimal policy",
}


def run_report(cfg: RunConfig, out, jobs: int = 1, figures: bool = True) -> dict:
    """Run every stage; a failed stage is recorded and the rest continue."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    P, G = cfg.params, cfg.grid()
    stamp = _stamp(cfg)
    stages, headline = {}, {}

    def record(stage, anchor, fn):
        try:
            res = fn()
            files = res.pop("files", [])
            stages[stage] = {"status": "ok", "anchor": anchor, "files": files, **stamp}
            return res
        except (NumericalFailure, ValueError, FloatingPointError) as exc:
            log.error("stage %s failed: %s", stage, exc)
            stages[stage] = {"status": "failed", "anchor": anchor, "error": str(exc), **stamp}
            return None

    def num(name, value):
        headline[name] = {"value": value, **stamp}

    num("dt", cfl_timestep(P, G, cfg.cfl_safety))
    steady = record("steady", ANCHORS["steady"], lambda: run_steady(cfg, out, figures))
    if steady:
        num("E_star", steady["E_star"])
        num("N_star", steady["N_star"])
        num("R_at_E_star", steady["R_at_E_star"])
    repl = record("replacement", ANCHORS["replacement"],
                  lambda: run_replacement_curve(cfg, out, figures=figures))
    if repl:
        num("E_crit", repl["E_crit"])

    x0 = initial_state(cfg, G)
    dyn = {}

    def table():
        rows, files = [], []
        for l in TABLE_THRESHOLDS:
            s, rec = run_simulate(cfg, out, l, initial=x0)
            files += s["files"]
            rows.append((l, s["E_terminal"], s["N_terminal"], s["conv_time_E"], s["conv_time_N"],
                         s["J_T"], s["R_terminal"]))
            dyn[f"l* = {l:g} cm"] = (rec.times, rec.E_series, rec.N_series)
            num(f"E_terminal_l{_tag(l)}", s["E_terminal"])
            num(f"N_terminal_l{_tag(l)}", s["N_terminal"])
            num(f"conv_time_E_l{_tag(l)}", s["conv_time_E"])
            num(f"conv_time_N_l{_tag(l)}", s["conv_time_N"])
        new = [io.write_rows(out / "convergence_table.csv",
                             ("l_star", "E_terminal", "N_terminal", "conv_time_E",
                              "conv_time_N", "J_T", "R_terminal"), rows)]
        if figures:
            new.append(plotting.time_dynamics(dyn, out / "figures" / "time_dynamics.png"))
        return {"files": files + [str(f.relative_to(out)) for f in new]}

    record("table", ANCHORS["table"], table)

    sweep = record("sweep", ANCHORS["sweep"],
                   lambda: run_sweep(cfg, out, jobs, figures, initial=x0))
    l_opt = None
    if sweep and sweep.get("l_star_opt") is not None:
        l_opt = sweep["l_star_opt"]
        num("l_star_opt", l_opt)
        num("J_T_opt", sweep["J_T_opt"])
        num("R_opt", sweep["R"])
        num("E_opt", sweep["E"])
        num("N_opt", sweep["N"])
        num("all_viable", sweep["all_viable"])
        sweep.pop("_evaluations", None)

    if l_opt is not None:
        adjr = record("adjoint", ANCHORS["adjoint"],
                      lambda: run_adjoint(cfg, out, l_opt, figures, sweep_l_star=l_opt))
        if adjr:
            num("adjoint_l_star", adjr["adjoint_l_star"])
            num("weak_coupling_ratio", adjr["weak_coupling_ratio"])
            num("monotone_S", adjr["monotone_S"])

        def comparison():
            base = solve_steady_crowding(P, None, G)
            opt, _, source = harvested_state(cfg, l_opt)
            files = [io.write_csv(out / "profile_comparison.csv", ("l", "x_baseline", "x_optimal"),
                                  (base.nodes, base.profile, opt.profile))]
            num("E_stationary_opt", opt.E)
            num("N_stationary_opt", opt.N)
            if figures:
                files.append(plotting.profile_comparison(base.nodes, base.profile, opt.profile, l_opt,
                                                         out / "figures" / "profile_comparison.png"))
            return {"files": [str(f.relative_to(out)) for f in files], "source": source}

        record("comparison", ANCHORS["comparison"], comparison)
    else:
        for stage in ("adjoint", "comparison"):
            stages[stage] = {"status": "skipped", "anchor": ANCHORS[stage],
                             "error": "no optimum available", **stamp}

    status = "ok" if all(s["status"] == "ok" for s in stages.values()) else "partial"
    manifest = {
        "status": status,
        **stamp,
        "config": cfg.to_dict(),
        "stages": stages,
        "headline": headline,
    }
    io.write_json(out / "manifest.json", manifest)
    return manifest
