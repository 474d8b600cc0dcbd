"""Run configuration: a JSON file whose ``params`` keys mirror the model symbols."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from structured_harvest.grid import SizeGrid, build_grid
from structured_harvest.model import ModelParams, validate_params
from structured_harvest.transport import POLICY_MODES, PopulationState

INITIAL_CONDITIONS = ("no-harvest-steady", "zero", "custom-file")
CONFIG_KEYS = {
    "params", "n_cells", "cfl_safety", "initial_condition", "initial_file",
    "sweep", "output_dir", "policy_mode", "convergence_tolerance",
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    start: float | None = None  # defaults to l0
    stop: float | None = None  # defaults to lm
    step: float = 1.0
    refine_width: float = 0.05

    def grid(self, params: ModelParams) -> np.ndarray:
        start = params.l0 if self.start is None else self.start
        stop = params.lm if self.stop is None else self.stop
        if not self.step > 0 or stop < start:
            raise ConfigError("sweep needs step > 0 and start <= stop")
        n = int(np.floor((stop - start) / self.step + 1e-9))
        pts = start + self.step * np.arange(n + 1)
        if stop - pts[-1] > 1e-9 * self.step:
            pts = np.append(pts, stop)
        return pts


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams = field(default_factory=ModelParams)
    n_cells: int = 400
    cfl_safety: float = 0.8
    initial_condition: str = "no-harvest-steady"
    initial_file: str | None = None
    sweep: SweepSpec = field(default_factory=SweepSpec)
    output_dir: str = "out"
    policy_mode: str = "cell-average"
    convergence_tolerance: float = 0.01

    def grid(self) -> SizeGrid:
        return build_grid(self.params.l0, self.params.lm, self.n_cells)

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        params_kw = {k: kw.pop(k) for k in list(kw) if k in ModelParams.__dataclass_fields__}
        cfg = replace(self, **kw)
        if params_kw:
            cfg = replace(cfg, params=cfg.params.replace(**params_kw))
        return cfg

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "n_cells": self.n_cells,
            "cfl_safety": self.cfl_safety,
            "initial_condition": self.initial_condition,
            "initial_file": self.initial_file,
            "sweep": {
                "start": self.sweep.start,
                "stop": self.sweep.stop,
                "step": self.sweep.step,
                "refine_width": self.sweep.refine_width,
            },
            "policy_mode": self.policy_mode,
            "convergence_tolerance": self.convergence_tolerance,
        }

    def digest(self) -> str:
        """Hash of everything that can change a computed number (not the output path)."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def problems(self) -> list[str]:
        msgs = validate_params(self.params).messages()
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            msgs.append("error: n_cells must be an integer >= 2")
        if not 0 < self.cfl_safety <= 1:
            msgs.append("error: cfl_safety must lie in (0, 1]")
        if self.initial_condition not in INITIAL_CONDITIONS:
            msgs.append(f"error: initial_condition must be one of {INITIAL_CONDITIONS}")
        if self.initial_condition == "custom-file" and not self.initial_file:
            msgs.append("error: custom-file initial condition needs initial_file")
        if self.policy_mode not in POLICY_MODES:
            msgs.append(f"error: policy_mode must be one of {POLICY_MODES}")
        return msgs

    def errors(self) -> list[str]:
        return [m for m in self.problems() if m.startswith("error")]


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    with open(path) as fh:
        data = json.load(fh)
    return config_from_dict(data)


def config_from_dict(data: dict) -> RunConfig:
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kw = dict(data)
    base = ModelParams().to_dict()
    try:
        base.update(kw.pop("params", {}) or {})
        kw["params"] = ModelParams.from_dict(base)
    except KeyError as exc:
        raise ConfigError(str(exc)) from None
    if "sweep" in kw:
        kw["sweep"] = SweepSpec(**kw["sweep"])
    return RunConfig(**kw)


def initial_state(cfg: RunConfig, grid: SizeGrid) -> PopulationState:
    from structured_harvest.steady import discrete_stationary_state

    if cfg.initial_condition == "zero":
        return PopulationState(0.0, np.zeros(grid.n_cells))
    if cfg.initial_condition == "custom-file":
        data = np.genfromtxt(cfg.initial_file, delimiter=",", names=True)
        return PopulationState(0.0, np.interp(grid.centers, data["l"], data["x"]))
    return discrete_stationary_state(cfg.params, grid)
