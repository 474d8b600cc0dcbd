"""Model parameters and the coefficient functions g, mu, chi, c and m.

The five coefficient functions live on a forms object so that alternative
closed forms (for instance the constant-coefficient forms used to check the
solvers against analytic solutions) can be swapped in without touching the
solvers.  ``ModelParams.forms`` selects the forms; ``None`` means the
density-dependent von Bertalanffy case-study forms.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from structured_harvest.errors import DomainError

PARAM_FIELDS = (
    "l0", "lm", "L_inf", "K", "alpha", "mu0", "mu1", "chi",
    "c0", "m0", "l_mat", "p", "r", "u_max", "T",
)


class DefaultForms:
    """g = K(L_inf - l)/(1 + alpha E), mu = mu0 + mu1 E, chi l^2, c0 l^3, m0 (l/lm)^3 above l_mat."""

    name = "default"

    def growth(self, prm, E, l):
        return prm.K * (prm.L_inf - l) / (1.0 + prm.alpha * E)

    def growth_dE(self, prm, E, l):
        return -prm.alpha * prm.K * (prm.L_inf - l) / (1.0 + prm.alpha * E) ** 2

    def mortality(self, prm, E, l):
        return prm.mu0 + prm.mu1 * E + np.zeros_like(np.asarray(l, dtype=float))

    def mortality_dE(self, prm, E, l):
        return prm.mu1 + np.zeros_like(np.asarray(l, dtype=float))

    def kernel(self, prm, l):
        return prm.chi * np.asarray(l, dtype=float) ** 2

    def price(self, prm, l):
        return prm.c0 * np.asarray(l, dtype=float) ** 3

    def fertility(self, prm, l):
        l = np.asarray(l, dtype=float)
        return np.where(l >= prm.l_mat, prm.m0 * (l / prm.lm) ** 3, 0.0)

    def growth_max(self, prm, E_hi=None):
        # g is decreasing in both E and l
        return self.growth(prm, 0.0, prm.l0)

    def growth_min(self, prm, E=0.0):
        return self.growth(prm, E, prm.lm)

    def __eq__(self, other):
        return type(self) is type(other)

    def __hash__(self):
        return hash(type(self))


@dataclass(frozen=True, eq=True)
class ConstantForms(DefaultForms):
    """Constant growth (and optionally constant price); mortality is mu0, no crowding.

    Used to check the numerical solvers against closed-form solutions.
    """

    g0: float = 1.0
    price_const: float | None = None
    name = "constant"

    def growth(self, prm, E, l):
        return self.g0 + 0.0 * np.asarray(l, dtype=float) + 0.0 * np.asarray(E, dtype=float)

    def growth_dE(self, prm, E, l):
        return np.zeros_like(np.asarray(l, dtype=float))

    def mortality(self, prm, E, l):
        return prm.mu0 + np.zeros_like(np.asarray(l, dtype=float))

    def mortality_dE(self, prm, E, l):
        return np.zeros_like(np.asarray(l, dtype=float))

    def price(self, prm, l):
        if self.price_const is None:
            return super().price(prm, l)
        return self.price_const + np.zeros_like(np.asarray(l, dtype=float))

    def growth_max(self, prm, E_hi=None):
        return self.g0

    def growth_min(self, prm, E=0.0):
        return self.g0


DEFAULT_FORMS = DefaultForms()


@dataclass(frozen=True)
class ModelParams:
    l0: float = 20.0
    lm: float = 130.0
    L_inf: float = 135.3
    K: float = 0.17
    alpha: float = 5e-6
    mu0: float = 0.20
    mu1: float = 1e-7
    chi: float = 1e-4
    c0: float = 1e-5
    m0: float = 2.0
    l_mat: float = 50.0
    p: float = 5e4
    r: float = 0.05
    u_max: float = 0.5
    T: float = 60.0
    forms: Any = field(default=None, compare=False, repr=False)

    @property
    def f(self):
        return DEFAULT_FORMS if self.forms is None else self.forms

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {k: float(getattr(self, k)) for k in PARAM_FIELDS}

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        unknown = set(data) - set(PARAM_FIELDS)
        if unknown:
            raise KeyError(f"unknown parameter keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})


@dataclass(frozen=True)
class Violation:
    fields: tuple[str, ...]
    message: str


@dataclass(frozen=True)
class Validation:
    params: ModelParams
    errors: tuple[Violation, ...] = ()
    warnings: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors

    def messages(self) -> list[str]:
        return [f"error: {v.message}" for v in self.errors] + [
            f"warning: {v.message}" for v in self.warnings
        ]


def closure_bound(params: ModelParams) -> float:
    """Upper bound C on the crowding index of any stationary no-harvest state.

    Uses the smallest growth rate at E = 0; since the stationary integrand is
    non-increasing in E, chi p int l^2/g(0,l) dl bounds G(E) for every E >= 0.
    """
    f = params.f
    if hasattr(f, "growth_min"):
        g_min = f.growth_min(params, 0.0)
    else:
        g_min = float(np.min(f.growth(params, 0.0, np.linspace(params.l0, params.lm, 201))))
    return params.chi * params.p * (params.lm ** 3 - params.l0 ** 3) / (3.0 * g_min)


def validate_params(params: ModelParams) -> Validation:
    """Collect every violated standing assumption instead of stopping at the first."""
    errors: list[Violation] = []
    warnings: list[Violation] = []
    P = params

    def err(fields, msg):
        errors.append(Violation(tuple(fields), msg))

    for name in PARAM_FIELDS:
        v = getattr(P, name)
        if not np.isfinite(v):
            err([name], f"{name} must be finite (got {v!r})")
    if errors:
        return Validation(P, tuple(errors), ())

    if not P.l0 < P.lm:
        err(["l0", "lm"], "l0 < l_m required")
    if P.forms is None and not P.lm < P.L_inf:
        err(["lm", "L_inf"], "l_m < L_inf required (growth must stay positive on [l0, l_m])")
    for name in ("K", "chi", "r", "u_max", "T"):
        if not getattr(P, name) > 0:
            err([name], f"{name} must be strictly positive")
    if not P.c0 > 0:
        err(["c0"], "c0 must be strictly positive (price must increase with size)")
    for name in ("mu0", "mu1", "alpha", "m0"):
        if getattr(P, name) < 0:
            err([name], f"{name} must be non-negative")
    if P.p < 0:
        err(["p"], "inflow p must be non-negative")
    elif P.p == 0:
        warnings.append(Violation(("p",), "p = 0: no inflow, the stationary state is empty"))
    if not P.l0 <= P.l_mat <= P.lm:
        err(["l_mat"], "l0 <= l_mat <= l_m required")
    return Validation(P, tuple(errors), tuple(warnings))


def _check(params, l, E=None):
    l = np.asarray(l, dtype=float)
    slack = 1e-12 * (params.lm - params.l0)
    if np.any(l < params.l0 - slack) or np.any(l > params.lm + slack):
        raise DomainError(f"size outside [{params.l0}, {params.lm}]")
    if E is not None and np.any(np.asarray(E) < 0):
        raise DomainError("crowding index must be non-negative")
    return l


def _out(v):
    v = np.asarray(v, dtype=float)
    return float(v) if v.ndim == 0 else v


def growth_rate(params: ModelParams, E, l):
    l = _check(params, l, E)
    return _out(params.f.growth(params, E, l))


def natural_mortality(params: ModelParams, E, l):
    l = _check(params, l, E)
    return _out(params.f.mortality(params, E, l))


def crowding_kernel(params: ModelParams, l):
    return _out(params.f.kernel(params, _check(params, l)))


def price(params: ModelParams, l):
    return _out(params.f.price(params, _check(params, l)))


def fertility(params: ModelParams, l):
    return _out(params.f.fertility(params, _check(params, l)))
