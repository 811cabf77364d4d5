"""Price spaces, revenue constraints and the scalarized design objective."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import equilibrium as eq
from . import metrics as mt
from .netmodel import Scenario

OBJECTIVES = ("eff", "env", "acpt", "sequ", "wequ", "all")
TERMS = ("TTS", "TEC", "PC", "MAPD_Q", "MAPD_W")


def objective_weights(name: str) -> tuple[float, ...]:
    if name == "all":
        return (0.2,) * 5
    try:
        i = OBJECTIVES.index(name)
    except ValueError:
        raise ValueError(f"unknown objective {name!r}; choose from {', '.join(OBJECTIVES)}") from None
    return tuple(1.0 if j == i else 0.0 for j in range(5))


@dataclass(frozen=True)
class PriceVector:
    kind: str  # trip | road | none
    path_prices: np.ndarray
    unit_prices: np.ndarray
    bounds: tuple[float, float] = (0.0, 5.0)

    @property
    def path_unit_prices(self) -> np.ndarray:
        return self.unit_prices if self.kind == "trip" else np.full_like(self.path_prices, np.nan)


def no_prices(s: Scenario) -> PriceVector:
    z = np.zeros(len(s.paths))
    return PriceVector("none", z, z.copy(), (0.0, 0.0))


def _check_bounds(u: np.ndarray, bounds, tol: float = 1e-12) -> None:
    lo, hi = bounds
    if np.any(u < lo - tol) or np.any(u > hi + tol):
        raise ValueError(f"unit prices outside bounds [{lo}, {hi}]")


def make_trip_prices(s: Scenario, unit, mask=None, bounds=(-math.inf, math.inf)) -> PriceVector:
    """Path prices pi = path length * pi' (EUR), masked-out paths forced to 0."""
    u = np.asarray(unit, dtype=float)
    if u.shape != (len(s.paths),):
        raise ValueError(f"expected {len(s.paths)} path unit prices, got shape {u.shape}")
    _check_bounds(u, bounds)
    if mask is not None:
        u = np.where(np.asarray(mask, dtype=bool), u, 0.0)
    return PriceVector("trip", s.path_lengths * u, u, tuple(bounds))


def element_lengths(s: Scenario) -> np.ndarray:
    return np.array([s.lengths[a] for a, _ in s.elements])


def road_to_path_prices(s: Scenario, unit, mask=None, bounds=(-math.inf, math.inf)) -> PriceVector:
    """Path prices pi = E^T (l * gamma') over priceable (link, mode) elements.

    A length-A vector is accepted as a per-link price applied to every mode.
    """
    g = np.asarray(unit, dtype=float)
    if g.shape == (len(s.links),) and len(s.links) != len(s.elements):
        g = np.array([g[a] for a, _ in s.elements])
    if g.shape != (len(s.elements),):
        raise ValueError(f"expected {len(s.elements)} element unit prices, got shape {g.shape}")
    _check_bounds(g, bounds)
    if mask is not None:
        g = np.where(np.asarray(mask, dtype=bool), g, 0.0)
    pi = s.element_incidence.T @ (element_lengths(s) * g)
    return PriceVector("road", pi, g, tuple(bounds))


def path_unit_prices(s: Scenario, prices: PriceVector) -> np.ndarray:
    """Per-path price per km (length-weighted mean of element prices for road schemes)."""
    return prices.path_prices / s.path_lengths


def trip_mask(s: Scenario, modes=None) -> np.ndarray:
    if modes is None:
        return np.ones(len(s.paths), dtype=bool)
    idx = [s.mode_ids.index(m) for m in modes]
    return np.isin(s.path_mode, idx)


def road_mask(s: Scenario, modes=None) -> np.ndarray:
    if modes is None:
        return np.ones(len(s.elements), dtype=bool)
    idx = {s.mode_ids.index(m) for m in modes}
    return np.array([m in idx for _, m in s.elements], dtype=bool)


@dataclass(frozen=True)
class Feasibility:
    slack_revenue: float  # b - net
    slack_dominance: float  # tolls - incentives
    tolls: float
    incentives: float
    net: float

    def feasible(self, enforce_dominance: bool, tol: float = 1e-6) -> bool:
        return self.slack_revenue >= -tol and (not enforce_dominance or self.slack_dominance >= -tol)

    def violation(self, enforce_dominance: bool) -> float:
        v = max(0.0, -self.slack_revenue) ** 2
        if enforce_dominance:
            v += max(0.0, -self.slack_dominance) ** 2
        return v


def revenue_feasibility(result: eq.EquilibriumResult, prices=None, b: float = math.inf) -> Feasibility:
    pi = result.prices if prices is None else np.asarray(getattr(prices, "path_prices", prices), dtype=float)
    h = result.path_flows.sum(axis=0)
    tolls = float(h[pi > 0] @ pi[pi > 0])
    inc = float(h[pi < 0] @ -pi[pi < 0])
    net = tolls - inc
    return Feasibility(b - net, tolls - inc, tolls, inc, net)


@dataclass(frozen=True)
class Evaluation:
    value: float
    components: dict[str, float]
    feasibility: Feasibility | None
    feasible: bool
    result: eq.EquilibriumResult | None
    report: mt.MetricsReport | None
    diagnostic: str = ""


@dataclass(frozen=True, eq=False)
class DesignProblem:
    """Scalarized pricing design on one scenario.

    The decision vector holds the unit prices of the priceable entries only:
    paths for ``trip`` schemes, (link, mode) elements for ``road`` schemes.
    """

    scenario: Scenario
    scheme: str
    weights: tuple[float, ...] = (1.0, 0.0, 0.0, 0.0, 0.0)
    bounds: tuple[float, float] = (0.0, 5.0)
    mask: np.ndarray | None = None
    b: float = math.inf
    toll_dominance: bool = False
    solver: eq.SolverConfig = field(default_factory=eq.SolverConfig)
    baseline: eq.EquilibriumResult | None = None
    baseline_report: mt.MetricsReport | None = None

    def __post_init__(self) -> None:
        if self.scheme not in ("trip", "road"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (5,) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be five nonnegative numbers summing to 1")
        if not self.bounds[1] > self.bounds[0]:
            raise ValueError("upper bound must exceed lower bound")
        if self.b < 0:
            raise ValueError("revenue cap b must be >= 0")
        n = len(self.scenario.paths) if self.scheme == "trip" else len(self.scenario.elements)
        mask = np.ones(n, dtype=bool) if self.mask is None else np.asarray(self.mask, dtype=bool)
        if mask.shape != (n,):
            raise ValueError(f"mask must have {n} entries")
        object.__setattr__(self, "mask", mask)
        if self.baseline is None:
            base = eq.solve_sue(self.scenario, None, self.solver)
            object.__setattr__(self, "baseline", base)
        if self.baseline_report is None:
            object.__setattr__(self, "baseline_report", mt.report(self.scenario, self.baseline))

    @property
    def dim(self) -> int:
        return int(self.mask.sum())

    @property
    def revenue_constrained(self) -> bool:
        return math.isfinite(self.b) or self.toll_dominance

    def full_units(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"decision vector must have {self.dim} entries")
        u = np.zeros(self.mask.size)
        u[self.mask] = x
        return u

    def prices(self, x) -> PriceVector:
        u = self.full_units(x)
        if self.scheme == "trip":
            return make_trip_prices(self.scenario, u, self.mask, self.bounds)
        return road_to_path_prices(self.scenario, u, self.mask, self.bounds)

    def with_(self, **kw) -> "DesignProblem":
        fields = dict(scenario=self.scenario, scheme=self.scheme, weights=self.weights, bounds=self.bounds,
                      mask=None if "scheme" in kw else self.mask, b=self.b, toll_dominance=self.toll_dominance,
                      solver=self.solver, baseline=self.baseline, baseline_report=self.baseline_report)
        fields.update(kw)
        return DesignProblem(**fields)


def components(report: mt.MetricsReport, baseline: mt.MetricsReport) -> dict[str, float]:
    return {
        "TTS": mt.delta(report.tts, baseline.tts),
        "TEC": mt.delta(report.tec, baseline.tec),
        "PC": mt.delta(report.pc, baseline.pc),
        "MAPD_Q": mt.delta(report.equity.mapd_q, baseline.equity.mapd_q),
        "MAPD_W": mt.delta(report.equity.mapd_w, baseline.equity.mapd_w),
    }


def scalarize(weights, comps: Mapping[str, float]) -> float:
    total = 0.0
    for w, k in zip(weights, TERMS):
        if w > 0:
            total += w * comps[k]
    return total if math.isfinite(total) else math.inf


def objective(problem: DesignProblem, prices) -> Evaluation:
    """Scalar objective and its five relative-change components at ``prices``."""
    s = problem.scenario
    pv = prices if isinstance(prices, PriceVector) else problem.prices(prices)
    res = eq.solve_sue(s, pv.path_prices, problem.solver, init=problem.baseline.flow)
    if not res.converged:
        return Evaluation(math.inf, {}, None, False, res, None,
                          f"equilibrium not converged (residual {res.residual:.2e})")
    rep = mt.report(s, res)
    comps = components(rep, problem.baseline_report)
    fz = revenue_feasibility(res, pv, problem.b)
    return Evaluation(scalarize(problem.weights, comps), comps, fz,
                      fz.feasible(problem.toll_dominance), res, rep)
