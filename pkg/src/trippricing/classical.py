"""Deterministic UE, system optimum and marginal-cost tolls on two-path instances."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .netmodel import tomllib

_XTOL = 1e-12


@dataclass(frozen=True)
class PathCost:
    """g(h) = a + b*h + c*h**power, increasing and convex for b, c >= 0, power >= 1."""

    a: float
    b: float = 0.0
    c: float = 0.0
    power: float = 1.0

    def __call__(self, h):
        return self.a + self.b * h + self.c * np.power(h, self.power)

    def slope(self, h):
        if self.c == 0.0:
            return self.b + 0.0 * h
        return self.b + self.c * self.power * np.power(h, self.power - 1.0)

    def marginal(self, h):
        return self(h) + self.slope(h) * h


@dataclass(frozen=True)
class TwoPathInstance:
    g1: PathCost
    g2: PathCost
    demand: float

    def __post_init__(self) -> None:
        if not self.demand > 0:
            raise ValueError("demand must be > 0")
        for g in (self.g1, self.g2):
            if g.b < 0 or g.c < 0 or g.power < 1:
                raise ValueError("path costs must be increasing and convex")

    def costs(self, h) -> tuple[float, float]:
        return float(self.g1(h[0])), float(self.g2(h[1]))

    def total_cost(self, h) -> float:
        return float(h[0] * self.g1(h[0]) + h[1] * self.g2(h[1]))

    def with_tolls(self, tolls) -> "TwoPathInstance":
        return replace(self, g1=replace(self.g1, a=self.g1.a + tolls[0]),
                       g2=replace(self.g2, a=self.g2.a + tolls[1]))


def linear_instance() -> TwoPathInstance:
    """Desk instance c1 = 10 + 0.01 f, c2 = 15 + 0.005 f, d = 1000."""
    return TwoPathInstance(PathCost(10.0, 0.01), PathCost(15.0, 0.005), 1000.0)


def load_instance(path: str | Path) -> TwoPathInstance:
    doc = tomllib.loads(Path(path).read_text())
    try:
        return TwoPathInstance(PathCost(**doc["path1"]), PathCost(**doc["path2"]), float(doc["demand"]))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed instance file: {exc!r}") from exc


def _equalize(f1, f2, d: float) -> np.ndarray:
    """Split d so that f1(h1) = f2(d - h1), or the corner if none exists."""
    phi = lambda h1: f1(h1) - f2(d - h1)  # noqa: E731  increasing in h1
    lo, hi = phi(0.0), phi(d)
    if lo >= 0:
        h1 = 0.0
    elif hi <= 0:
        h1 = d
    else:
        h1 = brentq(phi, 0.0, d, xtol=_XTOL, rtol=4 * np.finfo(float).eps, maxiter=500)
    return np.array([h1, d - h1])


def solve_due(inst: TwoPathInstance) -> np.ndarray:
    return _equalize(inst.g1, inst.g2, inst.demand)


def solve_so(inst: TwoPathInstance) -> np.ndarray:
    return _equalize(inst.g1.marginal, inst.g2.marginal, inst.demand)


def msc_tolls(inst: TwoPathInstance) -> np.ndarray:
    h = solve_so(inst)
    return np.array([inst.g1.slope(h[0]) * h[0], inst.g2.slope(h[1]) * h[1]], dtype=float)


@dataclass(frozen=True)
class ValidTolls:
    tolls: np.ndarray
    revenue: float
    tolled_flows: np.ndarray
    tolled_costs: tuple[float, float]
    ue_cost: float
    pareto_improving: bool


def alternative_valid_tolls(inst: TwoPathInstance, revenue: float = 0.0) -> ValidTolls:
    """Toll pair on the SO-preserving line with h_SO . toll = revenue."""
    h = solve_so(inst)
    if not (h[0] > 0 and h[1] > 0):
        raise ValueError("system optimum is not interior; the valid-toll line is not unique")
    dg = float(inst.g2(h[1]) - inst.g1(h[0]))
    t1 = (revenue + h[1] * dg) / inst.demand
    tolls = np.array([t1, t1 - dg])
    tolled = solve_due(inst.with_tolls(tolls))
    if not np.allclose(tolled, h, rtol=0, atol=1e-8 * max(1.0, inst.demand)):
        raise ValueError("revenue target infeasible on the valid-toll line")
    ue = solve_due(inst)
    ue_cost = float(inst.g1(ue[0])) if ue[0] > 0 else float(inst.g2(ue[1]))
    costs = (float(inst.g1(h[0]) + tolls[0]), float(inst.g2(h[1]) + tolls[1]))
    pareto = all(c <= ue_cost + 1e-9 for c in costs)
    return ValidTolls(tolls, float(h @ tolls), tolled, costs, ue_cost, pareto)


def minimal_valid_tolls(inst: TwoPathInstance) -> np.ndarray:
    """SO-preserving pair with the smallest maximum magnitude (+dg/2, -dg/2)."""
    h = solve_so(inst)
    dg = float(inst.g2(h[1]) - inst.g1(h[0]))
    return np.array([dg / 2.0, -dg / 2.0])


def logit_sue(inst: TwoPathInstance, theta: float, tolls=(0.0, 0.0)) -> np.ndarray:
    """Binary logit SUE: h1 = d / (1 + exp((g1 - g2) / theta))."""
    t = inst.with_tolls(tolls)
    d = inst.demand

    def phi(h1):
        x = (t.g1(h1) - t.g2(d - h1)) / theta
        return h1 - d * 0.5 * (1.0 - math.tanh(x / 2.0))

    h1 = brentq(phi, 0.0, d, xtol=_XTOL, maxiter=500)
    return np.array([h1, d - h1])


def stochastic_so(inst: TwoPathInstance, theta: float) -> np.ndarray:
    """Logit loading on marginal costs (tolls evaluated at the stochastic flows)."""
    d = inst.demand

    def phi(h1):
        x = (inst.g1.marginal(h1) - inst.g2.marginal(d - h1)) / theta
        return h1 - d * 0.5 * (1.0 - math.tanh(x / 2.0))

    h1 = brentq(phi, 0.0, d, xtol=_XTOL, maxiter=500)
    return np.array([h1, d - h1])


def stochastic_gap(inst: TwoPathInstance, theta: float) -> float:
    """Relative flow gap between the logit SUE under MSC tolls and the stochastic SO."""
    a = logit_sue(inst, theta, msc_tolls(inst))
    b = stochastic_so(inst, theta)
    return float(abs(a[0] - b[0]) / inst.demand)


def random_instance(rng: np.random.Generator, demand: float | None = None) -> TwoPathInstance:
    """Random convex instance with an interior system optimum."""
    while True:
        d = float(rng.uniform(100, 5000)) if demand is None else demand
        g = []
        for _ in range(2):
            power = float(rng.choice([1.0, 2.0, 4.0]))
            a = float(rng.uniform(1, 30))
            b = float(rng.uniform(0, 0.02))
            c = float(rng.uniform(0.001, 0.05)) / d ** (power - 1.0)
            g.append(PathCost(a, b, c, power))
        inst = TwoPathInstance(g[0], g[1], d)
        h = solve_so(inst)
        if h[0] > 1e-6 * d and h[1] > 1e-6 * d:
            return inst
