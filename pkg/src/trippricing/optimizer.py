"""Real-coded genetic search with simplex polish for pricing design.

All random draws happen in the parent process from a counter-based Philox
stream, and evaluations are pure functions of the candidate, so results do
not depend on how many worker processes evaluate a generation.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np
from scipy.optimize import minimize

from . import pricing as pr

log = logging.getLogger(__name__)

WORKERS_ENV = "TRIPPRICING_WORKERS"
QUANTUM = 1e-6  # EUR/km grid for the objective cache
AGREEMENT_FLOOR = 1e-8  # absolute tolerance when the best objective is near 0


@dataclass(frozen=True)
class OptimizerConfig:
    pop: int = 60
    gens: int = 250
    crossover: float = 0.9
    mutation: float = 0.15
    polish: int = 500
    seed: int = 0
    restarts: int = 3
    penalty: float = 1e3
    penalty_growth: float = 2.0
    tournament: int = 2
    elite: int = 2
    blx_alpha: float = 0.5
    sigma: float = 0.05  # fraction of box width
    max_evals: int | None = None
    stall: int | None = None  # stop a run after this many generations without improvement

    def __post_init__(self) -> None:
        if self.pop < 10:
            raise ValueError("population must be >= 10")
        if self.gens < 0 or self.restarts < 0 or self.polish < 0:
            raise ValueError("generation, restart and polish budgets must be >= 0")
        if not (0 <= self.crossover <= 1 and 0 <= self.mutation <= 1):
            raise ValueError("rates must lie in [0, 1]")


class SearchProblem(Protocol):
    dim: int
    lower: np.ndarray
    upper: np.ndarray

    def evaluate(self, x: np.ndarray) -> tuple[float, float, bool]:
        """Objective value, constraint violation, feasibility."""


@dataclass
class FunctionSearch:
    """Box-constrained search on a plain callable, optionally with a violation function."""

    func: Callable[[np.ndarray], float]
    lower: np.ndarray
    upper: np.ndarray
    violation: Callable[[np.ndarray], float] | None = None

    def __post_init__(self) -> None:
        self.lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        self.dim = self.lower.size

    def evaluate(self, x):
        v = 0.0 if self.violation is None else float(self.violation(x))
        return float(self.func(x)), v, v <= 0.0


@dataclass
class PricingSearch:
    problem: pr.DesignProblem

    def __post_init__(self) -> None:
        lo, hi = self.problem.bounds
        self.dim = self.problem.dim
        self.lower = np.full(self.dim, lo, dtype=float)
        self.upper = np.full(self.dim, hi, dtype=float)

    def evaluate(self, x):
        ev = pr.objective(self.problem, x)
        if ev.feasibility is None:
            return math.inf, math.inf, False
        return ev.value, ev.feasibility.violation(self.problem.toll_dominance), ev.feasible


@dataclass(frozen=True)
class TraceRow:
    restart: int
    generation: int
    best: float  # incumbent penalized objective
    mean: float
    feasible_fraction: float
    evaluations: int


@dataclass
class DesignResult:
    x: np.ndarray
    value: float
    feasible: bool
    violation: float
    trace: list[TraceRow]
    seed: int
    evaluations: int
    restarts_used: int
    prices: pr.PriceVector | None = None
    evaluation: pr.Evaluation | None = None
    notes: list[str] = field(default_factory=list)


_WORKER_PROBLEM: SearchProblem | None = None


def _init_worker(problem: SearchProblem) -> None:
    global _WORKER_PROBLEM
    _WORKER_PROBLEM = problem


def _worker_eval(x: np.ndarray):
    return _WORKER_PROBLEM.evaluate(x)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


class _Evaluator:
    """Cached, optionally parallel evaluation of candidate batches."""

    def __init__(self, problem: SearchProblem, workers: int) -> None:
        self.problem = problem
        # key -> (first evaluated point, result)
        self.cache: dict[tuple, tuple[np.ndarray, tuple[float, float, bool]]] = {}
        self.count = 0
        self.pool = None
        if workers > 1:
            self.pool = ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(problem,))

    def close(self) -> None:
        if self.pool is not None:
            self.pool.shutdown()

    @staticmethod
    def key(x: np.ndarray) -> tuple:
        return tuple(np.rint(x / QUANTUM).astype(np.int64).tolist())

    def batch(self, xs: Sequence[np.ndarray]) -> list[tuple[float, float, bool]]:
        keys = [self.key(x) for x in xs]
        todo: dict[tuple, np.ndarray] = {}
        for k, x in zip(keys, xs):
            if k not in self.cache and k not in todo:
                todo[k] = x
        if todo:
            pts = list(todo.values())
            if self.pool is not None and len(pts) > 1:
                out = list(self.pool.map(_worker_eval, pts, chunksize=max(1, len(pts) // 16)))
            else:
                out = [self.problem.evaluate(x) for x in pts]
            self.count += len(pts)
            for (k, x), r in zip(todo.items(), out):
                self.cache[k] = (np.array(x, dtype=float), r)
        return [self.cache[k][1] for k in keys]


def _penalized(r: tuple[float, float, bool], mu: float) -> float:
    value, viol, _ = r
    if not math.isfinite(value):
        return math.inf
    return value + mu * viol


def _rank_key(r: tuple[float, float, bool], mu: float):
    value, _, feas = r
    return (0, value) if feas else (1, _penalized(r, mu))


def design(problem, config: OptimizerConfig | None = None, inject: Sequence[np.ndarray] = (),
           workers: int | None = None) -> DesignResult:
    """Minimize the (penalized) objective over the unit-price box."""
    cfg = config or OptimizerConfig()
    search = PricingSearch(problem) if isinstance(problem, pr.DesignProblem) else problem
    n = search.dim
    lo, hi = search.lower, search.upper
    width = hi - lo
    rng = np.random.Generator(np.random.Philox(key=cfg.seed))
    ev = _Evaluator(search, worker_count() if workers is None else workers)
    trace: list[TraceRow] = []
    seeds = [np.clip(np.asarray(x, dtype=float), lo, hi) for x in inject]
    zero = np.zeros(n)
    if np.all(zero >= lo) and np.all(zero <= hi):
        seeds.append(zero)

    best_x, best_r = None, None
    mu = cfg.penalty
    restart = 0
    budget_left = lambda: cfg.max_evals is None or ev.count < cfg.max_evals  # noqa: E731

    try:
        for restart in range(cfg.restarts + 1):
            mu = cfg.penalty * cfg.penalty_growth**restart
            pop = rng.uniform(lo, hi, size=(cfg.pop, n))
            start = list(seeds) + ([best_x] if best_x is not None else [])
            for i, x in enumerate(start[: cfg.pop]):
                pop[i] = x
            res = ev.batch(list(pop))
            fit = np.array([_penalized(r, mu) for r in res])
            inc = float(np.min(fit))
            stall = 0
            for gen in range(cfg.gens + 1):
                order = np.argsort(fit, kind="stable")
                inc_new = float(fit[order[0]])
                stall = stall + 1 if inc_new >= inc and gen > 0 else 0
                inc = min(inc, inc_new)
                feas = float(np.mean([r[2] for r in res]))
                finite = fit[np.isfinite(fit)]
                trace.append(TraceRow(restart, gen, inc, float(finite.mean()) if finite.size else math.inf,
                                      feas, ev.count))
                if gen == cfg.gens or not budget_left() or (cfg.stall is not None and stall >= cfg.stall):
                    break
                children = [pop[i].copy() for i in order[: cfg.elite]]
                while len(children) < cfg.pop:
                    a = _tournament(rng, fit, cfg.tournament)
                    b = _tournament(rng, fit, cfg.tournament)
                    c1, c2 = pop[a].copy(), pop[b].copy()
                    if rng.random() < cfg.crossover:
                        c1, c2 = _blx(rng, c1, c2, cfg.blx_alpha)
                    for c in (c1, c2):
                        if len(children) < cfg.pop:
                            genes = rng.random(n) < cfg.mutation
                            c = c + genes * rng.normal(0.0, cfg.sigma, n) * width
                            children.append(np.clip(c, lo, hi))
                pop = np.array(children)
                res = ev.batch(list(pop))
                fit = np.array([_penalized(r, mu) for r in res])
            i = int(np.argmin(fit))
            cand_x, cand_r = pop[i], res[i]
            if best_r is None or _rank_key(cand_r, mu) < _rank_key(best_r, mu):
                best_x, best_r = cand_x.copy(), cand_r
            if best_r[2] or not budget_left():
                break
            log.info("restart %d ended infeasible; doubling penalty", restart)

        if cfg.polish > 0 and n > 0 and budget_left():
            best_x, best_r = _polish(ev, best_x, best_r, lo, hi, mu, cfg)
            trace.append(TraceRow(restart, trace[-1].generation + 1, min(trace[-1].best, _penalized(best_r, mu)),
                                  math.nan, float(best_r[2]), ev.count))
        # best over everything evaluated, feasible first
        for x, r in ev.cache.values():
            if _rank_key(r, mu) < _rank_key(best_r, mu):
                best_x, best_r = x, r
    finally:
        ev.close()

    out = DesignResult(best_x, best_r[0], best_r[2], best_r[1], trace, cfg.seed, ev.count, restart)
    if not best_r[2]:
        out.notes.append(f"no feasible point found; best violation {best_r[1]:.3g}")
    if isinstance(problem, pr.DesignProblem):
        out.evaluation = pr.objective(problem, best_x)
        out.prices = problem.prices(best_x)
    return out


def _tournament(rng, fit, size: int) -> int:
    idx = rng.integers(0, fit.size, size)
    return int(idx[np.argmin(fit[idx])])


def _blx(rng, a, b, alpha):
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    span = hi - lo
    u1 = rng.uniform(lo - alpha * span, hi + alpha * span)
    u2 = rng.uniform(lo - alpha * span, hi + alpha * span)
    return u1, u2


def _polish(ev: _Evaluator, x0, r0, lo, hi, mu, cfg):
    best = [x0.copy(), r0]

    def f(x):
        x = np.clip(x, lo, hi)
        r = ev.batch([x])[0]
        if _rank_key(r, mu) < _rank_key(best[1], mu):
            best[0], best[1] = x.copy(), r
        return _penalized(r, mu) if math.isfinite(r[0]) else 1e300

    n = x0.size
    simplex = np.tile(x0, (n + 1, 1))
    step = 0.05 * (hi - lo)
    for i in range(n):
        y = x0[i] + step[i]
        simplex[i + 1, i] = y if y <= hi[i] else x0[i] - step[i]
    minimize(f, x0, method="Nelder-Mead", bounds=list(zip(lo, hi)),
             options={"maxfev": cfg.polish, "initial_simplex": simplex, "xatol": QUANTUM, "fatol": 1e-9})
    return best[0], best[1]


@dataclass
class Agreement:
    rate: float
    best: DesignResult
    values: list[float]
    seeds: list[int]


def multi_start_agreement(problem, config: OptimizerConfig | None = None, n_starts: int = 5,
                          seeds: Sequence[int] | None = None, inject: Sequence[np.ndarray] = ()) -> Agreement:
    """Run ``design`` from several seeds; agreement is the share within 1% of the best."""
    if n_starts < 2:
        raise ValueError("n_starts must be >= 2")
    cfg = config or OptimizerConfig()
    seeds = list(seeds) if seeds is not None else [cfg.seed + i for i in range(n_starts)]
    if len(seeds) != n_starts:
        raise ValueError("need one seed per start")
    runs = [design(problem, _with_seed(cfg, s), inject) for s in seeds]
    ranked = sorted(runs, key=lambda r: (not r.feasible, r.value))
    best = ranked[0]
    tol = max(0.01 * abs(best.value), AGREEMENT_FLOOR)
    rate = sum(abs(r.value - best.value) <= tol for r in runs) / n_starts
    return Agreement(rate, best, [r.value for r in runs], seeds)


def _with_seed(cfg: OptimizerConfig, seed: int) -> OptimizerConfig:
    from dataclasses import replace

    return replace(cfg, seed=seed)


def road_to_trip_start(trip: pr.DesignProblem, road_prices: pr.PriceVector) -> np.ndarray:
    """Decision vector of ``trip`` reproducing a road-pricing solution's path prices."""
    unit = road_prices.path_prices / trip.scenario.path_lengths
    if np.any(np.abs(unit[~trip.mask]) > 0):
        raise ValueError("road prices fall on paths the trip problem cannot price")
    return unit[trip.mask]
