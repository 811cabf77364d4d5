"""Multiclass multimodal stochastic user equilibrium and demand calibration."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import demand as dm
from . import supply
from .netmodel import Scenario

log = logging.getLogger(__name__)


class CalibrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """Fixed-point solver settings.

    ``damping`` is ``"msa"`` (step 1/n), ``"fixed:<lambda>"`` or
    ``"adaptive:<lambda>"`` (fixed step, halved whenever the gap grows,
    never below 1/n).
    """

    tol: float = 1e-6
    max_iter: int = 5000
    damping: str = "adaptive:0.5"

    def __post_init__(self) -> None:
        parse_damping(self.damping)
        if not self.tol > 0 or self.max_iter < 1:
            raise ValueError("tol must be > 0 and max_iter >= 1")


def parse_damping(spec: str) -> tuple[str, float]:
    if spec == "msa":
        return "msa", 1.0
    kind, _, val = spec.partition(":")
    if kind in ("fixed", "adaptive"):
        try:
            lam = float(val)
        except ValueError:
            raise ValueError(f"bad damping value in {spec!r}") from None
        if not 0 < lam <= 1:
            raise ValueError("damping step must lie in (0, 1]")
        return kind, lam
    raise ValueError(f"unknown damping rule {spec!r}; use msa, fixed:<l> or adaptive:<l>")


@dataclass(frozen=True)
class EquilibriumResult:
    """Equilibrium flows and the loading that produced them.

    ``flow`` is the fixed-point iterate of total congested-mode vehicle flow
    per link (veh/h); ``state`` and ``loading`` are evaluated at it, so
    ``link_flows`` (per class, mode and link) reproduce ``flow`` within the
    residual.
    """

    flow: np.ndarray
    link_flows: np.ndarray
    loading: dm.Loading
    state: supply.LinkState
    prices: np.ndarray
    iterations: int
    residual: float
    converged: bool
    history: tuple[float, ...] = field(repr=False, default=())

    @property
    def path_flows(self) -> np.ndarray:
        return self.loading.veh

    @property
    def pax_flows(self) -> np.ndarray:
        return self.loading.pax

    @property
    def satisfaction(self) -> np.ndarray:
        return self.loading.satisfaction


def _prices(s: Scenario, prices) -> np.ndarray:
    if prices is None:
        return np.zeros(len(s.paths))
    pi = np.asarray(getattr(prices, "path_prices", prices), dtype=float)
    if pi.shape != (len(s.paths),):
        raise ValueError(f"price vector has shape {pi.shape}, expected ({len(s.paths)},)")
    if not np.all(np.isfinite(pi)):
        raise ValueError("prices must be finite")
    return pi


def _loading(s: Scenario, f: np.ndarray, pi: np.ndarray, d: np.ndarray):
    st = supply.link_state(s, f)
    ld = dm.load(s, st.cost, pi, d)
    return st, ld, dm.congested_link_flow(s, ld.veh)


def gap(f: np.ndarray, y: np.ndarray) -> float:
    if f.size == 0:
        return 0.0
    return float(np.max(np.abs(f - y) / (1.0 + f)))


def residual(s: Scenario, prices, flows: np.ndarray) -> float:
    """Relative fixed-point gap of ``flows`` after one loading pass."""
    pi = _prices(s, prices)
    f = np.asarray(flows, dtype=float)
    _, _, y = _loading(s, f, pi, s.demand_vector)
    return gap(f, y)


def solve_sue(s: Scenario, prices=None, config: SolverConfig | None = None,
              init: np.ndarray | None = None, demand: np.ndarray | None = None) -> EquilibriumResult:
    """Damped fixed-point iteration on congested link flows.

    Starts from free-flow loading unless ``init`` is given. Non-convergence is
    reported through ``converged=False``, not raised.
    """
    cfg = config or SolverConfig()
    kind, lam0 = parse_damping(cfg.damping)
    pi = _prices(s, prices)
    d = s.demand_vector if demand is None else np.asarray(demand, dtype=float)

    if init is None:
        _, _, f = _loading(s, np.zeros(len(s.links)), pi, d)
    else:
        f = np.asarray(init, dtype=float).copy()
        if f.shape != (len(s.links),) or np.any(f < 0):
            raise ValueError("initial flows must be nonnegative with one entry per link")

    history = []
    lam = lam0
    prev = np.inf
    converged = False
    n = 0
    for n in range(1, cfg.max_iter + 1):
        st, ld, y = _loading(s, f, pi, d)
        at = f
        r = gap(f, y)
        history.append(r)
        if r < cfg.tol:
            converged = True
            break
        if kind == "msa":
            step = 1.0 / n
        elif kind == "fixed":
            step = lam
        else:
            if r > prev:
                lam = max(lam / 2.0, 1.0 / n)
            step = lam
        prev = r
        f = f + step * (y - f)

    if not converged:
        log.warning("SUE did not converge: residual %.3e after %d iterations", history[-1], n)
    # costs, probabilities and path flows all belong to the last loaded iterate
    veh = ld.veh
    lf = np.zeros((len(s.classes), len(s.modes), len(s.links)))
    for m in range(len(s.modes)):
        sel = s.path_mode == m
        lf[:, m, :] = veh[:, sel] @ s.incidence[:, sel].T
    return EquilibriumResult(
        flow=at,
        link_flows=lf,
        loading=ld,
        state=st,
        prices=pi,
        iterations=n,
        residual=history[-1],
        converged=converged,
        history=tuple(history),
    )


def car_pax_by_od(s: Scenario, res: EquilibriumResult, mode: str = "car") -> np.ndarray:
    m = s.mode_ids.index(mode)
    sel = s.path_mode == m
    out = np.zeros(len(s.od_ids))
    np.add.at(out, s.path_od[sel], res.pax_flows[:, sel].sum(axis=0))
    return out


def calibrate_demand(s: Scenario, targets: Mapping[str, float] | float, mode: str = "car",
                     tol: float = 0.005, max_sweeps: int = 50, config: SolverConfig | None = None,
                     upper: float = 20.0) -> dict[str, float]:
    """Demand per OD such that the zero-price SUE ``mode`` pax flow meets ``targets``.

    Each sweep bisects every OD's demand on [target, upper*target] with the
    other ODs held fixed; sweeps repeat until every OD is within ``tol``.
    """
    cfg = config or SolverConfig()
    if mode not in s.mode_ids:
        raise CalibrationError(f"mode {mode!r} not in scenario")
    tgt = np.array([targets[w] if isinstance(targets, Mapping) else float(targets) for w in s.od_ids])
    if np.any(tgt <= 0):
        raise CalibrationError("targets must be positive")
    mi = s.mode_ids.index(mode)
    only = np.array([all(int(s.path_mode[k]) == mi for k in range(len(s.paths)) if s.path_od[k] == w)
                     for w in range(len(s.od_ids))])
    if not all(any(int(s.path_mode[k]) == mi and s.path_od[k] == w for k in range(len(s.paths)))
               for w in range(len(s.od_ids))):
        raise CalibrationError(f"mode {mode!r} unavailable on some OD")

    d = tgt.copy()
    warm = None

    def car_flow(dv):
        nonlocal warm
        r = solve_sue(s, None, cfg, init=warm, demand=dv)
        if not r.converged:
            raise CalibrationError("SUE did not converge during calibration")
        warm = r.flow
        return car_pax_by_od(s, r, mode)

    for sweep in range(1, max_sweeps + 1):
        for w in np.flatnonzero(~only):
            lo, hi = tgt[w], upper * tgt[w]
            dv = d.copy()
            dv[w] = hi
            if car_flow(dv)[w] < tgt[w]:
                raise CalibrationError(f"OD {s.od_ids[w]!r}: mode share too low to reach target")
            while hi - lo > 1e-3 * tol * tgt[w]:
                mid = 0.5 * (lo + hi)
                dv[w] = mid
                if car_flow(dv)[w] < tgt[w]:
                    lo = mid
                else:
                    hi = mid
            d[w] = 0.5 * (lo + hi)
        err = np.abs(car_flow(d) - tgt) / tgt
        log.info("calibration sweep %d: max relative error %.2e", sweep, err.max())
        if np.all(err <= tol):
            return {w: float(x) for w, x in zip(s.od_ids, d)}
    raise CalibrationError(f"calibration did not converge in {max_sweeps} sweeps")
