"""Measures of performance computed from an equilibrium result."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .equilibrium import EquilibriumResult
from .netmodel import Scenario

KWH_PER_LITRE_DEFAULT = 8.9


@dataclass(frozen=True)
class TrafficMetrics:
    tts_veh_h: float
    tts_pax_h: float
    avg_tt_min: float
    tec_kwh: float
    tgc_eur: float
    traffic_pax_km: dict[str, float]
    avg_fcap: float


@dataclass(frozen=True)
class EquityMetrics:
    ua: float
    pc: float
    unit_satisfaction: np.ndarray  # (Q, W)
    mapd_q: float
    mapd_w: float
    mapd: float
    diagnostics: tuple[str, ...] = ()


@dataclass(frozen=True)
class Revenues:
    tolls: float
    incentives: float
    net: float
    highway: float
    metro: float
    per_pax: float


@dataclass(frozen=True)
class MetricsReport:
    traffic: TrafficMetrics
    equity: EquityMetrics
    revenue: Revenues
    alt_split: float
    converged: bool
    residual: float
    warnings: tuple[str, ...] = field(default=())

    # efficiency objective term; pax-hours so that occupancy does not weight travellers
    @property
    def tts(self) -> float:
        return self.traffic.tts_pax_h

    @property
    def tec(self) -> float:
        return self.traffic.tec_kwh

    @property
    def pc(self) -> float:
        return self.equity.pc

    def scalars(self) -> dict[str, float]:
        """Flat, ordered mapping of every scalar metric."""
        t, e, r = self.traffic, self.equity, self.revenue
        out = {
            "TTS_pax_h": t.tts_pax_h,
            "TTS_veh_h": t.tts_veh_h,
            "avg_travel_time_min": t.avg_tt_min,
            "TEC_kWh": t.tec_kwh,
            "TGC_eur": t.tgc_eur,
            "UA": e.ua,
            "PC": e.pc,
            "MAPD_Q": e.mapd_q,
            "MAPD_W": e.mapd_w,
            "MAPD": e.mapd,
        }
        for m, v in t.traffic_pax_km.items():
            out[f"traffic_{m}_pax_km"] = v
        out.update({
            "avg_fcap": t.avg_fcap,
            "alt_split": self.alt_split,
            "revenue_tolls": r.tolls,
            "revenue_incentives": r.incentives,
            "revenue_net": r.net,
            "revenue_highway": r.highway,
            "revenue_metro": r.metro,
            "revenue_per_pax": r.per_pax,
        })
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["equity"]["unit_satisfaction"] = self.equity.unit_satisfaction.tolist()
        return d


def delta(x: float, x0: float) -> float:
    """(x - x0) / |x0|; 0 when both vanish, signed infinity when only x0 does."""
    if x0 == 0:
        return 0.0 if x == 0 else math.copysign(math.inf, x)
    return (x - x0) / abs(x0)


def deltas(report: MetricsReport, baseline: MetricsReport) -> dict[str, float]:
    b = baseline.scalars()
    return {k: delta(v, b[k]) for k, v in report.scalars().items() if k in b}


def traffic_metrics(s: Scenario, res: EquilibriumResult) -> TrafficMetrics:
    st = res.state
    lf = res.link_flows  # (Q, M, A) vehicles
    veh_h = float(np.einsum("qma,ma->", lf, st.travel_time))
    pax_h = float(res.pax_flows.sum(axis=0) @ _path_times(s, st.travel_time))
    total = float(s.demand_vector.sum())
    kwh = s.params.kwh_per_litre
    tec = 0.0
    for i, m in enumerate(s.modes):
        e = float(np.einsum("qa,a->", lf[:, i, :], s.lengths * st.sec[i]))
        tec += e * kwh if m.energy == "ice" else e
    tgc = float(np.einsum("qma,qma->", lf, st.cost))
    traffic = {}
    for i, m in enumerate(s.modes):
        sel = s.path_mode == i
        traffic[m.id] = float(res.pax_flows[:, sel].sum(axis=0) @ s.path_lengths[sel])
    road = s.road_links
    fcap = float(np.mean(res.flow[road] / s.capacity[road])) if road.any() else 0.0
    return TrafficMetrics(veh_h, pax_h, 60.0 * pax_h / total if total > 0 else 0.0, tec, tgc, traffic, fcap)


def _path_times(s: Scenario, tt: np.ndarray) -> np.ndarray:
    """In-vehicle travel time of every path (hours)."""
    return np.einsum("ka,ak->k", tt[s.path_mode, :], s.incidence)


def mapd(values: np.ndarray) -> float:
    """Mean absolute percentage deviation from the mean, per the element's own value."""
    v = np.asarray(values, dtype=float)
    if np.any(v == 0):
        return math.nan
    return float(np.mean(np.abs((v - v.mean()) / v)))


def acceptance_equity(s: Scenario, res: EquilibriumResult) -> EquityMetrics:
    sat = res.satisfaction  # (Q, W)
    ua = float(sat.sum())
    mean_len = np.array([s.path_lengths[s.path_od == w].mean() for w in range(len(s.od_ids))])
    unit = sat / mean_len[None, :]
    diag = []
    if np.any(unit == 0):
        diag.append("zero unit satisfaction: MAPD undefined")
    s_w = unit.mean(axis=0)
    s_q = unit.mean(axis=1)
    m_w = mapd(s_w)
    m_q = mapd(s_q)
    if np.any(unit == 0):
        m_all = math.nan
    else:
        m_all = float(np.mean(np.abs((unit - unit.mean(axis=0, keepdims=True)) / unit)))
    return EquityMetrics(ua, -ua, unit, m_q, m_w, m_all, tuple(diag))


def revenues(s: Scenario, res: EquilibriumResult, prices=None) -> Revenues:
    pi = res.prices if prices is None else np.asarray(getattr(prices, "path_prices", prices), dtype=float)
    h = res.path_flows.sum(axis=0)  # vehicles
    tolls = float(h[pi > 0] @ pi[pi > 0])
    incent = float(h[pi < 0] @ -pi[pi < 0])
    net = tolls - incent
    pax = res.pax_flows.sum(axis=0)
    tolled_km = (s.lengths * s.tolled) @ s.incidence
    per_km = np.array([s.modes[m].fare_per_km for m in s.path_mode])
    flat = np.array([s.modes[m].fare_flat for m in s.path_mode])
    # fares are paid per traveller
    highway = float(pax @ (per_km * tolled_km))
    metro = float(pax @ flat)
    total = float(s.demand_vector.sum())
    return Revenues(tolls, incent, net, highway, metro, net / total if total > 0 else 0.0)


def alt_split(s: Scenario, res: EquilibriumResult, mode: str = "car") -> float:
    total = float(s.demand_vector.sum())
    if total == 0:
        return 0.0
    sel = s.path_mode != s.mode_ids.index(mode) if mode in s.mode_ids else np.ones(len(s.paths), bool)
    return float(res.pax_flows[:, sel].sum() / total)


def report(s: Scenario, res: EquilibriumResult) -> MetricsReport:
    warn = () if res.converged else (f"equilibrium not converged (residual {res.residual:.2e})",)
    eqm = acceptance_equity(s, res)
    return MetricsReport(
        traffic=traffic_metrics(s, res),
        equity=eqm,
        revenue=revenues(s, res),
        alt_split=alt_split(s, res),
        converged=res.converged,
        residual=res.residual,
        warnings=warn + eqm.diagnostics,
    )


@dataclass(frozen=True)
class ParetoCheck:
    table: np.ndarray  # (Q, M, A) True where priced cost <= baseline cost, or not applicable
    overall: bool


def pareto_check(s: Scenario, priced: EquilibriumResult, baseline: EquilibriumResult,
                 atol: float = 1e-12) -> ParetoCheck:
    """Link-wise, per class: priced link cost (prices excluded) <= baseline link cost."""
    if priced.link_flows.shape != baseline.link_flows.shape:
        raise ValueError("results come from different scenarios")
    table = priced.state.cost <= baseline.state.cost + atol
    return ParetoCheck(table, bool(table.all()))


def pareto_check_paths(priced_costs, baseline_costs, atol: float = 1e-9) -> ParetoCheck:
    table = np.asarray(priced_costs, dtype=float) <= np.asarray(baseline_costs, dtype=float) + atol
    return ParetoCheck(table, bool(table.all()))
