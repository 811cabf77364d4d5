"""Link performance, energy consumption and generalized costs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .netmodel import LinkSpec, ModeSpec, Scenario, UserClass

SEC_EBIKE = 0.10  # kWh/pax-km
SEC_METRO = 0.08  # kWh/pax-km
_ICE = (0.136, -1.42e-3, 7.04e-6)
ICE_OPTIMAL_SPEED = -_ICE[1] / (2.0 * _ICE[2])  # km/h, vertex of the SEC parabola


@dataclass(frozen=True)
class LinkCostBreakdown:
    travel_time: float
    waiting_time: float
    specific_energy: float
    monetary_cost: float
    cost: float


@dataclass(frozen=True)
class LinkState:
    """Per-link quantities for one flow vector.

    Arrays are (modes, links) except ``monetary`` and ``cost`` which are
    (classes, modes, links). Entries for modes not allowed on a link are 0.
    """

    flow: np.ndarray
    travel_time: np.ndarray
    speed: np.ndarray
    sec: np.ndarray
    monetary: np.ndarray
    cost: np.ndarray


def _check_flow(flow) -> None:
    if np.any(np.asarray(flow) < 0):
        raise ValueError("link flow must be nonnegative")


def bpr(free_time, flow, capacity, alpha, beta):
    ratio = np.divide(flow, capacity, out=np.zeros_like(np.asarray(flow, dtype=float)),
                      where=np.isfinite(capacity) & (capacity > 0))
    return free_time * (1.0 + alpha * ratio**beta)


def travel_time(link: LinkSpec, flow: float, mode: str = "car") -> float:
    """Link travel time in hours for ``mode`` at total vehicle flow ``flow``."""
    _check_flow(flow)
    if not link.allows(mode):
        raise ValueError(f"mode {mode!r} not allowed on link {link.id!r}")
    if flow < np.finfo(float).eps:
        flow = 0.0
    t0 = link.length / link.speed[mode]
    if not link.congestible:
        return t0
    return float(t0 * (1.0 + link.alpha * (flow / link.capacity) ** link.beta))


def specific_energy(energy: str, v=None):
    """Specific energy consumption.

    ``ice`` returns l/veh-km as a function of speed (km/h); ``ebike`` and
    ``metro`` return constant kWh/pax-km; ``none`` returns 0.
    """
    if energy == "ice":
        if v is None or np.any(np.asarray(v) <= 0):
            raise ValueError("ICE consumption needs a positive speed")
        v = np.asarray(v, dtype=float)
        out = _ICE[0] + _ICE[2] * v**2 + _ICE[1] * v
        return float(out) if out.ndim == 0 else out
    if energy == "ebike":
        return SEC_EBIKE
    if energy == "metro":
        return SEC_METRO
    if energy == "none":
        return 0.0
    raise ValueError(f"unknown energy model {energy!r}")


def _user_energy_cost(energy: str, price: float, sec, length):
    # metro energy is paid by the operator, not the traveller
    if energy in ("ice", "ebike"):
        return price * sec * length
    return 0.0 * length


def monetary_cost(link: LinkSpec, cls: UserClass, mode: ModeSpec, flow: float) -> float:
    """Energy cost per vehicle (car) or per traveller (e-bike), in EUR."""
    tt = travel_time(link, flow, mode.id) if mode.congested else travel_time(link, 0.0, mode.id)
    sec = specific_energy(mode.energy, link.length / tt) if mode.energy == "ice" else specific_energy(mode.energy)
    return float(_user_energy_cost(mode.energy, cls.energy_price.get(mode.id, 0.0), sec, link.length))


def generalized_link_cost(link: LinkSpec, cls: UserClass, mode: ModeSpec, flow: float) -> LinkCostBreakdown:
    tt = travel_time(link, flow if mode.congested else 0.0, mode.id)
    wt = link.waiting_time.get(mode.id, 0.0)
    if mode.energy == "ice":
        sec = specific_energy("ice", link.length / tt)
    elif mode.energy == "metro" and link.category != "metro":
        sec = 0.0
    else:
        sec = specific_energy(mode.energy)
    mc = float(_user_energy_cost(mode.energy, cls.energy_price.get(mode.id, 0.0), sec, link.length))
    cost = mode.beta_tt * (cls.vot * tt + cls.vowt * wt) + mc
    return LinkCostBreakdown(tt, wt, float(sec), mc, cost)


@dataclass(frozen=True)
class _Constants:
    allowed: np.ndarray  # (M, A)
    free: np.ndarray  # (M, A)
    bpr_mask: np.ndarray  # (M, A) congested mode on a capacitated link
    ice: np.ndarray  # (M, A) ICE consumption applies
    fixed_sec: np.ndarray  # (M, A) flow-independent SEC
    beta_tt: np.ndarray  # (M, 1)
    vot: np.ndarray  # (Q, 1, 1)
    wait_cost: np.ndarray  # (Q, M, A) beta_tt * VOWT * WT
    energy_price: np.ndarray  # (Q, M, 1), zero for operator-paid energy
    paid: np.ndarray  # (M, 1) traveller pays the energy
    cap: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray


def _constants(s: Scenario) -> _Constants:
    cached = s.__dict__.get("_supply_constants")
    if cached is not None:
        return cached
    allowed = ~np.isnan(s.speed)
    free = np.divide(s.lengths, s.speed, out=np.zeros_like(s.speed), where=allowed)
    congested = np.array([m.congested for m in s.modes])[:, None]
    ice = np.array([m.energy == "ice" for m in s.modes])[:, None] & allowed
    fixed = np.zeros_like(free)
    for i, m in enumerate(s.modes):
        if m.energy == "metro":
            # walk access legs of metro trips consume nothing
            fixed[i, allowed[i] & s.metro_links] = SEC_METRO
        elif m.energy == "ebike":
            fixed[i, allowed[i]] = SEC_EBIKE
    beta_tt = np.array([m.beta_tt for m in s.modes])[:, None]
    vot = np.array([q.vot for q in s.classes])[:, None, None]
    vowt = np.array([q.vowt for q in s.classes])[:, None, None]
    paid = np.array([m.energy in ("ice", "ebike") for m in s.modes])[:, None]
    price = np.array([[q.energy_price.get(m.id, 0.0) for m in s.modes] for q in s.classes])[:, :, None]
    c = _Constants(
        allowed=allowed,
        free=free,
        bpr_mask=congested & s.road_links[None, :],
        ice=ice,
        fixed_sec=fixed,
        beta_tt=beta_tt,
        vot=vot,
        wait_cost=(beta_tt[None] * vowt * s.waiting[None]) * allowed,
        energy_price=price * paid[None],
        paid=paid,
        cap=np.where(s.road_links, s.capacity, 1.0),
        alpha=np.where(s.road_links, s.alpha, 0.0),
        beta=s.bpr_beta,
    )
    s.__dict__["_supply_constants"] = c
    return c


def link_state(s: Scenario, flow: np.ndarray) -> LinkState:
    """Vectorized link quantities at total congested-mode vehicle flow ``flow``."""
    flow = np.asarray(flow, dtype=float)
    if flow.shape != (len(s.links),):
        raise ValueError(f"expected {len(s.links)} link flows, got shape {flow.shape}")
    _check_flow(flow)
    flow = np.where(flow < np.finfo(float).eps, 0.0, flow)
    k = _constants(s)
    factor = 1.0 + k.alpha * (flow / k.cap) ** k.beta
    tt = np.where(k.bpr_mask, k.free * factor, k.free)
    speed = np.divide(s.lengths, tt, out=np.zeros_like(tt), where=k.allowed)
    sec = np.where(k.ice, _ICE[0] + _ICE[2] * speed**2 + _ICE[1] * speed, k.fixed_sec)
    mc = k.energy_price * (sec * s.lengths)[None]
    cost = (k.beta_tt * tt)[None] * k.vot + k.wait_cost + mc
    cost *= k.allowed
    return LinkState(flow, tt, speed, sec, mc, cost)


def additive_path_costs(s: Scenario, link_cost: np.ndarray) -> np.ndarray:
    """(classes, paths) additive path costs from (classes, modes, links) link costs."""
    return link_cost.reshape(link_cost.shape[0], -1) @ s.stacked_incidence


def path_costs(s: Scenario, cls: int | str, flow: np.ndarray, prices=None) -> np.ndarray:
    """Total path cost g = g_ad + g_nad + price for one class."""
    q = cls if isinstance(cls, (int, np.integer)) else s.class_ids.index(cls)
    st = link_state(s, flow)
    pi = _price_array(s, prices)
    return additive_path_costs(s, st.cost)[q] + s.nonadditive + pi


def _price_array(s: Scenario, prices) -> np.ndarray:
    if prices is None:
        return np.zeros(len(s.paths))
    pi = np.asarray(getattr(prices, "path_prices", prices), dtype=float)
    if pi.shape != (len(s.paths),):
        raise ValueError(f"price vector has shape {pi.shape}, expected ({len(s.paths)},)")
    return pi


def cost_monotonicity(s: Scenario, max_ratio: float = 2.0, n: int = 401) -> dict[tuple[str, str], bool]:
    """Scan congested links for flow ranges where generalized cost decreases.

    Returns ``{(class id, link id): True}`` for every class/link pair whose cost
    is nondecreasing on [0, max_ratio * cap], ``False`` otherwise. Decreasing
    regions arise when free-flow speed exceeds the SEC optimum.
    """
    out = {}
    grid = np.linspace(0.0, max_ratio, n)
    for i, m in enumerate(s.modes):
        if not m.congested:
            continue
        for a, link in enumerate(s.links):
            if not link.congestible or not link.allows(m.id):
                continue
            for cls in s.classes:
                c = np.array([generalized_link_cost(link, cls, m, r * link.capacity).cost for r in grid])
                out[(cls.id, link.id)] = bool(np.all(np.diff(c) >= -1e-12))
    return out

