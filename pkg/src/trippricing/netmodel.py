"""Multimodal network, explicit path sets, user classes and demand.

A :class:`Scenario` is an immutable bundle. Numerical modules work on the
dense array views exposed as cached properties (incidence matrix, link
attributes per mode, path/OD/mode indices), which are built once per
scenario.

Units are fixed internally: hours, km, EUR, pax/h, veh/h.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

LINK_CATEGORIES = ("highway", "urban-secondary", "urban-local", "walk", "metro", "bike")
ENERGY_MODELS = ("ice", "ebike", "metro", "none")
LOGSUM_FORMS = ("printed", "scaled")


class ScenarioError(ValueError):
    """Invalid or unresolvable scenario content."""


@dataclass(frozen=True)
class LinkSpec:
    id: str
    source: str
    target: str
    length: float
    category: str
    speed: Mapping[str, float]
    capacity: float | None = None
    alpha: float = 0.0
    beta: float = 4.0
    tolled: bool = False
    waiting_time: Mapping[str, float] = field(default_factory=dict)

    def allows(self, mode: str) -> bool:
        return mode in self.speed

    @property
    def congestible(self) -> bool:
        return self.capacity is not None and self.alpha > 0.0


@dataclass(frozen=True)
class PathSpec:
    id: str
    od: str
    mode: str
    nodes: tuple[str, ...]
    links: tuple[str, ...]


@dataclass(frozen=True)
class ModeSpec:
    """Mode-level behavioural and tariff parameters.

    ``fare_per_km`` is charged on links flagged ``tolled``; ``fare_flat`` once
    per path. Both are non-additive path costs.
    """

    id: str
    beta_tt: float = 1.0
    energy: str = "none"
    congested: bool = False
    commonality: bool = False
    fare_per_km: float = 0.0
    fare_flat: float = 0.0


@dataclass(frozen=True)
class UserClass:
    id: str
    vot: float
    vowt: float
    share: float
    energy_price: Mapping[str, float] = field(default_factory=dict)
    occupancy: Mapping[str, float] = field(default_factory=dict)

    def eta(self, mode: str) -> float:
        return self.occupancy.get(mode, 1.0)


@dataclass(frozen=True)
class ChoiceParameters:
    theta_path: float = 5.0
    theta_mode: float = 1.0
    beta_sf: float = 1.0
    alpha_sf: float = 1.0
    # "printed": V_m = (1/theta) ln sum exp(V/theta); "scaled": theta ln sum exp(V/theta)
    logsum: str = "printed"
    kwh_per_litre: float = 8.9


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    links: tuple[LinkSpec, ...]
    paths: tuple[PathSpec, ...]
    modes: tuple[ModeSpec, ...]
    classes: tuple[UserClass, ...]
    demand: Mapping[str, float]
    params: ChoiceParameters = ChoiceParameters()

    def __post_init__(self) -> None:
        _validate(self)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Scenario):
            return NotImplemented
        return dump_scenario(self) == dump_scenario(other)

    __hash__ = None  # type: ignore[assignment]

    # ----------------------------------------------------------- lookups
    @cached_property
    def link_ids(self) -> tuple[str, ...]:
        return tuple(a.id for a in self.links)

    @cached_property
    def path_ids(self) -> tuple[str, ...]:
        return tuple(k.id for k in self.paths)

    @cached_property
    def mode_ids(self) -> tuple[str, ...]:
        return tuple(m.id for m in self.modes)

    @cached_property
    def class_ids(self) -> tuple[str, ...]:
        return tuple(q.id for q in self.classes)

    @cached_property
    def od_ids(self) -> tuple[str, ...]:
        return tuple(self.demand)

    @cached_property
    def link_index(self) -> dict[str, int]:
        return {a: i for i, a in enumerate(self.link_ids)}

    @cached_property
    def path_index(self) -> dict[str, int]:
        return {k: i for i, k in enumerate(self.path_ids)}

    def link(self, link_id: str) -> LinkSpec:
        try:
            return self.links[self.link_index[link_id]]
        except KeyError:
            raise ScenarioError(f"unknown link {link_id!r}") from None

    def path(self, path_id: str) -> PathSpec:
        try:
            return self.paths[self.path_index[str(path_id)]]
        except KeyError:
            raise ScenarioError(f"unknown path {path_id!r}") from None

    def mode(self, mode_id: str) -> ModeSpec:
        return self.modes[self.mode_ids.index(mode_id)]

    def user_class(self, class_id: str) -> UserClass:
        return self.classes[self.class_ids.index(class_id)]

    # ------------------------------------------------------ array views
    @cached_property
    def lengths(self) -> np.ndarray:
        return np.array([a.length for a in self.links])

    @cached_property
    def capacity(self) -> np.ndarray:
        return np.array([np.nan if a.capacity is None else a.capacity for a in self.links])

    @cached_property
    def alpha(self) -> np.ndarray:
        return np.array([a.alpha for a in self.links])

    @cached_property
    def bpr_beta(self) -> np.ndarray:
        return np.array([a.beta for a in self.links])

    @cached_property
    def tolled(self) -> np.ndarray:
        return np.array([a.tolled for a in self.links], dtype=bool)

    @cached_property
    def speed(self) -> np.ndarray:
        """(modes, links) free-flow speed, NaN where the mode is not allowed."""
        return np.array([[a.speed.get(m, np.nan) for a in self.links] for m in self.mode_ids])

    @cached_property
    def waiting(self) -> np.ndarray:
        """(modes, links) constant waiting time in hours."""
        return np.array([[a.waiting_time.get(m, 0.0) for a in self.links] for m in self.mode_ids])

    @cached_property
    def incidence(self) -> np.ndarray:
        """Link-path incidence matrix (links x paths)."""
        delta = np.zeros((len(self.links), len(self.paths)))
        for k, p in enumerate(self.paths):
            for a in p.links:
                delta[self.link_index[a], k] = 1.0
        delta.setflags(write=False)
        return delta

    @cached_property
    def path_mode(self) -> np.ndarray:
        return np.array([self.mode_ids.index(p.mode) for p in self.paths], dtype=int)

    @cached_property
    def path_od(self) -> np.ndarray:
        return np.array([self.od_ids.index(p.od) for p in self.paths], dtype=int)

    @cached_property
    def path_lengths(self) -> np.ndarray:
        return self.lengths @ self.incidence

    @cached_property
    def groups(self) -> tuple[tuple[int, int, np.ndarray], ...]:
        """(od index, mode index, path indices) for every non-empty K_{m,w}."""
        out = []
        for w in range(len(self.od_ids)):
            for m in range(len(self.mode_ids)):
                idx = np.flatnonzero((self.path_od == w) & (self.path_mode == m))
                if idx.size:
                    out.append((w, m, idx))
        return tuple(out)

    @cached_property
    def path_group(self) -> np.ndarray:
        """Index into :attr:`groups` for every path."""
        out = np.empty(len(self.paths), dtype=int)
        for g, (_, _, idx) in enumerate(self.groups):
            out[idx] = g
        return out

    @cached_property
    def group_membership(self) -> np.ndarray:
        """(groups, paths) 0/1 matrix."""
        out = np.zeros((len(self.groups), len(self.paths)))
        out[self.path_group, np.arange(len(self.paths))] = 1.0
        return out

    @cached_property
    def group_od(self) -> np.ndarray:
        return np.array([w for w, _, _ in self.groups], dtype=int)

    @cached_property
    def group_mode(self) -> np.ndarray:
        return np.array([m for _, m, _ in self.groups], dtype=int)

    @cached_property
    def od_membership(self) -> np.ndarray:
        """(ODs, groups) 0/1 matrix."""
        out = np.zeros((len(self.od_ids), len(self.groups)))
        out[self.group_od, np.arange(len(self.groups))] = 1.0
        return out

    @cached_property
    def commonality_mask(self) -> np.ndarray:
        """(paths, paths) True where k and j share a group whose mode uses the commonality factor."""
        same = self.path_group[:, None] == self.path_group[None, :]
        sf = np.array([self.modes[m].commonality for m in self.path_mode])
        return same & sf[:, None]

    @cached_property
    def stacked_incidence(self) -> np.ndarray:
        """(modes*links, paths): row m*A + a is 1 where path k uses link a and has mode m."""
        na = len(self.links)
        out = np.zeros((len(self.modes) * na, len(self.paths)))
        for k in range(len(self.paths)):
            m = int(self.path_mode[k])
            out[m * na:(m + 1) * na, k] = self.incidence[:, k]
        return out

    @cached_property
    def shared_tensor(self) -> np.ndarray:
        """(modes*links, paths*paths) so that c.reshape(Q, -1) @ T gives shared costs of
        path pairs under the commonality mask."""
        na, nk = len(self.links), len(self.paths)
        out = np.zeros((len(self.modes) * na, nk * nk))
        for k in range(nk):
            m = int(self.path_mode[k])
            for j in np.flatnonzero(self.commonality_mask[k]):
                out[m * na:(m + 1) * na, k * nk + j] = self.incidence[:, k] * self.incidence[:, j]
        return out

    @cached_property
    def congested_paths(self) -> np.ndarray:
        return np.array([self.modes[m].congested for m in self.path_mode], dtype=bool)

    @cached_property
    def nonadditive(self) -> np.ndarray:
        """Flow-independent non-additive path cost (fares), per path."""
        tolled_km = (self.lengths * self.tolled) @ self.incidence
        per_km = np.array([self.modes[m].fare_per_km for m in self.path_mode])
        flat = np.array([self.modes[m].fare_flat for m in self.path_mode])
        return per_km * tolled_km + flat

    @cached_property
    def road_links(self) -> np.ndarray:
        """Mask of links with a capacity (the congestible car network)."""
        return ~np.isnan(self.capacity)

    @cached_property
    def metro_links(self) -> np.ndarray:
        return np.array([a.category == "metro" for a in self.links], dtype=bool)

    @cached_property
    def occupancy(self) -> np.ndarray:
        """(classes, modes) passengers per vehicle."""
        return np.array([[q.eta(m) for m in self.mode_ids] for q in self.classes])

    @cached_property
    def shares(self) -> np.ndarray:
        return np.array([q.share for q in self.classes])

    @cached_property
    def demand_vector(self) -> np.ndarray:
        return np.array([self.demand[w] for w in self.od_ids], dtype=float)

    @cached_property
    def elements(self) -> tuple[tuple[int, int], ...]:
        """Priceable network elements: (link index, mode index) pairs used by some path."""
        used = set()
        for k, p in enumerate(self.paths):
            m = int(self.path_mode[k])
            for a in p.links:
                used.add((self.link_index[a], m))
        return tuple(sorted(used))

    @cached_property
    def element_incidence(self) -> np.ndarray:
        """Element-path incidence (elements x paths)."""
        pos = {e: i for i, e in enumerate(self.elements)}
        out = np.zeros((len(self.elements), len(self.paths)))
        for k, p in enumerate(self.paths):
            m = int(self.path_mode[k])
            for a in p.links:
                out[pos[(self.link_index[a], m)], k] = 1.0
        return out

    def with_demand(self, demand: Mapping[str, float]) -> "Scenario":
        return replace(self, demand=dict(demand))


# ------------------------------------------------------------- validation
def _validate(s: Scenario) -> None:
    seen: set[str] = set()
    for a in s.links:
        if a.id in seen:
            raise ScenarioError(f"duplicate link id {a.id!r}")
        seen.add(a.id)
        if not a.length > 0:
            raise ScenarioError(f"link {a.id!r}: length must be > 0")
        if a.category not in LINK_CATEGORIES:
            raise ScenarioError(f"link {a.id!r}: unknown category {a.category!r}")
        if a.capacity is not None and not a.capacity > 0:
            raise ScenarioError(f"link {a.id!r}: capacity must be > 0")
        if a.capacity is None and a.alpha != 0.0:
            raise ScenarioError(f"link {a.id!r}: uncongested link must have alpha = 0")
        if a.alpha < 0:
            raise ScenarioError(f"link {a.id!r}: alpha must be >= 0")
        if not a.speed:
            raise ScenarioError(f"link {a.id!r}: no mode allowed")
        for m, v in a.speed.items():
            if not v > 0:
                raise ScenarioError(f"link {a.id!r}: speed for {m!r} must be > 0")
            if m not in {x.id for x in s.modes}:
                raise ScenarioError(f"link {a.id!r}: unknown mode {m!r}")
        for m, wt in a.waiting_time.items():
            if wt < 0:
                raise ScenarioError(f"link {a.id!r}: negative waiting time for {m!r}")

    mode_ids = {m.id for m in s.modes}
    for m in s.modes:
        if m.energy not in ENERGY_MODELS:
            raise ScenarioError(f"mode {m.id!r}: unknown energy model {m.energy!r}")
        if not m.beta_tt > 0:
            raise ScenarioError(f"mode {m.id!r}: beta_tt must be > 0")

    links = {a.id: a for a in s.links}
    pseen: set[str] = set()
    for p in s.paths:
        if p.id in pseen:
            raise ScenarioError(f"duplicate path id {p.id!r}")
        pseen.add(p.id)
        if p.mode not in mode_ids:
            raise ScenarioError(f"path {p.id!r}: unknown mode {p.mode!r}")
        if p.od not in s.demand:
            raise ScenarioError(f"path {p.id!r}: OD {p.od!r} has no demand entry")
        if len(set(p.nodes)) != len(p.nodes):
            raise ScenarioError(f"path {p.id!r}: not loop-free")
        if len(p.links) != len(p.nodes) - 1 or not p.links:
            raise ScenarioError(f"path {p.id!r}: link/node sequence mismatch")
        for i, a_id in enumerate(p.links):
            a = links.get(a_id)
            if a is None:
                raise ScenarioError(f"path {p.id!r}: dangling link {a_id!r}")
            if (a.source, a.target) != (p.nodes[i], p.nodes[i + 1]):
                raise ScenarioError(f"path {p.id!r}: link {a_id!r} does not join {p.nodes[i]}->{p.nodes[i + 1]}")
            if not a.allows(p.mode):
                raise ScenarioError(f"path {p.id!r}: link {a_id!r} does not allow mode {p.mode!r}")

    for w, d in s.demand.items():
        if not d >= 0:
            raise ScenarioError(f"OD {w!r}: demand must be >= 0")
        if not any(p.od == w for p in s.paths):
            raise ScenarioError(f"OD {w!r}: no path")

    if not s.classes:
        raise ScenarioError("no user class")
    total = math.fsum(q.share for q in s.classes)
    if abs(total - 1.0) > 1e-12:
        raise ScenarioError(f"class shares sum to {total!r}, expected 1")
    for q in s.classes:
        if not (q.vot > 0 and q.vowt > 0):
            raise ScenarioError(f"class {q.id!r}: VOT and VOWT must be > 0")
        for m, eta in q.occupancy.items():
            if not eta > 0:
                raise ScenarioError(f"class {q.id!r}: occupancy for {m!r} must be > 0")

    pr = s.params
    if not (pr.theta_path > 0 and pr.theta_mode > 0):
        raise ScenarioError("dispersion parameters must be > 0")
    if pr.logsum not in LOGSUM_FORMS:
        raise ScenarioError(f"unknown logsum form {pr.logsum!r}")


def resolve_links(links: Iterable[LinkSpec], nodes: tuple[str, ...], mode: str, path_id: str) -> tuple[str, ...]:
    """Map a node sequence to link ids, one link per hop allowing ``mode``."""
    by_pair: dict[tuple[str, str], list[LinkSpec]] = {}
    for a in links:
        by_pair.setdefault((a.source, a.target), []).append(a)
    out = []
    for u, v in zip(nodes, nodes[1:]):
        cands = [a for a in by_pair.get((u, v), []) if a.allows(mode)]
        if not cands:
            raise ScenarioError(f"path {path_id!r}: no link {u}->{v} allowing mode {mode!r}")
        if len(cands) > 1:
            raise ScenarioError(f"path {path_id!r}: ambiguous hop {u}->{v}; list links explicitly")
        out.append(cands[0].id)
    return tuple(out)


# --------------------------------------------------------- serialization
def _drop_none(d: dict) -> dict:
    return {k: v for k, v in d.items() if v is not None and v != {}}


def to_document(s: Scenario) -> dict:
    return {
        "name": s.name,
        "parameters": {
            "theta_path": s.params.theta_path,
            "theta_mode": s.params.theta_mode,
            "beta_sf": s.params.beta_sf,
            "alpha_sf": s.params.alpha_sf,
            "logsum": s.params.logsum,
            "kwh_per_litre": s.params.kwh_per_litre,
            "modes": {
                m.id: {
                    "beta_tt": m.beta_tt,
                    "energy": m.energy,
                    "congested": m.congested,
                    "commonality": m.commonality,
                    "fare_per_km": m.fare_per_km,
                    "fare_flat": m.fare_flat,
                }
                for m in s.modes
            },
        },
        "demand": {w: float(d) for w, d in s.demand.items()},
        "classes": [
            {
                "id": q.id,
                "vot": q.vot,
                "vowt": q.vowt,
                "share": q.share,
                "energy_price": dict(q.energy_price),
                "occupancy": dict(q.occupancy),
            }
            for q in s.classes
        ],
        "links": [
            _drop_none(
                {
                    "id": a.id,
                    "from": a.source,
                    "to": a.target,
                    "length": a.length,
                    "category": a.category,
                    "capacity": a.capacity,
                    "alpha": a.alpha,
                    "beta": a.beta,
                    "tolled": a.tolled,
                    "speed": dict(a.speed),
                    "waiting_time": dict(a.waiting_time),
                }
            )
            for a in s.links
        ],
        "paths": [
            {"id": p.id, "od": p.od, "mode": p.mode, "nodes": list(p.nodes), "links": list(p.links)}
            for p in s.paths
        ],
    }


def dump_scenario(s: Scenario) -> str:
    """Canonical TOML serialization."""
    return tomli_w.dumps(to_document(s))


def from_document(doc: Mapping) -> Scenario:
    try:
        par = doc.get("parameters", {})
        modes = tuple(
            ModeSpec(
                id=str(mid),
                beta_tt=float(m.get("beta_tt", 1.0)),
                energy=str(m.get("energy", "none")),
                congested=bool(m.get("congested", False)),
                commonality=bool(m.get("commonality", False)),
                fare_per_km=float(m.get("fare_per_km", 0.0)),
                fare_flat=float(m.get("fare_flat", 0.0)),
            )
            for mid, m in par.get("modes", {}).items()
        )
        params = ChoiceParameters(
            theta_path=float(par.get("theta_path", 5.0)),
            theta_mode=float(par.get("theta_mode", 1.0)),
            beta_sf=float(par.get("beta_sf", 1.0)),
            alpha_sf=float(par.get("alpha_sf", 1.0)),
            logsum=str(par.get("logsum", "printed")),
            kwh_per_litre=float(par.get("kwh_per_litre", 8.9)),
        )
        links = tuple(
            LinkSpec(
                id=str(a["id"]),
                source=str(a["from"]),
                target=str(a["to"]),
                length=float(a["length"]),
                category=str(a["category"]),
                speed={str(m): float(v) for m, v in a.get("speed", {}).items()},
                capacity=None if a.get("capacity") is None else float(a["capacity"]),
                alpha=float(a.get("alpha", 0.0)),
                beta=float(a.get("beta", 4.0)),
                tolled=bool(a.get("tolled", False)),
                waiting_time={str(m): float(v) for m, v in a.get("waiting_time", {}).items()},
            )
            for a in doc.get("links", [])
        )
        paths = []
        for p in doc.get("paths", []):
            pid, mode = str(p["id"]), str(p["mode"])
            nodes = tuple(str(n) for n in p["nodes"])
            if "links" in p:
                plinks = tuple(str(a) for a in p["links"])
            else:
                plinks = resolve_links(links, nodes, mode, pid)
            paths.append(PathSpec(id=pid, od=str(p["od"]), mode=mode, nodes=nodes, links=plinks))
        classes = tuple(
            UserClass(
                id=str(q["id"]),
                vot=float(q["vot"]),
                vowt=float(q["vowt"]),
                share=float(q["share"]),
                energy_price={str(m): float(v) for m, v in q.get("energy_price", {}).items()},
                occupancy={str(m): float(v) for m, v in q.get("occupancy", {}).items()},
            )
            for q in doc.get("classes", [])
        )
        demand = {str(w): float(d) for w, d in doc.get("demand", {}).items()}
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"malformed scenario document: {exc!r}") from exc
    return Scenario(
        name=str(doc.get("name", "scenario")),
        links=links,
        paths=tuple(paths),
        modes=modes,
        classes=classes,
        demand=demand,
        params=params,
    )


def load_scenario(source: str | Path) -> Scenario:
    """Parse a scenario from TOML text or a file path."""
    if isinstance(source, Path) or ("\n" not in source and Path(source).exists()):
        text = Path(source).read_text()
    else:
        text = source
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"parse failure: {exc}") from exc
    return from_document(doc)


def save_scenario(s: Scenario, path: str | Path) -> None:
    Path(path).write_text(dump_scenario(s))


# ------------------------------------------------------------ operations
def path_length(s: Scenario, path_id: str) -> float:
    p = s.path(path_id)
    return math.fsum(s.link(a).length for a in p.links)


def incidence(s: Scenario) -> tuple[np.ndarray, dict[tuple[str, str], np.ndarray]]:
    """Full incidence matrix and its column blocks keyed by (mode, OD)."""
    blocks = {
        (s.mode_ids[m], s.od_ids[w]): s.incidence[:, idx] for w, m, idx in s.groups
    }
    return s.incidence, blocks


def restrict_to_modes(s: Scenario, modes: Iterable[str], name: str | None = None) -> Scenario:
    """Sub-scenario keeping only paths, links and class entries of ``modes``."""
    keep = set(modes)
    unknown = keep - set(s.mode_ids)
    if unknown:
        raise ScenarioError(f"unknown mode(s): {', '.join(sorted(unknown))}")
    links = []
    for a in s.links:
        speed = {m: v for m, v in a.speed.items() if m in keep}
        if speed:
            wt = {m: v for m, v in a.waiting_time.items() if m in keep}
            links.append(replace(a, speed=speed, waiting_time=wt))
    paths = tuple(p for p in s.paths if p.mode in keep)
    ods = {p.od for p in paths}
    classes = tuple(
        replace(
            q,
            energy_price={m: v for m, v in q.energy_price.items() if m in keep},
            occupancy={m: v for m, v in q.occupancy.items() if m in keep},
        )
        for q in s.classes
    )
    return Scenario(
        name=name or s.name,
        links=tuple(links),
        paths=paths,
        modes=tuple(m for m in s.modes if m.id in keep),
        classes=classes,
        demand={w: d for w, d in s.demand.items() if w in ods},
        params=s.params,
    )


# -------------------------------------------------------------- builtins
BUILTINS = ("two-link", "nd-car-only", "nd-multimodal")

# Calibrated multimodal demand (pax/h): zero-price SUE car flow of 2000 pax/h per OD.
ND_MULTIMODAL_DEMAND = {"AD": 4757.8, "BD": 3229.7, "AC": 3268.9, "BC": 2000.0}

_ND_PATHS = (
    ("1", "AD", "car", "A,2,3,4,5,D"),
    ("2", "AD", "car", "A,2,3,4,8,D"),
    ("3", "AD", "car", "A,2,3,7,8,D"),
    ("4", "AD", "car", "A,2,6,7,8,D"),
    ("5", "AD", "car", "A,6,7,8,D"),
    ("6", "BD", "car", "B,1,5,D"),
    ("7", "BD", "car", "B,1,3,4,5,D"),
    ("8", "BD", "car", "B,1,3,4,8,D"),
    ("9", "BD", "car", "B,1,3,7,8,D"),
    ("10", "BD", "car", "B,2,3,4,5,D"),
    ("11", "BD", "car", "B,2,3,4,8,D"),
    ("12", "BD", "car", "B,2,3,7,8,D"),
    ("13", "BD", "car", "B,2,6,7,8,D"),
    ("14", "AC", "car", "A,6,9,C"),
    ("15", "AC", "car", "A,6,7,8,C"),
    ("16", "AC", "car", "A,2,3,4,8,C"),
    ("17", "AC", "car", "A,2,3,7,8,C"),
    ("18", "AC", "car", "A,2,6,7,8,C"),
    ("19", "AC", "car", "A,2,6,9,C"),
    ("20", "BC", "car", "B,1,3,4,8,C"),
    ("21", "BC", "car", "B,1,3,7,8,C"),
    ("22", "BC", "car", "B,2,3,4,8,C"),
    ("23", "BC", "car", "B,2,3,7,8,C"),
    ("24", "BC", "car", "B,2,6,7,8,C"),
    ("25", "BC", "car", "B,2,6,9,C"),
    ("26", "AD", "ebike", "A,2,3,4,5,D"),
    ("27", "AC", "ebike", "A,2,3,4,8,C"),
    ("28", "AD", "metro", "A,2,10,11,D"),
    ("29", "BD", "metro", "B,2,10,11,D"),
)


def _nd_links() -> tuple[LinkSpec, ...]:
    out = []
    for pair, length in (("B,1", 3), ("1,5", 5), ("A,6", 3), ("6,9", 3), ("9,C", 1)):
        u, v = pair.split(",")
        out.append(LinkSpec(pair, u, v, float(length), "highway", {"car": 120.0},
                            capacity=3600.0, alpha=0.15, beta=4.0, tolled=True))
    for pair in ("A,2", "2,3", "3,4", "4,5", "5,D", "4,8", "8,C"):
        u, v = pair.split(",")
        out.append(LinkSpec(pair, u, v, 1.0, "urban-secondary",
                            {"car": 50.0, "ebike": 15.0, "metro": 5.0},
                            capacity=2400.0, alpha=2.0, beta=4.0))
    for pair in ("B,2", "1,3", "2,6", "3,7", "6,7", "7,8", "8,D"):
        u, v = pair.split(",")
        out.append(LinkSpec(pair, u, v, 1.0, "urban-local", {"car": 30.0, "metro": 5.0},
                            capacity=1600.0, alpha=2.0, beta=4.0))
    out.append(LinkSpec("2,10", "2", "10", 0.3, "walk", {"metro": 5.0}))
    out.append(LinkSpec("10,11", "10", "11", 4.0, "metro", {"metro": 70.0},
                        waiting_time={"metro": 0.067}))
    out.append(LinkSpec("11,D", "11", "D", 0.3, "walk", {"metro": 5.0}))
    return tuple(out)


def _nd_multimodal(demand: Mapping[str, float]) -> Scenario:
    links = _nd_links()
    paths = tuple(
        PathSpec(pid, od, mode, tuple(nodes.split(",")),
                 resolve_links(links, tuple(nodes.split(",")), mode, pid))
        for pid, od, mode, nodes in _ND_PATHS
    )
    modes = (
        ModeSpec("car", beta_tt=1.0, energy="ice", congested=True, commonality=True, fare_per_km=0.08),
        ModeSpec("ebike", beta_tt=3.0, energy="ebike"),
        ModeSpec("metro", beta_tt=1.5, energy="metro", fare_flat=2.0),
    )
    prices = {"car": 1.60, "ebike": 0.25, "metro": 0.0}
    occupancy = {"car": 1.2, "ebike": 1.0, "metro": 1.0}
    classes = (
        UserClass("1", vot=5.0, vowt=10.0, share=0.7, energy_price=prices, occupancy=occupancy),
        UserClass("2", vot=10.0, vowt=20.0, share=0.3, energy_price=prices, occupancy=occupancy),
    )
    return Scenario("nd-multimodal", links, paths, modes, classes, dict(demand),
                    ChoiceParameters(theta_path=5.0, theta_mode=1.0, beta_sf=1.0, alpha_sf=1.0))


def _two_link() -> Scenario:
    # c1 = 10 + 0.01 f, c2 = 15 + 0.005 f with VOT = 1 EUR/h and BPR beta = 1
    links = (
        LinkSpec("1", "O", "D", 10.0, "urban-local", {"car": 1.0}, capacity=1000.0, alpha=1.0, beta=1.0),
        LinkSpec("2", "O", "D", 15.0, "urban-local", {"car": 1.0}, capacity=3000.0, alpha=1.0, beta=1.0),
    )
    paths = (
        PathSpec("1", "OD", "car", ("O", "D"), ("1",)),
        PathSpec("2", "OD", "car", ("O", "D"), ("2",)),
    )
    modes = (ModeSpec("car", beta_tt=1.0, energy="none", congested=True),)
    classes = (UserClass("1", vot=1.0, vowt=1.0, share=1.0, occupancy={"car": 1.0}),)
    return Scenario("two-link", links, paths, modes, classes, {"OD": 1000.0},
                    ChoiceParameters(theta_path=1.0, theta_mode=1.0))


def builtin(name: str) -> Scenario:
    if name == "two-link":
        return _two_link()
    if name == "nd-multimodal":
        return _nd_multimodal(ND_MULTIMODAL_DEMAND)
    if name == "nd-car-only":
        mm = _nd_multimodal({w: 2000.0 for w in ND_MULTIMODAL_DEMAND})
        return restrict_to_modes(mm, ["car"], name="nd-car-only")
    raise ScenarioError(f"unknown builtin scenario {name!r}; choose from {', '.join(BUILTINS)}")
