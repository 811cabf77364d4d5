"""Hierarchical logit demand: c-logit path choice nested in logit mode choice.

The scalar helpers mirror the textbook formulas and are used by tests and
small instances. :func:`load` is the vectorized network loading used by the
equilibrium solver; it evaluates every class, OD and mode at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .netmodel import Scenario

_TINY = 1e-300


def softmax(v: np.ndarray, theta: float) -> np.ndarray:
    x = np.asarray(v, dtype=float) / theta
    e = np.exp(x - x.max())
    p = e / e.sum()
    p[p < _TINY] = 0.0
    return p


def commonality_factor(shared: np.ndarray, alpha_sf: float = 1.0) -> np.ndarray:
    """C-logit commonality factors from a matrix of shared costs.

    ``shared[k, j]`` is the generalized cost of links common to paths k and j,
    so the diagonal holds each path's own additive cost.
    """
    g = np.atleast_2d(np.asarray(shared, dtype=float))
    own = np.diag(g)
    if np.any(own <= 0):
        raise ValueError("path costs must be positive for the commonality factor")
    return ((g / np.sqrt(np.outer(own, own))) ** alpha_sf).sum(axis=1)


def path_utilities_and_probs(costs, sf=None, beta_sf: float = 1.0, theta: float = 5.0):
    """Systematic utilities V = -g - beta_sf ln SF and conditional logit probabilities."""
    g = np.asarray(costs, dtype=float)
    if g.size == 0:
        raise ValueError("empty path set")
    sf = np.ones_like(g) if sf is None else np.asarray(sf, dtype=float)
    v = -g - beta_sf * np.log(sf)
    return v, softmax(v, theta)


def mode_logsum(v, theta: float, form: str = "scaled") -> float:
    """Logsum of path utilities.

    ``scaled`` is the expected maximum utility theta*ln(sum exp(V/theta));
    ``printed`` is (1/theta)*ln(sum exp(V/theta)).
    """
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        raise ValueError("mode unavailable on this OD")
    lse = logsumexp(v / theta)
    if form == "scaled":
        return float(theta * lse)
    if form == "printed":
        return float(lse / theta)
    raise ValueError(f"unknown logsum form {form!r}")


def mode_probs(logsums, theta_mode: float = 1.0) -> np.ndarray:
    """Mode probabilities; NaN logsums mark unavailable modes (probability 0)."""
    L = np.asarray(logsums, dtype=float)
    ok = ~np.isnan(L)
    if not ok.any():
        raise ValueError("no available mode")
    out = np.zeros_like(L)
    out[ok] = softmax(L[ok], theta_mode)
    return out


def class_path_flows(p_path, p_mode: float, share: float, occupancy: float, demand: float) -> np.ndarray:
    """Vehicle path flows of one class, mode and OD."""
    return np.asarray(p_path, dtype=float) * p_mode * share / occupancy * demand


def od_satisfaction(logsums, theta_mode: float = 1.0) -> float:
    """Expected maximum perceived utility over the available modes."""
    L = np.asarray(logsums, dtype=float)
    L = L[~np.isnan(L)]
    if L.size == 0:
        raise ValueError("no alternatives")
    return float(theta_mode * logsumexp(L / theta_mode))


@dataclass(frozen=True)
class Loading:
    """Result of one network loading at fixed costs.

    Shapes: Q classes, K paths, G (OD, mode) groups, W ODs.
    """

    path_cost: np.ndarray  # (Q, K) g = g_ad + g_nad + price
    additive_cost: np.ndarray  # (Q, K)
    commonality: np.ndarray  # (Q, K)
    utility: np.ndarray  # (Q, K)
    p_path: np.ndarray  # (Q, K) conditional on mode
    logsum: np.ndarray  # (Q, G)
    p_mode: np.ndarray  # (Q, G)
    p_joint: np.ndarray  # (Q, K)
    satisfaction: np.ndarray  # (Q, W)
    pax: np.ndarray  # (Q, K)
    veh: np.ndarray  # (Q, K)


def _group_logsumexp(x: np.ndarray, member: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Group-wise max and log-sum-exp of x (Q, N) over a (G, N) membership."""
    masked = np.where(member[None, :, :] > 0, x[:, None, :], -np.inf)  # (Q, G, N)
    mx = masked.max(axis=2)
    s = np.exp(masked - mx[:, :, None]).sum(axis=2)
    return mx, mx + np.log(s)


def load(s: Scenario, link_cost: np.ndarray, prices: np.ndarray | None = None,
         demand: np.ndarray | None = None) -> Loading:
    """Vectorized hierarchical-logit loading for (classes, modes, links) link costs."""
    p = s.params
    nk = len(s.paths)
    pi = np.zeros(nk) if prices is None else np.asarray(prices, dtype=float)
    d = s.demand_vector if demand is None else np.asarray(demand, dtype=float)

    nq = link_cost.shape[0]
    flat = link_cost.reshape(nq, -1)
    gad = flat @ s.stacked_incidence
    g = gad + s.nonadditive + pi

    mask = s.commonality_mask
    if mask.any():
        shared = (flat @ s.shared_tensor).reshape(nq, nk, nk)
        denom = np.sqrt(gad[:, :, None] * gad[:, None, :])
        ratio = np.divide(shared, denom, out=np.zeros_like(shared), where=mask[None] & (denom > 0))
        if p.alpha_sf != 1.0:
            ratio = ratio**p.alpha_sf
        sf = np.where(mask.any(axis=1)[None, :], ratio.sum(axis=2), 1.0)
    else:
        sf = np.ones_like(g)
    v = -g - p.beta_sf * np.log(sf)

    member = s.group_membership  # (G, K)
    x = v / p.theta_path
    _, lse = _group_logsumexp(x, member)  # (Q, G)
    p_path = np.exp(x - lse[:, s.path_group])
    p_path[p_path < _TINY] = 0.0
    logsum = p.theta_path * lse if p.logsum == "scaled" else lse / p.theta_path

    y = logsum / p.theta_mode
    _, lse_m = _group_logsumexp(y, s.od_membership)  # (Q, W)
    p_mode = np.exp(y - lse_m[:, s.group_od])
    p_mode[p_mode < _TINY] = 0.0
    sat = p.theta_mode * lse_m

    p_joint = p_path * p_mode[:, s.path_group]
    pax = p_joint * s.shares[:, None] * d[s.path_od][None, :]
    veh = pax / s.occupancy[:, s.path_mode]
    return Loading(g, gad, sf, v, p_path, logsum, p_mode, p_joint, sat, pax, veh)


def congested_link_flow(s: Scenario, veh: np.ndarray) -> np.ndarray:
    """Total vehicle flow of congested modes on every link."""
    return s.incidence @ (veh * s.congested_paths[None, :]).sum(axis=0)
