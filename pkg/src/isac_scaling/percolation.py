"""Tilted-cell partition, open/closed marking, highway extraction by max-flow,
and the analytic percolation bounds.

Geometry. Cells are squares of side s rotated by 45 degrees (diamonds). With
c = sqrt(2) s, diamond (k, l) holds the points with k <= (x+y)/c < k+1 and
l <= (y-x)/c < l+1. Every diamond lying fully inside the square carries one
bond of a square lattice of spacing c with vertices (i c, j c):
horizontal bond H(i, j) = (i,j)-(i+1,j) sits in diamond (i+j, j-i-1) and
vertical bond V(i, j) = (i,j)-(i,j+1) sits in diamond (i+j, j-i).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import maximum_flow

from .channel import FadingModel, PairGains, interference_layer_bound
from .netgen import NetworkInstance


class ParameterError(ValueError):
    pass


class DegeneratePartitionError(ParameterError):
    pass


class ConfigurationError(ValueError):
    pass


# neighbour offsets in (k, l); the first three are the links a cell "owns"
H_NEIGHBOURS = np.array([(1, -1), (1, 0), (0, -1), (-1, 1), (-1, 0), (0, 1)])
V_NEIGHBOURS = np.array([(1, 1), (1, 0), (0, -1), (-1, -1), (-1, 0), (0, 1)])


@dataclass
class Highway:
    """One extracted crossing: its cells in travel order and the lattice
    vertices between them (len(verts) == len(cells) + 1)."""

    system: str  # "h" or "v"
    rect: int
    cells: np.ndarray  # flat diamond indices
    verts: np.ndarray  # flat vertex ids i * (L + 1) + j
    relays: np.ndarray  # node ids


@dataclass
class Rectangle:
    system: str
    index: int
    rows: tuple  # [lo, hi) in the cross coordinate
    full: bool  # has the nominal kappa log xi height
    crossings: int = 0
    paths: list = field(default_factory=list)  # indices into LatticeSystem.highways


@dataclass
class LatticeSystem:
    n: float
    varsigma: float
    gamma: float
    alpha_c: float
    f: float
    side_length_s: float
    side_length_sprime: float
    xi: float
    L: int
    nk: int
    nl: int
    l_off: int
    node_cell: np.ndarray  # flat diamond index per node
    cell_count: np.ndarray  # (nk, nl) occupancy
    cell_inside: np.ndarray  # (nk, nl) diamond fully inside the square
    cell_order: np.ndarray  # node ids sorted by cell
    cell_start: np.ndarray  # CSR pointer into cell_order, length nk*nl+1
    relay: np.ndarray  # (nk, nl) designated relay node or -1
    positions: np.ndarray
    pure_tdm: bool = False
    open_cells: Optional[np.ndarray] = None  # (nk, nl) bool
    kappa: Optional[float] = None
    rect_height: int = 0
    rectangles: list = field(default_factory=list)
    highways: list = field(default_factory=list)
    gate_stats: dict = field(default_factory=dict)

    # -- index helpers -------------------------------------------------
    def flat(self, k, l):
        return np.asarray(k) * self.nl + (np.asarray(l) + self.l_off)

    def unflat(self, idx):
        idx = np.asarray(idx)
        return idx // self.nl, idx % self.nl - self.l_off

    def cell_centre(self, idx) -> np.ndarray:
        k, l = self.unflat(idx)
        c = self.side_length_sprime
        return np.stack([(k - l) / 2.0 * c, (k + l + 1) / 2.0 * c], axis=-1)

    def nodes_in(self, idx: int) -> np.ndarray:
        return self.cell_order[self.cell_start[idx] : self.cell_start[idx + 1]]

    def h_cell(self, i, j):
        i, j = np.asarray(i), np.asarray(j)
        return self.flat(i + j, j - i - 1)

    def v_cell(self, i, j):
        i, j = np.asarray(i), np.asarray(j)
        return self.flat(i + j, j - i)

    def bond_status(self):
        """Open flags of H (L, L+1) and V (L+1, L) bonds."""
        L = self.L
        is_open = self.open_cells if self.open_cells is not None else np.zeros((self.nk, self.nl), bool)
        flat_open = is_open.ravel()
        ii, jj = np.meshgrid(np.arange(L), np.arange(L + 1), indexing="ij")
        H = flat_open[self.h_cell(ii, jj)]
        ii, jj = np.meshgrid(np.arange(L + 1), np.arange(L), indexing="ij")
        V = flat_open[self.v_cell(ii, jj)]
        return H, V

    def is_h_cell(self, idx) -> np.ndarray:
        k, l = self.unflat(idx)
        return (k - l) % 2 == 1

    @property
    def occupancy(self) -> dict:
        nz = np.nonzero(self.cell_count.ravel())[0]
        return {int(c): self.nodes_in(c).tolist() for c in nz}

    def crossing_counts(self, system: str = "h", full_only: bool = True) -> np.ndarray:
        return np.array(
            [r.crossings for r in self.rectangles if r.system == system and (r.full or not full_only)]
        )

    def to_dict(self) -> dict:
        return {
            "xi": self.xi,
            "side_length_s": self.side_length_s,
            "rect_height": self.rect_height,
            "rectangles": [
                {
                    "system": r.system,
                    "index": r.index,
                    "rows": list(r.rows),
                    "full": r.full,
                    "crossings": r.crossings,
                    "paths": [
                        {
                            "cells": [list(map(int, kl)) for kl in zip(*self.unflat(self.highways[p].cells))],
                            "relays": self.highways[p].relays.tolist(),
                        }
                        for p in r.paths
                    ],
                }
                for r in self.rectangles
            ],
        }


def cell_side(varsigma: float, f_value: float, alpha_c: float) -> float:
    return varsigma * f_value ** (1.0 / alpha_c)


def lattice_dimension(n: float, varsigma: float, gamma: float, alpha_c: float) -> float:
    return np.sqrt(n) / (np.sqrt(2.0) * cell_side(varsigma, n**gamma, alpha_c))


def partition(instance: NetworkInstance, varsigma: float, f_exponent: float, alpha_c: float) -> LatticeSystem:
    n = instance.n
    if f_exponent > alpha_c / 2 + 1e-12:
        raise ParameterError(f"gamma={f_exponent} exceeds alpha_c/2={alpha_c / 2}")
    if varsigma <= 0 or f_exponent < 0:
        raise ParameterError("varsigma must be positive and gamma nonnegative")
    f = n**f_exponent
    s = cell_side(varsigma, f, alpha_c)
    side = np.sqrt(n)
    if s > side * (1 + 1e-12):
        raise DegeneratePartitionError(f"cell side {s:.3g} exceeds network side {side:.3g}")
    c = np.sqrt(2.0) * s
    xi = side / c
    L = int(np.floor(xi + 1e-9))
    nk = int(np.floor(2 * xi)) + 1
    l_off = int(np.ceil(xi)) + 1
    nl = int(np.floor(xi)) + l_off + 1

    pos = instance.nodes
    k = np.clip(np.floor((pos[:, 0] + pos[:, 1]) / c).astype(np.int64), 0, nk - 1)
    l = np.clip(np.floor((pos[:, 1] - pos[:, 0]) / c).astype(np.int64), -l_off, nl - 1 - l_off)
    node_cell = k * nl + (l + l_off)
    ncell = nk * nl
    counts = np.bincount(node_cell, minlength=ncell)

    kk, ll = np.meshgrid(np.arange(nk), np.arange(nl) - l_off, indexing="ij")
    X = (kk - ll) / 2.0
    Y = (kk + ll + 1) / 2.0
    lo, hi = 0.5 - 1e-9, xi - 0.5 + 1e-9
    inside = (X >= lo) & (X <= hi) & (Y >= lo) & (Y <= hi)

    centres = np.stack([X.ravel() * c, Y.ravel() * c], axis=1)
    dist = np.linalg.norm(pos - centres[node_cell], axis=1) if len(pos) else np.zeros(0)
    order = np.lexsort((np.arange(len(pos)), dist, node_cell))
    start = np.concatenate([[0], np.cumsum(counts)])
    relay = np.full(ncell, -1, dtype=np.int64)
    nonempty = counts > 0
    relay[nonempty] = order[start[:-1][nonempty]]

    lat = LatticeSystem(
        n=n,
        varsigma=varsigma,
        gamma=f_exponent,
        alpha_c=alpha_c,
        f=f,
        side_length_s=s,
        side_length_sprime=c,
        xi=xi,
        L=L,
        nk=nk,
        nl=nl,
        l_off=l_off,
        node_cell=node_cell,
        cell_count=counts.reshape(nk, nl),
        cell_inside=inside,
        cell_order=order,
        cell_start=start,
        relay=relay.reshape(nk, nl),
        positions=pos,
        pure_tdm=L < 1 or f_exponent >= alpha_c / 2 - 1e-12,
    )
    return lat


def open_probability(varsigma: float, f_value: float, alpha_c: float) -> float:
    if varsigma <= 0 or f_value <= 0:
        raise ParameterError("inputs must be positive")
    return float(-np.expm1(-(varsigma**2) * f_value ** (2.0 / alpha_c)))


def mark_open_closed(lattice: LatticeSystem) -> LatticeSystem:
    return replace(lattice, open_cells=(lattice.cell_count > 0) & lattice.cell_inside)


@dataclass(frozen=True)
class FadingGateParams:
    g_tau: float
    I_tau: float

    def __post_init__(self):
        if not (self.g_tau >= 0 and self.I_tau > 0):
            raise ParameterError("gate thresholds must be positive")


def gate_margin(gate: FadingGateParams, varsigma: float, M: float, alpha_c: float, gain_law: FadingModel):
    """(P_g^3 * P_I lower bound, right-hand threshold) of the feasibility test."""
    P_g = float(gain_law.ccdf(gate.g_tau)) if gate.g_tau > 0 else 1.0
    C = interference_layer_bound(varsigma, M, alpha_c, 1.0)
    P_I = max(0.0, 1.0 - C / gate.I_tau) ** 6 if np.isfinite(gate.I_tau) else 1.0
    e = np.exp(-(varsigma**2))
    rhs = (1.0 - 2.0 * e) / (1.0 - e) ** 2
    return P_g**3 * P_I, rhs


def threshold_feasible(gate: FadingGateParams, varsigma: float, M: float, alpha_c: float, gain_law: FadingModel) -> bool:
    lhs, rhs = gate_margin(gate, varsigma, M, alpha_c, gain_law)
    return bool(lhs > rhs)


def mark_open_closed_fading(
    lattice: LatticeSystem,
    gains: PairGains,
    gate: FadingGateParams,
    schedule,
    *,
    link_interference: Optional[np.ndarray] = None,
    P: Optional[float] = None,
    check_feasible: bool = True,
) -> LatticeSystem:
    """Close a cell that is empty, has a weak owned link (gain < g_tau), or
    whose transmission would see interference above I_tau at a neighbour relay.

    link_interference (nk, nl, 6) may be passed in to reuse a computation.
    """
    from .protocol import highway_link_interference

    if check_feasible and not threshold_feasible(
        gate, lattice.varsigma, schedule.M, lattice.alpha_c, gains.model
    ):
        raise ConfigurationError("fading gate (g_tau, I_tau) fails the feasibility inequality")
    base = mark_open_closed(lattice)
    occ = base.open_cells
    relay = lattice.relay
    nbr_relay, nbr_ok = neighbour_relays(lattice)
    own = relay[..., None]
    g = np.where(nbr_ok, gains(np.maximum(own, 0), np.maximum(nbr_relay, 0)), np.inf)
    weak = np.any(g[..., :3] < gate.g_tau, axis=-1)
    if np.isinf(gate.I_tau):
        hot = np.zeros_like(weak)
    else:
        if link_interference is None:
            link_interference = highway_link_interference(
                lattice, schedule, gains, lattice.f if P is None else P
            )[0]
        hot = np.any(np.where(nbr_ok, link_interference, 0.0) > gate.I_tau, axis=-1)
    is_open = occ & ~weak & ~hot
    stats = {
        "occupied": int(occ.sum()),
        "closed_gain": int((occ & weak).sum()),
        "closed_interference": int((occ & hot).sum()),
        "open": int(is_open.sum()),
        "inside": int(lattice.cell_inside.sum()),
    }
    return replace(lattice, open_cells=is_open, gate_stats=stats)


def neighbour_relays(lattice: LatticeSystem):
    """Relay ids of the 6 lattice neighbours of every cell, and a validity mask
    (neighbour inside and occupied, cell itself inside and occupied)."""
    nk, nl = lattice.nk, lattice.nl
    kk, ll = np.meshgrid(np.arange(nk), np.arange(nl) - lattice.l_off, indexing="ij")
    is_h = ((kk - ll) % 2 == 1)[..., None, None]
    offs = np.where(is_h, H_NEIGHBOURS[None, None], V_NEIGHBOURS[None, None])  # (nk, nl, 6, 2)
    k2 = kk[..., None] + offs[..., 0]
    l2 = ll[..., None] + offs[..., 1]
    lo2 = l2 + lattice.l_off
    inb = (k2 >= 0) & (k2 < nk) & (lo2 >= 0) & (lo2 < nl)
    k2c = np.clip(k2, 0, nk - 1)
    lo2c = np.clip(lo2, 0, nl - 1)
    nb = lattice.relay[k2c, lo2c]
    good_cell = (lattice.relay >= 0) & lattice.cell_inside
    ok = inb & good_cell[k2c, lo2c] & good_cell[..., None]
    return np.where(ok, nb, -1), ok


# --------------------------------------------------------------------------
# max-flow crossings

def _grid_graph(along: np.ndarray, cross: np.ndarray):
    """Arc list for a rectangle: vertices (a, r), a in [0, La], r in [0, R).
    along[a, r] joins (a, r)-(a+1, r); cross[a, r] joins (a, r)-(a, r+1)."""
    La, R = along.shape
    vid = lambda a, r: a * R + r  # noqa: E731
    a, r = np.nonzero(along)
    u1, v1 = vid(a, r), vid(a + 1, r)
    if R > 1 and cross.size:
        a, r = np.nonzero(cross)
        u2, v2 = vid(a, r), vid(a, r + 1)
    else:
        u2 = v2 = np.zeros(0, dtype=np.int64)
    u = np.concatenate([u1, u2])
    v = np.concatenate([v1, v2])
    return u, v, (La + 1) * R


def max_flow_crossings(along: np.ndarray, cross: np.ndarray, want_paths: bool = True):
    """Maximum number of edge-disjoint left-to-right open crossings.

    Returns (count, paths) where each path is the list of visited vertices
    (a, r) from the left column a = 0 to the right column a = La.
    """
    along = np.asarray(along, dtype=bool)
    cross = np.asarray(cross, dtype=bool)
    La, R = along.shape
    if La == 0 or R == 0 or not along.any():
        return 0, []
    u, v, nv = _grid_graph(along, cross)
    S, T = nv, nv + 1
    left = np.arange(R)
    right = La * R + np.arange(R)
    big = 4 * R + 4
    rows = np.concatenate([u, v, np.full(R, S), right])
    cols = np.concatenate([v, u, left, np.full(R, T)])
    cap = np.concatenate([np.ones(2 * len(u), np.int32), np.full(2 * R, big, np.int32)])
    g = sparse.csr_matrix((cap, (rows, cols)), shape=(nv + 2, nv + 2))
    res = maximum_flow(g, S, T, method="dinic")
    value = int(res.flow_value)
    if not want_paths or value == 0:
        return value, []
    F = res.flow.tocoo()
    m = (F.row < nv) & (F.col < nv) & (F.data > 0)
    succ: dict = {}
    for a_, b_ in zip(F.row[m].tolist(), F.col[m].tolist()):
        succ.setdefault(a_, []).append(b_)
    paths = []
    sm = (F.row == S) & (F.data > 0)
    starts = [x for x, units in zip(F.col[sm].tolist(), F.data[sm].tolist()) for _ in range(int(units))]
    for x in starts:
        walk = [x]
        where = {x: 0}
        cur = x
        while cur // R != La:
            nxt = succ[cur].pop()
            if nxt in where:
                cut = where[nxt]
                for w in walk[cut + 1 :]:
                    del where[w]
                walk = walk[: cut + 1]
            else:
                where[nxt] = len(walk)
                walk.append(nxt)
            cur = nxt
        paths.append([(w // R, w % R) for w in walk])
    return value, paths


def _system_arrays(H: np.ndarray, V: np.ndarray, system: str):
    if system == "h":
        return H, V  # along (L, L+1) indexed [i, j]; cross (L+1, L) indexed [i, j]
    return V.T, H.T


def extract_highways(lattice: LatticeSystem, kappa: float) -> LatticeSystem:
    if lattice.open_cells is None:
        raise ConfigurationError("mark open/closed status before extracting highways")
    xi = lattice.xi
    h = int(np.floor(kappa * np.log(xi))) if xi > 1 else 0
    if h < 1:
        raise ConfigurationError(
            f"rectangle height floor(kappa log xi) = {h} < 1; increase kappa or n"
        )
    L = lattice.L
    H, V = lattice.bond_status()
    # usable rows: bonds whose diamond can lie inside the square
    first, last = 1, min(L, int(np.floor(xi - 0.5 + 1e-9)))
    rects, highways = [], []
    for system in ("h", "v"):
        along, cross = _system_arrays(H, V, system)
        idx = 0
        for lo in range(first, last + 1, h):
            hi = min(lo + h, last + 1)
            rect = Rectangle(system, idx, (lo, hi), hi - lo == h)
            count, paths = max_flow_crossings(along[:, lo:hi], cross[:, lo : hi - 1])
            rect.crossings = count
            made = []
            for p in paths:
                verts = np.array([(a, r + lo) for a, r in p])
                hw = _make_highway(lattice, system, idx, verts)
                made.append(hw)
            made.sort(key=lambda hw: float(np.mean(lattice.cell_centre(hw.cells)[:, 1 if system == "h" else 0])))
            for hw in made:
                rect.paths.append(len(highways))
                highways.append(hw)
            rects.append(rect)
            idx += 1
    return replace(lattice, kappa=kappa, rect_height=h, rectangles=rects, highways=highways)


def _make_highway(lattice: LatticeSystem, system: str, rect: int, verts: np.ndarray) -> Highway:
    # verts are (along, cross); convert to lattice (i, j)
    if system == "h":
        i, j = verts[:, 0], verts[:, 1]
    else:
        i, j = verts[:, 1], verts[:, 0]
    di, dj = np.diff(i), np.diff(j)
    i0, j0 = i[:-1], j[:-1]
    horiz = dj == 0
    bi = np.where(horiz, np.minimum(i0, i0 + di), i0)
    bj = np.where(horiz, j0, np.minimum(j0, j0 + dj))
    cells = np.where(horiz, lattice.h_cell(bi, bj), lattice.v_cell(bi, bj))
    vflat = i * (lattice.L + 1) + j
    return Highway(system, rect, cells.astype(np.int64), vflat.astype(np.int64), lattice.relay.ravel()[cells])


# --------------------------------------------------------------------------
# analytic bounds

def eta_max(n: float, varsigma: float, f_exponent: float, alpha_c: float, kappa: float) -> float:
    f = n**f_exponent
    return 1.0 - (kappa * np.log(6.0) + 2.0) / (kappa * varsigma**2 * f ** (2.0 / alpha_c))


def prop1_path_count_bound(n, varsigma, f_exponent, alpha_c, kappa, eta, check_eta: bool = True) -> float:
    """Guaranteed disjoint crossings per rectangle, eta * kappa * log(xi).

    check_eta enforces the admissible range of eta; pass False to evaluate the
    formula outside it.
    """
    if eta <= 0:
        raise ParameterError("eta must be positive")
    if check_eta:
        top = eta_max(n, varsigma, f_exponent, alpha_c, kappa)
        if eta > top + 1e-12:
            raise ParameterError(f"eta={eta} exceeds the admissible maximum {top:.4g}")
    return float(eta * kappa * np.log(lattice_dimension(n, varsigma, f_exponent, alpha_c)))


def prop1_total_paths(n, varsigma, f_exponent, alpha_c, eta) -> float:
    return float(eta * lattice_dimension(n, varsigma, f_exponent, alpha_c))


def lemma3_crossing_bound(L1, L2, p, q, eta) -> float:
    if not (0 <= q < p <= 1):
        raise ParameterError("need 0 <= q < p <= 1")
    if eta <= 0:
        raise ParameterError("eta must be positive")
    logb = np.log(4.0 / 3.0 * L1) + eta * L2 * np.log(p / (p - q)) + L2 * np.log(3.0 * (1.0 - q)) if q < 1 else -np.inf
    return float(np.exp(logb))
