"""TDM schedules, three-phase routing (drain onto a horizontal highway, ride
it and a vertical one, deliver) and the per-phase SINR measurements."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .channel import ChannelModel, PairGains, lattice_interference, sensing_distance, sinr_rate
from .netgen import NetworkInstance
from .percolation import H_NEIGHBOURS, V_NEIGHBOURS, LatticeSystem, neighbour_relays


class ScheduleError(ValueError):
    pass


class UnroutableError(RuntimeError):
    pass


@dataclass
class SchedulePlan:
    M: int
    sub_slots: int
    cell_group: np.ndarray  # (nk, nl) slot index in [0, M^2)
    cell_u: np.ndarray  # (nk, nl) group-lattice coordinates
    cell_v: np.ndarray
    U: int
    V: int
    pitch: float  # distance between neighbouring same-slot cells
    active: np.ndarray  # (nk, nl) cells whose relay transmits
    rounds: int = 1
    n_nodes: int = 0
    transmissions: int = 0  # node transmissions per frame

    @property
    def n_slots(self) -> int:
        return self.M * self.M * self.sub_slots * self.rounds

    @property
    def groups(self) -> dict:
        flat = self.cell_group.ravel()
        return {int(m): np.nonzero(flat == m)[0] for m in range(self.M * self.M)}

    def active_per_slot(self) -> np.ndarray:
        return np.bincount(self.cell_group[self.active], minlength=self.M * self.M)


def build_schedule(lattice: LatticeSystem, M: int, sub_slots: int = 1) -> SchedulePlan:
    """Cells sharing (k mod M, l mod M) transmit together."""
    if int(M) != M or M <= 2:
        raise ScheduleError(f"slot parameter M={M} must be an integer > 2 for interference to stay bounded")
    if sub_slots not in (1, 6):
        raise ScheduleError("sub_slots must be 1 or 6")
    M = int(M)
    kk, lo = np.meshgrid(np.arange(lattice.nk), np.arange(lattice.nl), indexing="ij")
    active = (lattice.relay >= 0) & lattice.cell_inside
    plan = SchedulePlan(
        M=M,
        sub_slots=sub_slots,
        cell_group=(kk % M) * M + (lo % M),
        cell_u=kk // M,
        cell_v=lo // M,
        U=-(-lattice.nk // M),
        V=-(-lattice.nl // M),
        pitch=M * lattice.side_length_s,
        active=active,
        n_nodes=len(lattice.positions),
    )
    plan.transmissions = int(active.sum()) * sub_slots
    return plan


def pure_tdm_schedule(n_nodes: int) -> SchedulePlan:
    """One node per slot: the interference-free benchmark."""
    z = np.zeros((1, 1), dtype=np.int64)
    plan = SchedulePlan(1, 1, z, z, z, 1, 1, 0.0, np.ones((1, 1), bool), rounds=n_nodes, n_nodes=n_nodes)
    plan.transmissions = n_nodes
    return plan


def draining_slot_parameter(kappa: float, xi: float) -> int:
    if xi <= 1:
        raise ScheduleError("xi must exceed 1")
    return max(3, int(np.ceil(2.0 * (np.sqrt(2.0) * kappa * np.log(xi) + 1.0) - 1e-12)))


def validate_schedule(plan: SchedulePlan, lattice: Optional[LatticeSystem] = None) -> list:
    """Return a list of violations (empty when the plan is valid)."""
    bad = []
    M = plan.M
    if M <= 2:
        bad.append(f"M={M} <= 2")
    g = plan.cell_group
    if g.min() < 0 or g.max() >= M * M:
        bad.append("group label outside [0, M^2)")
    nk, nl = g.shape
    for d1 in range(0, M):
        for d2 in range(-(M - 1), M):
            if d1 == 0 and d2 <= 0:
                continue
            a = g[: nk - d1, max(0, -d2) : nl - max(0, d2)]
            b = g[d1:, max(0, d2) : nl - max(0, -d2) if d2 < 0 else nl]
            b = b[:, : a.shape[1]]
            if a.size and np.any(a == b):
                bad.append(f"same-slot cells only {max(d1, abs(d2))} apart (< M={M})")
                return bad
    if lattice is not None:
        s = lattice.side_length_s
        if plan.pitch + 1e-9 < s * (M - 1):
            bad.append("slot pitch below (M-1) s")
    return bad


def sensing_frequency(schedule: SchedulePlan, phase: str = "highway") -> float:
    """Average fraction of slots in which a node transmits (and so senses)."""
    if schedule.n_nodes == 0:
        return 0.0
    return schedule.transmissions / (schedule.n_nodes * schedule.n_slots)


# --------------------------------------------------------------------------
# interference at the highway receivers

_OFFSET_INDEX = {}
for _kind, _tab in (("h", H_NEIGHBOURS), ("v", V_NEIGHBOURS)):
    for _i, (_a, _b) in enumerate(_tab):
        _OFFSET_INDEX[(_kind, int(_a), int(_b))] = _i
_LOOKUP = np.full((2, 3, 3), -1, dtype=np.int64)
for (_kind, _a, _b), _i in _OFFSET_INDEX.items():
    _LOOKUP[0 if _kind == "h" else 1, _a + 1, _b + 1] = _i


def neighbour_slot(lattice: LatticeSystem, src_cell, dst_cell) -> np.ndarray:
    """Index (0..5) of dst among src's lattice neighbours, -1 if not adjacent."""
    k1, l1 = lattice.unflat(src_cell)
    k2, l2 = lattice.unflat(dst_cell)
    dk, dl = k2 - k1, l2 - l1
    ok = (np.abs(dk) <= 1) & (np.abs(dl) <= 1)
    kind = np.where((k1 - l1) % 2 == 1, 0, 1)
    out = _LOOKUP[kind, np.clip(dk, -1, 1) + 1, np.clip(dl, -1, 1) + 1]
    return np.where(ok, out, -1)


def highway_link_interference(
    lattice: LatticeSystem,
    schedule: SchedulePlan,
    gains: Optional[PairGains],
    P: float,
    *,
    alpha: Optional[float] = None,
    near: int = 2,
):
    """Full-load interference at every neighbour relay of every active cell,
    and at the transmitting relay itself (for sensing).

    Returns (I_link (nk, nl, 6), I_sense (nk, nl)); entries for missing
    neighbours are 0.
    """
    alpha = lattice.alpha_c if alpha is None else alpha
    pos = lattice.positions
    relay = lattice.relay
    act = schedule.active
    grid = np.full((schedule.M**2, schedule.U, schedule.V), -1, dtype=np.int64)
    kk, ll = np.nonzero(act)
    grid[schedule.cell_group[kk, ll], schedule.cell_u[kk, ll], schedule.cell_v[kk, ll]] = relay[kk, ll]

    nbr, ok = neighbour_relays(lattice)
    ok = ok & act[..., None]
    ck, cl, slot = np.nonzero(ok)
    owner = relay[ck, cl]
    rx = nbr[ck, cl, slot]
    # sensing receivers: the transmitter itself
    owner_all = np.concatenate([owner, relay[kk, ll]])
    rx_all = np.concatenate([rx, relay[kk, ll]])
    cks = np.concatenate([ck, kk])
    cls = np.concatenate([cl, ll])
    g = gains if (gains is not None and gains.model.fading) else None
    tot = lattice_interference(
        grid,
        pos,
        schedule.cell_group[cks, cls],
        schedule.cell_u[cks, cls],
        schedule.cell_v[cks, cls],
        pos[rx_all],
        rx_all,
        owner_all,
        pitch=schedule.pitch,
        P=P,
        alpha=alpha,
        near=near,
        gains=g,
    )
    I_link = np.zeros(ok.shape)
    I_link[ck, cl, slot] = tot[: len(ck)]
    I_sense = np.zeros(relay.shape)
    I_sense[kk, ll] = tot[len(ck) :]
    return I_link, I_sense


# --------------------------------------------------------------------------
# routing

@dataclass
class RouteTable:
    """Vectorised routes, one row per source node (index = source id)."""

    dest: np.ndarray
    routable: np.ndarray
    local: np.ndarray  # source and destination share a cell
    entry_path: np.ndarray
    entry_pos: np.ndarray
    entry_relay: np.ndarray
    exit_path: np.ndarray
    exit_pos: np.ndarray
    exit_relay: np.ndarray
    cross_h: np.ndarray  # H-path cell position where the route turns
    cross_v: np.ndarray  # V-path cell position where the route turns
    highway_hops: np.ndarray
    threshold_miss: np.ndarray
    unroutable_reason: dict = field(default_factory=dict)

    @property
    def D(self) -> np.ndarray:
        return np.where(self.routable, self.highway_hops + 2, -1)

    @property
    def unroutable_fraction(self) -> float:
        return float(1.0 - self.routable.mean()) if len(self.routable) else 0.0


@dataclass
class RoutePlan:
    source: int
    destination: int
    entry_relay: int
    exit_relay: int
    cells: list  # highway cells visited in order
    relays: list  # node sequence source, relays..., destination
    hop_lengths: list
    D: int


def _band_of(coord: np.ndarray, lattice: LatticeSystem, system: str) -> np.ndarray:
    """Rectangle index (within a system) that a coordinate falls in."""
    rects = [r for r in lattice.rectangles if r.system == system]
    if not rects:
        return np.full(len(coord), -1)
    lo = np.array([r.rows[0] for r in rects])
    hi = np.array([r.rows[1] for r in rects])
    row = np.clip(np.rint(coord / lattice.side_length_sprime), lo[0], hi[-1] - 1)
    return np.searchsorted(hi, row, side="right")


def round_robin(order_key: np.ndarray, n_paths: int) -> np.ndarray:
    """Path slot for each member: rank in order_key modulo n_paths."""
    rank = np.empty(len(order_key), dtype=np.int64)
    rank[np.argsort(order_key, kind="stable")] = np.arange(len(order_key))
    return rank % n_paths


def _attach(
    lattice: LatticeSystem,
    nodes: np.ndarray,
    system: str,
    gains: Optional[PairGains],
    g_tau: Optional[float],
):
    """Attach each node to a path of its rectangle in `system`.

    Returns (path, pos, relay, miss) arrays; path == -1 when unroutable.
    """
    pos = lattice.positions
    m = len(nodes)
    path = np.full(m, -1, dtype=np.int64)
    ppos = np.full(m, -1, dtype=np.int64)
    relay = np.full(m, -1, dtype=np.int64)
    miss = np.zeros(m, dtype=bool)
    if m == 0:
        return path, ppos, relay, miss
    cross_coord = pos[nodes, 1] if system == "h" else pos[nodes, 0]
    band = _band_of(cross_coord, lattice, system)
    rects = [r for r in lattice.rectangles if r.system == system]
    # cell -> (path, position) for this system
    cell_path = {}
    for r in rects:
        for p in r.paths:
            for q, c in enumerate(lattice.highways[p].cells.tolist()):
                cell_path[c] = (p, q)
    fading = gains is not None and gains.model.fading
    node_cell = lattice.node_cell[nodes]
    for ri, r in enumerate(rects):
        members = np.nonzero(band == ri)[0]
        if members.size == 0 or not r.paths:
            continue
        trees = [cKDTree(pos[lattice.highways[p].relays]) for p in r.paths]
        if fading:
            cand_pos = np.empty((members.size, len(r.paths)), dtype=np.int64)
            for t, tree in enumerate(trees):
                cand_pos[:, t] = tree.query(pos[nodes[members]])[1]
            cand_relay = np.stack(
                [lattice.highways[p].relays[cand_pos[:, t]] for t, p in enumerate(r.paths)], axis=1
            )
            g = gains(nodes[members][:, None], cand_relay)
            best = np.argmax(g, axis=1)
            sel = np.arange(members.size)
            path[members] = np.asarray(r.paths)[best]
            ppos[members] = cand_pos[sel, best]
            relay[members] = cand_relay[sel, best]
            if g_tau is not None:
                miss[members] = g[sel, best] < g_tau
            continue
        own = np.array([cell_path.get(int(c), (-1, -1)) for c in node_cell[members]])
        on_hw = np.isin(own[:, 0], r.paths)
        if on_hw.any():
            idx = members[on_hw]
            path[idx] = own[on_hw, 0]
            ppos[idx] = own[on_hw, 1]
        rest = members[~on_hw]
        if rest.size:
            key = cross_coord[rest] + 1e-12 * nodes[rest] / max(1, len(pos))
            slot = round_robin(key, len(r.paths))
            for t, p in enumerate(r.paths):
                sel = rest[slot == t]
                if sel.size:
                    path[sel] = p
                    ppos[sel] = trees[t].query(pos[nodes[sel]])[1]
        got = members[path[members] >= 0]
        for p in np.unique(path[got]):
            sel = got[path[got] == p]
            relay[sel] = lattice.highways[p].relays[ppos[sel]]
    return path, ppos, relay, miss


def _crossings(lattice: LatticeSystem):
    """All (h_path, v_path, h_vertex_pos, v_vertex_pos) with a shared vertex."""
    hv, vv = [], []
    for p, hw in enumerate(lattice.highways):
        tgt = hv if hw.system == "h" else vv
        tgt.append(np.stack([hw.verts, np.full(len(hw.verts), p), np.arange(len(hw.verts))], axis=1))
    if not hv or not vv:
        return np.zeros((0, 4), dtype=np.int64)
    hv = np.concatenate(hv)
    vv = np.concatenate(vv)
    vv = vv[np.argsort(vv[:, 0], kind="stable")]
    lo = np.searchsorted(vv[:, 0], hv[:, 0], side="left")
    hi = np.searchsorted(vv[:, 0], hv[:, 0], side="right")
    cnt = hi - lo
    rep = np.repeat(np.arange(len(hv)), cnt)
    offs = np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    vrow = vv[np.repeat(lo, cnt) + offs]
    hrow = hv[rep]
    return np.stack([hrow[:, 1], vrow[:, 1], hrow[:, 2], vrow[:, 2]], axis=1)


def _turn_cost(x, t, y, w, hcells_at, vcells_at):
    """Highway hops for entering the H path at cell x, turning at H vertex t /
    V vertex w, leaving the V path at cell y."""
    hc_pos = np.where(x <= t - 1, t - 1, t)
    hH = np.abs(x - hc_pos)
    vc_pos = np.where(y <= w - 1, w - 1, w)
    hV = np.abs(y - vc_pos)
    trans = (hcells_at(hc_pos) != vcells_at(vc_pos)).astype(np.int64)
    return hH + trans + hV, hc_pos, vc_pos


def plan_routes(
    instance: NetworkInstance,
    lattice: LatticeSystem,
    gains: Optional[PairGains] = None,
    g_tau: Optional[float] = None,
) -> RouteTable:
    K = instance.num_nodes
    src = np.arange(K)
    dst = np.asarray(instance.matching, dtype=np.int64)
    ep, epos, erel, miss_e = _attach(lattice, src, "h", gains, g_tau)
    xp, xpos, xrel, miss_x = _attach(lattice, dst, "v", gains, g_tau)
    local = lattice.node_cell[src] == lattice.node_cell[dst] if K else np.zeros(0, bool)
    routable = (ep >= 0) & (xp >= 0)
    hops = np.zeros(K, dtype=np.int64)
    ch = np.full(K, -1, dtype=np.int64)
    cv = np.full(K, -1, dtype=np.int64)

    cand = _crossings(lattice)
    npaths = len(lattice.highways)
    need = np.nonzero(routable & ~local)[0]
    if need.size:
        key_r = ep[need] * npaths + xp[need]
        key_c = cand[:, 0] * npaths + cand[:, 1]
        order = np.argsort(key_c, kind="stable")
        cand = cand[order]
        key_c = key_c[order]
        lo = np.searchsorted(key_c, key_r, side="left")
        hi = np.searchsorted(key_c, key_r, side="right")
        cnt = hi - lo
        no_cross = cnt == 0
        rep = np.repeat(np.arange(need.size), cnt)
        offs = np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        c = cand[np.repeat(lo, cnt) + offs]
        r = need[rep]
        # concatenated path cells for vectorised lookups
        starts = np.cumsum([0] + [len(h.cells) for h in lattice.highways])
        allcells = np.concatenate([h.cells for h in lattice.highways]) if npaths else np.zeros(0, np.int64)
        hcells = lambda q: allcells[starts[ep[r]] + q]  # noqa: E731
        vcells = lambda q: allcells[starts[xp[r]] + q]  # noqa: E731
        cost, hcp, vcp = _turn_cost(epos[r], c[:, 2], xpos[r], c[:, 3], hcells, vcells)
        # minimum over candidates per route
        o = np.lexsort((cost, rep))
        first = np.ones(len(o), dtype=bool)
        first[1:] = rep[o][1:] != rep[o][:-1]
        best = o[first]
        hops[need[rep[best]]] = cost[best]
        ch[need[rep[best]]] = hcp[best]
        cv[need[rep[best]]] = vcp[best]
        routable[need[no_cross]] = False
    # local pairs: drain to and deliver from the shared cell's relay
    loc = np.nonzero(local)[0]
    if loc.size:
        r_loc = lattice.relay.ravel()[lattice.node_cell[loc]]
        erel[loc] = r_loc
        xrel[loc] = r_loc
        routable[loc] = True
        hops[loc] = 0
    reasons = {
        "no_entry_path": int(np.sum((ep < 0) & ~local)),
        "no_exit_path": int(np.sum((xp < 0) & ~local)),
        "no_crossing": int(np.sum(~routable & (ep >= 0) & (xp >= 0) & ~local)),
    }
    return RouteTable(
        dest=dst,
        routable=routable,
        local=local,
        entry_path=ep,
        entry_pos=epos,
        entry_relay=erel,
        exit_path=xp,
        exit_pos=xpos,
        exit_relay=xrel,
        cross_h=ch,
        cross_v=cv,
        highway_hops=hops,
        threshold_miss=(miss_e | miss_x) & routable,
        unroutable_reason=reasons,
    )


def assign_entry_exit(instance: NetworkInstance, lattice: LatticeSystem, pair, routes: Optional[RouteTable] = None):
    """(entry relay, exit relay) for the pair (source, destination)."""
    routes = plan_routes(instance, lattice) if routes is None else routes
    s = int(pair[0])
    if not routes.routable[s]:
        raise UnroutableError(f"source {s} cannot reach a highway: {routes.unroutable_reason}")
    return int(routes.entry_relay[s]), int(routes.exit_relay[s])


def assign_entry_fading(
    instance: NetworkInstance,
    lattice: LatticeSystem,
    gains: PairGains,
    pair,
    g_tau: float,
    routes: Optional[RouteTable] = None,
):
    """Best-gain entry relay among the nearest relay of each path in the
    source's rectangle; returns (relay, met_threshold)."""
    s = int(pair[0])
    path, _, relay, miss = _attach(lattice, np.array([s]), "h", gains, g_tau)
    if path[0] < 0:
        raise UnroutableError(f"source {s} has no horizontal path in its rectangle")
    return int(relay[0]), not bool(miss[0])


def _segment(cells: np.ndarray, a: int, b: int) -> np.ndarray:
    return cells[a : b + 1] if b >= a else cells[b : a + 1][::-1]


def route(instance: NetworkInstance, lattice: LatticeSystem, pair, routes: Optional[RouteTable] = None) -> RoutePlan:
    """Expand one source's route into its full hop sequence."""
    routes = plan_routes(instance, lattice) if routes is None else routes
    s = int(pair[0])
    d = int(routes.dest[s])
    if len(pair) > 1 and int(pair[1]) != d:
        raise ValueError("pair does not match the instance matching")
    if not routes.routable[s]:
        raise UnroutableError(f"pair ({s}, {d}) is unroutable")
    pos = instance.nodes
    if routes.local[s]:
        r = int(routes.entry_relay[s])
        cells = [int(lattice.node_cell[s])]
    else:
        hw_h = lattice.highways[routes.entry_path[s]]
        hw_v = lattice.highways[routes.exit_path[s]]
        hseg = _segment(hw_h.cells, int(routes.entry_pos[s]), int(routes.cross_h[s]))
        vseg = _segment(hw_v.cells, int(routes.cross_v[s]), int(routes.exit_pos[s]))
        cells = list(map(int, hseg))
        for c in map(int, vseg):
            if c != cells[-1]:
                cells.append(c)
    relays_path = [int(lattice.relay.ravel()[c]) for c in cells]
    seq = [s] + relays_path + [d]
    dists = [float(np.linalg.norm(pos[a] - pos[b])) for a, b in zip(seq[:-1], seq[1:])]
    return RoutePlan(
        source=s,
        destination=d,
        entry_relay=int(routes.entry_relay[s]),
        exit_relay=int(routes.exit_relay[s]),
        cells=cells,
        relays=seq,
        hop_lengths=dists,
        D=len(cells) - 1 + 2,
    )


# --------------------------------------------------------------------------
# phase measurements

@dataclass
class PhaseMeasurement:
    phase: str
    rates: np.ndarray  # per transmission (draining/delivering) or per directed hop
    rx_interference: np.ndarray
    sensing_interference: np.ndarray  # at each transmitter
    sensing_distances: np.ndarray
    hop_lengths: np.ndarray
    M: int
    rounds: int
    tx_per_slot_max: int
    schedule: Optional[SchedulePlan] = None
    extra: dict = field(default_factory=dict)


def _edge_phase(
    phase: str,
    instance: NetworkInstance,
    lattice: LatticeSystem,
    tx: np.ndarray,
    rx: np.ndarray,
    slot_node: np.ndarray,
    M: int,
    channel: ChannelModel,
    P: float,
    gains: Optional[PairGains],
    near: int,
) -> PhaseMeasurement:
    """One-hop phase: transmission i goes tx[i] -> rx[i] in the slot of the
    cell holding slot_node[i]; sub-round = rank of slot_node[i] in its cell."""
    pos = instance.nodes
    plan = build_schedule(lattice, M)
    cell = lattice.node_cell[slot_node]
    k, lo = np.divmod(cell, lattice.nl)
    order = np.argsort(cell, kind="stable")
    srt = cell[order]
    first = np.searchsorted(srt, srt, side="left")
    rank = np.empty(len(cell), dtype=np.int64)
    rank[order] = np.arange(len(cell)) - first
    T = int(rank.max()) + 1 if len(rank) else 1
    grp = plan.cell_group[k, lo] * T + rank
    u, v = plan.cell_u[k, lo], plan.cell_v[k, lo]
    grid = np.full((M * M * T, plan.U, plan.V), -1, dtype=np.int64)
    grid[grp, u, v] = tx
    g = gains if (gains is not None and gains.model.fading) else None
    I = lattice_interference(
        grid, pos,
        np.concatenate([grp, grp]), np.concatenate([u, u]), np.concatenate([v, v]),
        pos[np.concatenate([rx, tx])], np.concatenate([rx, tx]), np.concatenate([tx, tx]),
        pitch=plan.pitch, P=P, alpha=channel.alpha_c, near=near, gains=g,
    )
    I_rx, I_tx = I[: len(tx)], I[len(tx) :]
    d = np.linalg.norm(pos[tx] - pos[rx], axis=1)
    gain = g(tx, rx) if g is not None else 1.0
    rates = sinr_rate(P, gain, np.maximum(d, 1.0), I_rx, channel.alpha_c, channel.N0)
    per_slot = np.bincount(grp, minlength=M * M * T)
    plan.rounds = T
    plan.transmissions = len(tx)
    return PhaseMeasurement(
        phase=phase,
        rates=rates,
        rx_interference=I_rx,
        sensing_interference=I_tx,
        sensing_distances=sensing_distance(P, I_tx, channel) if len(tx) else np.zeros(0),
        hop_lengths=d,
        M=M,
        rounds=T,
        tx_per_slot_max=int(per_slot.max()) if len(per_slot) else 0,
        schedule=plan,
    )


def draining_phase(instance, lattice, routes: RouteTable, channel: ChannelModel, P: float, M: int,
                   gains: Optional[PairGains] = None, near: int = 1) -> PhaseMeasurement:
    src = np.nonzero(routes.routable)[0]
    return _edge_phase("draining", instance, lattice, src, routes.entry_relay[src], src, M, channel, P, gains, near)


def delivering_phase(instance, lattice, routes: RouteTable, channel: ChannelModel, P: float, M: int,
                     gains: Optional[PairGains] = None, near: int = 1) -> PhaseMeasurement:
    src = np.nonzero(routes.routable)[0]
    dst = routes.dest[src]
    return _edge_phase("delivering", instance, lattice, routes.exit_relay[src], dst, dst, M, channel, P, gains, near)


def highway_phase(
    instance: NetworkInstance,
    lattice: LatticeSystem,
    schedule: SchedulePlan,
    channel: ChannelModel,
    P: float,
    gains: Optional[PairGains] = None,
    link_interference=None,
    near: int = 2,
) -> PhaseMeasurement:
    """Rates on every directed hop of every extracted path under full load."""
    if link_interference is None:
        link_interference = highway_link_interference(lattice, schedule, gains, P, alpha=channel.alpha_c, near=near)
    I_link, I_sense = link_interference
    pos = instance.nodes
    a_cells, b_cells = [], []
    for hw in lattice.highways:
        if len(hw.cells) > 1:
            a_cells.append(hw.cells[:-1])
            b_cells.append(hw.cells[1:])
    a = np.concatenate(a_cells + b_cells) if a_cells else np.zeros(0, np.int64)
    b = np.concatenate(b_cells + a_cells) if a_cells else np.zeros(0, np.int64)
    relay = lattice.relay.ravel()
    ta, rb = relay[a], relay[b]
    slot = neighbour_slot(lattice, a, b)
    if np.any(slot < 0):
        raise RuntimeError("highway path contains non-adjacent cells")
    ka, la = np.divmod(a, lattice.nl)
    I_rx = I_link[ka, la, slot]
    d = np.linalg.norm(pos[ta] - pos[rb], axis=1)
    g = gains(ta, rb) if (gains is not None and gains.model.fading) else 1.0
    rates = sinr_rate(P, g, np.maximum(d, 1.0), I_rx, channel.alpha_c, channel.N0)
    act = schedule.active
    Is = I_sense[act]
    per_slot = schedule.active_per_slot()
    return PhaseMeasurement(
        phase="highway",
        rates=rates,
        rx_interference=I_rx,
        sensing_interference=Is,
        sensing_distances=sensing_distance(P, Is, channel) if Is.size else np.zeros(0),
        hop_lengths=d,
        M=schedule.M,
        rounds=1,
        tx_per_slot_max=int(per_slot.max()) if per_slot.size else 0,
        schedule=schedule,
        extra={"all_link_interference": I_link[np.nonzero(neighbour_relays(lattice)[1] & act[..., None])]},
    )
