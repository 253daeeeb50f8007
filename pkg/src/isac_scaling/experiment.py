"""Instance pipeline and sweeps: generate, partition, gate, extract highways,
route, measure the three phases, summarise."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import Optional

import numpy as np

from . import analytic
from .channel import (
    PairGains,
    interference_layer_bound,
    prop2_fading_interference_bound,
    zeta_for_exponent,
)
from .config import ExperimentConfig
from .metrics import (
    InstanceResult,
    MetricsError,
    ScalingReport,
    lemma4_occupancy_bound,
    phase_stats,
    sensing_frequency,
)
from .netgen import generate_network
from .percolation import (
    FadingGateParams,
    eta_max,
    extract_highways,
    mark_open_closed,
    mark_open_closed_fading,
    partition,
    prop1_path_count_bound,
)
from .protocol import (
    build_schedule,
    delivering_phase,
    draining_phase,
    draining_slot_parameter,
    highway_link_interference,
    highway_phase,
    plan_routes,
)

log = logging.getLogger(__name__)


def instance_seed(base: int, n: float, gamma: float, replicate: int) -> int:
    ss = np.random.SeedSequence([int(base), int(replicate), int(round(n)), int(round(gamma * 1e6))])
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def gate_for(cfg: ExperimentConfig, gamma: float = 0.0) -> FadingGateParams:
    if cfg.I_tau is not None:
        I_tau = cfg.I_tau
    else:
        I_tau = cfg.I_tau_factor * interference_layer_bound(cfg.varsigma_for(gamma), cfg.M, cfg.alpha_c, 1.0)
    return FadingGateParams(cfg.g_tau, I_tau)


def eta_for(cfg: ExperimentConfig, gamma: float) -> Optional[float]:
    """Configured eta, else the admissible maximum at the smallest swept size
    (which stays admissible at larger sizes since the maximum grows with n)."""
    if cfg.eta is not None:
        return cfg.eta
    top = eta_max(min(cfg.n), cfg.varsigma_for(gamma), gamma, cfg.alpha_c, cfg.kappa)
    return top if top > 0 else None


def zeta_for(cfg: ExperimentConfig, gamma: float = 0.0) -> float:
    if cfg.zeta is not None:
        return cfg.zeta
    q1 = cfg.fading_model().q1 or 1.0
    return zeta_for_exponent(cfg.zeta_target, q1, cfg.varsigma_for(gamma), cfg.M, cfg.alpha_c)


def build_instance(cfg: ExperimentConfig, n: float, gamma: float, replicate: int):
    """Everything up to routing; returns a dict of the intermediate objects."""
    seed = instance_seed(cfg.seed, n, gamma, replicate)
    chan = cfg.channel()
    fm = chan.fading
    inst = generate_network(n, seed)
    lat = partition(inst, cfg.varsigma_for(gamma), gamma, cfg.alpha_c)
    if lat.pure_tdm:
        raise MetricsError("lattice degenerates to a single cell (pure TDM regime)")
    P = n**gamma
    sched = build_schedule(lat, cfg.M, 6 if fm.fading else 1)
    gains = PairGains(fm, seed ^ 0x5DEECE66D) if fm.fading else None
    link_I = highway_link_interference(lat, sched, gains, P, alpha=cfg.alpha_c, near=cfg.near_field)
    if fm.fading:
        lat = mark_open_closed_fading(lat, gains, gate_for(cfg, gamma), sched, link_interference=link_I[0])
    else:
        lat = mark_open_closed(lat)
    lat = extract_highways(lat, cfg.kappa)
    routes = plan_routes(inst, lat, gains, cfg.g_tau if fm.fading else None)
    return dict(seed=seed, channel=chan, instance=inst, lattice=lat, P=P, schedule=sched,
                gains=gains, link_interference=link_I, routes=routes)


def run_instance(cfg: ExperimentConfig, n: float, gamma: float, replicate: int) -> InstanceResult:
    b = build_instance(cfg, n, gamma, replicate)
    inst, lat, routes, chan, P, sched, gains = (
        b["instance"], b["lattice"], b["routes"], b["channel"], b["P"], b["schedule"], b["gains"]
    )
    fading = chan.fading.fading
    Md = draining_slot_parameter(cfg.kappa, lat.xi)
    hw = highway_phase(inst, lat, sched, chan, P, gains, link_interference=b["link_interference"])
    dr = draining_phase(inst, lat, routes, chan, P, Md, gains)
    de = delivering_phase(inst, lat, routes, chan, P, Md, gains)

    D = routes.D[routes.routable]
    D_max = int(D.max()) if D.size else 0
    occ_max = int(lat.cell_count.max())
    s2M2 = lat.side_length_s**2 * cfg.M**2 * sched.sub_slots
    hw_per = hw.rates / (s2M2 * max(D_max, 1))
    dr_per = dr.rates / (Md**2 * occ_max)
    de_per = de.rates / (Md**2 * occ_max)
    phases = {
        "draining": phase_stats(dr, dr_per, sensing_frequency(dr.schedule)),
        "highway": phase_stats(hw, hw_per, sensing_frequency(sched)),
        "delivering": phase_stats(de, de_per, sensing_frequency(de.schedule)),
    }
    bottleneck = min(p.throughput_min for p in phases.values())

    bound = interference_layer_bound(lat.varsigma, cfg.M, cfg.alpha_c, P / lat.f)
    link_all = hw.extra["all_link_interference"]
    eta = eta_for(cfg, gamma)
    prop1 = None
    if eta is not None:
        prop1 = prop1_path_count_bound(n, lat.varsigma, gamma, cfg.alpha_c, cfg.kappa, eta, check_eta=False)
    try:
        l4 = lemma4_occupancy_bound(n, lat.varsigma, gamma, cfg.alpha_c, cfg.delta)
    except MetricsError:
        l4 = None

    env = env_frac = None
    if fading:
        env = prop2_fading_interference_bound(n, gamma, cfg.alpha_c, zeta_for(cfg, gamma))
        env_frac = float(np.mean(link_all <= env)) if link_all.size else 1.0

    Delta = analytic.guard_factor(cfg.beta_c, cfg.alpha_c)
    conv_ok = all(
        m.tx_per_slot_max <= analytic.converse_max_transmissions(n, Delta, max(1.0, m.hop_lengths.max()))
        for m in (hw, dr, de)
        if m.hop_lengths.size
    )
    return InstanceResult(
        n=n,
        gamma=gamma,
        replicate=replicate,
        seed=b["seed"],
        fading=chan.fading.law,
        num_nodes=inst.num_nodes,
        xi=lat.xi,
        M=cfg.M,
        M_drain=Md,
        rect_height=lat.rect_height,
        phases=phases,
        bottleneck=bottleneck,
        d_network=min(p.d_min for p in phases.values()),
        D_max=D_max,
        unroutable_fraction=routes.unroutable_fraction,
        threshold_miss_fraction=float(routes.threshold_miss.mean()) if len(routes.threshold_miss) else 0.0,
        paths_h=sum(1 for h in lat.highways if h.system == "h"),
        paths_v=sum(1 for h in lat.highways if h.system == "v"),
        crossings_full=[int(c) for c in lat.crossing_counts("h")] + [int(c) for c in lat.crossing_counts("v")],
        prop1_count=prop1,
        layer_bound=bound,
        layer_violations=int(np.sum(link_all > bound)),
        highway_receivers=int(link_all.size),
        occupancy_max=occ_max,
        lemma4_bound=l4,
        envelope=env,
        envelope_fraction=env_frac,
        converse_ok=bool(conv_ok),
        gate_stats=dict(lat.gate_stats),
    )


def _task(args):
    cfg, n, gamma, rep = args
    return run_instance(cfg, n, gamma, rep)


def run_sweep(cfg: ExperimentConfig, progress=None) -> ScalingReport:
    """All (n, gamma, replicate) instances; results are order-independent."""
    cfg.validate()
    tasks = [(cfg, n, g, r) for g in cfg.gamma for n in cfg.n for r in range(cfg.replicates)]
    results = []
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            for res in ex.map(_task, tasks, chunksize=1):
                results.append(res)
                if progress:
                    progress(res)
    else:
        for t in tasks:
            res = _task(t)
            results.append(res)
            if progress:
                progress(res)
    report = ScalingReport(results, config=cfg.to_dict())
    report.compute_slopes()
    return report


def with_fading(cfg: ExperimentConfig, law: str = "exponential") -> ExperimentConfig:
    return replace(cfg, fading=law)
