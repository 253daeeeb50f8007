"""Invariant suite behind the `verify` subcommand.

Each check returns a `CheckResult`; hard checks decide the exit status, soft
ones are reported (they are high-probability statements at desk scale).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from . import analytic
from .channel import interference_layer_bound, layer_series
from .config import ExperimentConfig
from .experiment import build_instance, run_instance
from .percolation import max_flow_crossings
from .protocol import validate_schedule


@dataclass
class CheckResult:
    key: str
    passed: Optional[bool]  # None: not applicable
    hard: bool = True
    detail: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        return "skip" if self.passed is None else ("pass" if self.passed else "fail")


@dataclass
class VerifyLedger:
    checks: list

    @property
    def ok(self) -> bool:
        return all(c.passed is not False for c in self.checks if c.hard)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "checks": {c.key: {"status": c.status, "hard": c.hard, "detail": c.detail} for c in self.checks},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True, default=float)


def _sim_cases(cfg: ExperimentConfig):
    n = min(cfg.n)
    return [(n, g) for g in cfg.gamma]


def check_interference_dominance(cfg, results) -> CheckResult:
    viol = sum(r.layer_violations for r in results)
    rx = sum(r.highway_receivers for r in results)
    worst = max((r.phases["highway"].interference_max / r.layer_bound for r in results), default=0.0)
    return CheckResult("interference_layer_dominance", viol == 0,
                       detail={"violations": viol, "receivers": rx, "max_ratio_to_bound": worst})


def check_layer_series(cfg) -> CheckResult:
    s = layer_series(cfg.M, cfg.alpha_c)
    return CheckResult("interference_layer_series_finite", bool(np.isfinite(s) and s > 0),
                       detail={"series": s, "bound": interference_layer_bound(cfg.varsigma, cfg.M, cfg.alpha_c)})


def check_percolation(cfg, results) -> list:
    out = []
    rng = np.random.default_rng(cfg.seed)
    agree = True
    for _ in range(20):
        along = rng.random((12, 8)) < 0.6
        cross = rng.random((13, 7)) < 0.6
        count, paths = max_flow_crossings(along, cross)
        used = set()
        for p in paths:
            for a, b in zip(p[:-1], p[1:]):
                e = (min(a, b), max(a, b))
                agree &= e not in used
                used.add(e)
        agree &= count == len(paths) and count <= 8
    out.append(CheckResult("percolation_crossings_edge_disjoint", bool(agree)))
    fr = [r.prop1_fraction for r in results if r.prop1_fraction is not None]
    out.append(CheckResult(
        "percolation_path_count_bound", (min(fr) >= 0.5) if fr else None, hard=False,
        detail={"fractions": fr},
    ))
    return out


def check_occupancy(cfg, results) -> CheckResult:
    ok, rows = True, []
    for r in results:
        if r.lemma4_bound is None:
            continue
        rows.append((r.occupancy_max, r.lemma4_bound))
        ok &= r.occupancy_max < r.lemma4_bound
    return CheckResult("cell_occupancy_bound", bool(ok) if rows else None, hard=False, detail={"max_vs_bound": rows})


def check_schedule(cfg, inject_M: Optional[int] = None) -> CheckResult:
    b = build_instance(replace(cfg, fading="none"), min(cfg.n), cfg.gamma[0], 0)
    plan = b["schedule"]
    if inject_M is not None:
        lat = b["lattice"]
        kk, lo = np.meshgrid(np.arange(lat.nk), np.arange(lat.nl), indexing="ij")
        plan = replace(plan, M=inject_M, cell_group=(kk % inject_M) * inject_M + (lo % inject_M))
    bad = validate_schedule(plan, b["lattice"])
    # cadence: every active relay owns one of M^2 slots in each frame
    cadence = bool(np.all(np.isin(plan.cell_group[plan.active], np.arange(plan.M**2))))
    return CheckResult("schedule_validity", not bad and cadence, detail={"violations": bad})


def check_fading_envelope(cfg) -> CheckResult:
    fcfg = replace(cfg, fading="exponential" if cfg.fading == "none" else cfg.fading)
    g = max(cfg.gamma)
    r = run_instance(fcfg, min(cfg.n), g, 0)
    return CheckResult("fading_interference_envelope", r.envelope_fraction >= 0.95, hard=False,
                       detail={"fraction": r.envelope_fraction, "envelope": r.envelope})


def check_converse(cfg, results) -> CheckResult:
    return CheckResult("converse_transmission_count", all(r.converse_ok for r in results))


def check_exponents(cfg) -> list:
    ac, as_ = cfg.alpha_c, cfg.alpha_s
    acq = Fraction(ac).limit_denominator(10**6)
    ok_conv = True
    for i in range(0, 61):
        g = acq / 2 * Fraction(i, 60)
        prof = analytic.ScalingProfile(g, ac, as_)
        ok_conv &= analytic.theorem1_exponents(prof) == analytic.converse_exponents(g / acq, ac, as_)
    ok_tdm = True
    for i in range(1, 50):
        g = Fraction(i, 40)
        if g > acq / 2:
            break
        prof = analytic.ScalingProfile(g, ac, as_)
        lam, _ = analytic.theorem1_exponents(prof)
        t = analytic.tdm_exponents(prof).lam
        ok_tdm &= analytic.Order(lam) >= t and ((analytic.Order(lam) == t) == (g == acq / 2))
    ok_alt = True
    grid = [Fraction(i, 10) for i in range(10)]
    for a1 in [Fraction(i, 4) for i in range(1, 11)]:
        for a2 in grid:
            for a3 in grid:
                if not analytic.alternative_preconditions(a1, a2, a3, ac):
                    continue
                res = analytic.alternative_exponents(analytic.ScalingProfile(None, ac, as_, a1=a1, a2=a2, a3=a3))
                ok_alt &= analytic.theorem1_dominates(res.lam, res.d_exp, ac, as_)
    return [
        CheckResult("exponents_converse_match", bool(ok_conv)),
        CheckResult("exponents_tdm_dominated", bool(ok_tdm)),
        CheckResult("exponents_alternative_dominated", bool(ok_alt)),
    ]


def verify_suite(cfg: ExperimentConfig, inject_schedule_M: Optional[int] = None,
                 progress: Optional[Callable[[CheckResult], None]] = None) -> VerifyLedger:
    cfg.validate()
    base = replace(cfg, fading="none")
    results = [run_instance(base, n, g, 0) for n, g in _sim_cases(base)]
    checks = [
        check_layer_series(cfg),
        check_interference_dominance(cfg, results),
        *check_percolation(cfg, results),
        check_occupancy(cfg, results),
        check_schedule(cfg, inject_schedule_M),
        check_converse(cfg, results),
        check_fading_envelope(cfg),
        *check_exponents(cfg),
    ]
    if progress:
        for c in checks:
            progress(c)
    return VerifyLedger(checks)
