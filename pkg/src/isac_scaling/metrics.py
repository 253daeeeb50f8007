"""Per-phase throughput, sensing statistics, occupancy bounds and slope fits."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import stats

from .percolation import lattice_dimension


class MetricsError(ValueError):
    pass


PHASES = ("draining", "highway", "delivering")


def throughput_draining(rates, M_drain: int, occupancy_max: int) -> float:
    """min_k R_k / (M_drain^2 * max cell occupancy). Also used for delivering."""
    rates = np.asarray(rates, dtype=float)
    if rates.size == 0:
        raise MetricsError("no draining rates")
    return float(rates.min() / (M_drain**2 * occupancy_max))


def throughput_highway(rates, varsigma: float, f_value: float, M: int, D_measured: int,
                       alpha_c: float = 3.0, sub_slots: int = 1) -> float:
    """min-hop R / (varsigma^2 f^(2/alpha_c) M^2 D), one extra factor
    `sub_slots` when each slot is split among the six neighbours."""
    rates = np.asarray(rates, dtype=float)
    if rates.size == 0:
        raise MetricsError("no highway rates")
    denom = varsigma**2 * f_value ** (2.0 / alpha_c) * M**2 * D_measured * sub_slots
    return float(rates.min() / denom)


def network_sensing_distance(per_node_distances) -> tuple:
    d = np.asarray(per_node_distances, dtype=float)
    if d.size == 0:
        raise MetricsError("no active sensing nodes")
    return float(d.min()), float(np.percentile(d, 5)), float(np.median(d))


def sensing_frequency(schedule, phase: str = "highway") -> float:
    """Average over nodes of (slots in which the node transmits) / (slots)."""
    if schedule.n_nodes == 0:
        return 0.0
    return schedule.transmissions / (schedule.n_nodes * schedule.n_slots)


def lemma4_occupancy_bound(n, varsigma, f_exponent, alpha_c, delta) -> float:
    f = n**f_exponent
    xi = lattice_dimension(n, varsigma, f_exponent, alpha_c)
    if xi <= 1:
        raise MetricsError("lattice dimension must exceed 1")
    bound = varsigma * f ** (1.0 / alpha_c) * np.sqrt(n) * (delta * np.log(xi)) ** (-alpha_c - 2.0)
    x_prime = bound / (varsigma**2 * f ** (2.0 / alpha_c))
    if x_prime <= 1:
        raise MetricsError(f"delta={delta} too large: x' = {x_prime:.3g} <= 1")
    return float(bound)


def fit_scaling_slope(points: Iterable[Sequence[float]]) -> tuple:
    """OLS slope of log(metric) on log(n); returns (slope, stderr)."""
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or len(pts) < 3:
        raise MetricsError("need at least 3 (n, metric) points")
    if np.any(pts[:, 1] <= 0) or np.any(pts[:, 0] <= 0):
        raise MetricsError("metrics must be positive for a log-log fit")
    x, y = np.log(pts[:, 0]), np.log(pts[:, 1])
    if np.ptp(x) == 0:
        raise MetricsError("need at least two distinct sizes")
    res = stats.linregress(x, y)
    return float(res.slope), float(res.stderr)


# --------------------------------------------------------------------------
# reports

@dataclass
class PhaseStats:
    throughput_min: float
    throughput_median: float
    d_min: float
    d_p5: float
    d_median: float
    interference_max: float
    interference_mean: float
    sensing_frequency: float
    rate_min: float
    hop_max: float
    tx_per_slot_max: int


def phase_stats(meas, throughput_per: np.ndarray, freq: float) -> PhaseStats:
    dmin, dp5, dmed = network_sensing_distance(meas.sensing_distances)
    I = meas.rx_interference
    return PhaseStats(
        throughput_min=float(throughput_per.min()),
        throughput_median=float(np.median(throughput_per)),
        d_min=dmin,
        d_p5=dp5,
        d_median=dmed,
        interference_max=float(I.max()) if I.size else 0.0,
        interference_mean=float(I.mean()) if I.size else 0.0,
        sensing_frequency=float(freq),
        rate_min=float(meas.rates.min()),
        hop_max=float(meas.hop_lengths.max()) if meas.hop_lengths.size else 0.0,
        tx_per_slot_max=int(meas.tx_per_slot_max),
    )


@dataclass
class InstanceResult:
    n: float
    gamma: float
    replicate: int
    seed: int
    fading: str
    num_nodes: int
    xi: float
    M: int
    M_drain: int
    rect_height: int
    phases: dict  # phase -> PhaseStats
    bottleneck: float
    d_network: float
    D_max: int
    unroutable_fraction: float
    threshold_miss_fraction: float
    paths_h: int
    paths_v: int
    crossings_full: list
    prop1_count: Optional[float]
    layer_bound: float
    layer_violations: int
    highway_receivers: int
    occupancy_max: int
    lemma4_bound: Optional[float]
    envelope: Optional[float] = None
    envelope_fraction: Optional[float] = None
    converse_ok: Optional[bool] = None
    gate_stats: dict = field(default_factory=dict)

    @property
    def prop1_fraction(self) -> Optional[float]:
        if self.prop1_count is None or not self.crossings_full:
            return None
        return float(np.mean(np.asarray(self.crossings_full) >= self.prop1_count))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["prop1_fraction"] = self.prop1_fraction
        return d


CSV_FIELDS = (
    "n", "gamma", "phase", "replicate", "fading", "seed", "num_nodes",
    "throughput_min", "throughput_median", "d_min", "d_p5", "d_median",
    "interference_max", "interference_mean", "sensing_frequency", "rate_min",
    "hop_max", "tx_per_slot_max", "D_max", "unroutable_fraction", "paths_h", "paths_v",
)


@dataclass
class ScalingReport:
    instances: list  # InstanceResult, sorted
    config: dict = field(default_factory=dict)
    slopes: dict = field(default_factory=dict)

    def __post_init__(self):
        self.instances = sorted(self.instances, key=lambda r: (r.fading, r.gamma, r.n, r.replicate))

    def select(self, gamma=None, fading=None) -> list:
        return [
            r for r in self.instances
            if (gamma is None or abs(r.gamma - gamma) < 1e-12) and (fading is None or r.fading == fading)
        ]

    def sizes(self, gamma, fading=None) -> list:
        return sorted({r.n for r in self.select(gamma, fading)})

    def median_by_size(self, getter, gamma, fading=None):
        """[(n, median over replicates of getter(result))] for one gamma."""
        out = []
        for n in self.sizes(gamma, fading):
            vals = [getter(r) for r in self.select(gamma, fading) if r.n == n]
            vals = [v for v in vals if v is not None and np.isfinite(v)]
            if vals:
                out.append((n, float(np.median(vals))))
        return out

    def slope(self, getter, gamma, fading=None) -> tuple:
        return fit_scaling_slope(self.median_by_size(getter, gamma, fading))

    def compute_slopes(self) -> dict:
        table = {}
        metrics = {
            "highway_throughput": lambda r: r.phases["highway"].throughput_min,
            "draining_throughput": lambda r: r.phases["draining"].throughput_min,
            "delivering_throughput": lambda r: r.phases["delivering"].throughput_min,
            "bottleneck_throughput": lambda r: r.bottleneck,
            "min_sensing_distance": lambda r: r.d_network,
            "highway_sensing_frequency": lambda r: r.phases["highway"].sensing_frequency,
        }
        for fading in sorted({r.fading for r in self.instances}):
            for gamma in sorted({r.gamma for r in self.select(fading=fading)}):
                if len(self.sizes(gamma, fading)) < 3:
                    continue
                key = f"{fading}/gamma={gamma:g}"
                table[key] = {}
                for name, get in metrics.items():
                    try:
                        s, e = self.slope(get, gamma, fading)
                        table[key][name] = {"slope": s, "stderr": e}
                    except MetricsError:
                        pass
        self.slopes = table
        return table

    def to_json(self) -> str:
        return json.dumps(
            {
                "config": self.config,
                "slopes": self.slopes or self.compute_slopes(),
                "instances": [r.to_dict() for r in self.instances],
            },
            indent=1,
            sort_keys=True,
            default=_jsonable,
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in self.instances:
            for phase in PHASES:
                st = asdict(r.phases[phase])
                row = {k: st.get(k) for k in CSV_FIELDS if k in st}
                row.update(
                    n=r.n, gamma=r.gamma, phase=phase, replicate=r.replicate, fading=r.fading,
                    seed=r.seed, num_nodes=r.num_nodes, D_max=r.D_max,
                    unroutable_fraction=r.unroutable_fraction, paths_h=r.paths_h, paths_v=r.paths_v,
                )
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x))
