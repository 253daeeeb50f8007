"""Link-level physics: path loss, fading, SINR/rate, sensing range, and
interference evaluation (direct sums, lattice engine, analytic layer bound)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import signal, special, stats


class DomainError(ValueError):
    pass


class DivergentSeriesError(DomainError):
    pass


FADING_LAWS = ("none", "exponential", "nakagami", "rician")

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        x = x + _GOLDEN
        x = (x ^ (x >> _U64(30))) * _MIX1
        x = (x ^ (x >> _U64(27))) * _MIX2
    return x ^ (x >> _U64(31))


def pair_uniforms(seed: int, a, b, salt: int = 0) -> np.ndarray:
    """Deterministic U(0,1) per unordered pair {a, b}; symmetric by construction."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    lo = np.minimum(a, b).astype(_U64)
    hi = np.maximum(a, b).astype(_U64)
    base = _splitmix64(np.array([(int(seed) * 0x2545F4914F6CDD1D + salt) & (2**64 - 1)], dtype=_U64))
    with np.errstate(over="ignore"):
        h = _splitmix64(base ^ lo)
        h = _splitmix64(h + hi * _U64(0xD6E8FEB86659FD93))
    return ((h >> _U64(11)).astype(np.float64) + 0.5) * 2.0**-53


@dataclass(frozen=True)
class FadingModel:
    """Unit-mean power fading law with an exponential tail envelope
    P[g > x] <= q0 exp(-q1 x) for x >= g0. Missing tail parameters are filled in."""

    law: str = "none"
    m: float = 1.0  # nakagami shape
    K: float = 0.0  # rician factor
    q0: Optional[float] = None
    q1: Optional[float] = None
    g0: Optional[float] = None

    def __post_init__(self):
        if self.law not in FADING_LAWS:
            raise DomainError(f"unknown fading law {self.law!r}")
        if self.law == "nakagami" and self.m <= 0:
            raise DomainError("nakagami m must be positive")
        if self.law == "rician" and self.K < 0:
            raise DomainError("rician K must be nonnegative")
        if self.law == "none":
            return
        q0, q1, g0 = self._default_tail()
        if self.q1 is None:
            object.__setattr__(self, "q1", q1)
        if self.g0 is None:
            object.__setattr__(self, "g0", g0)
        if self.q0 is None:
            if self.law == "exponential" and self.q1 <= 1.0:
                q0 = 1.0
            else:
                xs = np.linspace(self.g0, self.g0 + 60.0 / self.q1, 4001)
                q0 = float(np.max(self.ccdf(xs) * np.exp(self.q1 * xs))) * (1 + 1e-9)
            object.__setattr__(self, "q0", q0)

    def _default_tail(self):
        if self.law == "exponential":
            return 1.0, 1.0, 0.0
        if self.law == "nakagami":
            return None, self.m / 2.0, 1.0
        return None, (self.K + 1.0) / 2.0, 1.0

    @property
    def fading(self) -> bool:
        return self.law != "none"

    def ccdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.law == "none":
            return (x < 1.0).astype(float)
        if self.law == "exponential":
            return np.exp(-np.maximum(x, 0.0))
        if self.law == "nakagami":
            return special.gammaincc(self.m, self.m * np.maximum(x, 0.0))
        return stats.ncx2.sf(2.0 * (self.K + 1.0) * np.maximum(x, 0.0), 2, 2.0 * self.K)

    def from_uniform(self, u, u2=None) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.law == "none":
            return np.ones_like(u)
        if self.law == "exponential":
            return -np.log(u)
        if self.law == "nakagami":
            return special.gammainccinv(self.m, u) / self.m
        # rician via Box-Muller on two uniforms
        r = np.sqrt(-2.0 * np.log(u))
        th = 2.0 * np.pi * np.asarray(u2, dtype=float)
        sig = np.sqrt(0.5 / (self.K + 1.0))
        los = np.sqrt(self.K / (self.K + 1.0))
        return (los + sig * r * np.cos(th)) ** 2 + (sig * r * np.sin(th)) ** 2

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        u = 1.0 - rng.random(size)
        u2 = rng.random(size) if self.law == "rician" else None
        return self.from_uniform(u, u2)


class PairGains:
    """Quasi-static gains keyed on the unordered node pair: a functional memo,
    so g(a, b) == g(b, a) and repeated lookups agree without storing a table."""

    def __init__(self, model: FadingModel, seed: int):
        self.model = model
        self.seed = int(seed)

    def __call__(self, a, b) -> np.ndarray:
        if not self.model.fading:
            return np.ones(np.broadcast(np.asarray(a), np.asarray(b)).shape)
        u = pair_uniforms(self.seed, a, b, 0)
        u2 = pair_uniforms(self.seed, a, b, 1) if self.model.law == "rician" else None
        return self.model.from_uniform(u, u2)


def sample_fading(model: FadingModel, seed: int, size=None) -> np.ndarray:
    """Independent draws from the fading law (reproducible per seed)."""
    if not model.fading:
        raise DomainError("sample_fading needs a fading law other than 'none'")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 77]))
    return model.sample(rng, size)


@dataclass(frozen=True)
class ChannelModel:
    alpha_c: float = 3.0
    alpha_s: float = 2.0
    N0: float = 1.0
    sigma0: float = 1.0
    beta_s: float = 0.1
    beta_c: float = 8.0
    fading: FadingModel = FadingModel()

    def __post_init__(self):
        if self.alpha_c <= 2:
            raise DomainError("alpha_c must exceed 2")
        if self.alpha_s <= 0:
            raise DomainError("alpha_s must be positive")
        for name in ("N0", "sigma0", "beta_s"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive")
        if self.beta_c <= 1:
            raise DomainError("beta_c must exceed 1")


@dataclass(frozen=True)
class LinkBudget:
    tx_power: float
    distance: float
    gain: float = 1.0

    def __post_init__(self):
        if self.distance < 1:
            raise DomainError(f"link distance {self.distance} < 1")


def path_loss_gain(d, alpha: float):
    d = np.asarray(d, dtype=float)
    if np.any(d < 1):
        raise DomainError("distance below 1 would amplify the signal")
    out = d ** (-alpha)
    return float(out) if out.ndim == 0 else out


def sinr_rate(P, gain, r, interference, alpha, N0):
    """Vectorised log2(1 + P g r^-alpha / (N0 + I)); r must already be >= 1."""
    return np.log2(1.0 + P * gain * np.asarray(r, dtype=float) ** (-alpha) / (N0 + interference))


def comm_rate(signal_: LinkBudget, interference: float, model: ChannelModel) -> float:
    s = signal_.tx_power * signal_.gain * path_loss_gain(signal_.distance, model.alpha_c)
    return float(np.log2(1.0 + s / (model.N0 + interference)))


def sensing_distance(P, interference, model: ChannelModel):
    """Largest echo range clearing beta_s; the echo path carries no fading."""
    P = np.asarray(P, dtype=float)
    if np.any(P <= 0):
        raise DomainError("power must be positive")
    snr = P * model.sigma0**2 / (model.N0 + np.asarray(interference, dtype=float))
    out = (snr / model.beta_s) ** (1.0 / model.alpha_s)
    return float(out) if out.ndim == 0 else out


def sensing_sinr_check(P: float, d: float, interference: float, model: ChannelModel) -> bool:
    if d < 1:
        raise DomainError("sensing distance below 1")
    # compare in the distance domain so the boundary case is exact
    return bool(d <= sensing_distance(P, interference, model) * (1 + 1e-12))


def aggregate_interference(receiver, active_set, model: ChannelModel, P: float, gains=None) -> float:
    """Direct sum of P g_i / d_i^alpha_c over the active transmitters."""
    pts = np.asarray(active_set, dtype=float).reshape(-1, 2)
    if pts.shape[0] == 0:
        return 0.0
    d = np.linalg.norm(pts - np.asarray(receiver, dtype=float), axis=1)
    g = np.ones(len(d)) if gains is None else np.asarray(gains, dtype=float)
    return float(np.sum(P * g * path_loss_gain(d, model.alpha_c)))


def layer_series(M: float, alpha: float) -> float:
    """sum_{l>=1} l / (l - 2/M)^alpha, in closed form through Hurwitz zeta."""
    if M <= 2:
        raise DivergentSeriesError("slot parameter M must exceed 2")
    if alpha <= 2:
        raise DivergentSeriesError("path-loss exponent must exceed 2")
    a = 2.0 / M
    # l/(l-a)^s = (l-a)^(1-s) + a (l-a)^(-s)
    return float(special.zeta(alpha - 1.0, 1.0 - a) + a * special.zeta(alpha, 1.0 - a))


def interference_layer_bound(varsigma: float, M: float, alpha_c: float, P_over_fn: float = 1.0) -> float:
    return P_over_fn * 8.0 / (varsigma * M) ** alpha_c * layer_series(M, alpha_c)


def zeta_prime(zeta: float, varsigma: float, M: float, alpha_c: float) -> float:
    return zeta / (varsigma ** (-alpha_c) * 8.0 / M**alpha_c * layer_series(M, alpha_c))


def zeta_for_exponent(target: float, q1: float, varsigma: float, M: float, alpha_c: float) -> float:
    """Smallest zeta giving q1 * zeta' == target."""
    return target / q1 * varsigma ** (-alpha_c) * 8.0 / M**alpha_c * layer_series(M, alpha_c)


def prop2_fading_interference_bound(n: float, f_exponent: float, alpha_c: float, zeta: float) -> float:
    f = n**f_exponent
    return zeta * np.log(n / f ** (2.0 / alpha_c))


def prop2_tail_bound(x: float, q0: float, q1: float, zeta_p: float) -> float:
    """Lower bound 1 - q0 x^(-q1 zeta') on the probability the envelope holds."""
    return 1.0 - q0 * x ** (-q1 * zeta_p)


def lattice_interference(
    grid: np.ndarray,
    pos: np.ndarray,
    rx_b: np.ndarray,
    rx_u: np.ndarray,
    rx_v: np.ndarray,
    rx_pos: np.ndarray,
    rx_id: np.ndarray,
    owner_id: np.ndarray,
    *,
    pitch: float,
    P: float,
    alpha: float,
    near: int = 2,
    gains: Optional[PairGains] = None,
    with_far: bool = True,
) -> np.ndarray:
    """Interference at receivers whose co-channel transmitters sit on group lattices.

    grid[b, u, v] holds the transmitting node id at group-lattice point (u, v)
    of batch b (-1 when silent); points are `pitch` apart. Receiver r belongs to
    the transmitter at (rx_b[r], rx_u[r], rx_v[r]). Interferers within `near`
    lattice steps are summed exactly (with pair gains); the rest use lattice
    distances and mean gain 1 through one FFT convolution per batch.
    Transmitters equal to the receiver or its intended transmitter are skipped.
    """
    B, U, V = grid.shape
    total = np.zeros(len(rx_b))
    for du in range(-near, near + 1):
        uu = rx_u + du
        okU = (uu >= 0) & (uu < U)
        for dv in range(-near, near + 1):
            vv = rx_v + dv
            ok = okU & (vv >= 0) & (vv < V)
            idx = np.nonzero(ok)[0]
            if idx.size == 0:
                continue
            nb = grid[rx_b[idx], uu[idx], vv[idx]]
            keep = (nb >= 0) & (nb != rx_id[idx]) & (nb != owner_id[idx])
            idx, nb = idx[keep], nb[keep]
            if idx.size == 0:
                continue
            d = np.maximum(np.linalg.norm(pos[nb] - rx_pos[idx], axis=1), 1.0)
            g = 1.0 if gains is None else gains(nb, rx_id[idx])
            np.add.at(total, idx, P * g * d ** (-alpha))
    if with_far and (U > near + 1 or V > near + 1):
        du = np.arange(-(U - 1), U)[:, None]
        dv = np.arange(-(V - 1), V)[None, :]
        far = np.maximum(np.abs(du), np.abs(dv)) > near
        with np.errstate(divide="ignore"):
            kern = np.where(far, P / (pitch * np.hypot(du, dv)) ** alpha, 0.0)
        order = np.argsort(rx_b, kind="stable")
        bounds = np.searchsorted(rx_b[order], np.arange(0, B + 1))
        step = max(1, 4_000_000 // ((3 * U) * (3 * V)))
        for b0 in range(0, B, step):
            b1 = min(B, b0 + step)
            sel = order[bounds[b0] : bounds[b1]]
            if sel.size == 0:
                continue
            active = (grid[b0:b1] >= 0).astype(float)
            conv = signal.fftconvolve(active, kern[None], mode="full", axes=(1, 2))
            conv = conv[:, U - 1 : 2 * U - 1, V - 1 : 2 * V - 1]
            total[sel] += np.maximum(conv[rx_b[sel] - b0, rx_u[sel], rx_v[sel]], 0.0)
    return total
