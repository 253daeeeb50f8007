"""Closed-form scaling orders: optimal tradeoff, pure TDM, the power/distance
alternative scheme, converse bounds, and tradeoff curves at finite n.

Exponents are computed in rational arithmetic so identities between
different routes to the same exponent hold exactly.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

import numpy as np


class RegimeError(ValueError):
    pass


def _q(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return Fraction(float(x)).limit_denominator(10**9)


@dataclass(frozen=True, order=True)
class Order:
    """n^poly (log n)^log_power with unit constants; compared lexicographically."""

    poly: Fraction
    log_power: int = 0

    def value(self, n: float) -> float:
        return float(n ** float(self.poly) * np.log(n) ** self.log_power)

    def __float__(self) -> float:
        return float(self.poly)


@dataclass(frozen=True)
class ScalingProfile:
    gamma: Optional[float] = 0.0
    alpha_c: float = 3.0
    alpha_s: float = 2.0
    n: float = 1e8
    a1: Optional[float] = None
    a2: Optional[float] = None
    a3: Optional[float] = None
    exp_sqrt: bool = False  # f(n) = exp(sqrt(n)) instead of a power law

    def __post_init__(self):
        if self.alpha_c <= 2:
            raise RegimeError("alpha_c must exceed 2")
        if self.alpha_s <= 0:
            raise RegimeError("alpha_s must be positive")


def theorem1_exponents(profile: ScalingProfile) -> tuple:
    """(lambda exponent, d exponent) = (-gamma/alpha_c - 1/2, gamma/alpha_s)."""
    g, ac, as_ = _q(profile.gamma), _q(profile.alpha_c), _q(profile.alpha_s)
    if profile.exp_sqrt or g < 0 or g > ac / 2:
        raise RegimeError(f"gamma={profile.gamma} outside [0, alpha_c/2]")
    return -g / ac - Fraction(1, 2), g / as_


@dataclass(frozen=True)
class TDMResult:
    lam: Order
    d_exp: Fraction  # inf for exponential power
    case: str


def tdm_exponents(profile: ScalingProfile) -> TDMResult:
    ac, as_ = _q(profile.alpha_c), _q(profile.alpha_s)
    if profile.exp_sqrt:
        # log f / n = sqrt(n) / n
        return TDMResult(Order(Fraction(-1, 2)), Fraction(10**18), "exponential")
    g = _q(profile.gamma)
    if g < 0:
        raise RegimeError("gamma must be nonnegative")
    if g < ac / 2:
        lam, case = Order(g - 1 - ac / 2), "below"
    elif g == ac / 2:
        lam, case = Order(Fraction(-1)), "boundary"
    else:
        lam, case = Order(Fraction(-1), 1), "above"
    return TDMResult(lam, g / as_, case)


@dataclass(frozen=True)
class AlternativeResult:
    lam: Order
    d_exp: Fraction
    regime: str  # "C1" or "C2"
    lam_strict_ceiling: Fraction  # lambda = o(n^ceiling)


def alternative_preconditions(a1, a2, a3, alpha_c) -> bool:
    a1, a2, a3, ac = map(_q, (a1, a2, a3, alpha_c))
    return a2 >= 0 and a3 >= 0 and a2 < a1 / ac and a2 < Fraction(1, 2) and a3 < Fraction(1, 2) and a2 + a3 <= Fraction(1, 2)


def classify_alternative(a1, a2, a3, alpha_c) -> str:
    a1, a2, a3, ac = map(_q, (a1, a2, a3, alpha_c))
    return "C1" if a2 + a3 < a1 / ac else "C2"


def alternative_exponents(profile: ScalingProfile) -> AlternativeResult:
    a1, a2, a3 = profile.a1, profile.a2, profile.a3
    if a1 is None or a2 is None or a3 is None:
        raise RegimeError("alternative scheme needs a1, a2, a3")
    if not alternative_preconditions(a1, a2, a3, profile.alpha_c):
        raise RegimeError(f"(a1, a2, a3)=({a1}, {a2}, {a3}) violates the scheme preconditions")
    a1, a2, a3, ac, as_ = map(_q, (a1, a2, a3, profile.alpha_c, profile.alpha_s))
    poly = -a2 - 2 * a3 - Fraction(1, 2)
    regime = classify_alternative(a1, a2, a3, ac)
    if regime == "C1":
        lam = Order(poly, 1 if a3 > 0 else 0)  # log f3
        d = ac * (a2 + a3) / as_
    else:
        lam = Order(poly, 1)  # log(f1 / f2^alpha_c)
        d = a1 / as_
    return AlternativeResult(lam, d, regime, -(a2 + a3) - Fraction(1, 2))


def theorem1_dominates(lam: Order, d_exp, alpha_c, alpha_s) -> bool:
    """Is (lam, d) weakly dominated by some point of the optimal tradeoff?"""
    ac, as_ = _q(alpha_c), _q(alpha_s)
    g = _q(d_exp) * as_
    if g < 0:
        g = Fraction(0)
    if g > ac / 2:
        return False
    l1, _ = theorem1_exponents(ScalingProfile(g, ac, as_))
    return Order(l1) >= lam


# -- converse ---------------------------------------------------------------

def guard_factor(beta_c: float, alpha_c: float) -> float:
    return float(beta_c ** (1.0 / alpha_c) - 1.0)


def converse_max_transmissions(n: float, Delta: float, r_n: float) -> float:
    if Delta <= 0:
        raise RegimeError("Delta must be positive")
    if r_n < 1:
        raise RegimeError("r_n must be >= 1")
    return 16.0 * n / (Delta**2 * r_n**2)


MEAN_SQUARE_DISTANCE = 0.5214054331647207  # mean distance of two uniform points in a unit square


def converse_tradeoff(r_n: float, n: float, alpha_c: float, alpha_s: float, W: float = 1.0,
                      beta_c: float = 8.0, Lbar: Optional[float] = None, c1: float = 1.0,
                      c2: float = 1.0) -> tuple:
    """(lambda_upper, d_upper order) for maximum range r_n."""
    if r_n < c1 * np.sqrt(np.log(n)) or r_n > c2 * np.sqrt(n):
        raise RegimeError(f"r_n={r_n} outside [c1 sqrt(log n), c2 sqrt(n)]")
    Delta = guard_factor(beta_c, alpha_c)
    Lbar = MEAN_SQUARE_DISTANCE * np.sqrt(n) if Lbar is None else Lbar
    return 16.0 * W / (Delta**2 * r_n * Lbar), r_n ** (alpha_c / alpha_s)


def converse_exponents(r_exp, alpha_c, alpha_s) -> tuple:
    """Exponents of the converse pair when r_n = n^r_exp (and mean distance ~ sqrt(n))."""
    r, ac, as_ = _q(r_exp), _q(alpha_c), _q(alpha_s)
    return -r - Fraction(1, 2), r * ac / as_


# -- curves -----------------------------------------------------------------

CURVE_FIELDS = ("scheme", "n", "gamma", "alpha_c", "alpha_s", "lambda_order", "d_order")


def tradeoff_curve(n: float, alpha_c: float, alpha_s: float, gamma_grid: Iterable[float]) -> list:
    """Order evaluations (unit constants) of the proposed and TDM schemes."""
    rows = []
    for g in gamma_grid:
        if not (0 < g < 1.25 + 1e-12):
            raise RegimeError(f"gamma {g} outside (0, 1.25)")
        prof = ScalingProfile(g, alpha_c, alpha_s, n)
        tdm = tdm_exponents(prof)
        if _q(g) < _q(alpha_c) / 2:
            lam_e, d_e = theorem1_exponents(prof)
            lam = Order(lam_e)
        else:
            lam, d_e = tdm.lam, tdm.d_exp
        for scheme, lo, de in (("proposed", lam, d_e), ("tdm", tdm.lam, tdm.d_exp)):
            rows.append(
                {
                    "scheme": scheme,
                    "n": n,
                    "gamma": float(g),
                    "alpha_c": alpha_c,
                    "alpha_s": alpha_s,
                    "lambda_order": lo.value(n),
                    "d_order": float(n ** float(de)),
                }
            )
    return rows


def curves_to_csv(rows: list) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CURVE_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()
