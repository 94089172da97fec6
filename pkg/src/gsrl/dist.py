"""Special functions needed by the tuning rules.

Standard normal CDF/quantile, regularized incomplete beta and gamma,
F and chi-square CDFs/quantiles, and the chi-square exponential tail bounds.
Everything is implemented locally (erf from the stdlib, continued fractions
for the incomplete beta/gamma) so the tuning formulas are fully auditable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_FPMIN = 1e-300
_CF_EPS = 3e-16
_CF_MAXIT = 500


def normal_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def normal_quantile(p: float) -> float:
    """Inverse of the standard normal CDF, accurate to 1e-10 in probability."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must be in (0, 1), got {p}")
    lo, hi = -40.0, 40.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if normal_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    # Newton polish; the bisection bracket keeps this safe
    for _ in range(4):
        pdf = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        if pdf < _FPMIN:
            break
        x -= (normal_cdf(x) - p) / pdf
    return x


def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            break
    return h


def regularized_incomplete_beta(x: float, a: float, b: float) -> float:
    """I_x(a, b), with the symmetry switch at x = (a+1)/(a+b+2)."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def regularized_incomplete_gamma(a: float, x: float) -> float:
    """Lower regularized P(a, x): series for x < a+1, continued fraction above."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x <= 0.0:
        return 0.0
    ln_front = a * math.log(x) - x - math.lgamma(a)
    if x < a + 1.0:
        term = 1.0 / a
        total = term
        ap = a
        for _ in range(_CF_MAXIT):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * _CF_EPS:
                break
        return total * math.exp(ln_front)
    # Lentz for the upper-tail continued fraction
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _CF_MAXIT + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            break
    return 1.0 - math.exp(ln_front) * h


def f_cdf(x: float, d1: int, d2: int) -> float:
    """CDF of the F distribution via the incomplete-beta identity."""
    if d1 < 1 or d2 < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if x <= 0.0:
        return 0.0
    return regularized_incomplete_beta(d1 * x / (d1 * x + d2), d1 / 2.0, d2 / 2.0)


def f_quantile(d1: int, d2: int, p: float) -> float:
    """Inverse F CDF, accurate to 1e-9 in probability."""
    if d1 < 1 or d2 < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must be in (0, 1), got {p}")
    hi = 1.0
    while f_cdf(hi, d1, d2) < p:
        hi *= 2.0
        if hi > 1e300:
            raise ValueError("F quantile bracket overflow")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f_cdf(mid, d1, d2) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(1.0, lo):
            break
    return 0.5 * (lo + hi)


def chisq_cdf(x: float, d: int) -> float:
    if d < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if x <= 0.0:
        return 0.0
    return regularized_incomplete_gamma(d / 2.0, x / 2.0)


def chisq_quantile(d: int, p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must be in (0, 1), got {p}")
    hi = float(d)
    while chisq_cdf(hi, d) < p:
        hi *= 2.0
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if chisq_cdf(mid, d) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(1.0, lo):
            break
    return 0.5 * (lo + hi)


def chisq_tail_bounds(d: int, t: float) -> tuple[float, float]:
    """Exponential chi-square tail bounds (upper tail, lower tail).

    For X ~ chi^2(d):
      P(X - d >= d t) <= exp(-(d/4) (sqrt(1 + 2 t) - 1)^2)
      P(X <= d - d t) <= exp(-(d/4) t^2)
    """
    if d < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if t < 0:
        raise ValueError("t must be nonnegative")
    upper = math.exp(-(d / 4.0) * (math.sqrt(1.0 + 2.0 * t) - 1.0) ** 2)
    lower = math.exp(-(d / 4.0) * t * t)
    return upper, lower


@dataclass(frozen=True)
class QuantileRequest:
    """A quantile query against one of the supported distributions.

    distribution is "normal", "f", or "chi-square"; d1/d2 are the degrees
    of freedom (d2 only for "f").
    """

    distribution: str
    probability: float
    d1: int = 0
    d2: int = 0

    def evaluate(self) -> float:
        if self.distribution == "normal":
            return normal_quantile(self.probability)
        if self.distribution == "f":
            return f_quantile(self.d1, self.d2, self.probability)
        if self.distribution == "chi-square":
            return chisq_quantile(self.d1, self.probability)
        raise ValueError(f"unknown distribution {self.distribution!r}")
