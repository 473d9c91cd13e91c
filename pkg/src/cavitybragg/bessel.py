"""Modified Bessel functions of the first kind, integer order.

``ive(m, x) = I_m(x) * exp(-x)`` is the primary routine; the sideband
weights need the scaled form because their prefactor carries exp(-x).

* Small and moderate x: the power series
  I_m(x) = sum_k (x/2)^(2k+m) / (k! (k+m)!), accumulated in log space so that
  neither (x/2)^m nor exp(-x) under/overflows.  All terms are positive, so
  there is no cancellation; summation stops once the term ratio falls
  below 1e-16.
* x > 30 and x >= m^2: the large-argument expansion
  I_m(x) e^-x ~ (2 pi x)^-1/2 sum_k (-1)^k a_k(m) / x^k, truncated at its
  smallest term.
"""

from __future__ import annotations

import math

ASYMPTOTIC_X = 30.0
_TERM_TOL = 1e-16


def _log_series(m: int, x: float) -> float:
    """log(I_m(x) e^-x) from the power series."""
    log_half = math.log(0.5 * x)
    log_t = m * log_half - math.lgamma(m + 1) - x
    log_ratio_base = 2.0 * log_half
    # Sum relative to the running maximum term to keep exponents near zero.
    best = log_t
    total = 1.0
    k = 0
    while True:
        log_t += log_ratio_base - math.log((k + 1) * (k + m + 1))
        k += 1
        if log_t > best:
            total = total * math.exp(best - log_t) + 1.0
            best = log_t
        else:
            rel = math.exp(log_t - best)
            total += rel
            # ratio of successive terms is decreasing once past the peak
            if rel < _TERM_TOL * total:
                break
    return best + math.log(total)


def _asymptotic(m: int, x: float) -> float:
    mu = 4.0 * m * m
    total = 1.0
    term = 1.0
    k = 1
    while True:
        nxt = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(nxt) >= abs(term) or abs(nxt) < _TERM_TOL * abs(total):
            if abs(nxt) < abs(term):
                total += nxt
            break
        total += nxt
        term = nxt
        k += 1
    return total / math.sqrt(2.0 * math.pi * x)


def ive(m: int, x: float) -> float:
    """Exponentially scaled I_m(x) * exp(-x) for integer m and x >= 0."""
    if int(m) != m:
        raise ValueError(f"order must be an integer, got {m}")
    m = abs(int(m))
    if x < 0:
        raise ValueError("argument must be non-negative")
    if x == 0.0:
        return 1.0 if m == 0 else 0.0
    if x > ASYMPTOTIC_X and x >= m * m:
        return _asymptotic(m, x)
    return math.exp(_log_series(m, x))


def iv(m: int, x: float) -> float:
    """I_m(x); overflows to inf for x beyond ~700."""
    scaled = ive(m, x)
    try:
        return scaled * math.exp(x)
    except OverflowError:
        return math.inf


def log_ive(m: int, x: float) -> float:
    """log(I_m(x) e^-x); finite whenever x > 0."""
    m = abs(int(m))
    if x == 0.0:
        return 0.0 if m == 0 else -math.inf
    if x > ASYMPTOTIC_X and x >= m * m:
        return math.log(_asymptotic(m, x))
    return _log_series(m, x)
