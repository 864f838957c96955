"""Numerically stable normal-distribution kernels and chi-square quantiles.

Everything downstream (the interval likelihood, the EM moment equations,
likelihood-ratio inference) reduces to four primitives: the standard normal
pdf/cdf/quantile, stable probabilities of intervals under a normal law, and
first/second moments of a truncated normal. The interval mass and the moment
ratios are computed through the scaled complementary error function, which
keeps them accurate arbitrarily far into the tails where naive CDF
subtraction underflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sp

_SQRT2 = math.sqrt(2.0)
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# Smallest interval probability ever reported; keeps log-likelihoods finite
# on extreme parameter values instead of returning -inf.
TINY_PROB = 1e-300
LOG_TINY_PROB = math.log(TINY_PROB)


@dataclass(frozen=True)
class Interval:
    """Real interval [lower, upper); either endpoint may be infinite."""

    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(
                f"degenerate interval: [{self.lower}, {self.upper}]"
            )


def norm_pdf(x):
    """Standard normal density."""
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x * x) / _SQRT_2PI
    return float(out) if out.ndim == 0 else out


def norm_cdf(x):
    """Standard normal CDF, erfc-based; accepts +-inf."""
    out = sp.ndtr(np.asarray(x, dtype=float))
    return float(out) if out.ndim == 0 else out


def norm_quantile(p):
    """Inverse standard normal CDF on (0, 1)."""
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0.0) | (p >= 1.0)):
        raise ValueError("norm_quantile requires p in (0, 1)")
    out = sp.ndtri(p)
    return float(out) if out.ndim == 0 else out


def chisq_quantile(p, df):
    """Lower-tail chi-square quantile: x with P(chisq_df <= x) = p."""
    if not 0.0 < p < 1.0:
        raise ValueError("chisq_quantile requires p in (0, 1)")
    if df < 1 or int(df) != df:
        raise ValueError("chisq_quantile requires integer df >= 1")
    return float(2.0 * sp.gammaincinv(df / 2.0, p))


def chisq_sf(x, df):
    """Upper-tail chi-square probability P(chisq_df > x)."""
    if x < 0.0:
        return 1.0
    return float(sp.gammaincc(df / 2.0, x / 2.0))


def _mills(x):
    """Mills ratio Phi_c(x)/phi(x) for x >= 0; stable for any magnitude."""
    return 0.5 * _SQRT_2PI * sp.erfcx(x / _SQRT2)


def interval_stats(alpha, beta):
    """Log-mass and moment ratios of a standard normal on [alpha, beta).

    Returns ``(log_mass, r1, r2)`` elementwise, where
    ``mass = Phi(beta) - Phi(alpha)``,
    ``r1 = (phi(alpha) - phi(beta)) / mass`` and
    ``r2 = (alpha*phi(alpha) - beta*phi(beta)) / mass`` with the convention
    ``x*phi(x) -> 0`` as ``x -> +-inf``.

    Intervals fully inside one tail are computed via the scaled
    complementary error function, so the results stay accurate where the
    plain CDF difference would underflow or cancel.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    scalar = alpha.ndim == 0 and beta.ndim == 0
    shape = np.broadcast_shapes(alpha.shape, beta.shape) if not scalar else (1,)
    a = np.ascontiguousarray(np.broadcast_to(alpha, shape), dtype=float)
    b = np.ascontiguousarray(np.broadcast_to(beta, shape), dtype=float)
    if np.any(~(a < b)):
        raise ValueError("interval_stats requires alpha < beta elementwise")

    # Reflect intervals in the left tail onto the right tail; r1 flips sign.
    flip = b <= 0.0
    lo = np.where(flip, -b, a)
    hi = np.where(flip, -a, b)

    log_mass = np.empty(shape, dtype=float)
    r1 = np.empty(shape, dtype=float)
    r2 = np.empty(shape, dtype=float)

    tail = lo >= 0.0
    if np.any(tail):
        aa = lo[tail]
        bb = hi[tail]
        binf = np.isinf(bb)
        # phi(b)/phi(a); (a-b)(a+b) avoids cancellation in a^2 - b^2
        q = np.exp(0.5 * (aa - bb) * (aa + bb))
        mills_b = np.where(binf, 0.0, _mills(np.where(binf, 1.0, bb)))
        s = _mills(aa) - q * mills_b  # (Phi(b) - Phi(a)) / phi(a)
        with np.errstate(divide="ignore"):
            log_mass[tail] = -0.5 * aa * aa - _LOG_SQRT_2PI + np.log(s)
        r1[tail] = (1.0 - q) / s
        bq = np.zeros_like(bb)
        np.multiply(bb, q, out=bq, where=~binf)
        r2[tail] = (aa - bq) / s

    mid = ~tail
    if np.any(mid):
        aa = lo[mid]
        bb = hi[mid]
        phi_a = norm_pdf(aa)
        phi_b = norm_pdf(bb)
        mass = sp.ndtr(bb) - sp.ndtr(aa)
        with np.errstate(divide="ignore"):
            log_mass[mid] = np.log(mass)
        r1[mid] = (phi_a - phi_b) / mass
        apa = np.zeros_like(aa)
        np.multiply(aa, phi_a, out=apa, where=~np.isinf(aa))
        bpb = np.zeros_like(bb)
        np.multiply(bb, phi_b, out=bpb, where=~np.isinf(bb))
        r2[mid] = (apa - bpb) / mass

    r1[flip] = -r1[flip]
    if scalar:
        return float(log_mass[0]), float(r1[0]), float(r2[0])
    return log_mass, r1, r2


def norm_cdf_diff(interval: Interval):
    """Phi(upper) - Phi(lower), stable against same-tail cancellation.

    Results below ``TINY_PROB`` are clamped to ``TINY_PROB`` so that
    log-likelihoods built from this quantity remain finite.
    """
    log_mass, _, _ = interval_stats(interval.lower, interval.upper)
    if log_mass <= LOG_TINY_PROB:
        return TINY_PROB
    return float(np.exp(log_mass))


def truncnorm_moments(mu, sigma, interval: Interval):
    """First two moments of N(mu, sigma^2) truncated to ``interval``.

    Returns ``(m1, m2)`` with ``m1 = E[Z | Z in interval]`` and
    ``m2 = E[Z^2 | Z in interval]``.
    """
    if sigma <= 0.0:
        raise ValueError("truncnorm_moments requires sigma > 0")
    alpha = (interval.lower - mu) / sigma
    beta = (interval.upper - mu) / sigma
    log_mass, r1, r2 = interval_stats(alpha, beta)
    if not np.isfinite(log_mass):
        raise ValueError(
            "degenerate truncation: interval "
            f"[{interval.lower}, {interval.upper}] has no recoverable mass "
            f"under N({mu}, {sigma}^2)"
        )
    m1 = mu + sigma * float(r1)
    # variance form keeps m2 - m1^2 strictly positive
    var = sigma * sigma * max(1.0 + float(r2) - float(r1) ** 2, 1e-30)
    return m1, m1 * m1 + var
