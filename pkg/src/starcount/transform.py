"""Rounding schemes and monotone transformations of the latent count proxy.

The observed count j corresponds to the latent interval [a_j, a_{j+1});
by default a_0 = -inf, a_j = j for j = 1..y_max, and a_{y_max+1} = +inf
(a_{j} = j for all j >= 1 when the support is unbounded). A transformation
g maps the latent count proxy monotonically onto the Gaussian scale:
g(t) = -inf below the support and +inf at or above y_max + 1, so bounded
schemes place all probability on {0, ..., y_max}.

Transformations come in four flavors: a smoothed-ECDF estimate (one spline
knot per distinct observed value, placed at the upper cell edge so the
fitted curve reproduces the rescaled empirical CDF exactly there), the
Box-Cox family (log / sqrt / identity as fixed special cases), and Poisson
or Negative Binomial CDFs with method-of-moments parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as st

from .special import norm_quantile


# ---------------------------------------------------------------------------
# Rounding scheme


@dataclass(frozen=True, eq=False)
class RoundingScheme:
    """Interval partition mapping latent values to counts.

    ``y_max`` may be ``math.inf`` for unbounded supports. ``breakpoints``
    holds the finite interior breakpoints a_1 < ... < a_{y_max}; ``None``
    means the default integer grid a_j = j. ``censored_at`` records that a
    bounded scheme stands in for right-censoring at C (the likelihoods are
    identical, so no separate code path exists).
    """

    y_max: float
    breakpoints: np.ndarray | None = None
    censored_at: int | None = None

    def __post_init__(self):
        if self.breakpoints is not None:
            bp = np.asarray(self.breakpoints, dtype=float)
            if bp.ndim != 1 or len(bp) < 1:
                raise ValueError("breakpoints must be a 1-d sequence")
            if not np.all(np.diff(bp) > 0) or not np.all(np.isfinite(bp)):
                raise ValueError("breakpoints must be finite and strictly increasing")
            if math.isinf(self.y_max):
                raise ValueError("explicit breakpoints require a finite y_max")
            if len(bp) != self.y_max:
                raise ValueError("need y_max interior breakpoints a_1..a_{y_max}")
            object.__setattr__(self, "breakpoints", bp)
        if not (self.y_max >= 1):
            raise ValueError("y_max must be a positive integer or inf")
        if not math.isinf(self.y_max) and int(self.y_max) != self.y_max:
            raise ValueError("y_max must be a positive integer or inf")

    @classmethod
    def default(cls, y_max) -> "RoundingScheme":
        """Integer-grid scheme with the given (possibly infinite) bound."""
        return cls(y_max=float(y_max) if math.isinf(float(y_max)) else int(y_max))

    @classmethod
    def censored(cls, limit: int) -> "RoundingScheme":
        """Bounded scheme standing in for right-censoring at ``limit``."""
        return cls(y_max=int(limit), censored_at=int(limit))

    @property
    def bounded(self) -> bool:
        return not math.isinf(self.y_max)

    def lower(self, j):
        """a_j (vectorized); a_0 = -inf."""
        j = np.asarray(j)
        if self.breakpoints is None:
            out = np.where(j <= 0, -np.inf, j.astype(float))
        else:
            bp = np.concatenate(([-np.inf], self.breakpoints))
            out = bp[np.asarray(j, dtype=int)]
        return float(out) if out.ndim == 0 else out

    def upper(self, j):
        """a_{j+1} (vectorized); a_{y_max+1} = +inf for bounded schemes."""
        j = np.asarray(j)
        if self.breakpoints is None:
            out = np.asarray(j + 1, dtype=float)
            if self.bounded:
                out = np.where(j >= self.y_max, np.inf, out)
        else:
            bp = np.concatenate((self.breakpoints, [np.inf]))
            out = bp[np.asarray(j, dtype=int)]
        return float(out) if out.ndim == 0 else out

    def contains(self, y) -> np.ndarray:
        y = np.asarray(y)
        ok = (y >= 0) & (np.asarray(y, dtype=float) == np.floor(y))
        if self.bounded:
            ok &= y <= self.y_max
        return ok


def round_value(y_star, scheme: RoundingScheme):
    """Map latent values to counts: j such that a_j <= y* < a_{j+1}."""
    t = np.asarray(y_star, dtype=float)
    if scheme.breakpoints is None:
        out = np.floor(t)
        out = np.where(t < 1.0, 0.0, out)
        if scheme.bounded:
            out = np.minimum(out, scheme.y_max)
    else:
        out = np.searchsorted(scheme.breakpoints, t, side="right").astype(float)
    out = np.asarray(out, dtype=int)
    return int(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Fritsch-Carlson monotone cubic spline


class MonotoneSpline:
    """Monotone cubic Hermite interpolant (Fritsch-Carlson tangents).

    Interpolates every knot, has nonnegative derivative everywhere, and
    extends linearly with the boundary tangent beyond the first and last
    knots. No tuning parameters.
    """

    def __init__(self, knot_x, knot_y):
        x = np.asarray(knot_x, dtype=float)
        y = np.asarray(knot_y, dtype=float)
        if x.ndim != 1 or y.shape != x.shape or len(x) < 2:
            raise ValueError("need >= 2 paired knots")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
            raise ValueError("knots must be finite")
        if np.any(np.diff(x) <= 0):
            raise ValueError("knot_x must be strictly increasing")
        if np.any(np.diff(y) < 0):
            raise ValueError("knot_y must be nondecreasing")
        self.knot_x = x
        self.knot_y = y
        self.tangents = self._fc_tangents(x, y)

    @staticmethod
    def _fc_tangents(x, y):
        h = np.diff(x)
        delta = np.diff(y) / h
        n = len(x)
        m = np.empty(n)
        m[0] = delta[0]
        m[-1] = delta[-1]
        if n > 2:
            m[1:-1] = 0.5 * (delta[:-1] + delta[1:])
        # flat secants force flat tangents at both ends of the segment
        for k in np.flatnonzero(delta == 0.0):
            m[k] = 0.0
            m[k + 1] = 0.0
        # limit tangent magnitudes segment by segment
        for k in range(n - 1):
            if delta[k] == 0.0:
                continue
            a = m[k] / delta[k]
            b = m[k + 1] / delta[k]
            r = a * a + b * b
            if r > 9.0:
                tau = 3.0 / math.sqrt(r)
                m[k] = tau * a * delta[k]
                m[k + 1] = tau * b * delta[k]
        return m

    def _locate(self, t):
        return np.clip(
            np.searchsorted(self.knot_x, t, side="right") - 1, 0, len(self.knot_x) - 2
        )

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        x, y, m = self.knot_x, self.knot_y, self.tangents
        k = self._locate(t)
        h = x[k + 1] - x[k]
        s = (t - x[k]) / h
        h00 = (1.0 + 2.0 * s) * (1.0 - s) ** 2
        h10 = s * (1.0 - s) ** 2
        h01 = s * s * (3.0 - 2.0 * s)
        h11 = s * s * (s - 1.0)
        out = h00 * y[k] + h10 * h * m[k] + h01 * y[k + 1] + h11 * h * m[k + 1]
        left = t < x[0]
        right = t > x[-1]
        out[left] = y[0] + m[0] * (t[left] - x[0])
        out[right] = y[-1] + m[-1] * (t[right] - x[-1])
        return float(out[0]) if scalar else out

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        x, y, m = self.knot_x, self.knot_y, self.tangents
        k = self._locate(t)
        h = x[k + 1] - x[k]
        s = (t - x[k]) / h
        d = (
            (6.0 * s * s - 6.0 * s) * (y[k] - y[k + 1]) / h
            + (3.0 * s * s - 4.0 * s + 1.0) * m[k]
            + (3.0 * s * s - 2.0 * s) * m[k + 1]
        )
        d[t < x[0]] = m[0]
        d[t > x[-1]] = m[-1]
        return float(d[0]) if scalar else d

    def solve(self, v):
        """Smallest t with spline(t) = v; requires increasing boundary slopes
        when v lies outside the knot value range."""
        v = np.asarray(v, dtype=float)
        scalar = v.ndim == 0
        v = np.atleast_1d(v)
        x, y, m = self.knot_x, self.knot_y, self.tangents
        out = np.empty_like(v)
        below = v < y[0]
        above = v > y[-1]
        out[below] = x[0] + (v[below] - y[0]) / m[0]
        out[above] = x[-1] + (v[above] - y[-1]) / m[-1]
        inner = ~(below | above)
        if np.any(inner):
            k = np.clip(np.searchsorted(y, v[inner], side="left") - 1, 0, len(x) - 2)
            lo = x[k].copy()
            hi = x[k + 1].copy()
            target = v[inner]
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                fmid = self(mid)
                go_right = fmid < target
                lo = np.where(go_right, mid, lo)
                hi = np.where(go_right, hi, mid)
            out[inner] = 0.5 * (lo + hi)
        return float(out[0]) if scalar else out


def monotone_spline_fit(knot_x, knot_y) -> MonotoneSpline:
    """Fit the Fritsch-Carlson monotone cubic through the given knots."""
    return MonotoneSpline(knot_x, knot_y)


# ---------------------------------------------------------------------------
# Transformations


_BOX_COX_KINDS = {"box-cox": None, "log": 0.0, "sqrt": 0.5, "identity": 1.0}
_SPLINE_KINDS = {"nonparametric", "poisson-cdf", "negbin-cdf"}


@dataclass(frozen=True, eq=False)
class Transformation:
    """Monotone map g from the count proxy to the latent Gaussian scale.

    ``evaluate`` is -inf for t < 1 and +inf for t >= y_max + 1 (bounded
    schemes); ``inverse`` maps back with the limit conventions
    g^{-1}(-inf) = 0 and g^{-1}(+inf) = y_max + 1.
    """

    kind: str
    mu_z: float
    sigma_z: float
    y_max: float
    lambda_: float | None = None
    spline: MonotoneSpline | None = None
    n_params: int = 0

    def __post_init__(self):
        if self.kind in _SPLINE_KINDS:
            if self.spline is None:
                raise ValueError(f"{self.kind} transformation requires a spline")
        elif self.kind in _BOX_COX_KINDS:
            lam = _BOX_COX_KINDS[self.kind]
            if lam is not None and self.lambda_ is None:
                object.__setattr__(self, "lambda_", lam)
            if self.lambda_ is None or self.lambda_ < 0:
                raise ValueError("Box-Cox lambda must be >= 0")
        else:
            raise ValueError(f"unknown transformation kind: {self.kind}")
        if self.sigma_z <= 0:
            raise ValueError("sigma_z must be positive")

    # -- raw map, no support masking (used by the EM initializer) ---------

    def finite_evaluate(self, t):
        t = np.asarray(t, dtype=float)
        if self.spline is not None:
            return self.spline(t)
        lam = self.lambda_
        if lam == 0.0:
            core = np.log(t)
        else:
            core = (np.power(t, lam) - 1.0) / lam
        out = self.mu_z + self.sigma_z * core
        return float(out) if np.ndim(out) == 0 else out

    # -- public map with support conventions ------------------------------

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        out = np.empty_like(t)
        low = t < 1.0
        high = t >= self.y_max + 1.0  # never true for unbounded supports
        mid = ~(low | high)
        out[low] = -np.inf
        out[high] = np.inf
        if np.any(mid):
            out[mid] = self.finite_evaluate(t[mid])
        return float(out[0]) if scalar else out

    def inverse(self, s):
        s = np.asarray(s, dtype=float)
        scalar = s.ndim == 0
        s = np.atleast_1d(s)
        hi_cap = self.y_max + 1.0
        if self.spline is not None:
            out = np.empty_like(s)
            neg = np.isneginf(s)
            pos = np.isposinf(s)
            fin = ~(neg | pos)
            out[neg] = 0.0
            out[pos] = hi_cap
            if np.any(fin):
                out[fin] = self.spline.solve(s[fin])
        else:
            u = (s - self.mu_z) / self.sigma_z
            lam = self.lambda_
            if lam == 0.0:
                with np.errstate(over="ignore"):
                    out = np.exp(u)
            else:
                base = 1.0 + lam * u
                with np.errstate(invalid="ignore"):
                    out = np.where(
                        base > 0.0, np.power(np.maximum(base, 0.0), 1.0 / lam), 0.0
                    )
            out = np.where(np.isposinf(s), np.inf, out)
        out = np.clip(out, 0.0, hi_cap)
        return float(out[0]) if scalar else out

    def cell_edges(self, scheme: RoundingScheme, j):
        """(g(a_j), g(a_{j+1})) for count cells j, vectorized."""
        return self.evaluate(scheme.lower(j)), self.evaluate(scheme.upper(j))


# ---------------------------------------------------------------------------
# Estimation of the transformation


@dataclass(frozen=True, eq=False)
class EcdfTable:
    """Rescaled empirical CDF of the response at its distinct values.

    ``knot_x``/``knot_y`` hold the implied transformation values at the
    upper cell edges a_{j+1} = j + 1 of each distinct observed j:
    g0(j+1) = mu_z + sigma_z * Phi^{-1}(F~(j)).
    """

    values: np.ndarray
    cdf_tilde: np.ndarray
    mu_z: float
    sigma_z: float
    knot_x: np.ndarray = field(init=False)
    knot_y: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "knot_x", self.values + 1.0)
        object.__setattr__(
            self,
            "knot_y",
            self.mu_z + self.sigma_z * norm_quantile(self.cdf_tilde),
        )


def _weighted_mean_sd(y, weights):
    """Mean and sd; weights are normalized to mean one, so a common scaling
    leaves the result unchanged and equal weights reduce to the n-1 formula."""
    n = len(y)
    if weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(weights, dtype=float)
        if np.any(w <= 0) or len(w) != n:
            raise ValueError("weights must be positive and match the sample")
        w = w * (n / w.sum())
    mean = float(np.sum(w * y) / n)
    if n < 2:
        raise ValueError("need at least 2 observations")
    var = float(np.sum(w * (y - mean) ** 2) / (n - 1))
    return mean, math.sqrt(var), w


def ecdf_transform_base(y, scheme: RoundingScheme, weights=None) -> EcdfTable:
    """Rescaled (optionally weighted) ECDF table behind the nonparametric g."""
    y = np.asarray(y)
    n = len(y)
    if n == 0:
        raise ValueError("empty sample")
    if np.any(~scheme.contains(y)):
        bad = int(np.flatnonzero(~scheme.contains(y))[0])
        raise ValueError(f"response outside support at row {bad + 1}")
    mean, sd, w = _weighted_mean_sd(np.asarray(y, dtype=float), weights)
    if sd == 0.0:
        raise ValueError("degenerate response: sample standard deviation is zero")
    vals, inv = np.unique(np.asarray(y, dtype=int), return_inverse=True)
    mass = np.bincount(inv, weights=w)
    cdf = np.cumsum(mass) / n  # weighted ECDF at the distinct values
    cdf_tilde = cdf * (n / (n + 1.0))
    return EcdfTable(
        values=vals.astype(float), cdf_tilde=cdf_tilde, mu_z=mean, sigma_z=sd
    )


def fit_nonparametric_transform(
    y, scheme: RoundingScheme, weights=None
) -> Transformation:
    """Smoothed-ECDF transformation: monotone spline through the table knots.

    The spline interpolates the mapped CDF at every distinct observed value
    and extends linearly (and increasing) beyond the largest one, so every
    cell of the support receives strictly positive probability.
    """
    table = ecdf_transform_base(y, scheme, weights)
    if len(table.values) < 2:
        raise ValueError("need at least 2 distinct observed values")
    spline = MonotoneSpline(table.knot_x, table.knot_y)
    return Transformation(
        kind="nonparametric",
        mu_z=table.mu_z,
        sigma_z=table.sigma_z,
        y_max=scheme.y_max,
        spline=spline,
        n_params=len(table.values),
    )


def box_cox_transform(
    lambda_, anchors=(0.0, 1.0), scheme: RoundingScheme | None = None
) -> Transformation:
    """Box-Cox map (t^lambda - 1)/lambda (log at lambda = 0), anchored."""
    if lambda_ < 0:
        raise ValueError("Box-Cox lambda must be >= 0")
    y_max = scheme.y_max if scheme is not None else math.inf
    return Transformation(
        kind="box-cox",
        mu_z=float(anchors[0]),
        sigma_z=float(anchors[1]),
        y_max=y_max,
        lambda_=float(lambda_),
        n_params=0,
    )


def fixed_transform(kind: str, scheme: RoundingScheme) -> Transformation:
    """Fixed log / sqrt / identity transformation (Box-Cox special cases)."""
    if kind not in ("log", "sqrt", "identity"):
        raise ValueError(f"not a fixed transformation kind: {kind}")
    return Transformation(
        kind=kind, mu_z=0.0, sigma_z=1.0, y_max=scheme.y_max, n_params=0
    )


def parametric_cdf_transform(
    family: str, y, scheme: RoundingScheme
) -> Transformation:
    """Poisson- or NegBin-CDF transformation with moment-matched parameters.

    The family CDF replaces the ECDF in the knot table; the same monotone
    spline smoothing applies.
    """
    y = np.asarray(y, dtype=float)
    mean, sd, _ = _weighted_mean_sd(y, None)
    if mean <= 0:
        raise ValueError("parametric CDF transform needs a positive mean response")
    var = sd * sd
    if family == "poisson":
        dist = st.poisson(mean)
        n_params = 1
    elif family == "negbin":
        if var <= mean:
            raise ValueError(
                "underdispersed for NegBin moments: sample variance must exceed the mean"
            )
        r = mean * mean / (var - mean)
        dist = st.nbinom(r, r / (r + mean))
        n_params = 2
    else:
        raise ValueError(f"unknown parametric family: {family}")
    if scheme.bounded:
        j_hi = int(scheme.y_max)
    else:
        j_hi = max(int(dist.ppf(1.0 - 1e-10)) + 1, int(y.max()) + 1)
    grid = np.arange(0, j_hi + 1)
    cdf = dist.cdf(grid)
    keep = (cdf > 0.0) & (cdf < 1.0)
    grid, cdf = grid[keep], cdf[keep]
    if len(grid) < 2:
        raise ValueError("parametric CDF is degenerate on the support")
    spline = MonotoneSpline(grid + 1.0, mean + sd * norm_quantile(cdf))
    return Transformation(
        kind=f"{family}-cdf",
        mu_z=mean,
        sigma_z=sd,
        y_max=scheme.y_max,
        spline=spline,
        n_params=n_params,
    )
