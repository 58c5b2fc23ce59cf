"""Continuous inter-request time distributions.

Each family models the time between successive requests for one content.
All families have a continuous cdf ``G`` with ``G(0) = 0`` and a finite,
strictly positive mean, so the request rate is ``rate = 1/mean``.

Besides the cdf, every distribution exposes the integrated-tail (age)
distribution

    age_cdf(t) = rate * integral_0^t (1 - G(z)) dz,

which is the stationary distribution of the time since (equivalently,
until) the last (next) request, plus quantiles and seeded samplers for
both laws.  ``standardize`` rescales to unit mean, which is the form used
by envelope and smoothness checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize
from scipy import special as sc

from .errors import ConfigError, NumericsError, QuadratureError

__all__ = [
    "InterRequestDistribution",
    "Exponential",
    "Gamma",
    "Weibull",
    "Erlang",
    "Hyperexponential",
    "ParetoLomax",
    "MaxEnvelope",
    "EnvelopeReport",
    "SmoothnessReport",
    "check_envelope",
    "check_smoothness",
    "distribution_from_config",
    "adaptive_simpson",
]

# Residual targets used by the numeric inverses.
_QUANTILE_ATOL = 1e-13
_AGE_QUAD_ATOL = 1e-10


def _as_array(t):
    a = np.asarray(t, dtype=float)
    return a, (a.ndim == 0)


def _ret(a, scalar):
    return float(a) if scalar else a


class InterRequestDistribution:
    """Base class; concrete families implement cdf/pdf/age_cdf closed forms."""

    # --- family-specific primitives -------------------------------------

    def _cdf(self, t):  # t: nonnegative ndarray
        raise NotImplementedError

    def _pdf(self, t):
        raise NotImplementedError

    def _age_cdf(self, t):
        raise NotImplementedError

    @property
    def mean(self) -> float:
        raise NotImplementedError

    def _scaled(self, factor: float) -> "InterRequestDistribution":
        """Return the same shape of distribution with all times multiplied by factor."""
        raise NotImplementedError

    # --- shared surface ---------------------------------------------------

    @property
    def rate(self) -> float:
        return 1.0 / self.mean

    def cdf(self, t):
        """P[inter-request time <= t]; zero for t < 0 by convention."""
        a, scalar = _as_array(t)
        out = np.where(a > 0, self._cdf(np.maximum(a, 0.0)), 0.0)
        return _ret(out, scalar)

    def ccdf(self, t):
        a, scalar = _as_array(t)
        out = np.where(a > 0, 1.0 - self._cdf(np.maximum(a, 0.0)), 1.0)
        return _ret(out, scalar)

    def pdf(self, t):
        a, scalar = _as_array(t)
        mask = a > 0
        out = np.where(mask, self._pdf(np.where(mask, a, 1.0)), 0.0)
        return _ret(out, scalar)

    def age_cdf(self, t):
        """Integrated-tail cdf: rate * integral_0^t ccdf(z) dz."""
        a, scalar = _as_array(t)
        out = np.where(a > 0, self._age_cdf(np.maximum(a, 0.0)), 0.0)
        return _ret(out, scalar)

    def age_pdf(self, t):
        a, scalar = _as_array(t)
        out = self.rate * np.where(a > 0, 1.0 - self._cdf(np.maximum(a, 0.0)), 1.0)
        return _ret(np.where(a < 0, 0.0, out), scalar)

    def quantile(self, u: float) -> float:
        """Inverse cdf; numeric bisection unless a closed form is available."""
        return self._invert(self.cdf, u)

    def age_quantile(self, u: float) -> float:
        """Inverse of age_cdf.

        Raises
        ------
        ConfigError
            if u is outside [0, 1); the age quantile is unbounded at u = 1.
        """
        return self._invert(self.age_cdf, u)

    def _invert(self, fn, u: float) -> float:
        if not 0.0 <= u < 1.0:
            raise ConfigError(f"unbounded quantile: u={u!r} outside [0, 1)")
        if u == 0.0:
            return 0.0
        hi = self.mean
        for _ in range(2000):
            if fn(hi) >= u:
                break
            hi *= 2.0
        else:
            raise NumericsError(f"quantile bracket did not close for u={u}")
        t = optimize.brentq(lambda x: fn(x) - u, 0.0, hi, xtol=1e-300, rtol=8.9e-16,
                            maxiter=200)
        return float(t)

    def standardize(self) -> "InterRequestDistribution":
        """Rescale to unit mean: cdf of the result is G(t / rate_original)."""
        return self._scaled(1.0 / self.mean)

    def scaled_to_mean(self, m: float) -> "InterRequestDistribution":
        if m <= 0:
            raise ConfigError(f"mean must be positive, got {m}")
        return self._scaled(m / self.mean)

    # --- sampling ----------------------------------------------------------

    def sample_inter(self, rng: np.random.Generator) -> float:
        return float(self.sample_inter_batch(rng, 1)[0])

    def sample_inter_batch(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def sample_age(self, rng: np.random.Generator) -> float:
        """Stationary age draw (inverse transform through age_quantile)."""
        return self.age_quantile(rng.random())

    # --- config text ---------------------------------------------------------

    def config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(InterRequestDistribution):
    rate_param: float

    def __post_init__(self):
        if not self.rate_param > 0:
            raise ConfigError(f"exponential rate must be > 0, got {self.rate_param}")

    @property
    def mean(self):
        return 1.0 / self.rate_param

    def _cdf(self, t):
        return -np.expm1(-self.rate_param * t)

    def _pdf(self, t):
        return self.rate_param * np.exp(-self.rate_param * t)

    def _age_cdf(self, t):
        # memoryless: the age distribution coincides with the cdf
        return -np.expm1(-self.rate_param * t)

    def quantile(self, u):
        if not 0.0 <= u < 1.0:
            raise ConfigError(f"unbounded quantile: u={u!r} outside [0, 1)")
        return -math.log1p(-u) / self.rate_param

    def age_quantile(self, u):
        return self.quantile(u)

    def _scaled(self, f):
        return Exponential(self.rate_param / f)

    def sample_inter_batch(self, rng, size):
        return rng.exponential(1.0 / self.rate_param, size)

    def sample_age(self, rng):
        return float(rng.exponential(1.0 / self.rate_param))

    def config(self):
        return {"family": "exponential", "params": {"rate": self.rate_param}}


@dataclass(frozen=True)
class Gamma(InterRequestDistribution):
    shape: float
    rate_param: float

    def __post_init__(self):
        if not (self.shape > 0 and self.rate_param > 0):
            raise ConfigError("gamma shape and rate must be > 0")

    @property
    def mean(self):
        return self.shape / self.rate_param

    def _cdf(self, t):
        return sc.gammainc(self.shape, self.rate_param * t)

    def _pdf(self, t):
        x = self.rate_param * t
        return self.rate_param * np.exp(
            sc.xlogy(self.shape - 1.0, x) - x - sc.gammaln(self.shape))

    def _age_cdf(self, t):
        # integral of the ccdf via the partial-expectation identity:
        # int_0^t ccdf = t*ccdf(t) + E[X; X<=t],  E[X; X<=t] = mean * P(shape+1, rate*t)
        x = self.rate_param * t
        part = t * sc.gammaincc(self.shape, x) + self.mean * sc.gammainc(self.shape + 1.0, x)
        return np.minimum(part / self.mean, 1.0)

    def quantile(self, u):
        if not 0.0 <= u < 1.0:
            raise ConfigError(f"unbounded quantile: u={u!r} outside [0, 1)")
        return float(sc.gammaincinv(self.shape, u)) / self.rate_param

    def _scaled(self, f):
        return Gamma(self.shape, self.rate_param / f)

    def sample_inter_batch(self, rng, size):
        return rng.gamma(self.shape, 1.0 / self.rate_param, size)

    def config(self):
        return {"family": "gamma", "params": {"shape": self.shape, "rate": self.rate_param}}


@dataclass(frozen=True)
class Erlang(InterRequestDistribution):
    stages: int
    rate_param: float

    def __post_init__(self):
        if not (isinstance(self.stages, (int, np.integer)) and self.stages >= 1):
            raise ConfigError(f"erlang stages must be a positive integer, got {self.stages}")
        if not self.rate_param > 0:
            raise ConfigError("erlang rate must be > 0")

    @property
    def mean(self):
        return self.stages / self.rate_param

    def _cdf(self, t):
        return sc.gammainc(self.stages, self.rate_param * t)

    def _pdf(self, t):
        x = self.rate_param * t
        return self.rate_param * np.exp(
            sc.xlogy(self.stages - 1.0, x) - x - sc.gammaln(self.stages))

    def _age_cdf(self, t):
        x = self.rate_param * t
        part = t * sc.gammaincc(self.stages, x) + self.mean * sc.gammainc(self.stages + 1.0, x)
        return np.minimum(part / self.mean, 1.0)

    def quantile(self, u):
        if not 0.0 <= u < 1.0:
            raise ConfigError(f"unbounded quantile: u={u!r} outside [0, 1)")
        return float(sc.gammaincinv(self.stages, u)) / self.rate_param

    def _scaled(self, f):
        return Erlang(self.stages, self.rate_param / f)

    def sample_inter_batch(self, rng, size):
        return rng.gamma(float(self.stages), 1.0 / self.rate_param, size)

    def sample_age(self, rng):
        # equilibrium law of an Erlang(k) is a uniform mixture of Erlang(1..k)
        j = int(rng.integers(1, self.stages + 1))
        return float(rng.gamma(j, 1.0 / self.rate_param))

    def config(self):
        return {"family": "erlang", "params": {"stages": int(self.stages), "rate": self.rate_param}}


@dataclass(frozen=True)
class Weibull(InterRequestDistribution):
    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ConfigError("weibull shape and scale must be > 0")

    @property
    def mean(self):
        return self.scale * math.gamma(1.0 + 1.0 / self.shape)

    def _cdf(self, t):
        return -np.expm1(-np.power(t / self.scale, self.shape))

    def _pdf(self, t):
        z = t / self.scale
        return (self.shape / self.scale) * np.power(z, self.shape - 1.0) * np.exp(-np.power(z, self.shape))

    def _age_cdf(self, t):
        # same partial-expectation identity; E[X; X<=t] reduces to a lower
        # incomplete gamma in (t/scale)^shape
        z = np.power(t / self.scale, self.shape)
        a = 1.0 + 1.0 / self.shape
        part = t * np.exp(-z) + self.mean * sc.gammainc(a, z)
        return np.minimum(part / self.mean, 1.0)

    def quantile(self, u):
        if not 0.0 <= u < 1.0:
            raise ConfigError(f"unbounded quantile: u={u!r} outside [0, 1)")
        return self.scale * (-math.log1p(-u)) ** (1.0 / self.shape)

    def _scaled(self, f):
        return Weibull(self.shape, self.scale * f)

    def sample_inter_batch(self, rng, size):
        return self.scale * rng.weibull(self.shape, size)

    def config(self):
        return {"family": "weibull", "params": {"shape": self.shape, "scale": self.scale}}


@dataclass(frozen=True)
class Hyperexponential(InterRequestDistribution):
    weights: tuple
    rates: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        r = np.asarray(self.rates, dtype=float)
        if w.ndim != 1 or w.shape != r.shape or w.size == 0:
            raise ConfigError("hyperexponential weights and rates must be equal-length vectors")
        if np.any(w <= 0) or np.any(r <= 0):
            raise ConfigError("hyperexponential weights and rates must be > 0")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ConfigError(f"hyperexponential weights must sum to 1, got {w.sum()!r}")
        object.__setattr__(self, "weights", tuple(w / w.sum()))
        object.__setattr__(self, "rates", tuple(r))

    @property
    def _w(self):
        return np.asarray(self.weights)

    @property
    def _r(self):
        return np.asarray(self.rates)

    @property
    def mean(self):
        return float(np.sum(self._w / self._r))

    def _cdf(self, t):
        return -np.einsum("j,...j->...", self._w,
                          np.expm1(-np.multiply.outer(t, self._r)))

    def _pdf(self, t):
        return np.einsum("j,...j->...", self._w * self._r,
                         np.exp(-np.multiply.outer(t, self._r)))

    def _age_cdf(self, t):
        # age law is again hyperexponential with weights w_j/(r_j * mean)
        wa = self._w / self._r / self.mean
        return -np.einsum("j,...j->...", wa, np.expm1(-np.multiply.outer(t, self._r)))

    def _scaled(self, f):
        return Hyperexponential(self.weights, tuple(r / f for r in self.rates))

    def sample_inter_batch(self, rng, size):
        cw = np.cumsum(self._w)
        comp = np.searchsorted(cw, rng.random(size), side="right")
        comp = np.minimum(comp, len(self.rates) - 1)
        return rng.exponential(1.0, size) / self._r[comp]

    def sample_age(self, rng):
        wa = np.cumsum(self._w / self._r / self.mean)
        comp = min(int(np.searchsorted(wa, rng.random(), side="right")), len(self.rates) - 1)
        return float(rng.exponential(1.0 / self.rates[comp]))

    def config(self):
        return {"family": "hyperexponential",
                "params": {"weights": list(self.weights), "rates": list(self.rates)}}


@dataclass(frozen=True)
class ParetoLomax(InterRequestDistribution):
    """Lomax (Pareto type II) law; shape > 1 keeps the mean finite."""

    shape: float
    scale: float

    def __post_init__(self):
        if not self.shape > 1:
            raise ConfigError(f"pareto-lomax shape must be > 1 for a finite mean, got {self.shape}")
        if not self.scale > 0:
            raise ConfigError("pareto-lomax scale must be > 0")

    @property
    def mean(self):
        return self.scale / (self.shape - 1.0)

    def _cdf(self, t):
        return -np.expm1(-self.shape * np.log1p(t / self.scale))

    def _pdf(self, t):
        return (self.shape / self.scale) * np.exp(-(self.shape + 1.0) * np.log1p(t / self.scale))

    def _age_cdf(self, t):
        # the age law is again Lomax with shape-1
        return -np.expm1(-(self.shape - 1.0) * np.log1p(t / self.scale))

    def quantile(self, u):
        if not 0.0 <= u < 1.0:
            raise ConfigError(f"unbounded quantile: u={u!r} outside [0, 1)")
        return self.scale * math.expm1(-math.log1p(-u) / self.shape)

    def age_quantile(self, u):
        if not 0.0 <= u < 1.0:
            raise ConfigError(f"unbounded quantile: u={u!r} outside [0, 1)")
        return self.scale * math.expm1(-math.log1p(-u) / (self.shape - 1.0))

    def _scaled(self, f):
        return ParetoLomax(self.shape, self.scale * f)

    def sample_inter_batch(self, rng, size):
        return self.scale * rng.pareto(self.shape, size)

    def sample_age(self, rng):
        return self.scale * float(rng.pareto(self.shape - 1.0))

    def config(self):
        return {"family": "pareto_lomax", "params": {"shape": self.shape, "scale": self.scale}}


_FAMILIES = {
    "exponential": lambda p: Exponential(p["rate"]),
    "gamma": lambda p: Gamma(p["shape"], p["rate"]),
    "weibull": lambda p: Weibull(p["shape"], p["scale"]),
    "erlang": lambda p: Erlang(int(p["stages"]), p["rate"]),
    "hyperexponential": lambda p: Hyperexponential(tuple(p["weights"]), tuple(p["rates"])),
    "pareto_lomax": lambda p: ParetoLomax(p["shape"], p["scale"]),
}


def distribution_from_config(spec: dict) -> InterRequestDistribution:
    """Build a distribution from {"family": ..., "params": {...}} config text."""
    try:
        family = spec["family"]
        params = spec.get("params", {})
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"malformed distribution config: {spec!r}") from exc
    try:
        builder = _FAMILIES[family]
    except KeyError:
        raise ConfigError(f"unknown distribution family {family!r}; "
                          f"known: {sorted(_FAMILIES)}") from None
    try:
        return builder(params)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad parameters for family {family!r}: {params!r}") from exc


class MaxEnvelope:
    """Pointwise maximum of the standardized cdfs of several families.

    This is the canonical envelope construction when the catalog mixes
    scale families: its ccdf is the pointwise minimum of the members'
    standardized ccdfs, so it lower-bounds every member by construction,
    and its mean is at most 1.
    """

    def __init__(self, members, grid_points: int = 4096):
        if not members:
            raise ConfigError("MaxEnvelope needs at least one member distribution")
        self.members = tuple(m.standardize() for m in members)
        self._grid_points = grid_points
        self._mean = None
        self._age_grid = None

    def cdf(self, t):
        a, scalar = _as_array(t)
        out = np.maximum.reduce([m.cdf(a) for m in self.members])
        return _ret(out, scalar)

    def ccdf(self, t):
        a, scalar = _as_array(t)
        out = np.minimum.reduce([m.ccdf(a) for m in self.members])
        return _ret(out, scalar)

    @property
    def mean(self) -> float:
        if self._mean is None:
            val, err = integrate.quad(self.ccdf, 0.0, np.inf, epsabs=1e-11, limit=500)
            if err > 1e-7:
                raise NumericsError(f"envelope mean integral error {err:.2e} too large")
            self._mean = float(val)
        return self._mean

    def _age_table(self):
        # cumulative trapezoid of the min-ccdf on a dense log grid, dense
        # enough for quantile inversion to ~1e-7
        if self._age_grid is None:
            hi = 1.0
            while self.ccdf(hi) > 1e-13 and hi < 1e12:
                hi *= 2.0
            grid = np.concatenate([[0.0], np.geomspace(1e-9, hi, self._grid_points)])
            cc = self.ccdf(grid)
            cum = integrate.cumulative_trapezoid(cc, grid, initial=0.0) / self.mean
            self._age_grid = (grid, np.minimum(cum, 1.0))
        return self._age_grid

    def age_cdf(self, t):
        grid, cum = self._age_table()
        a, scalar = _as_array(t)
        out = np.interp(np.maximum(a, 0.0), grid, cum)
        return _ret(out, scalar)

    def age_quantile(self, u: float) -> float:
        if not 0.0 <= u < 1.0:
            raise ConfigError(f"unbounded quantile: u={u!r} outside [0, 1)")
        grid, cum = self._age_table()
        if u >= cum[-1]:
            raise NumericsError(f"envelope age quantile u={u} beyond tabulated range")
        return float(np.interp(u, cum, grid))


@dataclass(frozen=True)
class EnvelopeReport:
    """Outcome of testing a candidate envelope against standardized ccdfs."""

    psi: object
    m_psi: float
    grid: np.ndarray = field(repr=False)
    min_margin: float
    holds: bool


def _default_envelope_grid():
    return np.geomspace(1e-6, 1e3, 1000)


def check_envelope(family, psi, grid=None, tol: float = 1e-9) -> EnvelopeReport:
    """Check that psi's ccdf lower-bounds every standardized member ccdf.

    ``psi`` may be any object with ``ccdf`` and ``mean`` (a parametric
    distribution or a MaxEnvelope).  The check evaluates
    ``min_i ccdf*_i(t) - psi.ccdf(t)`` on the grid; it holds when the
    minimum margin is >= -tol.

    Raises
    ------
    ConfigError
        if psi's mean lies outside (0, 1]; a valid envelope of unit-mean
        cdfs can never have mean above 1.
    """
    if grid is None:
        grid = _default_envelope_grid()
    elif isinstance(grid, tuple):
        lo, hi, num = grid
        grid = np.geomspace(lo, hi, int(num))
    else:
        grid = np.asarray(grid, dtype=float)
    m_psi = float(psi.mean)
    if not 0.0 < m_psi <= 1.0 + tol:
        raise ConfigError(f"invalid envelope: mean {m_psi!r} outside (0, 1]")
    std = [d.standardize() for d in family]
    member_ccdf = np.minimum.reduce([d.ccdf(grid) for d in std])
    margin = member_ccdf - psi.ccdf(grid)
    min_margin = float(margin.min())
    return EnvelopeReport(psi=psi, m_psi=m_psi, grid=grid,
                          min_margin=min_margin, holds=bool(min_margin >= -tol))


@dataclass(frozen=True)
class SmoothnessReport:
    """Relative-Lipschitz constants of a family of standardized cdfs.

    B bounds |G(t) - G(t +- x t)| <= B x for x in [0, rho] (grid estimate),
    b0 = sup_t t G'(t) is the density route to the same constant, and
    uniform_lipschitz_M = sup G' when the densities are bounded (None when
    a member density diverges at 0).
    """

    B: float
    rho: float
    b0: float
    uniform_lipschitz_M: float | None


def _density_bounded(d) -> bool:
    if isinstance(d, Gamma):
        return d.shape >= 1.0
    if isinstance(d, Weibull):
        return d.shape >= 1.0
    return True  # exponential, erlang, hyperexponential, lomax


def _sup_t_pdf(d) -> float:
    # maximize t*pdf(t): log-grid scan plus a bounded local polish
    ts = np.geomspace(1e-8, 1e4, 2000)
    vals = ts * d.pdf(ts)
    k = int(np.argmax(vals))
    lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, len(ts) - 1)]
    res = optimize.minimize_scalar(lambda u: -u * d.pdf(u), bounds=(lo, hi), method="bounded")
    return float(max(vals[k], -res.fun))


def check_smoothness(family, rho: float, t_grid=None, x_points: int = 40) -> SmoothnessReport:
    """Estimate the relative-Lipschitz constants of the standardized family."""
    if not 0.0 < rho <= 1.0:
        raise ConfigError(f"rho must be in (0, 1], got {rho}")
    std = [d.standardize() for d in family]
    if t_grid is None:
        t_grid = np.geomspace(1e-4, 1e3, 400)
    xs = np.linspace(rho / x_points, rho, x_points)
    B = 0.0
    for d in std:
        base = d.cdf(t_grid)
        for x in xs:
            up = np.abs(d.cdf(t_grid * (1.0 + x)) - base) / x
            dn = np.abs(base - d.cdf(t_grid * (1.0 - x))) / x
            B = max(B, float(up.max()), float(dn.max()))
    b0 = max(_sup_t_pdf(d) for d in std)
    if all(_density_bounded(d) for d in std):
        M = max(float(np.max(d.pdf(np.geomspace(1e-10, 1e3, 2000)))) for d in std)
        M = max(M, max(float(d.pdf(1e-12)) for d in std))
    else:
        M = None
    return SmoothnessReport(B=B, rho=rho, b0=b0, uniform_lipschitz_M=M)


def adaptive_simpson(fn, a: float, b: float, atol: float = _AGE_QUAD_ATOL,
                     max_depth: int = 64) -> float:
    """Adaptive Simpson quadrature with an absolute-error target.

    Kept as the generic fallback integrator for cdf-shaped integrands
    (bounded, piecewise smooth).  Raises QuadratureError when the depth
    cap is hit before the tolerance is met.
    """

    def simpson(x0, x2, f0, f1, f2):
        return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2)

    def recurse(x0, x2, f0, f1, f2, whole, tol, depth):
        x1 = 0.5 * (x0 + x2)
        xl, xr = 0.5 * (x0 + x1), 0.5 * (x1 + x2)
        fl, fr = fn(xl), fn(xr)
        left = simpson(x0, x1, f0, fl, f1)
        right = simpson(x1, x2, f1, fr, f2)
        err = left + right - whole
        if abs(err) <= 15.0 * tol:
            return left + right + err / 15.0
        if depth <= 0:
            raise QuadratureError(
                f"adaptive Simpson did not converge on [{x0}, {x2}]",
                achieved=abs(err))
        return (recurse(x0, x1, f0, fl, f1, left, tol / 2.0, depth - 1)
                + recurse(x1, x2, f1, fr, f2, right, tol / 2.0, depth - 1))

    fa, fm, fb = fn(a), fn(0.5 * (a + b)), fn(b)
    whole = simpson(a, b, fa, fm, fb)
    return recurse(a, b, fa, fm, fb, whole, atol, max_depth)
