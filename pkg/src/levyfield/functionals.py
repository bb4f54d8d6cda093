"""Spectral functionals: energies, existence, spatial increments, gauges, indices.

All integrals are over frequency space with the convention
fhat(xi) = int exp(i xi x) f(x) dx, so a point mass at x0 has |fhat| = 1 and
a unit-mass box of radius eps has fhat(0) = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    DivergenceDetected,
    ExistenceRequired,
    InconclusiveTrend,
    ToleranceNotMet,
)
from .quadrature import (
    DEFAULT_QUAD,
    IntegralResult,
    QuadratureSpec,
    alternating_cos_integral,
    integrate_adaptive,
    integrate_resolved,
    smooth_decay_integral,
)
from .symbols import IndexEstimate, Symbol


# ---------------------------------------------------------------------------
# test functions


@dataclass(frozen=True)
class TestFunction:
    """A test function represented by its closed-form Fourier transform.

    |fhat|^2 decomposes as smooth2(xi) + osc_amp2(xi) cos(osc_omega xi) for
    xi beyond any point, which is what the tail machinery integrates; the
    exact fhat2 is used on the resolved part of the axis.
    """

    kind: str
    params: tuple
    _fhat: Callable = field(repr=False)
    _fhat2: Callable = field(repr=False)
    smooth2: Callable = field(repr=False)
    smooth2_growth: float = 0.0
    osc_amp2: Callable | None = field(repr=False, default=None)
    osc_omega: float | None = None
    fast_decay: bool = False
    l2_norm_sq: float = math.inf

    def fhat(self, xi):
        return self._fhat(np.asarray(xi, dtype=float))

    def fhat2(self, xi):
        return self._fhat2(np.asarray(xi, dtype=float))

    @property
    def oscillatory(self) -> bool:
        return self.osc_omega is not None and self.osc_omega > 0


def delta(x: float = 0.0) -> TestFunction:
    return TestFunction(
        kind="delta",
        params=(("x", x),),
        _fhat=lambda xi: np.exp(1j * xi * x),
        _fhat2=lambda xi: np.ones_like(xi),
        smooth2=lambda xi: np.ones_like(xi),
    )


def delta_difference(x: float, y: float) -> TestFunction:
    """delta_x - delta_y; |fhat|^2 = 2(1 - cos(xi (x - y)))."""
    r = abs(x - y)
    return TestFunction(
        kind="delta-difference",
        params=(("x", x), ("y", y)),
        _fhat=lambda xi: np.exp(1j * xi * x) - np.exp(1j * xi * y),
        _fhat2=lambda xi: 2.0 * (1.0 - np.cos(xi * r)),
        smooth2=lambda xi: np.full_like(xi, 2.0 if r > 0 else 0.0),
        osc_amp2=(lambda xi: np.full_like(xi, -2.0)) if r > 0 else None,
        osc_omega=r if r > 0 else None,
    )


def gaussian(center: float = 0.0, width: float = 1.0) -> TestFunction:
    """Unit-mass Gaussian bump of standard deviation ``width``."""
    if width <= 0:
        raise ValueError("width must be positive")
    w2 = width * width
    return TestFunction(
        kind="gaussian",
        params=(("center", center), ("width", width)),
        _fhat=lambda xi: np.exp(1j * xi * center - 0.5 * w2 * xi * xi),
        _fhat2=lambda xi: np.exp(-w2 * xi * xi),
        smooth2=lambda xi: np.exp(-w2 * xi * xi),
        fast_decay=True,
        l2_norm_sq=1.0 / (2.0 * width * math.sqrt(math.pi)),
    )


def box(center: float = 0.0, radius: float = 1.0) -> TestFunction:
    """Normalized indicator of [center - radius, center + radius]."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    eps = radius

    def _sinc(xi):
        return np.sinc(xi * eps / np.pi)

    return TestFunction(
        kind="box",
        params=(("center", center), ("radius", radius)),
        _fhat=lambda xi: np.exp(1j * xi * center) * _sinc(xi),
        _fhat2=lambda xi: _sinc(xi) ** 2,
        smooth2=lambda xi: 0.5 / (eps * xi) ** 2,
        smooth2_growth=-2.0,
        osc_amp2=lambda xi: -0.5 / (eps * xi) ** 2,
        osc_omega=2.0 * eps,
        l2_norm_sq=0.5 / eps,
    )


def testfunction_from_config(spec: dict) -> TestFunction:
    kind = spec.get("kind")
    if kind == "delta":
        return delta(float(spec.get("x", 0.0)))
    if kind == "delta-difference":
        return delta_difference(float(spec["x"]), float(spec["y"]))
    if kind == "gaussian":
        return gaussian(float(spec.get("center", 0.0)), float(spec.get("width", 1.0)))
    if kind == "box":
        return box(float(spec.get("center", 0.0)), float(spec.get("radius", 1.0)))
    raise ValueError(f"unknown test function kind {kind!r}")


# ---------------------------------------------------------------------------
# core spectral integral: int env(|xi|) |fhat|^2 W(Re psi, |psi|) dxi / (2 pi)^d


def _sphere_area(d: int) -> float:
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def _first_reach(fn: Callable, level: float, start: float = 1.0) -> float:
    """Smallest xi (by doubling) with fn(xi) >= level."""
    x = start
    for _ in range(600):
        if fn(np.asarray(x)) >= level:
            return x
        x *= 2.0
    return x


def _spectral_functional(
    sym: Symbol,
    phi: TestFunction,
    weight: Callable,
    q: QuadratureSpec,
    *,
    weight_decay: float = 1.0,
    use_abs: bool = False,
) -> IntegralResult:
    """(2 pi)^-d int |fhat|^2 W(Re psi, |psi|) dxi, radially for d > 1."""
    d = sym.dimension
    if d > 1 and phi.kind != "delta":
        raise ValueError("only point masses are supported radially for d > 1")
    re_psi = sym.re
    abs_psi = (lambda xi: np.sqrt(sym.abs2(xi))) if use_abs else None
    const = _sphere_area(d) / (2.0 * math.pi) ** d

    radial = (lambda xi: xi ** (d - 1)) if d > 1 else (lambda xi: np.ones_like(xi))

    if not phi.oscillatory:
        env = lambda xi: phi.smooth2(xi) * radial(xi)
        res = smooth_decay_integral(
            weight,
            re_psi,
            q,
            abs_psi=abs_psi,
            env=env,
            fast_decay=phi.fast_decay,
            weight_decay=weight_decay,
            env_growth=phi.smooth2_growth + (d - 1),
        )
        res.value *= const
        res.error *= const
        return res

    # oscillatory |fhat|^2: resolve [0, z0] exactly, then split into the
    # smooth envelope part and the Euler-accelerated cosine part
    omega = phi.osc_omega
    absf = abs_psi if abs_psi is not None else re_psi

    def body(xi):
        return phi.fhat2(xi) * weight(re_psi(xi), absf(xi))

    split = max(12.0 / omega, 1e-6)
    amp = lambda xi: phi.osc_amp2(xi) * weight(re_psi(xi), absf(xi))
    phase = lambda xi: omega * xi
    z0, osc_val, osc_err = alternating_cos_integral(amp, phase, split, q)
    head_val, head_err = integrate_resolved(body, 0.0, z0, abs_floor=q.abs_tol / 50)
    res = smooth_decay_integral(
        weight,
        re_psi,
        q,
        abs_psi=abs_psi,
        env=phi.smooth2,
        lower=z0,
        weight_decay=weight_decay,
        env_growth=phi.smooth2_growth,
    )
    if res.status == "converged":
        res.value = const * (head_val + res.value + osc_val)
        res.error = const * (head_err + res.error + osc_err)
    return res


def _require(res: IntegralResult, q: QuadratureSpec, what: str) -> IntegralResult:
    if res.status == "divergent":
        raise DivergenceDetected(
            f"{what}: partial integrals grow with exponent "
            f"~{res.growth_exponent:.3g} at cutoff {res.cutoff:.3g}"
        )
    if res.status == "inconclusive":
        raise InconclusiveTrend(f"{what}: no stable trend up to cutoff {res.cutoff:.3g}")
    if not res.within(q):
        raise ToleranceNotMet(
            f"{what}: residual {res.error:.3g} above tolerance at cutoff {res.cutoff:.3g}"
        )
    return res


# ---------------------------------------------------------------------------
# existence


@dataclass(frozen=True)
class ExistenceResult:
    """Classification of int dxi / (theta + Re psi)."""

    status: str  # "finite" | "divergent" | "inconclusive"
    value: float | None
    growth_exponent: float | None
    cutoff: float

    @property
    def finite(self) -> bool:
        return self.status == "finite"


def hawkes_existence(
    sym: Symbol, theta: float = 1.0, q: QuadratureSpec = DEFAULT_QUAD
) -> ExistenceResult:
    """Classify the existence integral int dxi/(theta + Re psi(xi)).

    Finiteness (for some, hence all, theta > 0) is equivalent to the
    symmetrized driving process having local times, i.e. to random-field
    solvability of the linear equations.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    d = sym.dimension
    weight = lambda u, a: 1.0 / (theta + u)
    env = (lambda xi: xi ** (d - 1)) if d > 1 else None
    res = smooth_decay_integral(
        weight, sym.re, q, env=env, env_growth=float(d - 1), weight_decay=1.0
    )
    scale = _sphere_area(d)
    if res.status == "converged":
        return ExistenceResult("finite", scale * res.value, None, res.cutoff)
    if res.status == "divergent":
        return ExistenceResult("divergent", None, res.growth_exponent, res.cutoff)
    return ExistenceResult("inconclusive", None, None, res.cutoff)


def _require_existence(sym: Symbol, q: QuadratureSpec, context: str):
    check = hawkes_existence(sym, 1.0, q)
    if not check.finite:
        raise ExistenceRequired(
            f"{context}: point masses are not admissible test functions "
            f"(existence integral {check.status})"
        )


# ---------------------------------------------------------------------------
# energies


def energy_result(
    sym: Symbol, phi: TestFunction, lam: float, q: QuadratureSpec = DEFAULT_QUAD
) -> IntegralResult:
    """E(lambda; phi) = (2 pi)^-d int |fhat|^2 / (1/lambda + Re psi), with error."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if phi.kind == "delta":
        _require_existence(sym, q, "energy")
    theta = 1.0 / lam
    weight = lambda u, a: 1.0 / (theta + u)
    res = _spectral_functional(sym, phi, weight, q)
    return _require(res, q, "energy")


def energy_E(
    sym: Symbol, phi: TestFunction, lam: float, q: QuadratureSpec = DEFAULT_QUAD
) -> float:
    return energy_result(sym, phi, lam, q).value


def energy_F_result(
    sym: Symbol, phi: TestFunction, eps: float, q: QuadratureSpec = DEFAULT_QUAD
) -> IntegralResult:
    """F(eps; phi) = (2 pi)^-d int (1 ^ eps^2 |psi|^2) |fhat|^2 / (1 + Re psi)."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if eps == 0.0:
        return IntegralResult(0.0, 0.0, "converged", 0.0)
    if phi.kind == "delta":
        _require_existence(sym, q, "increment energy")
    e2 = eps * eps

    def weight(u, a):
        return np.minimum(1.0, e2 * a * a) / (1.0 + u)

    res = _spectral_functional(sym, phi, weight, q, use_abs=not sym.symmetric)
    return _require(res, q, "increment energy")


def energy_F(
    sym: Symbol, phi: TestFunction, eps: float, q: QuadratureSpec = DEFAULT_QUAD
) -> float:
    return energy_F_result(sym, phi, eps, q).value


# ---------------------------------------------------------------------------
# spatial increment function h and the continuity condition built on it


def h_function_result(
    sym: Symbol, r: float, q: QuadratureSpec = DEFAULT_QUAD, *, checked: bool = True
) -> IntegralResult:
    """h(r) = (1/2pi) int (1 - cos(r xi)) / (1 + Re psi) dxi over the line."""
    if sym.dimension != 1:
        raise ValueError("h is defined for d = 1")
    if r < 0:
        raise ValueError("r must be nonnegative")
    if checked:
        _require_existence(sym, q, "h")
    if r == 0.0:
        return IntegralResult(0.0, 0.0, "converged", 0.0)
    res = _spectral_functional(sym, delta_difference(0.0, r), lambda u, a: 1.0 / (1.0 + u), q)
    _require(res, q, "h")
    res.value *= 0.5
    res.error *= 0.5
    return res


def h_function(sym: Symbol, r: float, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    return h_function_result(sym, r, q).value


# ---------------------------------------------------------------------------
# nondecreasing rearrangement


@dataclass
class Rearrangement:
    """Hardy-Littlewood nondecreasing rearrangement of tabulated samples.

    Each sample carries the width of its grid cell; the rearranged function
    is the right-continuous step function through the sorted values.
    """

    grid: np.ndarray
    sorted_values: np.ndarray
    cum_widths: np.ndarray
    overflow_flagged: bool = False

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        idx = np.searchsorted(self.cum_widths, r, side="right")
        over = idx >= self.sorted_values.size
        if np.any(over):
            self.overflow_flagged = True
        idx = np.minimum(idx, self.sorted_values.size - 1)
        return self.sorted_values[idx]

    @property
    def values_on_grid(self) -> np.ndarray:
        return self(self.grid)


def rearrange_nondecreasing(grid: np.ndarray, values: np.ndarray) -> Rearrangement:
    """Nondecreasing rearrangement h-bar of h sampled on a grid of r >= 0."""
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if grid.size < 64:
        raise ValueError("need at least 64 sample points")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    widths = np.empty_like(grid)
    widths[:-1] = np.diff(grid)
    widths[-1] = widths[-2]
    order = np.argsort(values, kind="stable")
    return Rearrangement(
        grid=grid,
        sorted_values=values[order],
        cum_widths=np.cumsum(widths[order]),
    )


# ---------------------------------------------------------------------------
# integral trend tests on shrinking lower limits


def _series_trend(pieces: np.ndarray) -> str:
    """Classify sum of positive pieces P_j (j-th piece of a [delta_j, r0]
    refinement) as converging or diverging from the tail slope of log P."""
    pieces = np.asarray(pieces, dtype=float)
    if np.all(pieces == 0.0):
        return "converges"
    pos = pieces > 0
    if not np.all(pos[-3:]):
        return "converges" if pieces[-1] == 0 else "inconclusive"
    j = np.arange(1, pieces.size + 1, dtype=float)
    k = min(6, pieces.size)
    slope = np.polyfit(np.log(j[-k:]), np.log(pieces[-k:]), 1)[0]
    if slope < -1.5:
        return "converges"
    if slope > -1.2:
        return "diverges"
    return "inconclusive"


@dataclass(frozen=True)
class BarlowResult:
    status: str  # "holds" | "fails" | "inconclusive"
    value: float
    pieces: np.ndarray

    @property
    def holds(self) -> bool:
        return self.status == "holds"


def barlow_condition(
    sym: Symbol | None,
    q: QuadratureSpec = DEFAULT_QUAD,
    *,
    r0: float = 1.0,
    decades: int = 8,
    points_per_decade: int = 12,
    h_fn: Callable | None = None,
) -> BarlowResult:
    """Classify int_{0+} h-bar(r) / (r |log r|^(1/2)) dr.

    Convergence is the spatial-continuity criterion for the parabolic field
    and for the local times of the symmetrized process.  ``h_fn`` overrides
    the spectral h (used for degenerate inputs and testing).
    """
    if h_fn is None:
        _require_existence(sym, q, "spatial continuity condition")
        hq = QuadratureSpec(
            abs_tol=max(q.abs_tol, 1e-13),
            rel_tol=max(q.rel_tol, 1e-7),
            max_cutoff=q.max_cutoff,
        )
        h_fn = lambda r: h_function_result(sym, r, hq, checked=False).value

    delta_min = r0 * 10.0 ** (-decades)
    grid = np.geomspace(delta_min, r0, decades * points_per_decade + 1)
    hvals = np.array([h_fn(r) for r in grid])
    # rearrangement on the log grid (cells weighted by width); for the
    # monotone h of the catalog this is h itself
    rbar = rearrange_nondecreasing(grid, hvals)
    hbar = rbar.values_on_grid

    def integrand_on(gslice, hslice):
        r = gslice
        mid_h = 0.5 * (hslice[1:] + hslice[:-1])
        mid_r = np.sqrt(r[1:] * r[:-1])
        w = np.diff(r)
        return np.sum(mid_h / (mid_r * np.sqrt(np.abs(np.log(mid_r)))) * w)

    pieces = []
    for j in range(decades):
        lo = j * points_per_decade
        hi = (j + 1) * points_per_decade
        sl = slice(lo, hi + 1)
        pieces.append(integrand_on(grid[sl], hbar[sl]))
    pieces = np.array(pieces[::-1])  # pieces[j] covers [delta_{j+1}, delta_j]
    status = _series_trend(pieces)
    value = float(np.sum(pieces))
    if status == "converges":
        return BarlowResult("holds", value, pieces)
    if status == "diverges":
        return BarlowResult("fails", value, pieces)
    return BarlowResult("inconclusive", value, pieces)


# ---------------------------------------------------------------------------
# gauge functions and the temporal continuity condition


@dataclass(frozen=True)
class GaugeSpec:
    """A candidate gauge: rule s -> g(s) with a declared-increasing flag."""

    name: str
    rule: Callable = field(repr=False)
    declared_increasing: bool = True

    def __call__(self, s):
        return self.rule(np.asarray(s, dtype=float))


def gauge_log_power(q: float) -> GaugeSpec:
    return GaugeSpec(
        name=f"log^{q:g}", rule=lambda s: np.log(np.e + s) ** q
    )


def gauge_constant(c: float = 1.0) -> GaugeSpec:
    return GaugeSpec(name=f"const{c:g}", rule=lambda s: np.full_like(np.asarray(s, float), c))


def gauge_identity() -> GaugeSpec:
    return GaugeSpec(name="identity", rule=lambda s: np.asarray(s, dtype=float))


@dataclass(frozen=True)
class GaugeReport:
    ok: bool
    monotone: bool
    slowly_varying: bool
    integral_status: str  # "converges" | "diverges" | "inconclusive"

    def __bool__(self) -> bool:
        return self.ok


def is_gauge(g: GaugeSpec, decades: int = 40) -> GaugeReport:
    """Check monotonicity, slow variation, and the integrability condition
    int_{0+} ds / (s log(1/s) g(1/s)) via a shrinking-lower-limit trend."""
    s = np.geomspace(1e-2, 1e60, 240)
    gs = g(s)
    monotone = bool(np.all(np.diff(gs) >= -1e-12 * np.maximum(np.abs(gs[:-1]), 1.0)))

    sv_grid = 10.0 ** np.arange(4, 61, 8, dtype=float)
    ratios = np.abs(g(2.0 * sv_grid) / g(sv_grid) - 1.0)
    slowly = bool(ratios[-1] <= 0.02 and ratios[-1] <= ratios[0] + 1e-12)

    # substitute s = e^-v: the condition becomes int^oo dv / (v g(e^v))
    def piece(j):
        v_lo, v_hi = j * math.log(10.0), (j + 1) * math.log(10.0)
        val, _ = integrate_adaptive(
            lambda v: 1.0 / (v * g(np.exp(np.minimum(v, 700.0)))), v_lo, v_hi
        )
        return val

    pieces = np.array([piece(j) for j in range(1, decades + 1)])
    status = _series_trend(pieces)
    ok = monotone and slowly and status == "converges"
    return GaugeReport(ok, monotone, slowly, status)


@dataclass(frozen=True)
class ContinuityReport:
    holds: bool
    value: float | None
    status: str


def temporal_continuity_condition(
    sym: Symbol,
    phi: TestFunction,
    g: GaugeSpec,
    q: QuadratureSpec = DEFAULT_QUAD,
) -> ContinuityReport:
    """Finiteness of int log(1 + Re psi) g(1 + |psi|) / (1 + Re psi) |fhat|^2;
    finiteness gives a continuous modification in time."""
    if not is_gauge(g).ok:
        raise ValueError(f"{g.name} is not a gauge function")
    if phi.kind == "delta":
        _require_existence(sym, q, "temporal continuity")

    def weight(u, a):
        return np.log1p(u) * g.rule(1.0 + a) / (1.0 + u)

    loose = QuadratureSpec(
        abs_tol=max(q.abs_tol, 1e-12),
        rel_tol=max(q.rel_tol, 1e-4),
        max_cutoff=q.max_cutoff,
    )
    res = _spectral_functional(sym, phi, weight, loose, use_abs=not sym.symmetric)
    if res.status == "converged":
        return ContinuityReport(True, res.value, "finite")
    if res.status == "divergent":
        return ContinuityReport(False, None, "divergent")
    raise InconclusiveTrend("temporal continuity condition: trend undecided")


def slow_variation_tail(
    g: GaugeSpec, alpha: float, x: float, q: QuadratureSpec = DEFAULT_QUAD
):
    """int_x^oo t^-alpha g(t) dt and its ratio to g(x)/((alpha-1) x^(alpha-1)).

    For slowly varying g the ratio tends to 1 as x grows.
    """
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    if x <= 0:
        raise ValueError("x must be positive")

    def weight(u, a):
        return g.rule(u) * u ** (-alpha)

    res = smooth_decay_integral(
        weight,
        lambda xi: xi,
        q,
        lower=x,
        weight_decay=alpha,
    )
    _require(res, q, "slowly-varying tail integral")
    predicted = g.rule(np.asarray(x)) / ((alpha - 1.0) * x ** (alpha - 1.0))
    return res.value, float(res.value / predicted)


# ---------------------------------------------------------------------------
# liminf indices on dyadic grids


def _liminf_index(
    scales: np.ndarray, values: np.ndarray, tail_window: int = 10
) -> IndexEstimate:
    mask = np.isfinite(values) & (values > 0)
    scales, values = scales[mask], values[mask]
    ratios = np.log(values) / np.log(scales)
    tail = slice(-min(tail_window, ratios.size), None)
    slope = float(np.polyfit(np.log(scales[tail]), np.log(values[tail]), 1)[0])
    return IndexEstimate(
        estimate=float(np.min(ratios[tail])), slope=slope, tail_window=tail_window
    )


def lower_index_E(
    sym: Symbol,
    phi: TestFunction,
    q: QuadratureSpec | None = None,
    *,
    j_max: int = 40,
    tail_window: int = 10,
) -> IndexEstimate:
    """liminf of log E(eps; phi) / log eps on eps = 2^-j, j <= j_max.

    The grid floor 2^-40 and the last-``tail_window`` minimum are part of
    the contract; a genuine liminf is not computable.
    """
    if q is None:
        q = QuadratureSpec(rel_tol=1e-6, max_cutoff=1e16)
    energy_E(sym, phi, 1.0, q)  # precondition: finite at lambda = 1
    eps = 2.0 ** (-np.arange(1, j_max + 1, dtype=float))
    vals = np.array([energy_E(sym, phi, e, q) for e in eps])
    return _liminf_index(eps, vals, tail_window)


def lower_index_h(
    sym: Symbol,
    q: QuadratureSpec | None = None,
    *,
    j_max: int = 40,
    tail_window: int = 10,
) -> IndexEstimate:
    """liminf of log h(r) / log r on r = 2^-j; twice the critical spatial
    Holder exponent of the fields and of the local times."""
    if q is None:
        q = QuadratureSpec(rel_tol=1e-6, max_cutoff=1e16)
    _require_existence(sym, q, "h index")
    r = 2.0 ** (-np.arange(1, j_max + 1, dtype=float))
    vals = np.array([h_function_result(sym, x, q, checked=False).value for x in r])
    return _liminf_index(r, vals, tail_window)
