"""Quadrature-grade second moments of the parabolic field H and the
hyperbolic field W, and the two-sided inequality harness built on them.

Time integrals are always done in closed form per frequency before the
xi-quadrature; only the brute-force oracles in the tests integrate in time
numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import SymmetryRequired
from .functionals import (
    TestFunction,
    _first_reach,
    _require,
    _require_existence,
    _spectral_functional,
    delta,
    delta_difference,
    energy_result,
    energy_F_result,
    h_function_result,
)
from .quadrature import (
    DEFAULT_QUAD,
    QuadratureSpec,
    alternating_cos_integral,
    integrate_resolved,
)
from .symbols import Symbol, lower_index


@dataclass(frozen=True)
class MomentReport:
    quantity: str
    value: float
    error: float

    def __post_init__(self):
        if self.error < 0:
            raise ValueError("error must be nonnegative")


@dataclass(frozen=True)
class InequalityReport:
    """Two-sided bound check: lower <= middle <= upper within tolerance."""

    quantity: str
    lower: float
    middle: float
    upper: float
    tolerance: float
    quad_error: float = 0.0

    @property
    def margin_lo(self) -> float:
        return self.middle - self.lower

    @property
    def margin_hi(self) -> float:
        return self.upper - self.middle

    @property
    def passed(self) -> bool:
        return self.margin_lo >= -self.tolerance and self.margin_hi >= -self.tolerance

    def csv_row(self) -> dict:
        return {
            "quantity": self.quantity,
            "lower": self.lower,
            "middle": self.middle,
            "upper": self.upper,
            "margin_lo": self.margin_lo,
            "margin_hi": self.margin_hi,
            "pass": self.passed,
        }


# ---------------------------------------------------------------------------
# parabolic moments


def _heat_weight(t: float) -> Callable:
    def w(u, a):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = -np.expm1(-2.0 * t * u) / (2.0 * u)
        return np.where(u > 0.0, out, t)

    return w


def heat_variance(
    sym: Symbol, phi: TestFunction, t: float, q: QuadratureSpec = DEFAULT_QUAD
) -> MomentReport:
    """E|H(t, phi)|^2 = (2 pi)^-d int |fhat|^2 (1 - e^(-2 t Re psi))/(2 Re psi)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    name = f"heat_variance[{sym.kind},{phi.kind},t={t:g}]"
    if t == 0.0:
        return MomentReport(name, 0.0, 0.0)
    if phi.kind in ("delta", "delta-difference"):
        _require_existence(sym, q, "heat variance")
    res = _require(_spectral_functional(sym, phi, _heat_weight(t), q), q, name)
    return MomentReport(name, res.value, res.error)


def heat_increment_variance(
    sym: Symbol,
    phi: TestFunction,
    t: float,
    eps: float,
    q: QuadratureSpec = DEFAULT_QUAD,
) -> MomentReport:
    """Exact E|H(t+eps, phi) - H(t, phi)|^2.

    Splits into the propagated part with spectral factor
    (1 - e^(-2 t u)) |1 - e^(-eps psi)|^2 / (2u) and the fresh-noise part
    (1 - e^(-2 eps u)) / (2u); both time integrals are closed-form.
    """
    if t < 0 or eps < 0:
        raise ValueError("t and eps must be nonnegative")
    name = f"heat_increment[{sym.kind},{phi.kind},t={t:g},eps={eps:g}]"
    if eps == 0.0:
        return MomentReport(name, 0.0, 0.0)
    if phi.kind in ("delta", "delta-difference"):
        _require_existence(sym, q, "heat increment variance")
    wt, we = _heat_weight(t), _heat_weight(eps)

    def w(u, a):
        u = np.asarray(u, dtype=float)
        a = np.asarray(a, dtype=float)
        im = np.sqrt(np.maximum(a * a - u * u, 0.0))
        with np.errstate(over="ignore"):
            gone = np.exp(-eps * u)
        mod2 = 1.0 - 2.0 * gone * np.cos(eps * im) + gone * gone
        return wt(u, a) * mod2 + we(u, a)

    res = _require(
        _spectral_functional(sym, phi, w, q, use_abs=not sym.symmetric), q, name
    )
    return MomentReport(name, res.value, res.error)


def heat_cross_covariance(
    sym: Symbol,
    phi: TestFunction,
    psi: TestFunction,
    s: float,
    t: float,
    q: QuadratureSpec = DEFAULT_QUAD,
) -> float:
    """E[H(t, phi) H(s, psi)] for 0 <= s <= t.

    From the defining Wiener integral, E[H(t,phi)H(s,psi)] =
    int_0^s (P*_{t-r} phi, P*_{s-r} psi) dr; since P*_r has Fourier
    multiplier e^(-r psi), Plancherel gives

        (2 pi)^-d int fhat(xi) conj(psihat(xi)) e^(-(t-s) psi(xi))
                     (1 - e^(-2 s Re psi)) / (2 Re psi) dxi,

    which holds for asymmetric exponents as well (the r-integral only sees
    psi + conj(psi) = 2 Re psi).
    """
    if not 0 <= s <= t:
        raise ValueError("need 0 <= s <= t")
    if sym.dimension != 1:
        raise ValueError("cross covariance implemented for d = 1")
    if s == 0.0:
        return 0.0
    for f in (phi, psi):
        if f.kind in ("delta", "delta-difference"):
            _require_existence(sym, q, "cross covariance")
    ws = _heat_weight(s)

    def body(xi):
        xi = np.asarray(xi, dtype=float)
        pe = sym.exponent(xi)
        with np.errstate(over="ignore"):
            prop = np.exp(-(t - s) * pe)
        vals = phi.fhat(xi) * np.conj(psi.fhat(xi)) * prop
        return 2.0 * np.real(vals) * ws(sym.re(xi), None) / (2.0 * math.pi)

    if t > s:
        # e^(-(t-s) Re psi) forces superpolynomial decay
        cutoff = _first_reach(lambda x: (t - s) * sym.re(x), 60.0, 1.0)
        val, err = integrate_resolved(body, 0.0, cutoff, abs_floor=q.abs_tol / 50)
        return val
    if phi.kind == psi.kind and phi.params == psi.params:
        return heat_variance(sym, phi, s, q).value
    if phi.fast_decay or psi.fast_decay:
        w = max(
            dict(phi.params).get("width", 0.0), dict(psi.params).get("width", 0.0)
        )
        cutoff = max(2.0 * math.sqrt(60.0) / w, 10.0)
        val, err = integrate_resolved(body, 0.0, cutoff, abs_floor=q.abs_tol / 50)
        return val
    raise ValueError(
        "equal-time cross covariance needs matching or fast-decaying test functions"
    )


# ---------------------------------------------------------------------------
# hyperbolic moments


def _require_symmetric(sym: Symbol, what: str):
    if not sym.symmetric:
        raise SymmetryRequired(f"{what} requires a symmetric exponent (Im psi = 0)")


def _wave_sinc_weight(t: float) -> Callable:
    """(t/2)(1 - sinc(2 sqrt(u) t)) / u with a series branch near u = 0,
    where (1 - sinc(theta))/u = (2/3) t^2 (1 - theta^2/20 + theta^4/840 - ...)
    for theta = 2 t sqrt(u)."""

    def w(u, a):
        u = np.asarray(u, dtype=float)
        theta = 2.0 * t * np.sqrt(np.maximum(u, 0.0))
        small = theta < 1e-3
        ts = np.where(small, theta, 1.0)
        series = (t / 3.0) * t * t * (1.0 - ts * ts / 20.0 + ts**4 / 840.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            exact = (t / 2.0) * (1.0 - np.sinc(theta / np.pi)) / u
        return np.where(small, series, exact)

    return w


def wave_variance(
    sym: Symbol, phi: TestFunction, t: float, q: QuadratureSpec = DEFAULT_QUAD
) -> MomentReport:
    """E|W(t, phi)|^2 via the time-integrated spectral form
    (t / (2 (2 pi)^d)) int (1 - sin(2 sqrt(psi) t)/(2 sqrt(psi) t)) |fhat|^2 / psi.
    """
    _require_symmetric(sym, "wave variance")
    if t < 0:
        raise ValueError("t must be nonnegative")
    name = f"wave_variance[{sym.kind},{phi.kind},t={t:g}]"
    if t == 0.0:
        return MomentReport(name, 0.0, 0.0)
    if phi.kind in ("delta", "delta-difference"):
        _require_existence(sym, q, "wave variance")
    re = sym.re
    wexact = _wave_sinc_weight(t)

    def body(xi):
        xi = np.asarray(xi, dtype=float)
        return phi.fhat2(xi) * wexact(re(xi), None)

    if phi.fast_decay:
        wdt = dict(phi.params).get("width", 1.0)
        cutoff = max(math.sqrt(60.0) / wdt, 10.0)
        val, err = integrate_resolved(body, 0.0, cutoff, abs_floor=q.abs_tol / 50)
        return MomentReport(name, val / math.pi, err / math.pi)
    if phi.oscillatory:
        raise ValueError("wave variance supports delta and fast-decay test functions")

    # split at the first phase zero: exact body below, smooth + chirp beyond
    split = _first_reach(lambda x: re(x), (6.0 / t) ** 2, 1e-6)
    amp = lambda xi: -phi.smooth2(xi) / (
        4.0 * np.sqrt(re(xi)) * re(xi)
    )
    phase = lambda xi: 2.0 * t * np.sqrt(re(xi)) - 0.5 * math.pi
    z0, osc_val, osc_err = alternating_cos_integral(amp, phase, split, q)
    head_val, head_err = integrate_resolved(body, 0.0, z0, abs_floor=q.abs_tol / 50)
    from .quadrature import smooth_decay_integral

    smooth = smooth_decay_integral(
        lambda u, a: (t / 2.0) / u,
        re,
        q,
        env=phi.smooth2,
        lower=z0,
        env_growth=phi.smooth2_growth,
    )
    res = _require(smooth, q, name)
    value = (head_val + res.value + osc_val) / math.pi
    error = (head_err + res.error + osc_err) / math.pi
    return MomentReport(name, value, error)


def _wave_increment_pieces(t: float, eps: float, re: Callable):
    """Closed-in-time spectral decomposition of E|W(t+eps) - W(t)|^2.

    With a = sqrt(u), the propagated part is
    (1 - cos(a eps))[t + (sin(a(2t+eps)) - sin(a eps))/(2a)] and the fresh
    noise over the new window contributes eps/2 - sin(2 a eps)/(4a); summing,

      weight * u = (t + eps/2) - t cos(a eps)
                   + [sin(a(2t+eps)) - sin(a(2t+2eps))/2 - sin(2 a t)/2
                      - sin(a eps)] / (2a),

    i.e. a smooth part (t + eps/2)/u plus five single-phase oscillations.
    """
    a = lambda xi: np.sqrt(re(xi))
    u_of = re

    smooth = lambda u, aa: (t + eps / 2.0) / u
    pieces = [
        # (amplitude(xi), phase(xi)); sin x = cos(x - pi/2)
        (lambda xi: -t / u_of(xi), lambda xi: eps * a(xi)),
        (
            lambda xi: 1.0 / (2.0 * a(xi) * u_of(xi)),
            lambda xi: (2.0 * t + eps) * a(xi) - 0.5 * math.pi,
        ),
        (
            lambda xi: -1.0 / (4.0 * a(xi) * u_of(xi)),
            lambda xi: (2.0 * t + 2.0 * eps) * a(xi) - 0.5 * math.pi,
        ),
        (
            lambda xi: -1.0 / (4.0 * a(xi) * u_of(xi)),
            lambda xi: 2.0 * t * a(xi) - 0.5 * math.pi,
        ),
        (
            lambda xi: -1.0 / (2.0 * a(xi) * u_of(xi)),
            lambda xi: eps * a(xi) - 0.5 * math.pi,
        ),
    ]
    return smooth, pieces


def _wave_increment_exact(t: float, eps: float, re: Callable) -> Callable:
    """Exact per-frequency weight, stable near u = 0 via a series branch."""

    def w(xi):
        u = np.asarray(re(xi), dtype=float)
        a = np.sqrt(u)
        big = a * (2.0 * t + 2.0 * eps) >= 1e-3
        asafe = np.where(big, a, 1.0)
        usafe = np.where(big, u, 1.0)
        num = (
            (t + eps / 2.0)
            - t * np.cos(asafe * eps)
            + (
                np.sin(asafe * (2.0 * t + eps))
                - 0.5 * np.sin(asafe * (2.0 * t + 2.0 * eps))
                - 0.5 * np.sin(2.0 * t * asafe)
                - np.sin(asafe * eps)
            )
            / (2.0 * asafe)
        )
        series = t * eps * eps + eps**3 / 3.0
        return np.where(big, num / usafe, series)

    return w


def wave_increment_variance(
    sym: Symbol,
    phi: TestFunction,
    t: float,
    eps: float,
    q: QuadratureSpec = DEFAULT_QUAD,
) -> MomentReport:
    """Exact E|W(t+eps, phi) - W(t, phi)|^2 (propagated plus fresh noise,
    both time integrals in closed form)."""
    _require_symmetric(sym, "wave increment variance")
    if t < 0 or eps < 0:
        raise ValueError("t and eps must be nonnegative")
    name = f"wave_increment[{sym.kind},{phi.kind},t={t:g},eps={eps:g}]"
    if eps == 0.0:
        return MomentReport(name, 0.0, 0.0)
    if phi.kind in ("delta", "delta-difference"):
        _require_existence(sym, q, "wave increment variance")
    re = sym.re
    wexact = _wave_increment_exact(t, eps, re)

    def body(xi):
        xi = np.asarray(xi, dtype=float)
        return phi.fhat2(xi) * wexact(xi)

    if phi.fast_decay:
        wdt = dict(phi.params).get("width", 1.0)
        cutoff = max(math.sqrt(60.0) / wdt, 10.0)
        val, err = integrate_resolved(body, 0.0, cutoff, abs_floor=q.abs_tol / 50)
        return MomentReport(name, val / math.pi, err / math.pi)
    if phi.oscillatory:
        raise ValueError("wave increment supports delta and fast-decay test functions")

    smooth_w, pieces = _wave_increment_pieces(t, eps, re)
    # resolve exactly until every phase has advanced ~12 radians (the
    # slowest is eps * a), then hand each oscillation to the alternating sum
    split_fast = _first_reach(lambda x: re(x), (6.0 / (2.0 * t + 2.0 * eps)) ** 2, 1e-6)
    val, err = integrate_resolved(body, 0.0, split_fast, abs_floor=q.abs_tol / 50)
    osc_total = 0.0
    for amp, phase in pieces:
        z0, ov, oe = alternating_cos_integral(amp, phase, split_fast, q)
        gv, ge = integrate_resolved(
            lambda x, A=amp, P=phase: phi.smooth2(x) * A(x) * np.cos(P(x)),
            split_fast,
            z0,
            abs_floor=q.abs_tol / 50,
        )
        osc_total += ov + gv
        err += oe + ge
    from .quadrature import smooth_decay_integral

    smooth = smooth_decay_integral(
        smooth_w,
        re,
        q,
        env=phi.smooth2,
        lower=split_fast,
        env_growth=phi.smooth2_growth,
    )
    res = _require(smooth, q, name)
    value = (val + res.value + osc_total) / math.pi
    error = (err + res.error) / math.pi
    return MomentReport(name, value, error)


# ---------------------------------------------------------------------------
# inequality suites


def verify_heat_quasi_isometry(
    sym: Symbol,
    phi: TestFunction,
    t: float,
    lam: float,
    q: QuadratureSpec = DEFAULT_QUAD,
    tolerance: float = 1e-8,
) -> InequalityReport:
    """(1 - e^(-2t/lam))/2 E(lam) <= E|H(t)|^2 <= e^(2t/lam)/2 E(lam)."""
    name = f"heat_quasi_isometry[{sym.kind},{phi.kind},t={t:g},lam={lam:g}]"
    if t == 0.0:
        return InequalityReport(name, 0.0, 0.0, 0.0, tolerance)
    energy = energy_result(sym, phi, lam, q)
    mid = heat_variance(sym, phi, t, q)
    lo = 0.5 * (-math.expm1(-2.0 * t / lam)) * energy.value
    hi = 0.5 * math.exp(2.0 * t / lam) * energy.value
    return InequalityReport(
        name, lo, mid.value, hi, tolerance, quad_error=energy.error + mid.error
    )


def verify_wave_quasi_isometry(
    sym: Symbol,
    phi: TestFunction,
    t: float,
    q: QuadratureSpec = DEFAULT_QUAD,
    tolerance: float = 1e-8,
) -> InequalityReport:
    """(t/4) E(t^2) <= E|W(t)|^2 <= 2t E(t^2)."""
    _require_symmetric(sym, "wave quasi-isometry")
    name = f"wave_quasi_isometry[{sym.kind},{phi.kind},t={t:g}]"
    if t == 0.0:
        return InequalityReport(name, 0.0, 0.0, 0.0, tolerance)
    energy = energy_result(sym, phi, t * t, q)
    mid = wave_variance(sym, phi, t, q)
    return InequalityReport(
        name,
        0.25 * t * energy.value,
        mid.value,
        2.0 * t * energy.value,
        tolerance,
        quad_error=energy.error + mid.error,
    )


def verify_temporal_bounds_heat(
    sym: Symbol,
    phi: TestFunction,
    t: float,
    eps: float,
    q: QuadratureSpec = DEFAULT_QUAD,
    tolerance: float = 1e-8,
) -> InequalityReport:
    """E(eps)/2 <= E|H(t+eps) - H(t)|^2 <= E(eps) + e^(2t) F(eps)."""
    name = f"heat_temporal[{sym.kind},{phi.kind},t={t:g},eps={eps:g}]"
    if eps == 0.0:
        return InequalityReport(name, 0.0, 0.0, 0.0, tolerance)
    energy = energy_result(sym, phi, eps, q)
    incf = energy_F_result(sym, phi, eps, q)
    mid = heat_increment_variance(sym, phi, t, eps, q)
    return InequalityReport(
        name,
        0.5 * energy.value,
        mid.value,
        energy.value + math.exp(2.0 * t) * incf.value,
        tolerance,
        quad_error=energy.error + incf.error + mid.error,
    )


def verify_temporal_bounds_wave(
    sym: Symbol,
    phi: TestFunction,
    t: float,
    eps: float,
    q: QuadratureSpec = DEFAULT_QUAD,
    tolerance: float = 1e-8,
) -> InequalityReport:
    """0 <= E|W(t+eps) - W(t)|^2 <= (8t + 6 eps) E(eps^2)."""
    name = f"wave_temporal[{sym.kind},{phi.kind},t={t:g},eps={eps:g}]"
    if eps == 0.0:
        return InequalityReport(name, 0.0, 0.0, 0.0, tolerance)
    energy = energy_result(sym, phi, eps * eps, q)
    mid = wave_increment_variance(sym, phi, t, eps, q)
    return InequalityReport(
        name,
        0.0,
        mid.value,
        (8.0 * t + 6.0 * eps) * energy.value,
        tolerance,
        quad_error=energy.error + mid.error,
    )


def verify_spatial_bounds(
    sym: Symbol,
    t: float,
    x: float,
    y: float,
    q: QuadratureSpec = DEFAULT_QUAD,
    tolerance: float = 1e-8,
) -> InequalityReport:
    """(1 - e^(-2t)) h(|x-y|) <= E|H(t,x) - H(t,y)|^2 <= e^(2t) h(|x-y|)."""
    name = f"heat_spatial[{sym.kind},t={t:g},r={abs(x - y):g}]"
    if x == y or t == 0.0:
        return InequalityReport(name, 0.0, 0.0, 0.0, tolerance)
    h = h_function_result(sym, abs(x - y), q)
    mid = heat_variance(sym, delta_difference(x, y), t, q)
    return InequalityReport(
        name,
        (-math.expm1(-2.0 * t)) * h.value,
        mid.value,
        math.exp(2.0 * t) * h.value,
        tolerance,
        quad_error=h.error + mid.error,
    )


# ---------------------------------------------------------------------------
# joint Holder exponents


@dataclass(frozen=True)
class JointHolderReport:
    beta_lower: float
    variance_bounds: tuple  # (space, time) exponents of increment variances
    path_bounds: tuple  # one half of the variance exponents
    fitted_variance: tuple
    fitted_path: tuple
    fit_ok: bool


def joint_holder_exponents(
    sym: Symbol, q: QuadratureSpec | None = None, *, fit_slack: float = 0.05
) -> JointHolderReport:
    """Joint-continuity exponent bounds from the lower index b = beta'':
    increment variances scale with exponents (b - d) in space and
    (b - d)/b in time, i.e. half of that for paths.  Also fits empirical
    exponents from the exact moment curves and checks fitted >= bound - slack.
    """
    if sym.dimension != 1:
        raise ValueError("joint Holder exponents implemented for d = 1")
    if q is None:
        q = QuadratureSpec(rel_tol=1e-7, max_cutoff=1e16)
    beta = lower_index(sym).estimate
    if beta <= 1.0:
        raise ValueError(f"lower index {beta:.3f} <= d = 1: no joint Holder regime")
    space_bound = beta - 1.0
    time_bound = (beta - 1.0) / beta

    js = np.arange(8, 19, dtype=float)
    rs = 2.0**-js
    hs = np.array([h_function_result(sym, r, q, checked=False).value for r in rs])
    space_fit = float(np.polyfit(np.log(rs), np.log(hs), 1)[0])
    incs = np.array(
        [heat_increment_variance(sym, delta(0.0), 1.0, e, q).value for e in rs]
    )
    time_fit = float(np.polyfit(np.log(rs), np.log(incs), 1)[0])
    ok = (space_fit / 2.0 >= space_bound / 2.0 - fit_slack) and (
        time_fit / 2.0 >= time_bound / 2.0 - fit_slack
    )
    return JointHolderReport(
        beta_lower=beta,
        variance_bounds=(space_bound, time_bound),
        path_bounds=(space_bound / 2.0, time_bound / 2.0),
        fitted_variance=(space_fit, time_fit),
        fitted_path=(space_fit / 2.0, time_fit / 2.0),
        fit_ok=ok,
    )


# ---------------------------------------------------------------------------
# standard probe matrix for the verification suites


def standard_probe_matrix(
    q: QuadratureSpec = DEFAULT_QUAD, tolerance: float = 1e-8
) -> list[InequalityReport]:
    """The full {3 symbols} x {3 t} x {3 lambda or eps} x {3 phi} matrix of
    every two-sided verification."""
    from . import functionals as fn
    from . import symbols as sy

    syms = [sy.brownian(), sy.stable(1.5), sy.stable(1.2)]
    phis = [fn.delta(0.0), fn.gaussian(0.0, 1.0), fn.delta_difference(0.0, 1.0)]
    ts = [0.5, 1.0, 2.0]
    lams = [0.5, 1.0, 2.0]
    epss = [0.01, 0.1, 1.0]
    reports: list[InequalityReport] = []
    for sym in syms:
        for phi in phis:
            for t in ts:
                for lam in lams:
                    reports.append(verify_heat_quasi_isometry(sym, phi, t, lam, q, tolerance))
                for eps in epss:
                    reports.append(verify_temporal_bounds_heat(sym, phi, t, eps, q, tolerance))
                if phi.kind != "delta-difference":
                    reports.append(verify_wave_quasi_isometry(sym, phi, t, q, tolerance))
                    for eps in epss:
                        reports.append(
                            verify_temporal_bounds_wave(sym, phi, t, eps, q, tolerance)
                        )
        for t in ts:
            for r in (0.25, 1.0, 4.0):
                reports.append(verify_spatial_bounds(sym, t, 0.0, r, q, tolerance))
    return reports
