"""Adaptive quadrature over [0, oo) for spectral integrands.

Integrands have the product form env(xi) * W(Re psi(xi), |psi(xi)|) with a
weight W decaying like a power of Re psi and an envelope that is a power or
decays superpolynomially.  The improper tail is handled by fitting
Re psi ~ c xi^p over the last decade (accepted only when the log-space fit
residual is small) and integrating env * W(c xi^p, c2 xi^p2) exactly in the
model via the substitution v = 1/xi.  Divergence is declared on sustained
power growth of the partial integrals.  Oscillatory factors cos(phase(xi))
are integrated between consecutive phase zeros and the alternating series
is Euler-accelerated.
"""

from __future__ import annotations

from dataclasses import dataclass
import math
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import TabulationRange


@dataclass(frozen=True)
class QuadratureSpec:
    """Truncation, tolerance, and tail-extrapolation policy."""

    abs_tol: float = 1e-12
    rel_tol: float = 1e-9
    initial_cutoff: float = 1e3
    max_cutoff: float = 1e14
    panels_per_decade: int = 4
    gl_order: int = 15
    fit_points: int = 24
    fit_max_residual: float = 2e-2
    trend_margin: float = 0.05
    max_osc_terms: int = 320

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.initial_cutoff <= 0 or self.max_cutoff <= self.initial_cutoff:
            raise ValueError("need 0 < initial_cutoff < max_cutoff")


DEFAULT_QUAD = QuadratureSpec()


@dataclass
class IntegralResult:
    value: float
    error: float
    status: str  # "converged" | "divergent" | "inconclusive"
    cutoff: float
    growth_exponent: float | None = None

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def within(self, spec: QuadratureSpec) -> bool:
        return self.error <= max(spec.abs_tol, spec.rel_tol * abs(self.value))


@lru_cache(maxsize=8)
def _leggauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _gl(f: Callable, a: float, b: float, order: int = 15) -> float:
    x, w = _leggauss(order)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * float(np.dot(w, f(mid + half * x)))


def integrate_adaptive(
    f: Callable,
    a: float,
    b: float,
    abs_floor: float = 1e-15,
    rel: float = 1e-13,
    max_depth: int = 26,
    order: int = 15,
):
    """Globally adaptive Gauss-Legendre on [a, b]; returns (value, error)."""
    whole = _gl(f, a, b, order)
    stack = [(a, b, whole, max_depth)]
    total, err = 0.0, 0.0
    while stack:
        lo, hi, est, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        left = _gl(f, lo, mid, order)
        right = _gl(f, mid, hi, order)
        delta = left + right - est
        if abs(delta) <= max(abs_floor, rel * abs(left + right)) or depth <= 0:
            total += left + right
            err += abs(delta)
        else:
            stack.append((lo, mid, left, depth - 1))
            stack.append((mid, hi, right, depth - 1))
    return total, err


def integrate_resolved(
    f: Callable,
    a: float,
    b: float,
    abs_floor: float = 1e-15,
    panels_per_decade: int = 4,
):
    """Adaptive integration of f on a possibly very wide [a, b]: a linear
    panel up to 1, then log-spaced panels, each refined independently."""
    if b <= a:
        return 0.0, 0.0
    total, err = 0.0, 0.0
    lo = a
    if lo < 1.0:
        hi = min(1.0, b)
        v, e = integrate_adaptive(f, lo, hi, abs_floor=abs_floor)
        total += v
        err += e
        lo = hi
    while lo < b:
        hi = min(lo * 10.0, b)
        bounds = np.geomspace(lo, hi, panels_per_decade + 1)
        for p_lo, p_hi in zip(bounds[:-1], bounds[1:]):
            v, e = integrate_adaptive(f, p_lo, p_hi, abs_floor=abs_floor)
            total += v
            err += e
        lo = hi
    return total, err


def power_fit(fn: Callable, lo: float, hi: float, n: int = 24):
    """Least-squares fit fn(xi) ~ c xi^p on log-spaced nodes.

    Returns (c, p, rms residual in log space); (0, 0, inf) when fn <= 0
    somewhere on the nodes.
    """
    x = np.geomspace(lo, hi, n)
    y = np.asarray(fn(x), dtype=float)
    if np.any(~np.isfinite(y)) or np.any(y <= 0.0):
        return 0.0, 0.0, np.inf
    lx, ly = np.log(x), np.log(y)
    p, b = np.polyfit(lx, ly, 1)
    resid = float(np.sqrt(np.mean((ly - (p * lx + b)) ** 2)))
    return float(np.exp(b)), float(p), resid


def _model_tail(envf, weight, cp, cp2, cutoff, spec: QuadratureSpec):
    """Integrate env(xi) W(c xi^p, c2 xi^p2) over [cutoff, oo) via v = 1/xi."""
    c, p = cp
    c2, p2 = cp2

    def g(v):
        v = np.asarray(v)
        xi = 1.0 / v
        with np.errstate(over="ignore"):
            u = c * xi**p
            u2 = c2 * xi**p2
            out = envf(xi) * weight(u, u2) / (v * v)
        return np.where(np.isfinite(out), out, 0.0)

    total, err = 0.0, 0.0
    hi = 1.0 / cutoff
    history: list[float] = []
    for _ in range(150):
        lo = hi * 0.1
        val, e = integrate_adaptive(g, lo, hi, abs_floor=spec.abs_tol * 1e-4)
        total += val
        err += e
        hi = lo
        history.append(val)
        if val <= max(spec.abs_tol * 1e-4, 1e-15 * abs(total)) and (
            len(history) < 2 or val < history[-2]
        ):
            if len(history) >= 2 and 0.0 < val < history[-2]:
                r = val / history[-2]
                total += val * r / (1.0 - min(r, 0.9))
            break
        # once the per-decade ratio has stabilized the remaining sum is
        # geometric; extrapolate it instead of marching further
        if len(history) >= 6:
            r1 = history[-1] / history[-2]
            r2 = history[-2] / history[-3]
            r3 = history[-3] / history[-4]
            if 0 < r1 < 0.97 and abs(r1 - r2) < 0.02 * r1 and abs(r2 - r3) < 0.02 * r2:
                rem = val * r1 / (1.0 - r1)
                drift = abs(r1 - r3) * val / (1.0 - r1) ** 2
                total += rem
                err += 0.05 * rem * abs(r1 - r2) / r1 / (1.0 - r1) + drift
                break
    return total, err


def smooth_decay_integral(
    weight: Callable,
    re_psi: Callable,
    spec: QuadratureSpec = DEFAULT_QUAD,
    *,
    abs_psi: Callable | None = None,
    env: Callable | None = None,
    lower: float = 0.0,
    fast_decay: bool = False,
    weight_decay: float = 1.0,
    env_growth: float = 0.0,
) -> IntegralResult:
    """Integrate env(xi) * weight(Re psi, |psi|) over [lower, oo).

    ``weight_decay`` is the power w with weight(u, .) ~ u^-w for large u and
    ``env_growth`` the algebraic exponent g with env ~ A xi^g; the integrand
    then decays like xi^(g - w p) and classification compares w p - g to 1.
    """
    absf = abs_psi if abs_psi is not None else re_psi
    envf = env if env is not None else (lambda xi: np.ones_like(np.asarray(xi, float)))

    def body(xi):
        xi = np.asarray(xi, dtype=float)
        return envf(xi) * weight(re_psi(xi), absf(xi))

    total, err = 0.0, 0.0
    x0 = lower
    head_end = max(1.0, lower)
    if x0 < head_end:
        v, e = integrate_adaptive(body, x0, head_end, abs_floor=spec.abs_tol / 50)
        total += v
        err += e
        x0 = head_end

    decade_sums: list[float] = []
    divergent_streak = 0
    cutoff = x0
    range_capped = False
    best: IntegralResult | None = None
    while cutoff < spec.max_cutoff:
        hi = cutoff * 10.0
        bounds = np.geomspace(cutoff, hi, spec.panels_per_decade + 1)
        dval, derr = 0.0, 0.0
        try:
            for a, b in zip(bounds[:-1], bounds[1:]):
                v, e = integrate_adaptive(body, a, b, abs_floor=spec.abs_tol / 50)
                dval += v
                derr += e
        except TabulationRange:
            range_capped = True
            break
        total += dval
        err += derr
        decade_sums.append(dval)
        cutoff = hi

        if len(decade_sums) < 3:
            continue

        if fast_decay:
            if decade_sums[-1] <= max(spec.abs_tol, spec.rel_tol * abs(total)) / 4:
                r = decade_sums[-1] / max(decade_sums[-2], 1e-300)
                rem = decade_sums[-1] * min(r, 0.5) / max(1.0 - min(r, 0.5), 0.5)
                return IntegralResult(total, err + rem + decade_sums[-1], "converged", cutoff)
            continue

        c, p, resid = power_fit(re_psi, cutoff / 10.0, cutoff, spec.fit_points)
        c2, p2, resid2 = (c, p, resid) if absf is re_psi else power_fit(
            absf, cutoff / 10.0, cutoff, spec.fit_points
        )
        decay_power = weight_decay * p - env_growth

        if resid <= 0.1 and decay_power <= 1.0 - spec.trend_margin:
            divergent_streak += 1
            if divergent_streak >= 3:
                return IntegralResult(
                    total, err, "divergent", cutoff,
                    growth_exponent=max(0.0, 1.0 - decay_power),
                )
            continue
        divergent_streak = 0

        if decay_power >= 1.0 + spec.trend_margin and resid <= spec.fit_max_residual:
            tail, tail_trunc = _model_tail(envf, weight, (c, p), (c2, p2), cutoff, spec)
            # validate the psi model against the true weight over the region
            # the tail actually integrates (several decades beyond cutoff)
            probe = np.geomspace(cutoff, min(cutoff * 1e6, 1e250), 16)
            try:
                wa = weight(re_psi(probe), absf(probe))
                with np.errstate(over="ignore"):
                    wm = weight(c * probe**p, c2 * probe**p2)
                mask = np.isfinite(wa) & np.isfinite(wm) & (np.abs(wa) > 0)
                relmis = (
                    float(np.max(np.abs(wm[mask] / wa[mask] - 1.0)))
                    if np.any(mask)
                    else 0.0
                )
            except TabulationRange:
                relmis = max(resid, resid2)
            tail_err = tail * max(relmis, resid, resid2) + tail_trunc
            cand = IntegralResult(total + tail, err + tail_err, "converged", cutoff)
            if cand.within(spec):
                return cand
            best = cand

    # max cutoff (or tabulation range) reached without meeting tolerance
    if len(decade_sums) >= 3:
        r1 = decade_sums[-1] / max(decade_sums[-2], 1e-300)
        r2 = decade_sums[-2] / max(decade_sums[-3], 1e-300)
        if min(r1, r2) >= 0.97:
            growth = float(np.log10(max(r1 * r2, 1e-12))) / 2.0
            return IntegralResult(
                total, err, "divergent", cutoff, growth_exponent=max(0.0, growth)
            )
        if best is not None:
            return best
        if max(r1, r2) < 0.9:
            rem = decade_sums[-1] * r1 / max(1.0 - r1, 0.1)
            return IntegralResult(total, err + rem + decade_sums[-1], "converged", cutoff)
    return IntegralResult(total, err, "inconclusive", cutoff)


def _euler_sum(terms: np.ndarray):
    """Accelerated sum of an (eventually) alternating series."""
    s = np.cumsum(terms)
    tailn = min(s.size, 32)
    cur = s[-tailn:].astype(float)
    diag = [cur[-1]]
    while cur.size > 1:
        cur = 0.5 * (cur[:-1] + cur[1:])
        diag.append(cur[-1])
    est = diag[-1]
    err = abs(diag[-1] - diag[-2]) if len(diag) > 1 else abs(terms[-1])
    return est, err


def alternating_cos_integral(
    amp: Callable,
    phase: Callable,
    lower: float,
    spec: QuadratureSpec = DEFAULT_QUAD,
):
    """Integrate amp(xi) cos(phase(xi)) over [z0, oo).

    z0 is the first zero of the cosine at or beyond ``lower`` (phase
    congruent to pi/2 mod pi); the amplitude must decay and the phase be
    increasing.  Returns (z0, value, error_estimate).
    """

    def _phase(x):
        return float(phase(np.asarray(x, dtype=float)))

    def _slope(z):
        h = max(1e-6 * z, 1e-12)
        return max((_phase(z + h) - _phase(z)) / h, 1e-300)

    p0 = _phase(lower)
    k0 = int(np.ceil((p0 - np.pi / 2) / np.pi + 1e-12))
    target = np.pi / 2 + k0 * np.pi
    if target <= p0:
        target += np.pi

    def _cross(t, lo):
        hi = lo + np.pi / _slope(lo)
        for _ in range(80):
            if _phase(hi) >= t:
                break
            hi += max(hi - lo, np.pi / _slope(hi))
        return brentq(lambda x: _phase(x) - t, lo, hi, xtol=1e-12 * max(hi, 1.0))

    z0 = _cross(target, lower)

    def body(x):
        x = np.asarray(x, dtype=float)
        return amp(x) * np.cos(phase(x))

    zeros = [z0]
    terms: list[float] = []
    tol = spec.abs_tol
    value = err = 0.0
    for k in range(spec.max_osc_terms):
        target += np.pi
        z_next = _cross(target, zeros[-1])
        v, e = integrate_adaptive(
            body, zeros[-1], z_next, abs_floor=tol * 1e-2, max_depth=8
        )
        terms.append(v)
        err += e
        zeros.append(z_next)
        if (k + 1) % 8 == 0 or abs(v) < tol * 1e-2:
            value, acc_err = _euler_sum(np.asarray(terms))
            if acc_err < tol or abs(v) < tol * 1e-2:
                return z0, value, err + acc_err
    value, acc_err = _euler_sum(np.asarray(terms))
    return z0, value, err + acc_err
