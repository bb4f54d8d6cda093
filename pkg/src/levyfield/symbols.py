"""Characteristic exponents psi of Levy processes.

A symbol evaluates xi -> (Re psi(xi), Im psi(xi)) under the normalization
E exp(i xi X_t) = exp(-t psi(xi)).  For dimension d > 1 evaluation is radial:
psi is a function of |xi| and spectral integrals carry the sphere-surface
factor (all multi-dimensional uses are isotropic checks).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegenerateSymbol, TabulationRange

ArrayLike = "float | np.ndarray"


@dataclass(frozen=True)
class LevyTriplet:
    """Diffusion coefficient plus a pure-jump specification.

    ``atoms`` is a tuple of (location, mass) pairs; ``density`` an optional
    callable Lebesgue density for the jump measure.  Construction checks
    sigma2 >= 0, masses >= 0 and that int (1 ^ x^2) nu(dx) is finite
    (numerically, for a density rule).
    """

    sigma2: float = 0.0
    atoms: tuple = ()
    density: Callable | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")
        for x, m in self.atoms:
            if m < 0:
                raise ValueError(f"atom mass must be nonnegative, got {m} at {x}")
        if self.density is not None and not np.isfinite(self.truncated_second_moment()):
            raise ValueError("int (1 ^ x^2) nu(dx) is not finite for the density rule")

    def truncated_second_moment(self) -> float:
        """Numeric value of int (1 ^ x^2) nu(dx)."""
        total = sum(m * min(1.0, x * x) for x, m in self.atoms)
        if self.density is not None:
            from scipy import integrate

            for a, b in ((-np.inf, -1.0), (-1.0, 0.0), (0.0, 1.0), (1.0, np.inf)):
                val, _ = integrate.quad(
                    lambda x: self.density(x) * min(1.0, x * x), a, b, limit=200
                )
                total += val
        return total


@dataclass(frozen=True)
class Symbol:
    """A characteristic exponent with symmetry and dimension metadata."""

    kind: str
    dimension: int
    symmetric: bool
    params: tuple
    _re: Callable = field(repr=False)
    _im: Callable | None = field(repr=False, default=None)
    triplet: LevyTriplet | None = field(default=None, repr=False)

    def re(self, xi: ArrayLike) -> np.ndarray:
        return self._re(np.asarray(xi, dtype=float))

    def im(self, xi: ArrayLike) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if self._im is None:
            return np.zeros_like(xi)
        return self._im(xi)

    def exponent(self, xi: ArrayLike) -> np.ndarray:
        """psi(xi) as a complex array."""
        return self.re(xi) + 1j * self.im(xi)

    def abs2(self, xi: ArrayLike) -> np.ndarray:
        """|psi(xi)|^2."""
        r = self.re(xi)
        if self._im is None:
            return r * r
        i = self._im(np.asarray(xi, dtype=float))
        return r * r + i * i


def eval_exponent(sym: Symbol, xi: ArrayLike):
    """Evaluate (Re psi, Im psi) at a frequency (radially for d > 1)."""
    return sym.re(xi), sym.im(xi)


def symmetrize(sym: Symbol) -> Symbol:
    """Exponent of the Levy symmetrization: xi -> 2 Re psi(xi)."""
    base = sym._re
    return Symbol(
        kind=f"symmetrized({sym.kind})",
        dimension=sym.dimension,
        symmetric=True,
        params=sym.params,
        _re=lambda xi: 2.0 * base(xi),
    )


def brownian(scale: float = 1.0, dimension: int = 1) -> Symbol:
    """psi(xi) = scale * xi^2.

    The scale is explicit because both xi^2 and xi^2/2 conventions occur;
    scale=1 makes X_t ~ N(0, 2t) in d=1.
    """
    if scale <= 0:
        raise ValueError("scale must be positive")
    return Symbol(
        kind="brownian",
        dimension=dimension,
        symmetric=True,
        params=(("scale", scale),),
        _re=lambda xi: scale * xi * xi,
    )


def stable(alpha: float, skew: float = 0.0, dimension: int = 1) -> Symbol:
    """Strictly stable: psi(xi) = |xi|^alpha (1 - i skew sgn(xi) tan(pi alpha/2)).

    skew=0 gives the symmetric stable exponent |xi|^alpha.  alpha=1 is
    supported only in the symmetric case.
    """
    if not 0 < alpha <= 2:
        raise ValueError("alpha must lie in (0, 2]")
    if skew != 0.0 and (alpha == 1.0 or alpha == 2.0):
        raise ValueError("skew is only supported for alpha in (0,1) u (1,2)")
    if abs(skew) > 1:
        raise ValueError("skew must lie in [-1, 1]")
    if skew == 0.0:
        return Symbol(
            kind="stable",
            dimension=dimension,
            symmetric=True,
            params=(("alpha", alpha), ("skew", 0.0)),
            _re=lambda xi: np.abs(xi) ** alpha,
        )
    slope = skew * np.tan(np.pi * alpha / 2.0)
    return Symbol(
        kind="stable",
        dimension=dimension,
        symmetric=False,
        params=(("alpha", alpha), ("skew", skew)),
        _re=lambda xi: np.abs(xi) ** alpha,
        _im=lambda xi: -slope * np.sign(xi) * np.abs(xi) ** alpha,
    )


def levy_khintchine(
    sigma2: float = 0.0,
    atoms: tuple = (),
    drift: float = 0.0,
    dimension: int = 1,
) -> Symbol:
    """Exponent from a triplet: diffusion part sigma2 xi^2 / 2 plus jump atoms.

    Re psi(xi) = sigma2 xi^2/2 + sum m (1 - cos(xi x));
    Im psi(xi) = -drift xi + sum m (xi x 1{|x|<=1} - sin(xi x)).
    The symmetrization then carries exponent sigma2 xi^2 + int (1-cos) nu.
    """
    triplet = LevyTriplet(sigma2=sigma2, atoms=tuple(atoms))
    locs = np.array([x for x, _ in triplet.atoms], dtype=float)
    masses = np.array([m for _, m in triplet.atoms], dtype=float)
    small = np.abs(locs) <= 1.0

    def _re(xi):
        xi = np.atleast_1d(xi)
        val = 0.5 * sigma2 * xi * xi
        if locs.size:
            val = val + np.sum(masses * (1.0 - np.cos(np.outer(xi, locs))), axis=-1)
        return val if val.shape else float(val)

    mass_dict = {}
    for x, m in triplet.atoms:
        mass_dict[x] = mass_dict.get(x, 0.0) + m
    mirror = all(abs(mass_dict.get(-x, 0.0) - m) < 1e-15 for x, m in mass_dict.items())
    is_symmetric = drift == 0.0 and mirror

    _im = None
    if not is_symmetric:

        def _im(xi):
            xi = np.atleast_1d(xi)
            val = -drift * xi
            if locs.size:
                arg = np.outer(xi, locs)
                comp = np.where(small, arg, 0.0)
                val = val + np.sum(masses * (comp - np.sin(arg)), axis=-1)
            return val

    return Symbol(
        kind="levy-khintchine",
        dimension=dimension,
        symmetric=is_symmetric,
        params=(("sigma2", sigma2), ("atoms", tuple(triplet.atoms)), ("drift", drift)),
        _re=lambda xi: np.asarray(_re(np.asarray(xi, dtype=float))),
        _im=None if is_symmetric else (lambda xi: np.asarray(_im(xi))),
        triplet=triplet,
    )


def log_perturbed(alpha_p: float, dimension: int = 1) -> Symbol:
    """psi(xi) = |xi| (log(e + |xi|))^alpha_p.

    log(e + |xi|) rather than log|xi| keeps the exponent finite at 0; only
    the xi -> infinity asymptotics matter for its use.
    """
    return Symbol(
        kind="log-perturbed",
        dimension=dimension,
        symmetric=True,
        params=(("alpha_p", alpha_p),),
        _re=lambda xi: np.abs(xi) * np.log(np.e + np.abs(xi)) ** alpha_p,
    )


def tabulated(
    xi_grid: np.ndarray,
    re_values: np.ndarray,
    im_values: np.ndarray | None = None,
    dimension: int = 1,
) -> Symbol:
    """Symbol interpolated linearly in log-frequency from tabulated values.

    The grid must be positive and strictly increasing.  Evaluation outside
    [xi_grid[0], xi_grid[-1]] raises TabulationRange; xi = 0 returns 0 exactly.
    """
    xi_grid = np.asarray(xi_grid, dtype=float)
    re_values = np.asarray(re_values, dtype=float)
    if xi_grid.ndim != 1 or np.any(np.diff(xi_grid) <= 0) or xi_grid[0] <= 0:
        raise ValueError("xi_grid must be positive and strictly increasing")
    if np.any(re_values < 0):
        raise ValueError("tabulated Re psi must be nonnegative")
    log_grid = np.log(xi_grid)

    def interp(values):
        def _eval(xi):
            a = np.abs(np.asarray(xi, dtype=float))
            out = np.zeros_like(a)
            nz = a > 0
            if np.any(nz):
                an = a[nz] if a.ndim else a
                if np.any(an < xi_grid[0] * (1 - 1e-12)) or np.any(
                    an > xi_grid[-1] * (1 + 1e-12)
                ):
                    raise TabulationRange(
                        f"frequency outside tabulated range "
                        f"[{xi_grid[0]:g}, {xi_grid[-1]:g}]"
                    )
                vals = np.interp(np.log(an), log_grid, values)
                if a.ndim:
                    out[nz] = vals
                else:
                    out = vals
            return out

        return _eval

    sym_im = None
    symmetric = True
    if im_values is not None:
        im_values = np.asarray(im_values, dtype=float)
        if np.any(im_values != 0.0):
            symmetric = False
            base = interp(im_values)
            sym_im = lambda xi: np.sign(xi) * base(xi)  # odd extension
    return Symbol(
        kind="tabulated",
        dimension=dimension,
        symmetric=symmetric,
        params=(("xi_min", float(xi_grid[0])), ("xi_max", float(xi_grid[-1]))),
        _re=interp(re_values),
        _im=sym_im,
    )


@dataclass(frozen=True)
class IndexEstimate:
    """Lower-index estimate: tail minimum is the contract value, the
    least-squares slope over the tail window is a diagnostic."""

    estimate: float
    slope: float
    tail_window: int


def default_probe(decades: int = 12, base: float = 2.0, count: int = 40) -> np.ndarray:
    del decades
    return base ** np.arange(1, count + 1, dtype=float)


def lower_index(
    sym: Symbol, probe: np.ndarray | None = None, tail_window: int = 10
) -> IndexEstimate:
    """Estimate liminf_{|xi| -> oo} log Re psi(xi) / log |xi|.

    The probe grid must be strictly increasing with >= 16 points spanning
    >= 6 decades.  Raises DegenerateSymbol when Re psi vanishes on the whole
    tail window.
    """
    if probe is None:
        probe = default_probe()
    probe = np.asarray(probe, dtype=float)
    if probe.size < 16 or np.any(np.diff(probe) <= 0):
        raise ValueError("probe grid must be strictly increasing with >= 16 points")
    if probe[-1] / probe[0] < 10.0**6:
        raise ValueError("probe grid must span at least 6 decades")
    re = np.asarray(sym.re(probe), dtype=float)
    tail = slice(-tail_window, None)
    if np.all(re[tail] == 0.0):
        raise DegenerateSymbol("Re psi vanishes on the tail window")
    with np.errstate(divide="ignore"):
        ratios = np.log(re[tail]) / np.log(probe[tail])
    ratios = ratios[np.isfinite(ratios)]
    logs = np.log(probe[tail])[re[tail] > 0]
    vals = np.log(re[tail])[re[tail] > 0]
    slope = float(np.polyfit(logs, vals, 1)[0]) if logs.size >= 2 else float("nan")
    return IndexEstimate(
        estimate=float(ratios.min()), slope=slope, tail_window=tail_window
    )


def from_config(spec: dict) -> Symbol:
    """Build a catalog symbol from flat config keys (see cli module)."""
    kind = spec.get("kind")
    dim = int(spec.get("dimension", 1))
    if kind == "brownian":
        return brownian(scale=float(spec.get("scale", 1.0)), dimension=dim)
    if kind == "stable":
        return stable(
            alpha=float(spec["alpha"]),
            skew=float(spec.get("skew", 0.0)),
            dimension=dim,
        )
    if kind == "log-perturbed":
        return log_perturbed(alpha_p=float(spec["alpha_p"]), dimension=dim)
    if kind == "levy-khintchine":
        atoms = spec.get("atoms", ())
        if isinstance(atoms, str):
            parsed = []
            for part in atoms.split(","):
                x, m = part.split(":")
                parsed.append((float(x), float(m)))
            atoms = tuple(parsed)
        return levy_khintchine(
            sigma2=float(spec.get("sigma2", 0.0)),
            atoms=atoms,
            drift=float(spec.get("drift", 0.0)),
            dimension=dim,
        )
    raise ValueError(f"unknown symbol kind {kind!r}")
