"""Spectral synthesis of the parabolic and hyperbolic fields on a periodic
lattice, validated against the lattice-spectrum moments (the lattice model,
not the continuum, is the sampler's ground truth).

Randomness comes from counter-based Philox streams keyed by (seed, mode), so
mode draws are reproducible bit-for-bit and nested under mode refinement.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import InsufficientSeparations, NumericalFailure, SymmetryRequired
from .symbols import Symbol


@dataclass(frozen=True)
class Lattice:
    """Periodic lattice: circumference, mode count K (frequencies
    2 pi k / length for k = -K..K, hence 2K+1 spatial points), time grid."""

    length: float
    modes: int
    times: tuple

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("length must be positive")
        if self.modes < 1:
            raise ValueError("need at least one mode")
        ts = np.asarray(self.times, dtype=float)
        if ts.size == 0 or ts[0] < 0 or np.any(np.diff(ts) <= 0):
            raise ValueError("times must be strictly increasing with t0 >= 0")

    @property
    def n(self) -> int:
        return 2 * self.modes + 1

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.n) * self.dx

    @property
    def freqs(self) -> np.ndarray:
        """Nonnegative frequencies xi_k = 2 pi k / length, k = 0..K."""
        return 2.0 * math.pi * np.arange(self.modes + 1) / self.length

    @property
    def time_array(self) -> np.ndarray:
        return np.asarray(self.times, dtype=float)

    def to_dict(self) -> dict:
        return {"length": self.length, "modes": self.modes, "times": list(self.times)}


@dataclass(frozen=True)
class FieldSample:
    """One replicate of a sampled field on the lattice."""

    values: np.ndarray  # (times, points)
    seed: int
    replicate: int
    kind: str  # "heat" | "wave"
    lattice: Lattice

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")


@dataclass(frozen=True)
class FieldEnsemble:
    values: np.ndarray  # (replicates, times, points)
    seed: int
    kind: str
    lattice: Lattice
    symbol_spec: dict

    def samples(self) -> Iterator[FieldSample]:
        for m in range(self.values.shape[0]):
            yield FieldSample(self.values[m], self.seed, m, self.kind, self.lattice)

    def pair(self, phi_lattice: np.ndarray) -> np.ndarray:
        """<field, phi> = sum_j u(t, x_j) phi(x_j) dx, shape (replicates, times)."""
        return np.tensordot(self.values, np.asarray(phi_lattice), axes=(2, 0)) * self.lattice.dx

    def to_csv(self, csv_path, sidecar_path=None, timing: float | None = None):
        """Write rows (t, x, replicate, value) plus a JSON sidecar."""
        ts, xs = self.lattice.time_array, self.lattice.grid
        with open(csv_path, "w") as f:
            f.write("t,x,replicate,value\n")
            for m in range(self.values.shape[0]):
                for i, t in enumerate(ts):
                    for j, x in enumerate(xs):
                        f.write(f"{t:.17g},{x:.17g},{m},{self.values[m, i, j]:.17g}\n")
        if sidecar_path is not None:
            meta = {
                "seed": self.seed,
                "kind": self.kind,
                "lattice": self.lattice.to_dict(),
                "symbol": self.symbol_spec,
                "replicates": int(self.values.shape[0]),
            }
            if timing is not None:
                meta["wall_time_s"] = timing
            with open(sidecar_path, "w") as f:
                json.dump(meta, f, indent=1, sort_keys=True)


def load_field_csv(csv_path, sidecar_path) -> FieldEnsemble:
    with open(sidecar_path) as f:
        meta = json.load(f)
    lat = Lattice(
        length=meta["lattice"]["length"],
        modes=meta["lattice"]["modes"],
        times=tuple(meta["lattice"]["times"]),
    )
    m, t, n = meta["replicates"], len(lat.times), lat.n
    vals = np.loadtxt(csv_path, delimiter=",", skiprows=1, usecols=3)
    return FieldEnsemble(
        values=vals.reshape(m, t, n),
        seed=meta["seed"],
        kind=meta["kind"],
        lattice=lat,
        symbol_spec=meta["symbol"],
    )


def mode_rng(seed: int, mode: int) -> np.random.Generator:
    """Philox stream keyed by (seed, mode): counter-based, scheduling-proof."""
    return np.random.Generator(np.random.Philox(key=[np.uint64(seed), np.uint64(mode)]))


def _ou_step_var(u: np.ndarray, dt: float) -> np.ndarray:
    """(1 - e^(-2 dt u)) / (2u) with the u -> 0 limit dt."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = -np.expm1(-2.0 * dt * u) / (2.0 * u)
    return np.where(u > 0.0, out, dt)


def discrete_delta(lattice: Lattice, at: int = 0) -> np.ndarray:
    """Lattice point mass: unit integral against the lattice measure."""
    phi = np.zeros(lattice.n)
    phi[at] = 1.0 / lattice.dx
    return phi


def lattice_phi_hat(lattice: Lattice, phi: np.ndarray) -> np.ndarray:
    """Half-spectrum phihat_k = sum_j phi(x_j) e^(-i xi_k x_j) dx, k = 0..K."""
    return np.fft.rfft(np.asarray(phi, dtype=float)) * lattice.dx


def lattice_heat_moments(
    sym: Symbol, lattice: Lattice, phi: np.ndarray
) -> np.ndarray:
    """Exact lattice variance of <H(t), phi> per grid time:
    L^-1 sum_k |phihat_k|^2 (1 - e^(-2 t Re psi(xi_k)))/(2 Re psi(xi_k))."""
    ph = np.abs(lattice_phi_hat(lattice, phi)) ** 2
    re = sym.re(lattice.freqs)
    out = []
    for t in lattice.time_array:
        v = _ou_step_var(re, t)
        out.append((ph[0] * v[0] + 2.0 * np.dot(ph[1:], v[1:])) / lattice.length)
    return np.asarray(out)


def lattice_heat_cross(
    sym: Symbol, lattice: Lattice, phi: np.ndarray, i: int, j: int
) -> float:
    """Exact lattice covariance of <H(t_i), phi> and <H(t_j), phi>."""
    ti, tj = sorted((lattice.time_array[i], lattice.time_array[j]))
    ph = np.abs(lattice_phi_hat(lattice, phi)) ** 2
    xi = lattice.freqs
    v = _ou_step_var(sym.re(xi), ti)
    prop = np.real(np.exp(-(tj - ti) * sym.exponent(xi)))
    terms = ph * prop * v
    return float((terms[0] + 2.0 * np.sum(terms[1:])) / lattice.length)


def simulate_heat_field(
    sym: Symbol, lattice: Lattice, seed: int, replicates: int
) -> FieldEnsemble:
    """Exact-in-distribution sampling of the parabolic field.

    Each complex mode follows its exact Ornstein-Uhlenbeck transition
    between grid times (no time-discretization bias); conjugate symmetry
    across +-k makes the synthesized field exactly real.
    """
    if replicates < 1:
        raise ValueError("need at least one replicate")
    lat = lattice
    times = lat.time_array
    steps = np.diff(np.concatenate(([0.0], times)))
    K, n, L = lat.modes, lat.n, lat.length
    xi = lat.freqs
    pe = sym.exponent(xi)
    re = sym.re(xi)
    spec = np.zeros((K + 1, times.size, replicates), dtype=complex)
    for k in range(K + 1):
        rng = mode_rng(seed, k)
        draws = rng.standard_normal((times.size, 2, replicates))
        decay = np.exp(-steps * pe[k])
        cur = np.zeros(replicates, dtype=complex)
        for i, dt in enumerate(steps):
            var = L * _ou_step_var(np.asarray(re[k]), dt)
            if k == 0:
                eta = math.sqrt(var) * draws[i, 0]
            else:
                eta = math.sqrt(var / 2.0) * (draws[i, 0] + 1j * draws[i, 1])
            cur = decay[i] * cur + eta
            spec[k, i] = cur
    fields = (n / L) * np.fft.irfft(np.moveaxis(spec, 0, -1), n=n, axis=-1)
    return FieldEnsemble(
        values=fields.transpose(1, 0, 2),
        seed=seed,
        kind="heat",
        lattice=lat,
        symbol_spec={"kind": sym.kind, **dict(sym.params)},
    )


def _wave_mode_cov(a: float, times: np.ndarray) -> np.ndarray:
    """Per-mode covariance int_0^(s^t) sin(a(s-r)) sin(a(t-r)) dr / a^2,
    via product-to-sum; a -> 0 limit int (s-r)(t-r) dr."""
    t1 = times[:, None]
    t2 = times[None, :]
    lo = np.minimum(t1, t2)
    if a < 1e-8:
        return t1 * t2 * lo - (t1 + t2) * lo * lo / 2.0 + lo**3 / 3.0
    diff = np.abs(t1 - t2)
    summ = t1 + t2
    c = 0.5 * (
        lo * np.cos(a * diff)
        - (np.sin(a * summ) - np.sin(a * diff)) / (2.0 * a)
    )
    return c / (a * a)


def lattice_wave_moments(sym: Symbol, lattice: Lattice, phi: np.ndarray) -> np.ndarray:
    """Exact lattice variance of <W(t), phi> per grid time."""
    if not sym.symmetric:
        raise SymmetryRequired("wave sampling requires a symmetric exponent")
    ph = np.abs(lattice_phi_hat(lattice, phi)) ** 2
    xi = lattice.freqs
    aa = np.sqrt(sym.re(xi))
    times = lattice.time_array
    out = np.zeros(times.size)
    for k in range(xi.size):
        diag = np.diag(_wave_mode_cov(float(aa[k]), times))
        w = 1.0 if k == 0 else 2.0
        out += w * ph[k] * diag
    return out / lattice.length


def simulate_wave_field(
    sym: Symbol, lattice: Lattice, seed: int, replicates: int
) -> FieldEnsemble:
    """Exact sampling of the hyperbolic field: for each mode the vector over
    the time grid is drawn from its exact Gaussian law via a symmetric
    factorization of the per-mode covariance."""
    if not sym.symmetric:
        raise SymmetryRequired("wave sampling requires a symmetric exponent")
    if replicates < 1:
        raise ValueError("need at least one replicate")
    lat = lattice
    times = lat.time_array
    K, n, L = lat.modes, lat.n, lat.length
    aa = np.sqrt(sym.re(lat.freqs))
    spec = np.zeros((K + 1, times.size, replicates), dtype=complex)
    for k in range(K + 1):
        cov = L * _wave_mode_cov(float(aa[k]), times)
        jitter = 1e-12 * max(np.trace(cov), 1e-300)
        try:
            chol = np.linalg.cholesky(cov + jitter * np.eye(times.size))
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(
                f"mode {k}: wave covariance not positive definite beyond jitter"
            ) from exc
        rng = mode_rng(seed, k)
        z = rng.standard_normal((2, times.size, replicates))
        if k == 0:
            spec[k] = chol @ z[0]
        else:
            spec[k] = (chol @ (z[0] + 1j * z[1])) / math.sqrt(2.0)
    fields = (n / L) * np.fft.irfft(np.moveaxis(spec, 0, -1), n=n, axis=-1)
    return FieldEnsemble(
        values=fields.transpose(1, 0, 2),
        seed=seed,
        kind="wave",
        lattice=lat,
        symbol_spec={"kind": sym.kind, **dict(sym.params)},
    )


@dataclass(frozen=True)
class HolderEstimate:
    exponent: float
    stderr: float
    separations: np.ndarray
    variances: np.ndarray


def empirical_holder_estimate(
    ensemble: FieldEnsemble,
    direction: str,
    max_separations: int = 6,
    bootstrap: int = 200,
) -> HolderEstimate:
    """Path-exponent estimate: slope of log increment variance against log
    separation, divided by two, with a bootstrap standard error over
    replicates."""
    vals = ensemble.values
    m = vals.shape[0]
    if m < 1000:
        raise InsufficientSeparations("need at least 1000 replicates")
    if direction == "space":
        steps = ensemble.lattice.dx
        axis_len = vals.shape[2]
        data = vals[:, -1, :]  # last time slice
        seps = []
        incs = []
        s = 1
        while s * 2 <= axis_len // 4 and len(seps) < max_separations:
            incs.append(np.roll(data, -s, axis=1) - data)
            seps.append(s * steps)
            s *= 2
    elif direction == "time":
        times = ensemble.lattice.time_array
        dts = np.diff(times)
        if not np.allclose(dts, dts[0]):
            raise InsufficientSeparations("time grid must be uniform")
        seps = []
        incs = []
        s = 1
        while s <= len(times) - 1 and len(seps) < max_separations:
            incs.append(vals[:, s:, :] - vals[:, :-s, :])
            seps.append(s * dts[0])
            s *= 2
    else:
        raise ValueError("direction must be 'space' or 'time'")
    if len(seps) < 4:
        raise InsufficientSeparations("need at least 4 dyadic separations")
    seps = np.asarray(seps)
    per_rep = np.array([np.mean(inc.reshape(m, -1) ** 2, axis=1) for inc in incs])
    variances = per_rep.mean(axis=1)
    logs = np.log(seps)

    def slope(v):
        return np.polyfit(logs, np.log(v), 1)[0] / 2.0

    est = float(slope(variances))
    rng = np.random.Generator(np.random.Philox(key=[np.uint64(ensemble.seed), np.uint64(10**9)]))
    boots = np.empty(bootstrap)
    for b in range(bootstrap):
        idx = rng.integers(0, m, size=m)
        boots[b] = slope(per_rep[:, idx].mean(axis=1))
    return HolderEstimate(est, float(boots.std(ddof=1)), seps, variances)


@dataclass(frozen=True)
class SupGrowthLevel:
    modes: int
    points: int
    level_max: float
    running_max: float


@dataclass(frozen=True)
class SupGrowthReport:
    levels: list
    fields: list  # per-level field values on the level grid

    @property
    def running_maxima(self) -> np.ndarray:
        return np.array([lv.running_max for lv in self.levels])


def sup_growth_probe(
    sym: Symbol,
    t: float,
    seed: int,
    *,
    length: float = 16.0,
    base_modes: int = 64,
    base_points: int = 128,
    refinements: int = 4,
) -> SupGrowthReport:
    """Running maxima of |H(t, .)| over dyadically refined grids with mode
    count doubling per level; mode draws are shared across levels (keyed
    streams), so refinement only adds modes and evaluation points."""
    from .functionals import hawkes_existence

    if not hawkes_existence(sym).finite:
        raise ValueError("sup-growth probe needs a random-field regime")
    L = length
    levels = []
    fields = []
    running = 0.0
    k_max = base_modes * 2 ** (refinements - 1)
    xi = 2.0 * math.pi * np.arange(k_max + 1) / L
    re = sym.re(xi)
    var = L * _ou_step_var(re, t)
    coef = np.empty(k_max + 1, dtype=complex)
    for k in range(k_max + 1):
        rng = mode_rng(seed, k)
        z = rng.standard_normal(2)
        if k == 0:
            coef[k] = math.sqrt(var[k]) * z[0]
        else:
            coef[k] = math.sqrt(var[k] / 2.0) * (z[0] + 1j * z[1])
    for lv in range(refinements):
        kk = base_modes * 2**lv
        pts = base_points * 2**lv
        x = np.arange(pts) * (L / pts)
        phases = np.exp(1j * np.outer(x, xi[1 : kk + 1]))
        vals = (coef[0].real + 2.0 * np.real(phases @ coef[1 : kk + 1])) / L
        running = max(running, float(np.max(np.abs(vals))))
        levels.append(SupGrowthLevel(kk, pts, float(np.max(np.abs(vals))), running))
        fields.append(vals)
    return SupGrowthReport(levels, fields)
