"""Configuration-driven experiment runner.

Every module is exposed as a subcommand that reads a flat key-value config,
writes deterministic CSV bodies (timestamps only in the JSON sidecar), and
exits 0 when all asserted checks pass, 2 on an inconclusive classification,
and 1 on errors or failed assertions.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__, functionals, markov, moments, sampler, semilinear, symbols
from .config import load_config, subconfig, validate
from .errors import ConfigError, LevyFieldError
from .quadrature import QuadratureSpec

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCONCLUSIVE = 2


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "True" if value else "False"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_csv(path: str, header: list, rows: list):
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(row[h]) for h in header) + "\n")


def write_sidecar(path: str, cfg: dict, wall: float, extra: dict | None = None):
    meta = {
        "config": {k: cfg[k] for k in sorted(cfg)},
        "version": __version__,
        "wall_time_s": wall,
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    if extra:
        meta.update(extra)
    with open(path, "w") as f:
        json.dump(meta, f, indent=1, sort_keys=True, default=str)


def _quad_from(cfg: dict) -> QuadratureSpec:
    return QuadratureSpec(
        abs_tol=cfg.get("quad.abs_tol", 1e-12),
        rel_tol=cfg.get("quad.rel_tol", 1e-9),
        initial_cutoff=cfg.get("quad.initial_cutoff", 1e3),
        max_cutoff=cfg.get("quad.max_cutoff", 1e14),
    )


def _symbol_from(cfg: dict) -> symbols.Symbol:
    return symbols.from_config(subconfig(cfg, "symbol"))


def _phi_from(cfg: dict) -> functionals.TestFunction:
    sub = subconfig(cfg, "phi")
    return functionals.testfunction_from_config(sub)


def _lattice_from(cfg: dict) -> sampler.Lattice:
    return sampler.Lattice(
        length=cfg["lattice.length"],
        modes=cfg["lattice.modes"],
        times=tuple(float(t) for t in cfg["lattice.times"]),
    )


def _gauge_from(cfg: dict) -> functionals.GaugeSpec:
    kind = cfg["gauge.kind"]
    if kind == "log-power":
        return functionals.gauge_log_power(cfg["gauge.power"])
    if kind == "constant":
        return functionals.gauge_constant(cfg["gauge.power"])
    if kind == "identity":
        return functionals.gauge_identity()
    raise ConfigError(f"unknown gauge kind {kind!r}")


# ---------------------------------------------------------------------------
# subcommand handlers: each returns (exit_code, rows, header, extra_sidecar)


def run_exists(cfg, out):
    sym = _symbol_from(cfg)
    res = functionals.hawkes_existence(sym, cfg["exists.theta"], _quad_from(cfg))
    rows = [
        {
            "theta": cfg["exists.theta"],
            "status": res.status,
            "value": res.value if res.value is not None else math.nan,
            "growth_exponent": res.growth_exponent
            if res.growth_exponent is not None
            else math.nan,
            "pass": res.status != "inconclusive",
        }
    ]
    code = EXIT_INCONCLUSIVE if res.status == "inconclusive" else EXIT_OK
    return code, rows, ["theta", "status", "value", "growth_exponent", "pass"], {}


def run_energy(cfg, out):
    sym, phi, q = _symbol_from(cfg), _phi_from(cfg), _quad_from(cfg)
    rows = []
    for lam in cfg["energy.lambdas"]:
        r = functionals.energy_result(sym, phi, float(lam), q)
        rows.append(
            {"functional": "E", "parameter": float(lam), "value": r.value, "error": r.error}
        )
    for eps in cfg["energy.increments"]:
        r = functionals.energy_F_result(sym, phi, float(eps), q)
        rows.append(
            {"functional": "F", "parameter": float(eps), "value": r.value, "error": r.error}
        )
    return EXIT_OK, rows, ["functional", "parameter", "value", "error"], {}


def run_h(cfg, out):
    sym, q = _symbol_from(cfg), _quad_from(cfg)
    rows = []
    for r in cfg["h.r"]:
        res = functionals.h_function_result(sym, float(r), q)
        rows.append({"r": float(r), "value": res.value, "error": res.error})
    return EXIT_OK, rows, ["r", "value", "error"], {}


def run_indices(cfg, out):
    sym, q = _symbol_from(cfg), _quad_from(cfg)
    which = cfg["indices.which"]
    jm, tw = cfg["indices.j_max"], cfg["indices.tail_window"]
    iq = QuadratureSpec(rel_tol=max(q.rel_tol, 1e-6), max_cutoff=1e16)
    rows = []
    if which in ("all", "symbol"):
        est = symbols.lower_index(sym, tail_window=tw)
        rows.append({"index": "lower_index", "estimate": est.estimate, "slope": est.slope})
    if which in ("all", "energy"):
        est = functionals.lower_index_E(sym, _phi_from(cfg), iq, j_max=jm, tail_window=tw)
        rows.append({"index": "lower_index_E", "estimate": est.estimate, "slope": est.slope})
    if which in ("all", "h"):
        est = functionals.lower_index_h(sym, iq, j_max=jm, tail_window=tw)
        rows.append({"index": "lower_index_h", "estimate": est.estimate, "slope": est.slope})
    return EXIT_OK, rows, ["index", "estimate", "slope"], {}


def run_barlow(cfg, out):
    sym, q = _symbol_from(cfg), _quad_from(cfg)
    res = functionals.barlow_condition(
        sym,
        q,
        r0=cfg["barlow.r0"],
        decades=cfg["barlow.decades"],
        points_per_decade=cfg["barlow.points_per_decade"],
    )
    rows = [
        {"decade": j + 1, "piece": float(p), "status": res.status, "value": res.value}
        for j, p in enumerate(res.pieces)
    ]
    code = EXIT_INCONCLUSIVE if res.status == "inconclusive" else EXIT_OK
    return code, rows, ["decade", "piece", "status", "value"], {}


def run_gauge(cfg, out):
    g = _gauge_from(cfg)
    rep = functionals.is_gauge(g)
    rows = [
        {
            "gauge": g.name,
            "is_gauge": rep.ok,
            "monotone": rep.monotone,
            "slowly_varying": rep.slowly_varying,
            "integral_status": rep.integral_status,
            "temporal_condition": "",
        }
    ]
    code = EXIT_INCONCLUSIVE if rep.integral_status == "inconclusive" else EXIT_OK
    if cfg["gauge.check_temporal"]:
        sym, phi, q = _symbol_from(cfg), _phi_from(cfg), _quad_from(cfg)
        res = functionals.temporal_continuity_condition(sym, phi, g, q)
        rows[0]["temporal_condition"] = res.status
    return (
        code,
        rows,
        [
            "gauge",
            "is_gauge",
            "monotone",
            "slowly_varying",
            "integral_status",
            "temporal_condition",
        ],
        {},
    )


def run_moments_verify(cfg, out):
    q = _quad_from(cfg)
    reports = moments.standard_probe_matrix(q, cfg["verify.tolerance"])
    rows = [r.csv_row() for r in reports]
    header = ["quantity", "lower", "middle", "upper", "margin_lo", "margin_hi", "pass"]
    ok = all(r.passed for r in reports)
    return (EXIT_OK if ok else EXIT_ERROR), rows, header, {"total": len(rows)}


def _run_simulate(cfg, out, kind: str):
    sym = _symbol_from(cfg)
    lat = _lattice_from(cfg)
    seed, m = cfg["seed"], cfg["mc.replicates"]
    if kind == "heat":
        ens = sampler.simulate_heat_field(sym, lat, seed, m)
        theory = sampler.lattice_heat_moments(sym, lat, sampler.discrete_delta(lat))
    else:
        ens = sampler.simulate_wave_field(sym, lat, seed, m)
        theory = sampler.lattice_wave_moments(sym, lat, sampler.discrete_delta(lat))
    ens.to_csv(
        os.path.join(out, f"field-{kind}.csv"),
        os.path.join(out, f"field-{kind}.meta.json"),
    )
    emp = ens.pair(sampler.discrete_delta(lat))
    rows = []
    ok = True
    for i, t in enumerate(lat.times):
        v = float(emp[:, i].var(ddof=1))
        se = v * math.sqrt(2.0 / (m - 1))
        z = (v - theory[i]) / se if se > 0 else 0.0
        good = abs(z) <= cfg["mc.max_z"]
        ok &= good
        rows.append(
            {
                "t": float(t),
                "empirical_var": v,
                "lattice_var": float(theory[i]),
                "z": z,
                "pass": good,
            }
        )
    header = ["t", "empirical_var", "lattice_var", "z", "pass"]
    return (EXIT_OK if ok else EXIT_ERROR), rows, header, {}


def run_simulate_heat(cfg, out):
    return _run_simulate(cfg, out, "heat")


def run_simulate_wave(cfg, out):
    return _run_simulate(cfg, out, "wave")


def run_holder_empirical(cfg, out):
    sym = _symbol_from(cfg)
    lat = _lattice_from(cfg)
    ens = sampler.simulate_heat_field(sym, lat, cfg["seed"], cfg["mc.replicates"])
    directions = (
        ["space", "time"] if cfg["holder.direction"] == "both" else [cfg["holder.direction"]]
    )
    rows = []
    ok = True
    for d in directions:
        est = sampler.empirical_holder_estimate(ens, d)
        expected = cfg["holder.expected"]
        good = True
        if not math.isnan(expected):
            good = abs(est.exponent - expected) <= cfg["holder.tolerance"]
            ok &= good
        rows.append(
            {
                "direction": d,
                "exponent": est.exponent,
                "stderr": est.stderr,
                "expected": expected,
                "pass": good,
            }
        )
    header = ["direction", "exponent", "stderr", "expected", "pass"]
    return (EXIT_OK if ok else EXIT_ERROR), rows, header, {}


def run_sup_probe(cfg, out):
    sym = _symbol_from(cfg)
    rep = sampler.sup_growth_probe(
        sym,
        cfg["sup.t"],
        cfg["seed"],
        length=cfg["sup.length"],
        base_modes=cfg["sup.base_modes"],
        base_points=cfg["sup.base_points"],
        refinements=cfg["sup.refinements"],
    )
    rows = [
        {
            "level": i,
            "modes": lv.modes,
            "points": lv.points,
            "level_max": lv.level_max,
            "running_max": lv.running_max,
        }
        for i, lv in enumerate(rep.levels)
    ]
    header = ["level", "modes", "points", "level_max", "running_max"]
    return EXIT_OK, rows, header, {}


def _chain_functions(chain: markov.ChainModel, count: int, seed: int):
    """indicator(0) plus seeded centered random functions."""
    fns = [("indicator0", np.eye(1, chain.states, 0)[0])]
    rng = np.random.Generator(np.random.Philox(key=[np.uint64(seed), np.uint64(3)]))
    for i in range(max(0, count - 1)):
        v = rng.standard_normal(chain.states)
        fns.append((f"random{i}", v - v.mean()))
    return fns


def run_markov_identity(cfg, out):
    rows = []
    ok = True
    rtol = cfg["markov.rtol"]
    for n in cfg["chain.states"]:
        for rho in cfg["chain.rate"]:
            chain = markov.ChainModel(int(n), float(rho))
            for name, phi in _chain_functions(chain, cfg["markov.functions"], cfg["seed"]):
                for t in cfg["markov.t"]:
                    res = markov.verify_localtime_identity(chain, phi, float(t))
                    good = (
                        res.residual < rtol
                        and res.bounds.margin_lo > 0
                        and res.bounds.margin_hi > 0
                    )
                    ok &= good
                    rows.append(
                        {
                            "N": int(n),
                            "rho": float(rho),
                            "phi_id": name,
                            "t": float(t),
                            "lhs": res.occupation_moment,
                            "rhs": res.integrated_heat,
                            "residual": res.residual,
                            "margin_lo": res.bounds.margin_lo,
                            "margin_hi": res.bounds.margin_hi,
                            "pass": good,
                        }
                    )
    header = [
        "N", "rho", "phi_id", "t", "lhs", "rhs", "residual",
        "margin_lo", "margin_hi", "pass",
    ]
    return (EXIT_OK if ok else EXIT_ERROR), rows, header, {}


def run_markov_mc(cfg, out):
    chain = markov.ChainModel(cfg["chain.states"], cfg["chain.rate"])
    t, lam, m = cfg["markov.t"], cfg["markov.lambda"], cfg["mc.replicates"]
    rows = []
    ok = True
    for name, phi in _chain_functions(chain, 3, cfg["seed"]):
        occ = markov.simulate_chain_occupation(chain, phi, t, m, cfg["seed"])
        closed = markov.chain_occupation_second_moment(chain, phi, t)
        z = (occ.second_moment - closed) / occ.stderr if occ.stderr > 0 else 0.0
        good = abs(z) <= cfg["mc.max_z"]
        ok &= good
        rows.append(
            {
                "check": f"occupation[{name}]",
                "closed": closed,
                "mc": occ.second_moment,
                "se": occ.stderr,
                "z": z,
                "pass": good,
            }
        )
        res = markov.chain_resolvent_identities(chain, phi, lam, m, cfg["seed"])
        zr = (
            (res.occupation_mc - res.occupation_closed) / res.occupation_mc_stderr
            if res.occupation_mc_stderr > 0
            else 0.0
        )
        good = abs(zr) <= cfg["mc.max_z"] and res.identity_residual < 1e-10
        ok &= good
        rows.append(
            {
                "check": f"resolvent[{name}]",
                "closed": res.occupation_closed,
                "mc": res.occupation_mc,
                "se": res.occupation_mc_stderr,
                "z": zr,
                "pass": good,
            }
        )
    header = ["check", "closed", "mc", "se", "z", "pass"]
    return (EXIT_OK if ok else EXIT_ERROR), rows, header, {}


def run_levy_occupation(cfg, out):
    sym = _symbol_from(cfg)
    trend = markov.levy_occupation_experiment(
        sym,
        cfg["levy.a"],
        [float(e) for e in cfg["levy.eps"]],
        cfg["levy.t"],
        cfg["mc.replicates"],
        cfg["levy.dt"],
        cfg["seed"],
    )
    alpha = dict(sym.params).get("alpha", 2.0)
    rows = [
        {
            "alpha": float(alpha),
            "eps": r.eps_fine,
            "D": r.diagnostic,
            "SE": r.stderr,
        }
        for r in trend.rows
    ]
    extra = {
        "classification": trend.classification,
        "occupation_means": list(map(float, trend.occupation_means)),
        "occupation_stderr": list(map(float, trend.occupation_stderr)),
    }
    return EXIT_OK, rows, ["alpha", "eps", "D", "SE"], extra


def run_density(cfg, out):
    sym = _symbol_from(cfg)
    lat = _lattice_from(cfg)
    rows = []
    ok = True
    for t in cfg["density.t"]:
        dg = semilinear.transition_density(sym, float(t), lat, clip_tol=cfg["density.clip_tol"])
        good = abs(dg.mass - 1.0) <= 1e-6
        ok &= good
        rows.append(
            {
                "t": float(t),
                "p_at_0": float(dg.values[0]),
                "mass": dg.mass,
                "clipped_mass": dg.clipped_mass,
                "min_value": dg.min_value,
                "pass": good,
            }
        )
    ts = np.asarray([float(t) for t in cfg["density.t"]])
    _, (c, eta) = semilinear.density_l2_growth(sym, lat, ts)
    header = ["t", "p_at_0", "mass", "clipped_mass", "min_value", "pass"]
    return (EXIT_OK if ok else EXIT_ERROR), rows, header, {"growth_C": c, "growth_eta": eta}


def run_semilinear(cfg, out):
    sym = _symbol_from(cfg)
    b = semilinear.nonlinearity_from_config(
        {"kind": cfg["semilinear.b"], "c": cfg["semilinear.c"]}
    )
    if cfg["semilinear.input_csv"]:
        ens = sampler.load_field_csv(
            cfg["semilinear.input_csv"], cfg["semilinear.input_sidecar"]
        )
        base = next(ens.samples())
    else:
        lat = _lattice_from(cfg)
        base = next(sampler.simulate_heat_field(sym, lat, cfg["seed"], 1).samples())
    sol, diag = semilinear.picard_solve(
        sym, b, base, tol=cfg["semilinear.tol"], max_iter=cfg["semilinear.max_iter"]
    )
    sol_ens = sampler.FieldEnsemble(
        values=sol.values[None, :, :],
        seed=base.seed,
        kind="heat-semilinear",
        lattice=base.lattice,
        symbol_spec={"kind": sym.kind, **dict(sym.params)},
    )
    sol_ens.to_csv(
        os.path.join(out, "field-semilinear.csv"),
        os.path.join(out, "field-semilinear.meta.json"),
    )
    ok = diag.final_residual < max(1e-3, 10 * cfg["semilinear.tol"])
    late = diag.contraction_ratios[1:]
    if b.lipschitz > 0 and late:
        ok &= max(late) <= cfg["semilinear.max_ratio"]
    with open(os.path.join(out, "semilinear-diagnostics.json"), "w") as f:
        json.dump(
            {
                "weighted_differences": diag.weighted_differences,
                "contraction_ratios": diag.contraction_ratios,
                "iterations": diag.iterations,
                "final_residual": diag.final_residual,
                "lambda": diag.lam,
            },
            f,
            indent=1,
        )
    rows = [
        {
            "iteration": i,
            "weighted_difference": d,
            "ratio": diag.contraction_ratios[i - 1] if i >= 1 else math.nan,
            "pass": ok,
        }
        for i, d in enumerate(diag.weighted_differences)
    ]
    header = ["iteration", "weighted_difference", "ratio", "pass"]
    return (EXIT_OK if ok else EXIT_ERROR), rows, header, {"residual": diag.final_residual}


def run_report(cfg, out):
    rows = []
    total_pass = total_fail = 0
    for name in sorted(os.listdir(out)):
        if not name.endswith(".csv") or name == "summary.csv":
            continue
        path = os.path.join(out, name)
        with open(path) as f:
            header = f.readline().strip().split(",")
            if "pass" not in header:
                continue
            idx = header.index("pass")
            npass = nfail = 0
            for line in f:
                cells = line.rstrip("\n").split(",")
                if len(cells) <= idx:
                    continue
                if cells[idx] == "True":
                    npass += 1
                else:
                    nfail += 1
        total_pass += npass
        total_fail += nfail
        rows.append({"file": name, "pass_count": npass, "fail_count": nfail})
    rows.append({"file": "TOTAL", "pass_count": total_pass, "fail_count": total_fail})
    header = ["file", "pass_count", "fail_count"]
    return (EXIT_OK if total_fail == 0 else EXIT_ERROR), rows, header, {}


HANDLERS = {
    "exists": run_exists,
    "energy": run_energy,
    "h": run_h,
    "indices": run_indices,
    "barlow": run_barlow,
    "gauge": run_gauge,
    "moments-verify": run_moments_verify,
    "simulate-heat": run_simulate_heat,
    "simulate-wave": run_simulate_wave,
    "holder-empirical": run_holder_empirical,
    "sup-probe": run_sup_probe,
    "markov-identity": run_markov_identity,
    "markov-mc": run_markov_mc,
    "levy-occupation": run_levy_occupation,
    "density": run_density,
    "semilinear": run_semilinear,
    "report": run_report,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="levyfield",
        description="spectral functionals, moment checks, and samplers for "
        "white-noise-driven heat/wave equations with Levy generators",
    )
    parser.add_argument("subcommand", choices=sorted(HANDLERS))
    parser.add_argument("--config", help="flat key-value config file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--threads", type=int, default=None,
                        help="reserved; outputs are scheduling-invariant")
    parser.add_argument("--strict", action="store_true",
                        help="treat inconclusive classifications as failures")
    args = parser.parse_args(argv)

    t0 = time.time()
    try:
        raw = load_config(args.config) if args.config else {}
        cfg = validate(args.subcommand, raw)
        if args.seed is not None:
            cfg["seed"] = args.seed
        os.makedirs(args.out, exist_ok=True)
        code, rows, header, extra = HANDLERS[args.subcommand](cfg, args.out)
        csv_path = os.path.join(args.out, f"{args.subcommand}.csv")
        write_csv(csv_path, header, rows)
        write_sidecar(
            os.path.join(args.out, f"{args.subcommand}.json"),
            cfg,
            time.time() - t0,
            extra,
        )
    except ConfigError as exc:
        print(f"config-invalid: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except LevyFieldError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.strict and code == EXIT_INCONCLUSIVE:
        return EXIT_ERROR
    return code


if __name__ == "__main__":
    sys.exit(main())
