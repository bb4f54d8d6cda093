"""Flat key-value experiment configuration.

One experiment per file; lines are ``key = value`` with dotted sections
(symbol.kind, lattice.modes, ...), ``#`` comments, and comma-separated
lists.  Unknown keys are rejected against the subcommand schema so that
configs stay diff-able provenance records.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError

REQUIRED = object()


def _parse_scalar(text: str):
    text = text.strip()
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def parse_flat_config(text: str) -> dict:
    """Parse the flat key-value document into a {dotted.key: value} dict."""
    out: dict = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {ln}: empty key")
        if key in out:
            raise ConfigError(f"line {ln}: duplicate key {key!r}")
        value = value.strip()
        if "," in value:
            out[key] = [_parse_scalar(v) for v in value.split(",") if v.strip()]
        else:
            out[key] = _parse_scalar(value)
    return out


def load_config(path: str) -> dict:
    with open(path) as f:
        return parse_flat_config(f.read())


# schema value kinds: "int" | "float" | "str" | "bool" | "list"
_COMMON = {
    "seed": ("int", 0),
}

_SYMBOL = {
    "symbol.kind": ("str", REQUIRED),
    "symbol.alpha": ("float", 1.5),
    "symbol.skew": ("float", 0.0),
    "symbol.scale": ("float", 1.0),
    "symbol.alpha_p": ("float", 3.0),
    "symbol.sigma2": ("float", 0.0),
    "symbol.atoms": ("str", ""),
    "symbol.drift": ("float", 0.0),
    "symbol.dimension": ("int", 1),
}

_PHI = {
    "phi.kind": ("str", "delta"),
    "phi.x": ("float", 0.0),
    "phi.y": ("float", 1.0),
    "phi.center": ("float", 0.0),
    "phi.width": ("float", 1.0),
    "phi.radius": ("float", 0.1),
}

_QUAD = {
    "quad.abs_tol": ("float", 1e-12),
    "quad.rel_tol": ("float", 1e-9),
    "quad.initial_cutoff": ("float", 1e3),
    "quad.max_cutoff": ("float", 1e14),
}

_LATTICE = {
    "lattice.length": ("float", 16.0),
    "lattice.modes": ("int", 128),
    "lattice.times": ("list", [0.25, 0.5, 1.0]),
}

SCHEMAS: dict = {
    "exists": {**_COMMON, **_SYMBOL, **_QUAD, "exists.theta": ("float", 1.0)},
    "energy": {
        **_COMMON,
        **_SYMBOL,
        **_PHI,
        **_QUAD,
        "energy.lambdas": ("list", [1.0]),
        "energy.increments": ("list", []),
    },
    "h": {**_COMMON, **_SYMBOL, **_QUAD, "h.r": ("list", [0.5, 1.0, 2.0])},
    "indices": {
        **_COMMON,
        **_SYMBOL,
        **_PHI,
        **_QUAD,
        "indices.j_max": ("int", 40),
        "indices.tail_window": ("int", 10),
        "indices.which": ("str", "all"),  # all | symbol | energy | h
    },
    "barlow": {
        **_COMMON,
        **_SYMBOL,
        **_QUAD,
        "barlow.r0": ("float", 1.0),
        "barlow.decades": ("int", 8),
        "barlow.points_per_decade": ("int", 12),
    },
    "gauge": {
        **_COMMON,
        **_SYMBOL,
        **_PHI,
        **_QUAD,
        "gauge.kind": ("str", "log-power"),
        "gauge.power": ("float", 2.0),
        "gauge.check_temporal": ("bool", False),
    },
    "moments-verify": {
        **_COMMON,
        **_QUAD,
        "verify.tolerance": ("float", 1e-8),
    },
    "simulate-heat": {
        **_COMMON,
        **_SYMBOL,
        **_LATTICE,
        "mc.replicates": ("int", 2000),
        "mc.max_z": ("float", 4.0),
    },
    "simulate-wave": {
        **_COMMON,
        **_SYMBOL,
        **_LATTICE,
        "mc.replicates": ("int", 2000),
        "mc.max_z": ("float", 4.0),
    },
    "holder-empirical": {
        **_COMMON,
        **_SYMBOL,
        **_LATTICE,
        "mc.replicates": ("int", 2000),
        "holder.direction": ("str", "space"),
        "holder.expected": ("float", float("nan")),
        "holder.tolerance": ("float", 0.1),
    },
    "sup-probe": {
        **_COMMON,
        **_SYMBOL,
        "sup.t": ("float", 1.0),
        "sup.length": ("float", 16.0),
        "sup.base_modes": ("int", 64),
        "sup.base_points": ("int", 128),
        "sup.refinements": ("int", 4),
    },
    "markov-identity": {
        **_COMMON,
        "chain.states": ("list", [4, 16, 64]),
        "chain.rate": ("list", [0.5, 1.0, 4.0]),
        "markov.t": ("list", [0.25, 1.0, 4.0]),
        "markov.functions": ("int", 5),
        "markov.rtol": ("float", 1e-10),
    },
    "markov-mc": {
        **_COMMON,
        "chain.states": ("int", 16),
        "chain.rate": ("float", 1.0),
        "markov.t": ("float", 1.0),
        "markov.lambda": ("float", 2.0),
        "mc.replicates": ("int", 20000),
        "mc.max_z": ("float", 4.0),
    },
    "levy-occupation": {
        **_COMMON,
        **_SYMBOL,
        "levy.a": ("float", 0.0),
        "levy.eps": ("list", [0.2, 0.1, 0.05, 0.025]),
        "levy.t": ("float", 1.0),
        "levy.dt": ("float", 4e-6),
        "mc.replicates": ("int", 2000),
    },
    "density": {
        **_COMMON,
        **_SYMBOL,
        **_LATTICE,
        "density.t": ("list", [0.5, 1.0]),
        "density.clip_tol": ("float", 1e-6),
    },
    "semilinear": {
        **_COMMON,
        **_SYMBOL,
        **_LATTICE,
        "semilinear.b": ("str", "tanh"),
        "semilinear.c": ("float", 1.0),
        "semilinear.tol": ("float", 1e-10),
        "semilinear.max_iter": ("int", 60),
        "semilinear.input_csv": ("str", ""),
        "semilinear.input_sidecar": ("str", ""),
        "semilinear.max_ratio": ("float", 0.55),
    },
    "report": {**_COMMON},
}


def validate(subcommand: str, cfg: dict) -> dict:
    """Check keys against the schema, fill defaults, coerce scalar types."""
    if subcommand not in SCHEMAS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    schema = SCHEMAS[subcommand]
    unknown = sorted(set(cfg) - set(schema))
    if unknown:
        raise ConfigError(f"unknown keys for {subcommand}: {', '.join(unknown)}")
    out = {}
    for key, (kind, default) in schema.items():
        if key in cfg:
            val = cfg[key]
        elif default is REQUIRED:
            raise ConfigError(f"missing required key {key!r}")
        else:
            val = default
        if kind == "int" and not isinstance(val, bool) and isinstance(val, (int, float)):
            val = int(val)
        elif kind == "float" and isinstance(val, (int, float)) and not isinstance(val, bool):
            val = float(val)
        elif kind == "list" and not isinstance(val, list):
            val = [val]
        elif kind == "str" and not isinstance(val, str):
            raise ConfigError(f"key {key!r} must be a string, got {val!r}")
        elif kind == "bool" and not isinstance(val, bool):
            raise ConfigError(f"key {key!r} must be a boolean, got {val!r}")
        out[key] = val
    return out


def subconfig(cfg: dict, prefix: str) -> dict:
    """Strip ``prefix.`` from matching keys: {'symbol.kind': v} -> {'kind': v}."""
    plen = len(prefix) + 1
    return {k[plen:]: v for k, v in cfg.items() if k.startswith(prefix + ".")}
