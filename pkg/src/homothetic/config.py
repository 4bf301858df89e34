"""Experiment configuration: YAML parsing, defaults and validation."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any

import yaml

from .errors import ConfigurationError

KINDS = (
    "dec-identities",
    "hodge",
    "dirichlet",
    "neumann",
    "cauchy",
    "point-source",
    "branch-fit",
    "convergence",
)

DESCRIPTIONS = {
    "dec-identities": "nilpotency, chain map, adjointness, conjugation, cohomology and harmonic transport on tori",
    "hodge": "weighted Hodge decomposition against a dense projection oracle",
    "dirichlet": "1D Dirichlet penalization: trace order and normal-derivative jump",
    "neumann": "1D Neumann penalization: flux order and value jump",
    "cauchy": "consistent Cauchy data on a sphere: both jumps vanish",
    "point-source": "hollow-sphere point source: profile, energy and R sweep",
    "branch-fit": "inner-zone exponents against the indicial roots",
    "convergence": "generic penalization convergence table for a named family",
}

_PROFILE = {"a": 0.75, "eps0": 0.1, "eta": 0.5, "n_levels": 5, "blend": "smooth", "cells": 8}

DEFAULTS: dict[str, dict[str, Any]] = {
    "dec-identities": {
        "geometry": {"sizes": [[4, 4], [6, 6], [8, 8]], "hx": 1.0, "hy": 1.0},
        "draws": 100,
        "amplitude": 5.0,
        "tolerances": {"nilpotency": 1e-12, "chain_map": 1e-13, "adjointness": 1e-12,
                       "conjugation": 1e-12, "spectrum": 1e-8, "transport": 1e-8},
    },
    "hodge": {
        "geometry": {"sizes": [[6, 6]], "hx": 1.0, "hy": 1.0},
        "draws": 20,
        "amplitude": 5.0,
        "tolerances": {"reassembly": 1e-10, "orthogonality": 1e-8, "oracle": 1e-8, "cg": 1e-12},
    },
    "dirichlet": {
        "geometry": {"g": 0.7, "left": 0.0, "right": 1.0},
        "profile": dict(_PROFILE),
        "tolerances": {"order": 1.0, "jump_rel": 0.01},
    },
    "neumann": {
        "geometry": {"h": 1.0, "left": 0.0, "right": 0.0},
        "profile": dict(_PROFILE, a=1.5),
        "tolerances": {"order": 1.0, "jump_rel": 0.02},
    },
    "cauchy": {
        "geometry": {"C": 1.0, "R": 1.0, "r_in": 0.25, "r_out": 2.0},
        "profile": dict(_PROFILE, a=1.0),
        "tolerances": {"jump": 1e-3},
    },
    "point-source": {
        "geometry": {"C": 1.0, "R": 0.5, "r_max": 50.0, "n": 20000, "sweep": [1.0, 0.5, 0.25, 0.125],
                     "variant": "harmonic"},
        "profile": {"a": 0.75, "eps0": 0.025, "eta": 0.5, "blend": "smooth"},
        "tolerances": {"sup_error": 5e-3, "energy_rel": 0.02, "sweep_rel": 0.03, "flatness": 1e-3,
                       "far_field": 1e-3, "divergence_exponent": 0.05},
    },
    "branch-fit": {
        "geometry": {"n": 4000, "a_values": [-2.0, -1.0, -0.5]},
        "profile": {"eps0": 0.1, "eta": 0.5},
        "tolerances": {"exponent_rel": 0.05, "window_rel": 0.02},
    },
    "convergence": {
        "geometry": {"family": "dirichlet-1d"},
        "profile": dict(_PROFILE),
        "tolerances": {"order": 1.0},
    },
}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class ExperimentConfig:
    """One experiment run.

    Attributes:
        kind: Experiment kind, one of ``KINDS``.
        seed: Seed for every random draw in the run.
        w: Weight multiplying ``lambda``.
        geometry: Geometry and data parameters (kind specific).
        profile: Cutoff profile parameters ``a``, ``eps0``, ``eta``,
            ``n_levels``, ``blend`` and ``cells`` (inner-zone cells per level).
        tolerances: Acceptance thresholds (kind specific, all positive).
        draws: Number of random draws for the algebraic suites.
        amplitude: Bound on ``|w lambda|`` for random scale fields.
        out: Output directory.
    """

    kind: str
    seed: int = 0
    w: float = 1.0
    geometry: dict = field(default_factory=dict)
    profile: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    draws: int = 0
    amplitude: float = 0.0
    out: str = "results"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "seed": self.seed, "w": self.w, "geometry": self.geometry,
            "profile": self.profile, "tolerances": self.tolerances, "draws": self.draws,
            "amplitude": self.amplitude, "out": self.out,
        }

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)


_TOP = {"kind", "seed", "w", "geometry", "profile", "tolerances", "draws", "amplitude", "out"}


def build_config(data: dict | None, kind: str | None = None) -> ExperimentConfig:
    """Merge ``data`` over the defaults of its kind and validate.

    Raises:
        ConfigurationError: on unknown keys or kinds and invalid values.
    """
    data = dict(data or {})
    unknown = set(data) - _TOP
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    k = data.get("kind", kind)
    if kind is not None and k != kind:
        raise ConfigurationError(f"config kind {k!r} does not match subcommand {kind!r}")
    if k not in KINDS:
        raise ConfigurationError(f"unknown experiment kind {k!r}; choose from {list(KINDS)}")
    merged = _merge({"kind": k, "seed": 0, "w": 1.0, "draws": 0, "amplitude": 0.0,
                     "out": "results", "geometry": {}, "profile": {}, "tolerances": {}},
                    DEFAULTS[k])
    merged = _merge(merged, data)
    for key in ("geometry", "profile", "tolerances"):
        if not isinstance(merged[key], dict):
            raise ConfigurationError(f"{key} must be a mapping")
    try:
        cfg = ExperimentConfig(
            kind=k, seed=int(merged["seed"]), w=float(merged["w"]), geometry=merged["geometry"],
            profile=merged["profile"], tolerances=merged["tolerances"], draws=int(merged["draws"]),
            amplitude=float(merged["amplitude"]), out=str(merged["out"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed config value: {exc}") from exc
    validate(cfg)
    return cfg


def parse_config(text: str, kind: str | None = None) -> ExperimentConfig:
    """Parse YAML text into a validated config."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"config is not valid YAML: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise ConfigurationError("config must be a mapping at the top level")
    return build_config(data, kind)


def load_config(path: str, kind: str | None = None) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, kind)


def _positive(name: str, v) -> float:
    try:
        v = float(v)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{name} must be a number") from exc
    if not v > 0:
        raise ConfigurationError(f"{name} must be positive, got {v}")
    return v


def validate(cfg: ExperimentConfig) -> None:
    """Check value ranges, including the layer-resolution rule ``h <= eta*eps/4``."""
    for name, v in cfg.tolerances.items():
        _positive(f"tolerance {name}", v)
    p = cfg.profile
    if "eta" in p and not 0 < float(p["eta"]) < 1:
        raise ConfigurationError(f"eta must lie in (0, 1), got {p['eta']}")
    if "eps0" in p:
        eps0 = _positive("eps0", p["eps0"])
        if eps0 > 1:
            raise ConfigurationError("eps0 must not exceed 1")
    if "n_levels" in p and int(p["n_levels"]) < 1:
        raise ConfigurationError("n_levels must be at least 1")
    if "cells" in p and float(p["cells"]) < 4:
        raise ConfigurationError("cells per inner zone must be at least 4 (h <= eta*eps/4)")
    if cfg.kind in ("dec-identities", "hodge"):
        if cfg.draws < 1:
            raise ConfigurationError("draws must be at least 1")
        _positive("amplitude", cfg.amplitude)
        for size in cfg.geometry.get("sizes", []):
            if len(size) != 2 or min(int(s) for s in size) < 2:
                raise ConfigurationError(f"torus sizes must be pairs >= 2, got {size}")
    if cfg.kind == "point-source":
        g = cfg.geometry
        n = int(g["n"])
        h = float(g["r_max"]) / (n - 0.5)
        eps = float(p["eps0"])
        if h > float(p["eta"]) * eps / 4 * (1 + 1e-9):
            raise ConfigurationError(
                f"unresolved layer: h = {h:.4g} exceeds eta*eps/4 = {float(p['eta']) * eps / 4:.4g}"
            )
        for R in [g["R"]] + list(g.get("sweep", [])):
            if not 0 < float(R) < float(g["r_max"]):
                raise ConfigurationError(f"need 0 < R < r_max, got R={R}")
            if eps >= float(R):
                raise ConfigurationError(f"layer width {eps} must be below R={R}")
    if cfg.kind == "convergence":
        from .experiments import FAMILIES

        if cfg.geometry.get("family") not in FAMILIES:
            raise ConfigurationError(f"unknown family; choose from {sorted(FAMILIES)}")
