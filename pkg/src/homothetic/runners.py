"""Experiment runners: turn a validated config into a pass/fail report."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .config import ExperimentConfig
from .experiments import (
    FAMILIES,
    PointSourceSpec,
    branch_exponent_measure,
    cauchy_family,
    dirichlet_family,
    fit_order,
    neumann_family,
    penalization_convergence,
    point_source_run,
    unregularized_energy,
)
from .grid import build_torus_mesh
from .report import Report, Table
from .solver import classify_layer
from .twisted import (
    Cochain,
    chain_map_check,
    classical_laplacian,
    cohomology_dims,
    conjugation_residual,
    dress_complex,
    harmonic_space,
    hodge_decompose,
    hodge_projection_oracle,
    principal_angles,
    random_smooth_lambda,
    twisted_codifferential,
    twisted_d,
)


def _report(cfg: ExperimentConfig) -> Report:
    # the output directory is not a run parameter, so outputs do not depend on it
    params = cfg.to_dict()
    params.pop("out")
    return Report(cfg.kind, params)


def _meshes(cfg: ExperimentConfig):
    g = cfg.geometry
    return [build_torus_mesh(int(nx), int(ny), float(g.get("hx", 1.0)), float(g.get("hy", 1.0)))
            for nx, ny in g["sizes"]]


def _gnorm(c, p, v):
    return float(np.sqrt(v @ (c.gram[p] * v)))


def dec_draw(rng: np.random.Generator, mesh, amplitude: float, w: float = 1.0) -> dict:
    """All algebraic identity residuals for one random scale field and cochains."""
    c = dress_complex(mesh, random_smooth_lambda(rng, mesh, amplitude / abs(w) if w else amplitude), w)
    nv, ne, nf = mesh.counts()
    e0 = Cochain(0, rng.normal(size=nv))
    e1 = Cochain(1, rng.normal(size=ne))
    x2 = Cochain(2, rng.normal(size=nf))
    out = {
        "nilpotency_d": np.linalg.norm(twisted_d(c, twisted_d(c, e0)).values) / e0.norm(),
        "nilpotency_delta": np.linalg.norm(twisted_codifferential(c, twisted_codifferential(c, x2)).values) / x2.norm(),
        "chain_map": max(chain_map_check(c, e0) / e0.norm(), chain_map_check(c, e1) / e1.norm()),
    }
    adj = 0.0
    for eta, xi in ((e0, e1), (e1, x2)):
        de, dx = twisted_d(c, eta), twisted_codifferential(c, xi)
        diff = abs(c.pairing(de, xi) - c.pairing(eta, dx))
        scale = _gnorm(c, xi.degree, de.values) * _gnorm(c, xi.degree, xi.values) + \
            _gnorm(c, eta.degree, eta.values) * _gnorm(c, eta.degree, dx.values)
        adj = max(adj, diff / scale)
    out["adjointness"] = adj
    out["conjugation"] = max(conjugation_residual(c, p) for p in range(3))
    spec = 0.0
    for p in range(3):
        tw = np.sort(np.linalg.eigvals(c.laplacian_matrix(p).toarray()).real)
        cl = np.linalg.eigvalsh(classical_laplacian(mesh, p).toarray())
        spec = max(spec, float(np.max(np.abs(tw - cl))))
    out["spectrum"] = spec
    out["cohomology"] = cohomology_dims(c)
    out["transport"] = max(float(np.max(principal_angles(c, p))) for p in range(3))
    return out


def run_dec_identities(cfg: ExperimentConfig) -> Report:
    rep = _report(cfg)
    rng = np.random.default_rng(cfg.seed)
    keys = ["nilpotency_d", "nilpotency_delta", "chain_map", "adjointness", "conjugation", "spectrum", "transport"]
    rows = []
    worst = {k: 0.0 for k in keys}
    bad_cohomology = 0
    for mesh in _meshes(cfg):
        for k in range(cfg.draws):
            d = dec_draw(rng, mesh, cfg.amplitude, cfg.w)
            for key in keys:
                worst[key] = max(worst[key], float(d[key]))
            bad_cohomology += d["cohomology"] != (1, 2, 1)
            rows.append([mesh.nx, mesh.ny, k] + [float(d[key]) for key in keys] + list(d["cohomology"]))
    tol = cfg.tolerances
    rep.add("nilpotency_d", worst["nilpotency_d"], tol["nilpotency"])
    rep.add("nilpotency_delta", worst["nilpotency_delta"], tol["nilpotency"])
    rep.add("chain_map", worst["chain_map"], tol["chain_map"])
    rep.add("adjointness", worst["adjointness"], tol["adjointness"])
    rep.add("conjugation", worst["conjugation"], tol["conjugation"])
    rep.add("spectrum", worst["spectrum"], tol["spectrum"])
    rep.add("transport", worst["transport"], tol["transport"])
    rep.add("cohomology_mismatches", bad_cohomology, 0, "==", "(h0, h1, h2) must equal (1, 2, 1)")
    rep.tables.append(Table("draws", ["nx", "ny", "draw"] + keys + ["h0", "h1", "h2"], rows))
    rep.summary = {"max": worst, "draws": len(rows)}
    return rep


def run_hodge(cfg: ExperimentConfig) -> Report:
    rep = _report(cfg)
    rng = np.random.default_rng(cfg.seed)
    tol = cfg.tolerances
    rows = []
    worst = {"reassembly": 0.0, "orthogonality": 0.0, "oracle": 0.0}
    for mesh in _meshes(cfg):
        for k in range(cfg.draws):
            lam = random_smooth_lambda(rng, mesh, cfg.amplitude / abs(cfg.w) if cfg.w else cfg.amplitude)
            c = dress_complex(mesh, lam, cfg.w)
            for p in range(3):
                eta = Cochain(p, rng.normal(size=c.size(p)))
                H = harmonic_space(c, p)
                split = hodge_decompose(c, eta, rtol=float(tol["cg"]), basis=H)
                P = hodge_projection_oracle(c, p)
                nrm = _gnorm(c, p, eta.values)
                orc = max(_gnorm(c, p, comp - Pk @ eta.values) / nrm
                          for comp, Pk in zip(split.components(), P))
                worst["reassembly"] = max(worst["reassembly"], split.reassembly)
                worst["orthogonality"] = max(worst["orthogonality"], split.orthogonality)
                worst["oracle"] = max(worst["oracle"], orc)
                rows.append([mesh.nx, mesh.ny, k, p, split.reassembly, split.orthogonality, orc,
                             split.iterations[0], split.iterations[1]])
    for key in worst:
        rep.add(key, worst[key], tol[key])
    rep.tables.append(Table("splits", ["nx", "ny", "draw", "degree", "reassembly", "orthogonality",
                                       "oracle", "cg_exact", "cg_coexact"], rows))
    rep.summary = {"max": worst, "inputs": len(rows)}
    return rep


def _table_from(conv) -> Table:
    return Table("convergence", list(conv.columns), [[r[c] for c in conv.columns] for r in conv.rows])


def _orders(conv) -> dict:
    return {k: v.as_dict() for k, v in conv.orders.items()}


def _family_kwargs(p: dict) -> dict:
    return {"a": float(p["a"]), "eta": float(p["eta"]), "cells": int(p["cells"]), "blend": p["blend"]}


def run_dirichlet(cfg: ExperimentConfig) -> Report:
    rep = _report(cfg)
    g, p, tol = cfg.geometry, cfg.profile, cfg.tolerances
    gv, left, right = float(g["g"]), float(g["left"]), float(g["right"])
    fam = dirichlet_family(g=gv, far=(left, right), **_family_kwargs(p))
    conv = penalization_convergence(fam, float(p["eps0"]), int(p["n_levels"]))
    oracle = (right - gv) - (gv - left)
    last = conv.rows[-1]
    fit = conv.orders.get("trace_error")
    if fit is not None:
        rep.add("trace_order", fit.order, tol["order"], ">=", f"95% CI [{fit.lower:.3f}, {fit.upper:.3f}]")
    if oracle != 0:
        rep.add("flux_jump_rel_error", abs(last["jump_flux"] - oracle) / abs(oracle), tol["jump_rel"], "<",
                f"oracle {oracle:g}, measured {last['jump_flux']:.6g}")
    rep.tables.append(_table_from(conv))
    rep.summary = {"orders": _orders(conv), "oracle_jump_flux": oracle,
                   "classification": classify_layer(last["jump_value"], last["jump_flux"])}
    return rep


def run_neumann(cfg: ExperimentConfig) -> Report:
    rep = _report(cfg)
    g, p, tol = cfg.geometry, cfg.profile, cfg.tolerances
    hv, left, right = float(g["h"]), float(g["left"]), float(g["right"])
    fam = neumann_family(h=hv, far=(left, right), **_family_kwargs(p))
    conv = penalization_convergence(fam, float(p["eps0"]), int(p["n_levels"]))
    oracle = (right - hv) - (left + hv)
    last = conv.rows[-1]
    fit = conv.orders.get("flux_error")
    if fit is not None:
        rep.add("flux_order", fit.order, tol["order"], ">=", f"95% CI [{fit.lower:.3f}, {fit.upper:.3f}]")
    if oracle != 0:
        rep.add("value_jump_rel_error", abs(last["jump_value"] - oracle) / abs(oracle), tol["jump_rel"], "<",
                f"oracle {oracle:g}, measured {last['jump_value']:.6g}")
    rep.tables.append(_table_from(conv))
    rep.summary = {"orders": _orders(conv), "oracle_jump_value": oracle,
                   "classification": classify_layer(last["jump_value"], last["jump_flux"])}
    return rep


def _decreasing(v) -> bool:
    v = np.abs(np.asarray(v, float))
    return bool(np.all(np.diff(v) < 0))


def run_cauchy(cfg: ExperimentConfig) -> Report:
    rep = _report(cfg)
    g, p, tol = cfg.geometry, cfg.profile, cfg.tolerances
    fam = cauchy_family(C=float(g["C"]), R=float(g["R"]), r_in=float(g["r_in"]), r_out=float(g["r_out"]),
                        **_family_kwargs(p))
    conv = penalization_convergence(fam, float(p["eps0"]), int(p["n_levels"]))
    last = conv.rows[-1]
    rep.add("jump_value_finest", abs(last["jump_value"]), tol["jump"])
    rep.add("jump_flux_finest", abs(last["jump_flux"]), tol["jump"])
    if len(conv.rows) > 1:
        rep.add("jump_value_decreasing", float(_decreasing(conv.column("jump_value"))), 1.0, "==")
        rep.add("jump_flux_decreasing", float(_decreasing(conv.column("jump_flux"))), 1.0, "==")
    rep.tables.append(_table_from(conv))
    rep.summary = {"orders": _orders(conv),
                   "classification": classify_layer(last["jump_value"], last["jump_flux"], tol["jump"])}
    return rep


def _ps_spec(cfg: ExperimentConfig, R: float, variant: str | None = None) -> PointSourceSpec:
    g, p = cfg.geometry, cfg.profile
    return PointSourceSpec(C=float(g["C"]), R=float(R), r_max=float(g["r_max"]), n=int(g["n"]),
                           a=float(p["a"]), eps=float(p["eps0"]), eta=float(p["eta"]),
                           variant=variant or g["variant"], blend=p["blend"])


def run_point_source(cfg: ExperimentConfig) -> Report:
    rep = _report(cfg)
    g, tol = cfg.geometry, cfg.tolerances
    C, R = float(g["C"]), float(g["R"])
    main = point_source_run(_ps_spec(cfg, R))
    scale = abs(C / R) if C else 1.0
    rep.add("sup_error", main.sup_error, tol["sup_error"])
    rep.add("energy_rel_error", main.energy_rel_error, tol["energy_rel"], "<",
            f"E = {main.energy:.6g} vs {main.energy_exact:.6g}")
    rep.add("interior_flatness", main.interior_flatness / scale, tol["flatness"])
    rep.add("far_field", main.far_field_error / (abs(C) or 1.0), tol["far_field"])
    energy_rows = []
    for Rs in g.get("sweep", []):
        run = point_source_run(_ps_spec(cfg, Rs))
        ratio = run.energy / run.energy_exact if run.energy_exact else float("nan")
        energy_rows.append([float(Rs), run.energy, run.energy_exact, run.energy_bulk, run.energy_layer,
                            run.energy_tail, ratio, run.sup_error])
        if C:
            rep.add(f"sweep_R={Rs:g}", abs(ratio - 1.0), tol["sweep_rel"], "<", "|E R / (2 pi C^2) - 1|")
    if len(energy_rows) > 1 and C:
        order = sorted(energy_rows, key=lambda r: r[0])
        mono = all(a[1] > b[1] for a, b in zip(order, order[1:]))
        rep.add("energy_decreasing_in_R", float(mono), 1.0, "==")
    # Bare point charge on [h, 1]: energy must blow up like 1/h.
    hs = [0.01, 0.005, 0.0025, 0.00125]
    es = [unregularized_energy(C or 1.0, h) for h in hs]
    slope = fit_order(hs, es).order
    rep.add("unregularized_divergence", abs(slope + 1.0), tol["divergence_exponent"], "<",
            f"E ~ h^{slope:.4f}")
    other = "constant" if g["variant"] == "harmonic" else "harmonic"
    alt = point_source_run(_ps_spec(cfg, R, other))
    rep.tables.append(Table("profile", ["r", "phi", "exact"],
                            [[float(a), float(b), float(c)] for a, b, c in zip(main.r, main.phi, main.exact)]))
    rep.tables.append(Table("energy", ["R", "E", "E_exact", "E_bulk", "E_layer", "E_tail", "ratio", "sup_error"],
                            energy_rows))
    rep.tables.append(Table("divergence", ["h", "E"], [[h, e] for h, e in zip(hs, es)]))
    rep.summary = {"main": main.summary(), f"variant_{other}": alt.summary(), "divergence_exponent": slope}
    return rep


def run_branch_fit(cfg: ExperimentConfig) -> Report:
    rep = _report(cfg)
    g, p, tol = cfg.geometry, cfg.profile, cfg.tolerances
    rows = []
    for a in g["a_values"]:
        for parity in ("symmetric", "antisymmetric"):
            fit = branch_exponent_measure(float(a), n=int(g["n"]), eps=float(p["eps0"]), eta=float(p["eta"]),
                                          parity=parity, w=cfg.w)
            window = abs(fit.exponent - fit.half_window_exponent) / max(abs(fit.exponent), 1e-300)
            rep.add(f"a={a:g} {parity}", fit.rel_error, tol["exponent_rel"], "<",
                    f"m = {fit.exponent:.6f}, roots {fit.roots}, branch {fit.branch}")
            rep.add(f"a={a:g} {parity} window", window, tol["window_rel"])
            rows.append([float(a), parity, fit.exponent, fit.half_window_exponent, fit.roots[0], fit.roots[1],
                         fit.branch, fit.rel_error])
    rep.tables.append(Table("branches", ["a", "parity", "exponent", "half_window_exponent", "m1", "m2",
                                         "branch", "rel_error"], rows))
    return rep


def run_convergence(cfg: ExperimentConfig) -> Report:
    rep = _report(cfg)
    p = cfg.profile
    name = cfg.geometry["family"]
    kw = _family_kwargs(p)
    if name == "cauchy-1d":
        kw.pop("blend")
    fam = FAMILIES[name](**kw)
    conv = penalization_convergence(fam, float(p["eps0"]), int(p["n_levels"]))
    for key, fit in conv.orders.items():
        rep.add(f"order[{key}]", fit.order, cfg.tolerances["order"], ">=",
                f"95% CI [{fit.lower:.3f}, {fit.upper:.3f}]")
    rep.tables.append(_table_from(conv))
    rep.summary = {"family": name, "orders": _orders(conv)}
    return rep


RUNNERS: dict[str, Callable[[ExperimentConfig], Report]] = {
    "dec-identities": run_dec_identities,
    "hodge": run_hodge,
    "dirichlet": run_dirichlet,
    "neumann": run_neumann,
    "cauchy": run_cauchy,
    "point-source": run_point_source,
    "branch-fit": run_branch_fit,
    "convergence": run_convergence,
}


def run(cfg: ExperimentConfig) -> Report:
    """Run one validated experiment and return its report."""
    return RUNNERS[cfg.kind](cfg)


def stem(cfg: ExperimentConfig) -> str:
    """File stem encoding the experiment kind and its main parameters."""
    parts = [cfg.kind]
    p = cfg.profile
    if cfg.kind == "convergence":
        parts.append(str(cfg.geometry["family"]))
    for key in ("a", "eps0", "eta", "n_levels"):
        if key in p:
            parts.append(f"{key}{p[key]:g}" if isinstance(p[key], (int, float)) else f"{key}{p[key]}")
    if cfg.kind == "point-source":
        parts.append(f"R{float(cfg.geometry['R']):g}")
    parts.append(f"seed{cfg.seed}")
    return "_".join(parts)
