"""Configuration-driven experiment runner.

Batch-only: reads a JSON config, runs one named experiment, writes a CSV
table of per-stretch values, a JSON summary with pass/fail and fit
diagnostics, and optional two-column xy files for plotting.  Output is
bit-for-bit reproducible: fixed row order, floats at 17 significant
digits, and a provenance header (config hash, artifact version) on every
file.

Exit codes: 0 all assertions pass, 2 config error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

from . import __version__
from .adiabatic import (
    sweep,
    verify_bfk_corollary,
    verify_lemma_cancellation,
    verify_smalltime_largetime_split,
    verify_theorem_dn,
    verify_theorem_main,
)
from .glue import GlueGeometry, trace_perp_inverse_diff
from .scattering import (
    det_L_identity,
    dn_zero_mode_asymptotics,
    model_logdet,
    model_zeta_single_phase,
    model_identities,
    svalue_rate_ratios,
    svalue_report,
)
from .spectral_core import FiberSpectrum


class ConfigError(ValueError):
    """Invalid configuration; carries the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _require_keys(obj: dict, allowed: set[str], path: str):
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}", "unknown key")


def _parse_fiber(obj, path="fiber") -> FiberSpectrum:
    if not isinstance(obj, dict):
        raise ConfigError(path, "must be an object")
    kind = obj.get("type")
    if kind == "finite":
        _require_keys(obj, {"type", "modes"}, path)
        modes = obj.get("modes")
        if not isinstance(modes, list) or not modes:
            raise ConfigError(f"{path}.modes", "must be a nonempty list")
        pairs = []
        for i, entry in enumerate(modes):
            if (not isinstance(entry, list) or len(entry) != 2):
                raise ConfigError(f"{path}.modes[{i}]", "must be [mu, mult]")
            mu, mult = entry
            if not isinstance(mu, (int, float)) or mu < 0:
                raise ConfigError(f"{path}.modes[{i}][0]",
                                  "mu must be a nonnegative number")
            if not isinstance(mult, int) or mult < 1:
                raise ConfigError(f"{path}.modes[{i}][1]",
                                  "mult must be a positive integer")
            pairs.append((float(mu), mult))
        try:
            return FiberSpectrum.finite(pairs)
        except ValueError as exc:
            raise ConfigError(f"{path}.modes", str(exc)) from exc
    if kind == "circle":
        _require_keys(obj, {"type", "circumference"}, path)
        circ = obj.get("circumference")
        if not isinstance(circ, (int, float)) or circ <= 0:
            raise ConfigError(f"{path}.circumference", "must be positive")
        return FiberSpectrum.circle(float(circ))
    raise ConfigError(f"{path}.type", "must be 'finite' or 'circle'")


def _parse_geometry(obj, fiber: FiberSpectrum, path="geometry"):
    if not isinstance(obj, dict):
        raise ConfigError(path, "must be an object")
    _require_keys(obj, {"a1", "a2", "holonomy"}, path)
    for key in ("a1", "a2"):
        v = obj.get(key)
        if not isinstance(v, (int, float)) or v <= 0:
            raise ConfigError(f"{path}.{key}", "must be a positive number")
    hol = obj.get("holonomy", [])
    if not isinstance(hol, list):
        raise ConfigError(f"{path}.holonomy", "must be a list of phases")
    for i, t in enumerate(hol):
        if not isinstance(t, (int, float)) or not (0.0 <= t < 2 * math.pi):
            raise ConfigError(f"{path}.holonomy[{i}]",
                              "phase must lie in [0, 2pi)")
    if len(hol) != fiber.h0:
        raise ConfigError(f"{path}.holonomy",
                          f"needs one phase per zero mode ({fiber.h0})")

    def make(R: float) -> GlueGeometry:
        return GlueGeometry(float(obj["a1"]), float(obj["a2"]), R,
                            holonomy=tuple(float(t) for t in hol))

    return make


_TOP_KEYS = {"experiment", "fiber", "geometry", "r_grid", "t_grid", "thetas",
             "kappa", "epsilon", "tolerances", "out_dir", "xy_files"}


def _positive_grid(obj, path: str) -> list[float]:
    if not isinstance(obj, list) or not obj:
        raise ConfigError(path, "must be a nonempty list")
    vals = []
    for i, v in enumerate(obj):
        if not isinstance(v, (int, float)) or v <= 0:
            raise ConfigError(f"{path}[{i}]", "must be a positive number")
        vals.append(float(v))
    if sorted(vals) != vals:
        raise ConfigError(path, "must be increasing")
    return vals


def resolve_config(raw: dict) -> dict:
    """Validate, apply defaults, and return the fully resolved config."""
    if not isinstance(raw, dict):
        raise ConfigError("$", "config must be a JSON object")
    _require_keys(raw, _TOP_KEYS, "$")
    name = raw.get("experiment")
    if name not in EXPERIMENTS:
        raise ConfigError("$.experiment",
                          f"must be one of {sorted(EXPERIMENTS)}")
    fiber = _parse_fiber(raw.get("fiber", {"type": "finite",
                                           "modes": [[0.0, 1], [1.0, 1]]}))
    geom_raw = raw.get("geometry",
                       {"a1": 1.0, "a2": 2.0,
                        "holonomy": [math.pi / 2] * fiber.h0})
    make_geom = _parse_geometry(geom_raw, fiber)

    reg = EXPERIMENTS[name]
    resolved = {
        "experiment": name,
        "fiber": (
            {"type": "finite",
             "modes": [[m, k] for m, k in fiber.modes]}
            if fiber.kind == "finite"
            else {"type": "circle", "circumference": fiber.circumference}
        ),
        "geometry": {
            "a1": float(geom_raw["a1"]), "a2": float(geom_raw["a2"]),
            "holonomy": [float(t) for t in geom_raw.get("holonomy", [])],
        },
        "r_grid": _positive_grid(raw.get("r_grid", list(reg["r_grid"])),
                                 "$.r_grid"),
        "kappa": float(raw.get("kappa", 0.75)),
        "epsilon": float(raw.get("epsilon", 0.25)),
        "out_dir": str(raw.get("out_dir", "out")),
        "xy_files": bool(raw.get("xy_files", True)),
    }
    if "t_grid" in raw or name == "heat-cancellation":
        resolved["t_grid"] = _positive_grid(
            raw.get("t_grid", [0.25, 1.0, 4.0]), "$.t_grid")
    if "thetas" in raw or name == "model-identities":
        resolved["thetas"] = _positive_grid(
            raw.get("thetas", [math.pi / 3, math.pi / 2, math.pi]),
            "$.thetas")
        for i, t in enumerate(resolved["thetas"]):
            if not (0.0 < t < 2 * math.pi):
                raise ConfigError(f"$.thetas[{i}]", "must lie in (0, 2pi)")
    tol = dict(reg["tolerances"])
    if fiber.kind == "circle":
        tol.update(reg.get("tolerances_circle", {}))
    raw_tol = raw.get("tolerances", {})
    if not isinstance(raw_tol, dict):
        raise ConfigError("$.tolerances", "must be an object")
    for key, v in raw_tol.items():
        if key not in tol:
            raise ConfigError(f"$.tolerances.{key}", "unknown tolerance")
        if not isinstance(v, (int, float)) or v <= 0:
            raise ConfigError(f"$.tolerances.{key}", "must be positive")
        tol[key] = float(v)
    resolved["tolerances"] = tol
    if name == "trace-perp" and not math.isfinite(fiber.min_nonzero):
        raise ConfigError("$.fiber", "trace-perp needs a nonzero mode")
    resolved["_fiber"] = fiber
    resolved["_make_geom"] = make_geom
    return resolved


# ---------------------------------------------------------------------------
# Experiment runners: each returns (rows, columns, summary, xy, passed)
# ---------------------------------------------------------------------------

def _run_bfk(cfg):
    fiber, make = cfg["_fiber"], cfg["_make_geom"]
    result = sweep(make(cfg["r_grid"][0]), fiber, cfg["r_grid"])
    check = verify_bfk_corollary(result, rel_tol=cfg["tolerances"]["rel_dev"])
    cols = ["R", "log_det_M", "log_det_M1", "log_det_M2", "log_det_R",
            "bfk_ratio", "rel_dev"]
    rows = [[r.R, r.log_det_M, r.log_det_M1, r.log_det_M2, r.log_det_R,
             r.bfk_ratio, abs(r.bfk_ratio / check.predicted - 1.0)]
            for r in result.rows]
    worst_row = max(rows, key=lambda row: row[-1])
    summary = {
        "predicted_constant": check.predicted,
        "max_rel_dev": check.max_rel_dev,
        "worst_R": worst_row[0],
        "pass": check.passed,
    }
    xy = {"bfk_vs_R": [(r.R, r.bfk_ratio) for r in result.rows]}
    return rows, cols, summary, xy, check.passed


def _run_theorem(cfg, which: str):
    fiber, make = cfg["_fiber"], cfg["_make_geom"]
    result = sweep(make(cfg["r_grid"][0]), fiber, cfg["r_grid"])
    tol = cfg["tolerances"]["limit_gap"]
    if which == "main":
        check = verify_theorem_main(result, tol=tol)
        col = "scaled_ratio"
    else:
        check = verify_theorem_dn(result, tol=tol)
        col = "scaled_det_R"
    vals = result.column(col)
    cols = ["R", col, "deviation_from_predicted"]
    rows = [[R, v, abs(v - check.predicted)]
            for R, v in zip(result.Rs, vals)]
    passed = check.passed and check.exponent_ok
    summary = {
        "predicted_limit": check.predicted,
        "extrapolated_limit": check.fit.limit,
        "extrapolation_gap": check.extrapolation_gap,
        "fit_coefficients": list(check.fit.coeffs),
        "fit_residual_norm": check.fit.residual_norm,
        "fit_uncertainty": check.fit.uncertainty,
        "convergence_exponent": check.fit.convergence_exponent,
        "pass": passed,
    }
    if which == "dn":
        from .adiabatic import consistency_triangle_gap
        gap = consistency_triangle_gap(make(cfg["r_grid"][0]), fiber)
        summary["consistency_triangle_gap"] = gap
        passed = passed and gap <= cfg["tolerances"]["triangle_gap"]
        summary["pass"] = passed
    xy = {f"{col}_vs_R": list(zip(result.Rs, vals))}
    return rows, cols, summary, xy, passed


def _run_svalues(cfg):
    fiber, make = cfg["_fiber"], cfg["_make_geom"]
    kappa = cfg["kappa"]
    rows, reports = [], {}
    quant_worst = {}
    for R in cfg["r_grid"]:
        geom = make(R)
        for which in ("M", "M1", "M2"):
            rep = svalue_report(which, geom, fiber, kappa)
            reports[(which, R)] = rep
            for lam, s, m, res in rep.pairs:
                rows.append([R, which, lam, s, m, res])
            if which in ("M1", "M2"):
                worst = max((abs(2 * R * lam - round(2 * R * lam / math.pi)
                                 * math.pi) for lam, _, _, _ in rep.pairs),
                            default=0.0)
                quant_worst[(which, R)] = worst
    cols = ["R", "operator", "lambda", "scaled_value", "model_value",
            "residual"]
    bijective = all(rep.bijective for rep in reports.values())
    ratios = []
    grid = cfg["r_grid"]
    for which in ("M", "M1", "M2"):
        for r_small, r_large in zip(grid, grid[1:]):
            ratios.extend(svalue_rate_ratios(reports[(which, r_small)],
                                             reports[(which, r_large)]))
    lo, hi = cfg["tolerances"]["rate_low"], cfg["tolerances"]["rate_high"]
    # vacuously fine when the zero-mode space is empty (no windows at all)
    rates_ok = all(lo <= r <= hi for r in ratios)
    if rows and not ratios:
        rates_ok = False
    # piece quantization |2 R lambda - k pi| <= c R^{-kappa}
    r_ref = grid[-1]
    c_hat = max(quant_worst.get(("M1", r_ref), 0.0),
                quant_worst.get(("M2", r_ref), 0.0)) * r_ref ** kappa
    quant_ok = all(w <= 2.0 * c_hat * R ** (-kappa) + 1e-15
                   for (which_, R), w in quant_worst.items())
    passed = bijective and rates_ok and quant_ok
    summary = {
        "bijective": bijective,
        "rate_ratios": ratios,
        "rates_ok": rates_ok,
        "quantization_c_hat": c_hat,
        "quantization_ok": quant_ok,
        "pass": passed,
    }
    xy = {"worst_residual_vs_R":
          [(R, max(reports[(w, R)].worst_residual for w in ("M", "M1", "M2")))
           for R in grid]}
    return rows, cols, summary, xy, passed


def _run_dn_asymptotics(cfg):
    fiber, make = cfg["_fiber"], cfg["_make_geom"]
    rows = []
    worst_match, worst_plus = 0.0, 0.0
    for R in cfg["r_grid"]:
        rep = dn_zero_mode_asymptotics(make(R), fiber)
        for e in rep.entries:
            err = abs(e.value_minus - e.model_matched)
            rows.append([R, e.piece, e.mode, e.value_minus, e.model_matched,
                         err, e.value_plus, e.alpha_derived, e.matched_sign])
            worst_match = max(worst_match, err / max(1.0, abs(e.value_minus)))
            worst_plus = max(worst_plus, abs(e.value_plus))
    cols = ["R", "piece", "mode", "pairing_minus", "model_matched",
            "match_error", "pairing_plus", "alpha", "matched_sign"]
    passed = (worst_match <= cfg["tolerances"]["match_err"]
              and worst_plus <= cfg["tolerances"]["plus_bound"])
    summary = {"worst_match_error": worst_match,
               "worst_plus_pairing": worst_plus, "pass": passed}
    return rows, cols, summary, {}, passed


def _run_heat_cancellation(cfg):
    fiber, make = cfg["_fiber"], cfg["_make_geom"]
    rep = verify_lemma_cancellation(make(cfg["r_grid"][0]), fiber,
                                    Rs=cfg["r_grid"], ts=cfg["t_grid"])
    cols = ["R", "t", "log_abs_deviation", "log_bound"]
    rows = [[R, t, lg, math.log(rep.c1_hat) - rep.c2_hat * R * R / t]
            for R, t, lg in rep.rows]
    passed = rep.ok(c2_min=cfg["tolerances"]["c2_min"],
                    slack=cfg["tolerances"]["bound_slack"])
    summary = {
        "c1_hat": rep.c1_hat, "c2_hat": rep.c2_hat,
        "max_violation_factor": rep.max_violation_factor,
        "float_crosscheck_gap": rep.float_crosscheck_gap,
        "pass": passed,
    }
    xy = {"log_dev_vs_R2_over_t": [(R * R / t, lg) for R, t, lg in rep.rows]}
    return rows, cols, summary, xy, passed


def _run_trace_perp(cfg):
    import numpy as np

    fiber, make = cfg["_fiber"], cfg["_make_geom"]
    mu_min = fiber.min_nonzero
    if not math.isfinite(mu_min):
        raise ConfigError("$.fiber", "trace-perp needs a nonzero mode")
    rows = []
    for R in cfg["r_grid"]:
        rows.append([R, trace_perp_inverse_diff(make(R), fiber)])
    cols = ["R", "trace_perp_diff"]
    Rs = [r[0] for r in rows]
    logs = [math.log(abs(r[1])) for r in rows]
    slope = float(np.polyfit(Rs, logs, 1)[0])
    expected = -4.0 * mu_min
    rel = abs(slope - expected) / abs(expected)
    passed = rel <= cfg["tolerances"]["slope_rel"]
    summary = {"fitted_slope": slope, "expected_slope": expected,
               "slope_rel_gap": rel, "pass": passed}
    xy = {"log_abs_diff_vs_R": list(zip(Rs, logs))}
    return rows, cols, summary, xy, passed


def _run_model_identities(cfg):
    fiber, make = cfg["_fiber"], cfg["_make_geom"]
    geom0 = make(cfg["r_grid"][0])
    rows = []
    worst_exact, worst_numeric, worst_detl = 0.0, 0.0, 0.0
    for theta in cfg["thetas"]:
        hol = tuple([theta] * fiber.h0)
        geom = GlueGeometry(geom0.a1, geom0.a2, geom0.R, holonomy=hol)
        mi = model_identities(geom, fiber)
        dl = det_L_identity(geom)
        single = abs(model_zeta_single_phase(theta).log_det
                     - model_logdet([theta]))
        rows.append([theta, mi.log_det_quarter_c12, mi.gap_quarter,
                     mi.gap_cbar, mi.numeric_gap_quarter, mi.numeric_gap_cbar,
                     single, dl.det_L, dl.rhs, dl.gap])
        worst_exact = max(worst_exact, mi.gap_quarter, mi.gap_cbar)
        worst_numeric = max(worst_numeric, mi.numeric_gap_quarter,
                            mi.numeric_gap_cbar, single)
        worst_detl = max(worst_detl, dl.gap)
    cols = ["theta", "log_det_quarter_c12", "gap_quarter_exact",
            "gap_cbar_exact", "numeric_gap_quarter", "numeric_gap_cbar",
            "numeric_gap_single_phase", "det_L", "det_L_rhs", "det_L_gap"]
    passed = (worst_exact <= cfg["tolerances"]["exact_gap"]
              and worst_numeric <= cfg["tolerances"]["numeric_gap"]
              and worst_detl <= cfg["tolerances"]["det_L_gap"])
    summary = {"worst_exact_gap": worst_exact,
               "worst_numeric_gap": worst_numeric,
               "worst_det_L_gap": worst_detl, "pass": passed}
    return rows, cols, summary, {}, passed


def _run_split(cfg):
    fiber, make = cfg["_fiber"], cfg["_make_geom"]
    R = cfg["r_grid"][-1]
    rep = verify_smalltime_largetime_split(make(R), fiber,
                                           epsilon=cfg["epsilon"])
    cols = ["window", "raw", "counterterm", "limit_value", "gap"]
    rows = [
        ["small", rep.small_raw, rep.small_counterterm,
         rep.small_limit_value, rep.small_gap],
        ["large", rep.large_raw, rep.large_counterterm,
         rep.large_limit_value, rep.large_gap],
    ]
    passed = (rep.sum_vs_closed_gap <= cfg["tolerances"]["sum_gap"]
              and rep.asymptote_gap <= cfg["tolerances"]["asymptote_gap"])
    summary = {
        "R": rep.R, "epsilon": rep.epsilon, "T": rep.T,
        "sum_quadrature": rep.sum_quadrature,
        "log_ratio_closed": rep.log_ratio_closed,
        "sum_vs_closed_gap": rep.sum_vs_closed_gap,
        "asymptote": rep.asymptote,
        "asymptote_gap": rep.asymptote_gap,
        "small_gap": rep.small_gap,
        "large_gap": rep.large_gap,
        "pass": passed,
    }
    return rows, cols, summary, {}, passed


EXPERIMENTS = {
    "bfk": {
        "primary_tol": "rel_dev",
        "description": "per-stretch gluing-constant identity",
        "claim": "det_M/(det_M1 det_M2 det_R) = 2^(-zeta(0)-h) at every R",
        "entry": "adiabatic.verify_bfk_corollary",
        "runner": _run_bfk,
        "r_grid": (2.0, 4.0, 8.0, 16.0, 32.0),
        "tolerances": {"rel_dev": 1e-9},
        "tolerances_circle": {"rel_dev": 1e-6},
    },
    "theorem-main": {
        "primary_tol": "limit_gap",
        "description": "determinant-ratio limit under stretching",
        "claim": "R^h det_M/(det_M1 det_M2) -> 2^(-h) sqrt(det*) det((1-U)/2)",
        "entry": "adiabatic.verify_theorem_main",
        "runner": lambda cfg: _run_theorem(cfg, "main"),
        "r_grid": (4.0, 8.0, 16.0, 32.0, 64.0),
        "tolerances": {"limit_gap": 1e-4},
        "tolerances_circle": {"limit_gap": 1e-3},
    },
    "theorem-dn": {
        "primary_tol": "limit_gap",
        "description": "boundary-operator determinant limit",
        "claim": "R^h det_R -> 2^(zeta(0)) det*(sqrt) det((1-U)/2)",
        "entry": "adiabatic.verify_theorem_dn",
        "runner": lambda cfg: _run_theorem(cfg, "dn"),
        "r_grid": (4.0, 8.0, 16.0, 32.0, 64.0),
        "tolerances": {"limit_gap": 1e-4, "triangle_gap": 1e-9},
        "tolerances_circle": {"limit_gap": 1e-3},
    },
    "svalues": {
        "primary_tol": "rate_high",
        "description": "small-eigenvalue quantization and model matching",
        "claim": "(R lambda)^2 matches the model towers at rate 1/R, bijectively",
        "entry": "scattering.svalue_report",
        "runner": _run_svalues,
        "r_grid": (10.0, 20.0, 40.0, 80.0),
        "tolerances": {"rate_low": 1.6, "rate_high": 2.4},
    },
    "dn-asymptotics": {
        "primary_tol": "match_err",
        "description": "zero-mode boundary pairings vs scattering prediction",
        "claim": "pairing on the -1 vector equals (1/R)(1-alpha/2R)^(-1)",
        "entry": "scattering.dn_zero_mode_asymptotics",
        "runner": _run_dn_asymptotics,
        "r_grid": (5.0, 10.0, 20.0, 40.0),
        "tolerances": {"match_err": 1e-12, "plus_bound": 1e-14},
    },
    "heat-cancellation": {
        "primary_tol": "bound_slack",
        "description": "relative heat trace vs half cross-section trace",
        "claim": "|relative trace - half cross-section trace| <= c1 e^(-c2 R^2/t)",
        "entry": "adiabatic.verify_lemma_cancellation",
        "runner": _run_heat_cancellation,
        "r_grid": (4.0, 6.0, 8.0),
        "tolerances": {"c2_min": 0.5, "bound_slack": 2.0},
    },
    "trace-perp": {
        "primary_tol": "slope_rel",
        "description": "inverse boundary operator vs doubled square root",
        "claim": "off-kernel trace difference decays like e^(-4 mu_min R)",
        "entry": "glue.trace_perp_inverse_diff",
        "runner": _run_trace_perp,
        "r_grid": (3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0),
        "tolerances": {"slope_rel": 0.1},
    },
    "model-identities": {
        "primary_tol": "numeric_gap",
        "description": "model-operator determinant identities",
        "claim": "det = 4^d prod sin^2(a/2); quarter/reflected identities hold",
        "entry": "scattering.model_identities",
        "runner": _run_model_identities,
        "r_grid": (10.0,),
        "tolerances": {"exact_gap": 1e-12, "numeric_gap": 1e-8,
                       "det_L_gap": 1e-12},
    },
    "split": {
        "primary_tol": "asymptote_gap",
        "description": "small-time/large-time window decomposition",
        "claim": "window contributions sum to the relative zeta derivative",
        "entry": "adiabatic.verify_smalltime_largetime_split",
        "runner": _run_split,
        "r_grid": (4.0, 8.0, 16.0, 32.0, 64.0),
        "tolerances": {"sum_gap": 1e-6, "asymptote_gap": 0.03},
    },
}


def list_experiments() -> str:
    lines = []
    for name in sorted(EXPERIMENTS):
        reg = EXPERIMENTS[name]
        lines.append(f"{name:18s} {reg['description']}")
        lines.append(f"{'':18s} checks: {reg['claim']}")
        lines.append(f"{'':18s} entry:  zetaglue.{reg['entry']}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Output writing
# ---------------------------------------------------------------------------

def _config_for_output(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items() if not k.startswith("_")}


def _config_hash(cfg: dict) -> str:
    blob = json.dumps(_config_for_output(cfg), sort_keys=True,
                      separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _provenance_lines(cfg: dict) -> list[str]:
    return [
        f"# zetaglue-artifact v{__version__}",
        f"# experiment: {cfg['experiment']}",
        f"# config-sha256: {_config_hash(cfg)}",
    ]


def _write_csv(path: Path, cfg: dict, cols, rows):
    lines = _provenance_lines(cfg)
    lines.append(",".join(cols))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n")


def _write_xy(path: Path, cfg: dict, points):
    lines = _provenance_lines(cfg)
    for x, y in points:
        lines.append(f"{_fmt(float(x))} {_fmt(float(y))}")
    path.write_text("\n".join(lines) + "\n")


def run_experiment(cfg: dict, out_dir: Path) -> int:
    name = cfg["experiment"]
    rows, cols, summary, xy, passed = EXPERIMENTS[name]["runner"](cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / f"{name}.csv", cfg, cols, rows)
    summary_doc = {
        "experiment": name,
        "passed": bool(passed),
        "summary": summary,
        "provenance": {
            "artifact_version": __version__,
            "config_sha256": _config_hash(cfg),
            "resolved_config": _config_for_output(cfg),
        },
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary_doc, sort_keys=True, indent=2) + "\n")
    if cfg["xy_files"]:
        for series, points in xy.items():
            _write_xy(out_dir / f"{name}_{series}.xy", cfg, points)
    if not passed:
        failing = [k for k, v in summary.items()
                   if isinstance(v, bool) and not v and k != "pass"]
        print(f"zetaglue: {name}: FAILED "
              f"({', '.join(failing) if failing else 'see summary.json'})",
              file=sys.stderr)
        return 3
    print(f"zetaglue: {name}: pass")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="zetaglue",
        description="Determinant-gluing experiment runner (batch only). "
                    "Thread count via ZETAGLUE_THREADS.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one experiment from a JSON config")
    p_run.add_argument("config", help="path to the JSON config")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--rmax", type=float, default=None,
                       help="drop grid entries above this stretch")
    p_run.add_argument("--tol", type=float, default=None,
                       help="override the experiment's primary tolerance")
    sub.add_parser("list", help="list available experiments")
    args = parser.parse_args(argv)

    if args.command == "list":
        print(list_experiments())
        return 0

    try:
        raw = json.loads(Path(args.config).read_text())
    except OSError as exc:
        print(f"zetaglue: cannot read config: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"zetaglue: config is not valid JSON: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = resolve_config(raw)
        if args.rmax is not None:
            kept = [R for R in cfg["r_grid"] if R <= args.rmax]
            if not kept:
                raise ConfigError("$.r_grid", "empty after --rmax filter")
            cfg["r_grid"] = kept
        if args.tol is not None:
            primary = EXPERIMENTS[cfg["experiment"]]["primary_tol"]
            cfg["tolerances"][primary] = float(args.tol)
    except ConfigError as exc:
        print(f"zetaglue: config error: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(args.out) if args.out else Path(cfg["out_dir"])
    try:
        return run_experiment(cfg, out_dir)
    except Exception as exc:
        print(f"zetaglue: numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
