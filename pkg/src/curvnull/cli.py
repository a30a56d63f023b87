"""Batch front-end: build a model from a config file, run verification
tasks, emit a machine-readable report.

Config format is INI-style (see README for the grammar): a [model]
section choosing the family and its parameters, a [run] section with the
task list, point count and RNG seed, and an optional [tolerances] section
overriding named tolerances.  Unknown sections, keys or task names are
rejected at parse time.

Reports are JSON with sorted keys; with a fixed seed the report bytes are
identical across runs (timing is written to stderr, and only included in
the report when --timing is passed).  The RNG is numpy's PCG64
(numpy.random.default_rng) seeded from the config.

Exit codes: 0 all checks passed, 2 at least one check failed, 1 error.
"""

import argparse
import configparser
import json
import sys
import time

import numpy as np

from . import __version__
from .frames import (
    curvature,
    curvature_operator_spectrum,
    levi_civita,
    scalar_curvature,
    sectional,
    semi_symmetry_residual,
)
from .holonomy import DeformedContext, claims_leading_term, infinitesimal_holonomy, is_cyclic
from .homogeneity import invariants_of, matches_model, space_form_product_curvature
from .models import (
    AlmostAbelianSpec,
    FrameFunctions,
    ThetaFunction,
    build_almost_abelian,
    build_sl2r,
    eqns_residual,
    sl2r_reference_curvature,
)
from .jets import ScalarField
from .nullity import kappa_scan, nullity_space, positive_kappas, subspace_angle
from .oracle import Chart, curvature_fd, fd_convergence_ratio, geodesic_shoot
from .warp import check_nullity_warp_i, check_nullity_warp_ii, deformed_curvature

TASKS = (
    "curvature",
    "nullity_scan",
    "warp_check",
    "holonomy",
    "homogeneity",
    "eqns_residual",
    "oracle_compare",
    "geodesic_probe",
)

DEFAULT_TOLERANCES = {
    "scalar": 1e-8,
    "sectional": 1e-8,
    "symmetry": 1e-9,
    "nullity_angle": 1e-8,
    "nullity_rank": 1e-8,
    "path_ab": 1e-9,
    "path_ac": 1e-6,
    "warp_residual": 1e-8,
    "warp_negative": 1e-3,
    "claims": 1e-8,
    "invariant_match": 1e-8,
    "geodesic_drift": 1e-6,
    "eqns": 1e-12,
}

KAPPA_GRID = (-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0)

_MODEL_KEYS = {
    "sl2r": {"name", "epsilon"},
    "almost_abelian": {"name", "m", "weights", "a", "c1", "c2", "z"},
}
_RUN_KEYS = {"tasks", "points", "seed"}
_GEODESIC_KEYS = {"count", "length", "step"}


class ConfigError(ValueError):
    pass


def parse_config(path):
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    known_sections = {"model", "run", "tolerances", "geodesic"}
    unknown = set(cp.sections()) - known_sections
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    if "model" not in cp or "run" not in cp:
        raise ConfigError("config needs [model] and [run] sections")

    model = dict(cp["model"])
    name = model.get("name")
    if name not in _MODEL_KEYS:
        raise ConfigError(f"model name must be one of {sorted(_MODEL_KEYS)}, got {name!r}")
    bad = set(model) - _MODEL_KEYS[name]
    if bad:
        raise ConfigError(f"unknown [model] keys for {name}: {sorted(bad)}")

    run = dict(cp["run"])
    bad = set(run) - _RUN_KEYS
    if bad:
        raise ConfigError(f"unknown [run] keys: {sorted(bad)}")
    tasks = [t.strip() for t in run.get("tasks", "").split(",") if t.strip()]
    if not tasks:
        raise ConfigError("[run] tasks must list at least one task")
    for t in tasks:
        if t not in TASKS:
            raise ConfigError(f"unknown task {t!r}; known tasks: {', '.join(TASKS)}")

    tols = dict(DEFAULT_TOLERANCES)
    if "tolerances" in cp:
        for key, val in cp["tolerances"].items():
            if key not in tols:
                raise ConfigError(f"unknown tolerance {key!r}")
            tols[key] = float(val)

    geo = {"count": 3, "length": 3.0, "step": 0.0025}
    if "geodesic" in cp:
        bad = set(cp["geodesic"]) - _GEODESIC_KEYS
        if bad:
            raise ConfigError(f"unknown [geodesic] keys: {sorted(bad)}")
        for key, val in cp["geodesic"].items():
            geo[key] = int(val) if key == "count" else float(val)

    return {
        "model": model,
        "tasks": tasks,
        "points": int(run.get("points", 25)),
        "seed": int(run.get("seed", 0)),
        "tolerances": tols,
        "geodesic": geo,
    }


def build_model(model_cfg):
    if model_cfg["name"] == "sl2r":
        eps = float(model_cfg.get("epsilon", 0.0))
        phi = ThetaFunction.zero() if eps == 0.0 else ThetaFunction.cosine(eps)
        return build_sl2r(phi)
    spec = AlmostAbelianSpec(
        m=int(model_cfg["m"]),
        weights=tuple(int(w) for w in model_cfg["weights"].split(",")),
        a=float(model_cfg.get("a", 1.0)),
        c1=float(model_cfg.get("c1", 1.0)),
        c2=float(model_cfg.get("c2", 1.0)),
        z=np.array([float(x) for x in model_cfg["z"].split(",")]),
    )
    return build_almost_abelian(spec)


def _is_sl2r(model):
    return hasattr(model, "phi")


def _check(checks, name, value, tol, passed=None):
    if passed is None:
        passed = bool(value <= tol)
    checks.append({"name": name, "value": float(value), "tolerance": float(tol),
                   "passed": bool(passed)})
    return passed


def _expected_scalar(model):
    return -2.0 if _is_sl2r(model) else -2.0 * model.spec.a ** 2


def task_curvature(model, points, tols):
    conn = levi_civita(model.frame)
    checks = []
    worst_scal = worst_sym = 0.0
    for p in points:
        rt = curvature(model.frame, conn, p)
        worst_scal = max(worst_scal, abs(scalar_curvature(rt) - _expected_scalar(model)))
        worst_sym = max(worst_sym, max(rt.symmetry_residuals().values()))
    _check(checks, "scalar_curvature_deviation", worst_scal, tols["scalar"])
    _check(checks, "symmetry_residuals", worst_sym, tols["symmetry"])
    rt0 = curvature(model.frame, conn, points[0])
    if _is_sl2r(model):
        k = sectional(rt0, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
        _check(checks, "sectional_XY_deviation", abs(k - 1.0), tols["sectional"])
        details = {"sectional_XY": k}
    else:
        k = sectional(rt0, np.eye(rt0.n)[0], model.z_frame_vector())
        _check(checks, "sectional_xiZ_deviation", abs(k + model.spec.a ** 2), tols["sectional"])
        spec_op = curvature_operator_spectrum(rt0)
        expected = np.zeros(len(spec_op))
        expected[0] = -model.spec.a ** 2
        _check(checks, "operator_spectrum_deviation", float(np.max(np.abs(spec_op - expected))),
               tols["scalar"])
        _check(checks, "semi_symmetry_residual", semi_symmetry_residual(rt0), tols["symmetry"])
        details = {"sectional_xi_Z": k, "operator_spectrum": list(spec_op)}
    details["scalar_worst_deviation"] = worst_scal
    return details, checks


def task_nullity_scan(model, points, tols):
    conn = levi_civita(model.frame)
    checks = []
    expected_kappa = -1.0 if _is_sl2r(model) else 0.0
    expected_index = 1 if _is_sl2r(model) else model.spec.m - 1
    worst_angle = 0.0
    ok_positive = True
    indices = set()
    for p in points:
        rt = curvature(model.frame, conn, p)
        scan = kappa_scan(rt, KAPPA_GRID, tols["nullity_rank"])
        ok_positive &= positive_kappas(scan) == [expected_kappa]
        res = nullity_space(rt, expected_kappa, tols["nullity_rank"])
        indices.add(res.index)
        if _is_sl2r(model):
            target = model.nullity_direction().reshape(1, -1)
        else:
            target = model.zperp_basis()
        if res.index == expected_index:
            worst_angle = max(worst_angle, subspace_angle(res.basis, target))
        else:
            worst_angle = np.pi / 2
    checks_ok = indices == {expected_index}
    _check(checks, "index_equals_expected", 0.0 if checks_ok else 1.0, 0.5, checks_ok)
    _check(checks, "positive_kappa_only_expected", 0.0 if ok_positive else 1.0, 0.5, ok_positive)
    _check(checks, "kernel_angle", worst_angle, tols["nullity_angle"])
    return {"expected_kappa": expected_kappa, "indices_seen": sorted(indices),
            "kernel_angle_worst": worst_angle}, checks


def task_warp_check(model, points, tols):
    checks = []
    if _is_sl2r(model):
        rep = check_nullity_warp_i(model, [0.0, 0.0, 1.0], -1.0, points)
        neg = check_nullity_warp_i(model, [0.0, 1.0, 0.0], -1.0, points)
        details = {"theorem": "part_i", "preconditions": rep.preconditions,
                   "residual": rep.residual, "negative_control_residual": neg.residual}
    else:
        worst = 0.0
        pre_ok = True
        pre = {}
        for z in model.zperp_basis():
            rep = check_nullity_warp_ii(model, z, points)
            worst = max(worst, rep.residual)
            pre_ok &= rep.hypotheses_ok
            pre = rep.preconditions
        neg = check_nullity_warp_ii(model, model.z_frame_vector(), points)
        rep = type(rep)(worst, pre, pre_ok)
        details = {"theorem": "part_ii", "preconditions": pre,
                   "residual": worst, "negative_control_residual": neg.residual}
    _check(checks, "hypotheses_verified", 0.0 if rep.hypotheses_ok else 1.0, 0.5,
           rep.hypotheses_ok)
    _check(checks, "nullity_preserved_residual", details["residual"], tols["warp_residual"])
    _check(checks, "negative_control_residual", details["negative_control_residual"],
           tols["warp_negative"], details["negative_control_residual"] > tols["warp_negative"])
    return details, checks


def task_holonomy(model, points, tols):
    if _is_sl2r(model):
        raise ConfigError("holonomy task requires the almost_abelian model")
    checks = []
    cyc = is_cyclic(model.spec)
    t0 = time.monotonic()
    m = model.spec.m
    hol = infinitesimal_holonomy(model)
    elapsed = time.monotonic() - t0
    full = (m + 1) * m // 2
    if cyc.cyclic:
        _check(checks, "dim_equals_so_n", abs(hol.dim - full), 0.5)
    else:
        _check(checks, "dim_below_so_n", 0.0 if hol.dim < full else 1.0, 0.5, hol.dim < full)
    ctx = DeformedContext(model, min(3, m - 1))
    worst = 0.0
    for k in range(min(3, m - 1) + 1):
        worst = max(worst, claims_leading_term(model, k, ctx=ctx).max_residual)
    _check(checks, "claims_leading_terms", worst, tols["claims"])
    _check(checks, "closure_residual", hol.bracket_closure_residual(), 1e-9)
    details = {
        "cyclic": bool(cyc.cyclic),
        "krylov_rank": cyc.krylov_rank,
        "dim": hol.dim,
        "dims_by_order": hol.dims_by_order,
        "xi_tower_dim": hol.xi_tower_dim,
        "wall_seconds_rounded": round(elapsed, 1),
    }
    return details, checks


def task_homogeneity(model, points, tols):
    conn = levi_civita(model.frame)
    checks = []
    invs = [invariants_of(curvature(model.frame, conn, p)) for p in points]
    base = invs[0]
    worst = 0.0
    for inv in invs[1:]:
        worst = max(worst,
                    abs(inv.scalar - base.scalar),
                    float(np.max(np.abs(inv.ricci_spectrum - base.ricci_spectrum))),
                    float(np.max(np.abs(inv.operator_spectrum - base.operator_spectrum))),
                    abs(inv.semi_symmetry_residual - base.semi_symmetry_residual))
    _check(checks, "pointwise_invariant_spread", worst, tols["invariant_match"])
    if _is_sl2r(model):
        reference = sl2r_reference_curvature()
        ref_name = "left_invariant_sl2r"
    else:
        reference = space_form_product_curvature(-model.spec.a ** 2, model.spec.m - 1)
        ref_name = f"RH2(-{model.spec.a ** 2})xR^{model.spec.m - 1}"
    ok, diffs = matches_model(base, reference, tols["invariant_match"])
    _check(checks, "matches_reference_model", max(diffs.values()), tols["invariant_match"], ok)
    return {"reference": ref_name, "invariants": base.as_dict()}, checks


def task_eqns_residual(model, points, tols):
    if not _is_sl2r(model):
        raise ConfigError("eqns_residual task requires the sl2r model")
    checks = []
    frame = model.undeformed_frame
    p = points[0]
    results = {}
    for k in (1.0, 2.0):
        ff = FrameFunctions(frame, ScalarField.constant(0.0, 3), ScalarField.constant(0.0, 3),
                            ScalarField.constant(1.0, 3), k)
        res = eqns_residual(ff, p)
        results[f"k={k}"] = list(res)
        if k == 1.0:
            _check(checks, "residuals_vanish_at_k1", float(np.max(np.abs(res))), tols["eqns"])
        else:
            _check(checks, "fourth_residual_at_k2", abs(res[3] - (1.0 - k)), tols["eqns"])
    return {"residuals": results}, checks


def task_oracle_compare(model, points, tols):
    checks = []
    conn = levi_civita(model.frame)
    chart = Chart(model.frame.n, model.chart_metric)
    worst_ab = worst_ac = 0.0
    for p in points[: min(len(points), 20)]:
        rt_b = curvature(model.frame, conn, p)
        rt_a = deformed_curvature(model.warp_point_data(p), p)
        rt_c = curvature_fd(chart, p, 1e-4, frame_hint=model.frame_matrix(p))
        worst_ab = max(worst_ab, float(np.max(np.abs(rt_a.components - rt_b.components))))
        worst_ac = max(worst_ac, float(np.max(np.abs(rt_a.components - rt_c.components))))
    _check(checks, "path_a_vs_b", worst_ab, tols["path_ab"])
    _check(checks, "paths_vs_fd_oracle", worst_ac, tols["path_ac"])
    ref = deformed_curvature(model.warp_point_data(points[0]), points[0]).components
    ratio = fd_convergence_ratio(chart, points[0], ref, 1e-2,
                                 frame_hint=model.frame_matrix(points[0]))
    _check(checks, "fd_convergence_ratio", ratio, 5.0, 3.0 <= ratio <= 5.0)
    return {"path_a_vs_b": worst_ab, "paths_vs_fd": worst_ac,
            "fd_convergence_ratio": ratio}, checks


def task_geodesic_probe(model, points, tols, geo):
    checks = []
    chart = Chart(model.frame.n, model.chart_metric)
    worst_drift = 0.0
    all_completed = True
    rngless_dirs = np.eye(model.frame.n)
    runs = []
    for i in range(geo["count"]):
        p = points[i % len(points)]
        v = rngless_dirs[i % model.frame.n] + 0.1 * rngless_dirs[(i + 1) % model.frame.n]
        res = geodesic_shoot(chart, p, v, geo["length"], geo["step"])
        worst_drift = max(worst_drift, res.energy_drift)
        all_completed &= res.completed
        runs.append({"energy_drift": res.energy_drift, "arc_length": res.arc_length,
                     "completed": res.completed})
    _check(checks, "energy_drift", worst_drift, tols["geodesic_drift"])
    _check(checks, "all_completed", 0.0 if all_completed else 1.0, 0.5, all_completed)
    return {"runs": runs}, checks


def run_tasks(cfg):
    model = build_model(cfg["model"])
    rng = np.random.default_rng(cfg["seed"])
    points = model.sample_points(rng, cfg["points"])
    tols = cfg["tolerances"]
    report_tasks = []
    all_passed = True
    for name in cfg["tasks"]:
        if name == "geodesic_probe":
            details, checks = task_geodesic_probe(model, points, tols, cfg["geodesic"])
        else:
            details, checks = globals()[f"task_{name}"](model, points, tols)
        passed = all(c["passed"] for c in checks)
        all_passed &= passed
        report_tasks.append({"name": name, "details": details, "checks": checks,
                             "passed": passed})
    return {
        "config": {"model": cfg["model"], "tasks": cfg["tasks"], "points": cfg["points"],
                   "seed": cfg["seed"], "tolerances": cfg["tolerances"]},
        "package": {"name": "curvnull", "version": __version__},
        "rng": "numpy PCG64 (numpy.random.default_rng)",
        "tasks": report_tasks,
        "all_passed": all_passed,
    }


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    raise TypeError(f"not JSON serialisable: {type(obj)}")


def render_report(report):
    return json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n"


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="curvnull",
        description="verify curvature, nullity and holonomy claims for the deformed "
                    "model metrics")
    parser.add_argument("--list-tasks", action="store_true", help="list task names and exit")
    sub = parser.add_subparsers(dest="command")
    runp = sub.add_parser("run", help="run the tasks from a config file")
    runp.add_argument("config", help="path to the INI config")
    runp.add_argument("--out", default=None, help="write the report here instead of stdout")
    runp.add_argument("--seed", type=int, default=None, help="override the config seed")
    runp.add_argument("--tol", action="append", default=[], metavar="name=value",
                      help="override a named tolerance (repeatable)")
    runp.add_argument("--timing", action="store_true",
                      help="include wall-clock in the report (breaks byte determinism)")
    args = parser.parse_args(argv)

    if args.list_tasks:
        print("\n".join(TASKS))
        return 0
    if args.command != "run":
        parser.print_usage(sys.stderr)
        return 1

    t0 = time.monotonic()
    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        for item in args.tol:
            if "=" not in item:
                raise ConfigError(f"--tol expects name=value, got {item!r}")
            name, val = item.split("=", 1)
            if name not in cfg["tolerances"]:
                raise ConfigError(f"unknown tolerance {name!r}")
            cfg["tolerances"][name] = float(val)
        report = run_tasks(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    elapsed = time.monotonic() - t0
    if args.timing:
        report["wall_clock_seconds"] = elapsed
    text = render_report(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"wall clock: {elapsed:.2f}s; all checks passed: {report['all_passed']}",
          file=sys.stderr)
    return 0 if report["all_passed"] else 2


if __name__ == "__main__":
    sys.exit(main())
