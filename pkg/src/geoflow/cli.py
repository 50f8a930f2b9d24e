"""Command-line interface: validation suites, flows, and reports as JSON."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from .algebra import index, unimodularity, integrability_criterion
from .charts import load_group, group_names, group_metadata, validate_chart, \
    UnknownGroupError
from .orbits import load_orbit_model, UnsupportedOrbitError, RegularityError
from .momentum import (check_equivariance, momentum_bracket_residuals,
                       validate_transition, validate_polarization)
from .transform import (GeneratingFunction, lemma1_residuals, forward_transform,
                        symplectic_check)
from .geodesic import (InvariantMetric, integrate_direct, trajectory_invariants,
                       compare_direct_reduced)
from .momentum import mu_r
from .lrep import (build_lrep, commutator_residuals, hermiticity_check,
                   gaussian_battery, matrix_element_via_S,
                   matrix_element_pde_residuals, kernel_product_residual)
from .kg import (KGParams, scalar_curvature, kg_apply, reduced_kg,
                 solve_reduced_ode, synthesize_solution, NonUnimodularError)
from .scenario import load_scenario, ScenarioError
from .selftest import run_selftest
from . import jets as jm

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


def _emit(doc):
    print(json.dumps(doc, indent=2, sort_keys=True, default=_json_default))


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _seed_from(args):
    env = os.environ.get("GEOFLOW_SEED")
    if env is not None:
        return int(env)
    return args.seed


def _load_metric(args, chart):
    if args.metric:
        with open(args.metric, "r", encoding="utf-8") as fh:
            G = np.asarray(json.load(fh), dtype=float)
    else:
        G = np.eye(chart.dim)
    return InvariantMetric(G)


def cmd_list_groups(args):
    doc = [group_metadata(name) for name in group_names()]
    _emit(doc)
    return EXIT_OK


def cmd_analyze(args):
    chart = load_group(args.group)
    seed = _seed_from(args)
    flag, m = integrability_criterion(chart.algebra, seed=seed)
    uni, Ca = unimodularity(chart.algebra)
    _emit({
        "group": chart.name,
        "dim": chart.dim,
        "index": index(chart.algebra, seed=seed),
        "unimodular": uni,
        "trace_vector": Ca.tolist(),
        "integrable": flag,
        "m": m,
    })
    return EXIT_OK


def cmd_validate(args):
    chart = load_group(args.group)
    seed = _seed_from(args)
    rng = np.random.default_rng(seed)
    rep = validate_chart(chart, samples=args.points, seed=seed)
    pts = chart.sample_points(50, rng)
    ps = rng.normal(size=(50, chart.dim))
    rep["equivariance_residual"] = check_equivariance(chart, pts, ps)
    rep["momentum_brackets"] = momentum_bracket_residuals(chart, pts, ps)
    try:
        orbit = load_orbit_model(chart)
        rep["transition"] = validate_transition(orbit, samples=200, seed=seed)
        rep["polarization"] = validate_polarization(orbit, seed=seed)
    except UnsupportedOrbitError as exc:
        rep["orbit_model"] = f"unsupported: {exc}"
    ok = rep["passed"] and rep["equivariance_residual"] < 1e-8
    if "transition" in rep:
        ok = ok and rep["transition"]["passed"]
    _emit(rep)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_canonical_check(args):
    chart = load_group(args.group)
    orbit = load_orbit_model(chart)
    seed = _seed_from(args)
    rng = np.random.default_rng(seed)
    gen = GeneratingFunction(chart, orbit)
    out = {"group": chart.name, "seed": seed, "points": args.points,
           "qprime_sign": "+dS/dpi'"}
    worst = [0.0, 0.0]
    sworst = 0.0
    orientations = None
    for _ in range(args.points):
        x = chart.sample_points(1, rng)[0]
        if orbit.m:
            q = rng.uniform(-1.0, 1.0, orbit.m)
            pip = rng.uniform(-1.5, 1.5, orbit.m)
            J = orbit.lam_sampler(rng)
            r1, r2 = lemma1_residuals(gen, x, q, pip, J)
            worst = [max(worst[0], r1), max(worst[1], r2)]
        p = rng.uniform(-1.5, 1.5, chart.dim)
        if chart.name == "aff1":
            p[1] = rng.uniform(0.3, 1.5)
        if chart.name == "heisenberg3" and abs(p[2]) < 0.2:
            p[2] = 0.2 + abs(p[2])
        try:
            rep = symplectic_check(chart, orbit, x, p)
        except RegularityError:
            continue
        sworst = max(sworst, rep["residual"])
        orientations = rep["pair_orientations"]
    out["lemma1_max_residuals"] = worst
    out["symplectic_max_residual"] = sworst
    out["pair_orientations"] = orientations
    out["passed"] = bool(max(worst) < 1e-6 and sworst < 1e-5)
    _emit(out)
    return EXIT_OK if out["passed"] else EXIT_CHECK_FAILED


def cmd_geodesic(args):
    chart = load_group(args.group)
    metric = _load_metric(args, chart)
    x0 = np.asarray(json.loads(args.x0), dtype=float)
    p0 = np.asarray(json.loads(args.p0), dtype=float)
    t0 = time.perf_counter()
    traj = integrate_direct(chart, metric, x0, p0, args.T, tol=args.tol)
    drifts = trajectory_invariants(chart, metric, traj)
    out = {"group": chart.name, "T": args.T, "tol": args.tol,
           "steps": len(traj.ts) - 1, "drifts": drifts}
    if args.compare_reduced:
        orbit = load_orbit_model(chart)
        cmp_rep = compare_direct_reduced(chart, orbit, metric, x0, p0, args.T,
                                         tol=args.tol)
        out["direct_vs_reduced_deviation"] = cmp_rep["deviation"]
        out["passed"] = bool(cmp_rep["deviation"] < 1e-6
                             and max(drifts.values()) < 1e-7)
    else:
        out["passed"] = bool(max(drifts.values()) < 1e-7)
    out["runtime_s"] = round(time.perf_counter() - t0, 3)
    if args.csv:
        _write_trajectory_csv(args.csv, chart, metric, traj)
        out["csv"] = args.csv
    _emit(out)
    return EXIT_OK if out["passed"] else EXIT_CHECK_FAILED


def _write_trajectory_csv(path, chart, metric, traj, n_samples=200):
    from .geodesic import hamiltonian
    n = chart.dim
    ts, ys = traj.sample(n_samples)
    xs, ps = ys[:, :n], ys[:, n:]
    H = hamiltonian(chart, metric, xs, ps)
    killing = mu_r(chart, xs, ps)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        header = (["t"] + [f"x{i+1}" for i in range(n)]
                  + [f"p{i+1}" for i in range(n)] + ["H"]
                  + [f"killing{a+1}" for a in range(n)])
        w.writerow(header)
        for k in range(len(ts)):
            w.writerow([ts[k]] + list(xs[k]) + list(ps[k]) + [H[k]]
                       + list(killing[k]))


def cmd_lambda_check(args):
    chart = load_group(args.group)
    orbit = load_orbit_model(chart)
    seed = _seed_from(args)
    rng = np.random.default_rng(seed)
    J = orbit.lam_sampler(rng)
    ops, build_rep = build_lrep(orbit, J)
    out = {"group": chart.name, "seed": seed, "J": np.asarray(J).tolist(),
           "build": build_rep}
    if orbit.m == 1:
        out["commutator_residual"] = commutator_residuals(
            ops, chart.algebra, np.linspace(-2, 2, 30), gaussian_battery(8, seed=seed))
        out["hermiticity_residual"] = hermiticity_check(orbit, ops, seed=seed)
        gen = GeneratingFunction(chart, orbit)
        x = chart.sample_points(1, rng, scale=0.35)[0]
        y = chart.sample_points(1, rng, scale=0.35)[0]
        kern = matrix_element_via_S(gen, orbit, x, J)
        out["kernel_unitarity"] = kern.unitarity_residual(np.linspace(-1, 1, 7))
        pde = matrix_element_pde_residuals(chart, orbit, kern, ops,
                                           rng.uniform(-1, 1, 5))
        out["pde_residuals"] = pde
        out["product"] = kernel_product_residual(chart, orbit, gen, x, y, J,
                                                 rng.uniform(-1, 1, 5))
        if args.dump_kernel:
            out["kernel"] = kern.dump(np.linspace(-1.5, 1.5, 7))
        ok = (out["commutator_residual"] < 1e-8
              and out["hermiticity_residual"] < 1e-6
              and max(pde["resolved"].values()) < 1e-6
              and out["product"]["xy"] < 1e-7)
    else:
        ok = True
        out["note"] = "zero-dimensional orbit space; operators are scalars"
    out["passed"] = bool(ok)
    _emit(out)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_kg(args):
    chart = load_group(args.group)
    metric = _load_metric(args, chart)
    params = KGParams(mass=args.mass, zeta=args.zeta)
    seed = _seed_from(args)
    rng = np.random.default_rng(seed)
    R, spread = scalar_curvature(chart, metric)
    out = {"group": chart.name, "mass": args.mass, "zeta": args.zeta,
           "R": R, "R_relative_spread": spread, "seed": seed}
    orbit = load_orbit_model(chart)
    try:
        lam = (np.asarray(json.loads(args.lam), dtype=float)
               if args.lam else orbit.lam_sampler(rng))
        coeffs = reduced_kg(orbit, metric, params, lam, R=R)
    except NonUnimodularError as exc:
        out["reduced"] = f"rejected: {exc}"
        out["passed"] = True
        _emit(out)
        return EXIT_OK
    u_hat = solve_reduced_ode(coeffs, 1.0, 0.3, (-9.0, 9.0))
    psi = synthesize_solution(chart, orbit, metric, params, lam, u_hat,
                              q_nodes=80, q_box=(-6.5, 6.5))
    xs = rng.uniform(-1.0, 1.0, (args.verify, chart.dim))
    res = kg_apply(chart, metric, params, psi, xs, R=R)
    seeded = psi(jm.seed(xs, 2))
    vals = np.asarray(jm.value_of(seeded.val))
    d2 = np.asarray(jm.value_of(seeded.dot.dot))
    scale = params.mass ** 2 * np.abs(vals) + np.abs(d2).max(axis=(-1, -2))
    rel = float(np.max(np.abs(res) / np.maximum(scale, 1e-12)))
    out["lambda"] = np.asarray(lam).tolist()
    out["max_residual_over_scale"] = rel
    out["verify_points"] = args.verify
    out["passed"] = bool(rel < 1e-6)
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i+1}" for i in range(chart.dim)]
                       + ["re_psi", "im_psi", "residual"])
            for k in range(len(xs)):
                w.writerow(list(xs[k]) + [vals[k].real, vals[k].imag,
                                          abs(res[k])])
        out["csv"] = args.csv
    _emit(out)
    return EXIT_OK if out["passed"] else EXIT_CHECK_FAILED


def cmd_selftest(args):
    seed = _seed_from(args)
    report, timings = run_selftest(seed=seed, verbose=False)
    if args.timings:
        report = dict(report)
        report["timings_s"] = {k: round(v, 3) for k, v in timings.items()}
    _emit(report)
    return EXIT_OK if report["passed"] else EXIT_CHECK_FAILED


def cmd_scenario(args):
    sc = load_scenario(args.path)
    chart = load_group(sc.group)
    metric = InvariantMetric(sc.metric)
    out = {"group": sc.group, "seed": sc.seed, "checks": {}}
    rng = np.random.default_rng(sc.seed)
    requested = sc.checks or ["chart"]
    ok = True
    for check in requested:
        if check == "chart":
            rep = validate_chart(chart, samples=sc.samples, seed=sc.seed)
            out["checks"]["chart"] = {"max_residual": rep["max_residual"],
                                      "passed": rep["passed"]}
            ok = ok and rep["passed"]
        elif check == "geodesic":
            x0 = sc.x0 if sc.x0 is not None else chart.sample_points(1, rng)[0]
            p0 = sc.p0 if sc.p0 is not None else rng.uniform(-0.5, 0.5, chart.dim)
            traj = integrate_direct(chart, metric, x0, p0, sc.T,
                                    tol=sc.tolerances["ode"])
            drifts = trajectory_invariants(chart, metric, traj)
            out["checks"]["geodesic"] = drifts
            ok = ok and max(drifts.values()) < 1e-7
        elif check == "curvature":
            R, spread = scalar_curvature(chart, metric)
            out["checks"]["curvature"] = {"R": R, "relative_spread": spread}
            ok = ok and spread < 1e-6
        else:
            raise ScenarioError("checks", f"unknown check {check!r}")
    out["passed"] = bool(ok)
    _emit(out)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42,
                        help="RNG seed (GEOFLOW_SEED overrides)")
    ap = argparse.ArgumentParser(
        prog="geoflow",
        description="verified geodesic flows and invariant wave operators "
                    "on low-dimensional Lie groups")
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("list-groups", help="catalog metadata as JSON",
                   parents=[common])

    p = sub.add_parser("analyze", help="index, unimodularity, integrability",
                       parents=[common])
    p.add_argument("group")

    p = sub.add_parser("validate", help="chart and orbit-model certification",
                       parents=[common])
    p.add_argument("group")
    p.add_argument("--points", type=int, default=100)

    p = sub.add_parser("canonical-check", help="generating-function relations",
                       parents=[common])
    p.add_argument("group")
    p.add_argument("--points", type=int, default=25)

    p = sub.add_parser("geodesic", help="integrate the direct flow",
                       parents=[common])
    p.add_argument("group")
    p.add_argument("--metric", help="JSON file with the frame metric matrix")
    p.add_argument("--x0", required=True, help="JSON list")
    p.add_argument("--p0", required=True, help="JSON list")
    p.add_argument("--T", type=float, default=10.0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--compare-reduced", action="store_true")
    p.add_argument("--csv")

    p = sub.add_parser("lambda-check", help="representation and kernel checks",
                       parents=[common])
    p.add_argument("group")
    p.add_argument("--dump-kernel", action="store_true")

    p = sub.add_parser("kg", help="wave-operator solution synthesis",
                       parents=[common])
    p.add_argument("group")
    p.add_argument("--metric")
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--zeta", type=float, default=0.0)
    p.add_argument("--lambda", dest="lam", default=None, help="JSON list")
    p.add_argument("--verify", type=int, default=50)
    p.add_argument("--csv")

    p = sub.add_parser("selftest", help="run the full acceptance battery",
                       parents=[common])
    p.add_argument("--timings", action="store_true",
                   help="include wall-clock timings (breaks byte-identical "
                        "output across runs)")

    p = sub.add_parser("scenario", help="run checks from a scenario file",
                       parents=[common])
    p.add_argument("path")
    return ap


_COMMANDS = {
    "list-groups": cmd_list_groups,
    "analyze": cmd_analyze,
    "validate": cmd_validate,
    "canonical-check": cmd_canonical_check,
    "geodesic": cmd_geodesic,
    "lambda-check": cmd_lambda_check,
    "kg": cmd_kg,
    "selftest": cmd_selftest,
    "scenario": cmd_scenario,
}


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except (UnknownGroupError, ScenarioError, FileNotFoundError,
            json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UnsupportedOrbitError, NonUnimodularError, RegularityError) as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
