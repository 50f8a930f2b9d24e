"""Acceptance battery: every shipped claim at its pinned tolerance.

Each criterion returns a dict with residuals, its tolerance, and a pass
flag; :func:`run_selftest` aggregates them deterministically for a given
seed.  Wall-clock limits are measured but reported separately so the JSON
payload stays byte-identical across runs.
"""

from __future__ import annotations

import time

import numpy as np

from . import jets as jm
from .algebra import jacobi_check, index, unimodularity, integrability_criterion
from .charts import load_group, validate_chart
from .orbits import load_orbit_model, UnsupportedOrbitError
from .momentum import (check_equivariance, momentum_bracket_residuals,
                       validate_transition, validate_polarization)
from .transform import (GeneratingFunction, lemma1_residuals, forward_transform,
                        symplectic_check)
from .geodesic import (InvariantMetric, integrate_direct, trajectory_invariants,
                       compare_direct_reduced, integrate_reduced,
                       quadrature_solution, reduced_sign_report)
from .lrep import (build_lrep, commutator_residuals, hermiticity_check,
                   gaussian_battery, matrix_element_via_S,
                   matrix_element_pde_residuals, kernel_product_residual)
from .fourier import (FourierSetup, abelian_roundtrip, polarized_roundtrip,
                      intertwining_residuals)
from .kg import (KGParams, scalar_curvature, curvature_fd_oracle, kg_apply,
                 kg_coordinate_apply, reduced_kg, solve_reduced_ode,
                 synthesize_solution, plane_wave, NonUnimodularError)

__all__ = ["run_selftest", "CRITERIA"]

ALGEBRA_GROUPS = ["abelian_2", "abelian_3", "heisenberg3", "euclid2", "so3",
                  "aff1", "so3_x_so3"]
CHART_GROUPS = ["abelian_2", "heisenberg3", "euclid2", "so3", "aff1", "so3_x_so3"]
ORBIT_GROUPS = ["abelian_2", "heisenberg3", "euclid2", "so3", "aff1"]
POLARIZED_GROUPS = ["heisenberg3", "euclid2", "aff1"]

EXPECTED_INDEX = {"abelian_2": 2, "abelian_3": 3, "heisenberg3": 1,
                  "euclid2": 1, "so3": 1, "aff1": 0, "so3_x_so3": 2}
EXPECTED_INTEGRABLE = {"abelian_2": True, "abelian_3": True, "heisenberg3": True,
                       "euclid2": True, "so3": True, "aff1": True,
                       "so3_x_so3": False}

GEO_CASES = {
    "heisenberg3": (np.eye(3), [0.2, -0.3, 0.4], [0.5, -1.2, 0.9]),
    "euclid2": (np.diag([1.0, 2.0, 1.0]), [0.3, -0.5, 0.4], [0.8, -0.4, 0.7]),
    "so3": (np.diag([1.0, 2.0, 3.0]), [0.2, -0.1, 0.15], [0.12, 0.1, -0.08]),
    "aff1": (np.eye(2), [0.3, -0.4], [0.5, 0.8]),
    "so3_x_so3": (np.diag([1.0, 2.0, 3.0, 1.5, 1.0, 2.5]),
                  [0.2, -0.1, 0.15, 0.1, 0.05, -0.12],
                  [0.1, 0.08, -0.06, 0.05, -0.07, 0.04]),
}

CURVATURE_CASES = [
    ("abelian_3", np.eye(3)),
    ("heisenberg3", np.eye(3)),
    ("heisenberg3", np.diag([1.0, 2.0, 3.0])),
    ("euclid2", np.eye(3)),
    ("so3", np.eye(3)),
    ("so3", np.diag([1.0, 1.0, -1.0])),
    ("aff1", np.eye(2)),
]


def _crit_algebra(seed):
    tol = 0.0
    report = {"tolerance_jacobi": tol, "groups": {}}
    ok = True
    for name in ALGEBRA_GROUPS:
        chart = load_group(name)
        jac = jacobi_check(chart.algebra)
        idx = index(chart.algebra, samples=160, seed=seed)
        flag, m = integrability_criterion(chart.algebra, samples=160, seed=seed)
        uni, _ = unimodularity(chart.algebra)
        entry = {
            "jacobi_residual": jac.max_residual,
            "index": idx,
            "index_expected": EXPECTED_INDEX[name],
            "integrable": flag,
            "integrable_expected": EXPECTED_INTEGRABLE[name],
            "unimodular": uni,
        }
        entry["passed"] = bool(jac.ok and jac.max_residual == 0.0
                               and idx == EXPECTED_INDEX[name]
                               and flag == EXPECTED_INTEGRABLE[name])
        ok = ok and entry["passed"]
        report["groups"][name] = entry
    report["passed"] = ok
    return report


def _crit_charts(seed):
    tol = 1e-8
    report = {"tolerance": tol, "samples": 100, "groups": {}}
    ok = True
    for name in CHART_GROUPS:
        rep = validate_chart(load_group(name), samples=100, seed=seed, tol=tol)
        report["groups"][name] = {"max_residual": rep["max_residual"],
                                  "passed": rep["passed"]}
        ok = ok and rep["passed"]
    report["passed"] = ok
    return report


def _crit_orbits(seed):
    tol = 1e-8
    report = {"tolerance": tol, "samples": 200, "groups": {}}
    ok = True
    for name in ORBIT_GROUPS:
        chart = load_group(name)
        orbit = load_orbit_model(chart)
        tr = validate_transition(orbit, samples=200, seed=seed)
        pol = validate_polarization(orbit, seed=seed)
        entry = {"transition_residual": tr["max_residual"],
                 "transition_passed": tr["passed"]}
        if pol.get("applicable"):
            entry["polarization_passed"] = pol["passed"]
            entry["polarization_residual"] = pol["isotropy_residual"]
            passed = tr["passed"] and pol["passed"]
        else:
            entry["polarization_note"] = pol["note"]
            passed = tr["passed"]
        entry["passed"] = bool(passed)
        report["groups"][name] = entry
        ok = ok and passed
    report["passed"] = ok
    return report


def _crit_lemma1(seed):
    tol = 1e-6
    rng = np.random.default_rng(seed)
    report = {"tolerance": tol, "tuples": 100, "groups": {}}
    ok = True
    for name in ("heisenberg3", "euclid2"):
        chart = load_group(name)
        orbit = load_orbit_model(chart)
        gen = GeneratingFunction(chart, orbit)
        worst = (0.0, 0.0)
        for _ in range(100):
            x = chart.sample_points(1, rng)[0]
            q = rng.uniform(-1.0, 1.0, orbit.m)
            pip = rng.uniform(-1.5, 1.5, orbit.m)
            J = orbit.lam_sampler(rng)
            r1, r2 = lemma1_residuals(gen, x, q, pip, J)
            worst = (max(worst[0], r1), max(worst[1], r2))
        rid = lemma1_residuals(gen, np.zeros(chart.dim), np.array([0.3]),
                               np.array([-0.4]), orbit.lam_sampler(rng))
        entry = {"dS_dq_residual": worst[0], "dS_dpip_residual": worst[1],
                 "identity_residuals": list(rid),
                 "qprime_sign": "+dS/dpi' (resolved; printed sign is -)"}
        entry["passed"] = bool(max(worst) < tol and max(rid) < 1e-12)
        report["groups"][name] = entry
        ok = ok and entry["passed"]
    report["passed"] = ok
    return report


def _crit_symplectic(seed):
    tol = 1e-5
    rng = np.random.default_rng(seed)
    report = {"tolerance": tol, "points": 25, "groups": {},
              "note": "so3 ships no polarized model (no real polarization "
                      "exists), so the generating-function route and this "
                      "check do not apply to it"}
    ok = True
    for name in POLARIZED_GROUPS:
        chart = load_group(name)
        orbit = load_orbit_model(chart)
        worst = 0.0
        orientations = None
        for _ in range(25):
            x = chart.sample_points(1, rng)[0]
            p = rng.uniform(-1.5, 1.5, chart.dim)
            if name == "aff1":
                p[1] = rng.uniform(0.3, 1.5)  # stay on the f2 > 0 orbit
            if name == "heisenberg3" and abs(p[2]) < 0.2:
                p[2] = 0.2 + abs(p[2])
            rep = symplectic_check(chart, orbit, x, p, tol=tol)
            worst = max(worst, rep["residual"])
            orientations = rep["pair_orientations"]
        entry = {"max_residual": worst, "pair_orientations": orientations,
                 "passed": bool(worst < tol)}
        report["groups"][name] = entry
        ok = ok and entry["passed"]
    report["passed"] = ok
    return report


def _crit_geodesic(seed):
    report = {"tolerance_deviation": 1e-6, "tolerance_drift": 1e-7,
              "tolerance_quadrature": 1e-6, "groups": {}}
    ok = True
    for name, (G, x0, p0) in GEO_CASES.items():
        chart = load_group(name)
        metric = InvariantMetric(G)
        traj = integrate_direct(chart, metric, x0, p0, 10.0, tol=1e-10)
        drifts = trajectory_invariants(chart, metric, traj)
        entry = {"energy_drift": drifts["energy"],
                 "killing_drift": drifts["killing"]}
        passed = drifts["energy"] < 1e-7 and drifts["killing"] < 1e-7
        if name in ("heisenberg3", "euclid2", "so3"):
            orbit = load_orbit_model(chart)
            cmp_rep = compare_direct_reduced(chart, orbit, metric, x0, p0, 5.0)
            entry["direct_vs_reduced"] = cmp_rep["deviation"]
            passed = passed and cmp_rep["deviation"] < 1e-6
            sign = reduced_sign_report(chart, orbit, metric, x0, p0)
            entry["reduced_sign"] = sign["resolved"]
            passed = passed and sign["resolved"] == "canonical"
            qerr = _quadrature_vs_ode(chart, orbit, metric, x0, p0)
            entry["quadrature_vs_ode"] = qerr
            passed = passed and qerr < 1e-6
        entry["passed"] = bool(passed)
        report["groups"][name] = entry
        ok = ok and passed
    report["passed"] = ok
    return report


def _quadrature_vs_ode(chart, orbit, metric, x0, p0):
    cp = forward_transform(chart, orbit, np.asarray(x0), np.asarray(p0),
                           with_tau=(orbit.point_map_coord is not None))
    red = integrate_reduced(orbit, metric, cp, 5.0, tol=1e-11)
    tt = np.linspace(0.0, 5.0, 1001)
    qd = np.gradient(red(tt)[:, 0], tt)
    s0 = np.sign(qd[0]) if qd[0] != 0 else 1.0
    flips = np.nonzero(np.sign(qd) != s0)[0]
    t_max = tt[flips[0]] * 0.8 if len(flips) else 5.0
    ts = np.linspace(0.0, t_max, 6)[1:]
    qs = red(ts)[:, 0]
    res = quadrature_solution(orbit, metric, cp, qs)
    return float(np.max(np.abs(np.asarray(res["times"]) - ts)))


def _crit_lambda(seed):
    report = {"tolerance_commutators": 1e-8, "tolerance_hermiticity": 1e-6,
              "tolerance_pde": 1e-6, "tolerance_product": 1e-7, "groups": {}}
    rng = np.random.default_rng(seed)
    ok = True
    for name in ("heisenberg3", "euclid2", "aff1", "abelian_2"):
        chart = load_group(name)
        orbit = load_orbit_model(chart)
        J = orbit.lam_sampler(rng)
        ops, build_rep = build_lrep(orbit, J)
        entry = {"J": np.asarray(J).tolist()}
        if orbit.m == 1:
            qs = np.linspace(-2.0, 2.0, 50)
            comm = commutator_residuals(ops, chart.algebra, qs,
                                        gaussian_battery(20, seed=seed))
            herm = hermiticity_check(orbit, ops, n_funcs=6, seed=seed)
            entry["commutator_residual"] = comm
            entry["hermiticity_residual"] = herm
            passed = comm < 1e-8 and herm < 1e-6
        else:
            entry["commutator_residual"] = 0.0
            entry["hermiticity_residual"] = 0.0
            passed = True
        gen = GeneratingFunction(chart, orbit)
        pde_worst = {"xi": 0.0, "eta": 0.0}
        prod_worst = 0.0
        prod_order = None
        n_pairs = 10 if orbit.m else 5
        for _ in range(n_pairs):
            x = chart.sample_points(1, rng, scale=0.35)[0]
            y = chart.sample_points(1, rng, scale=0.35)[0]
            if orbit.m:
                kern = matrix_element_via_S(gen, orbit, x, J)
                pde = matrix_element_pde_residuals(
                    chart, orbit, kern, ops, rng.uniform(-1.0, 1.0, 5))
                pde_worst["xi"] = max(pde_worst["xi"], pde["resolved"]["xi_system"])
                pde_worst["eta"] = max(pde_worst["eta"], pde["resolved"]["eta_system"])
            pr = kernel_product_residual(chart, orbit, gen, x, y, J,
                                         rng.uniform(-1.0, 1.0, 5))
            prod_worst = max(prod_worst, pr["xy"])
            prod_order = pr["matches"]
        entry["pde_residuals"] = pde_worst
        entry["product_residual_xy"] = prod_worst
        entry["product_matches"] = prod_order
        passed = passed and max(pde_worst.values()) < 1e-6 and prod_worst < 1e-7
        entry["passed"] = bool(passed)
        report["groups"][name] = entry
        ok = ok and passed
    report["conventions"] = {
        "pde_pairing": "xi with conj(parity l) on the source slot; "
                       "eta with -(parity l) on the target slot",
        "kernel": "phase exp(+iB) at the source; composition is a "
                  "homomorphism, kernel(x) o kernel(y) = kernel(xy)",
    }
    report["passed"] = ok
    return report


def _h3_packet():
    k3, s3 = 4.0, 1.1

    def psi(x):
        g = jm.exp(-0.5 * ((x[..., 0] / 0.8) ** 2 + (x[..., 1] / 0.9) ** 2
                           + (x[..., 2] / s3) ** 2))
        return g * (jm.cos(k3 * x[..., 2]) + 1j * jm.sin(k3 * x[..., 2]))

    return psi, k3


def _crit_fourier(seed):
    report = {"tolerance_roundtrip": 1e-3, "tolerance_intertwining": 1e-4}
    rng = np.random.default_rng(seed)
    ok = True

    orbit1 = load_orbit_model(load_group("abelian_1"))

    def gauss1(x):
        return jm.exp(-0.5 * (x[..., 0] / 0.9) ** 2) \
            * (jm.cos(0.7 * x[..., 0]) + 1j * jm.sin(0.7 * x[..., 0]))

    err_ab = abelian_roundtrip(orbit1, gauss1)
    report["abelian_roundtrip"] = err_ab
    ok = ok and err_ab < 1e-3

    chart = load_group("heisenberg3")
    orbit = load_orbit_model(chart)
    psi, k3 = _h3_packet()
    setup = FourierSetup(
        orbit, x_box=np.array([[-3.2, 3.2], [-3.6, 3.6], [-4.6, 4.6]]),
        lam_shells=[(-k3 - 3.0, -k3 + 3.0), (k3 - 3.0, k3 + 3.0)],
        n_x=56, n_q=44, n_lam=24, u_box=(-3.5, 3.5))
    x_eval = rng.uniform(-0.7, 0.7, (20, 3))
    err_h3, _, _ = polarized_roundtrip(setup, psi, x_eval)
    report["heisenberg3_roundtrip"] = err_h3
    ok = ok and err_h3 < 1e-3

    setup_wide = FourierSetup(
        orbit, x_box=np.array([[-4.4, 4.4], [-5.0, 5.0], [-6.1, 6.1]]),
        lam_shells=[(-7.0, -1.0), (1.0, 7.0)], n_x=72, n_q=44, n_lam=24,
        u_box=(-3.5, 3.5))
    J = np.array([3.7])
    ops, _ = build_lrep(orbit, J)
    samples = [(0.3, 0.1), (-0.4, 0.25), (0.15, -0.3)]
    inter = intertwining_residuals(setup_wide, chart, orbit, ops, psi, samples, J)
    report["intertwining"] = {"xi": inter["xi"], "eta": inter["eta"]}
    report["intertwining_convention"] = inter["convention"]
    ok = ok and max(inter["xi"], inter["eta"]) < 1e-4
    report["passed"] = bool(ok)
    return report


def _crit_kg(seed):
    report = {"tolerance_residual_scale": 1e-6,
              "tolerance_oracle_abelian": 1e-8, "tolerance_oracle_h3": 1e-6}
    rng = np.random.default_rng(seed)
    ok = True

    # synthesized solution on heisenberg3
    chart = load_group("heisenberg3")
    orbit = load_orbit_model(chart)
    metric = InvariantMetric(np.eye(3))
    params = KGParams(mass=1.0, zeta=0.2)
    R, _ = scalar_curvature(chart, metric, n_check=3)
    J = np.array([1.3])
    coeffs = reduced_kg(orbit, metric, params, J, R=R)
    u_hat = solve_reduced_ode(coeffs, 1.0, 0.3, (-9.0, 9.0))
    psi = synthesize_solution(chart, orbit, metric, params, J, u_hat,
                              q_nodes=80, q_box=(-6.5, 6.5))
    xs = rng.uniform(-1.0, 1.0, (100, 3))
    res = kg_apply(chart, metric, params, psi, xs, R=R)
    out = psi(jm.seed(xs, 2))
    vals = np.asarray(jm.value_of(out.val))
    d2 = np.asarray(jm.value_of(out.dot.dot))
    scale = params.mass ** 2 * np.abs(vals) + np.abs(d2).max(axis=(-1, -2))
    rel = float(np.max(np.abs(res) / np.maximum(scale, 1e-12)))
    report["heisenberg3_residual_over_scale"] = rel
    ok = ok and rel < 1e-6

    # abelian mass shell is exact
    chart_a = load_group("abelian_3")
    metric_a = InvariantMetric(np.eye(3))
    params_a = KGParams(mass=1.0)
    pw = plane_wave(np.array([0.6, 0.8, 0.0]))
    res_a = max(abs(kg_apply(chart_a, metric_a, params_a, pw,
                             rng.uniform(-1, 1, 3), R=0.0)) for _ in range(5))
    report["abelian_mass_shell_residual"] = float(res_a)
    ok = ok and res_a < 1e-12

    # aff1 rejected by the reduced route
    try:
        reduced_kg(load_orbit_model(load_group("aff1")),
                   InvariantMetric(np.eye(2)), params_a, np.zeros(0))
        report["aff1_rejected"] = False
        ok = False
    except NonUnimodularError:
        report["aff1_rejected"] = True

    # invariant-frame vs coordinate assembly
    def smooth(x):
        s = None
        for i in range(x.shape[-1] if not isinstance(x, jm.Jet)
                       else np.asarray(jm.value_of(x)).shape[-1]):
            t = x[..., i] ** 2
            s = t if s is None else s + t
        return jm.exp(-0.1 * s) * (jm.sin(0.8 * x[..., 0]) + 1.2)

    for name, tol_key in (("abelian_3", "tolerance_oracle_abelian"),
                          ("heisenberg3", "tolerance_oracle_h3")):
        ch = load_group(name)
        met = InvariantMetric(np.eye(ch.dim))
        Rv, _ = scalar_curvature(ch, met, n_check=3)
        worst = 0.0
        for _ in range(10):
            x = ch.sample_points(1, rng)[0]
            a = kg_apply(ch, met, params_a, smooth, x, R=Rv)
            b = kg_coordinate_apply(ch, met, params_a, smooth, x, R=Rv)
            worst = max(worst, abs(complex(a) - complex(b)))
        report[f"oracle_agreement_{name}"] = worst
        ok = ok and worst < report[tol_key]
    report["passed"] = bool(ok)
    return report


def _crit_curvature(seed):
    report = {"tolerance_spread": 1e-6, "tolerance_oracle": 1e-6, "cases": []}
    ok = True
    for name, G in CURVATURE_CASES:
        chart = load_group(name)
        metric = InvariantMetric(G)
        R, spread = scalar_curvature(chart, metric, n_check=20, seed=seed)
        fd = curvature_fd_oracle(chart, metric)
        entry = {"group": name, "metric_diag": np.diag(G).tolist(),
                 "R": R, "relative_spread": spread,
                 "oracle_difference": abs(R - fd)}
        entry["passed"] = bool(spread < 1e-6 and abs(R - fd) < 1e-6)
        report["cases"].append(entry)
        ok = ok and entry["passed"]
    report["passed"] = ok
    return report


CRITERIA = [
    ("01_algebra_battery", _crit_algebra, 1.0),
    ("02_chart_certification", _crit_charts, 10.0),
    ("03_orbit_transitions", _crit_orbits, None),
    ("04_lemma1", _crit_lemma1, None),
    ("05_symplecticity", _crit_symplectic, None),
    ("06_geodesic_cross_validation", _crit_geodesic, 60.0),
    ("07_lambda_representation", _crit_lambda, None),
    ("08_fourier_roundtrip", _crit_fourier, None),
    ("09_klein_gordon", _crit_kg, None),
    ("10_curvature", _crit_curvature, None),
]


def run_selftest(seed=42, verbose=False):
    """Run the acceptance battery; returns (report_dict, timings_dict)."""
    results = {}
    timings = {}
    all_ok = True
    for name, fn, limit in CRITERIA:
        t0 = time.perf_counter()
        rep = fn(seed)
        dt = time.perf_counter() - t0
        timings[name] = dt
        if limit is not None:
            rep["runtime_limit_s"] = limit
            rep["runtime_within_limit"] = bool(dt < limit)
            rep["passed"] = bool(rep["passed"] and dt < limit)
        results[name] = rep
        all_ok = all_ok and rep["passed"]
        if verbose:
            print(f"{name}: {'pass' if rep['passed'] else 'FAIL'} ({dt:.2f} s)")
    report = {
        "seed": int(seed),
        "version": "0.1.0",
        "passed": bool(all_ok),
        "criteria": results,
        "conventions": {
            "bracket": "{F,G} = F_x G_p - F_p G_x; right momenta close with "
                       "-C, left momenta with +C",
            "lemma1": "q' = + dS/dpi'",
            "symplectic_pairs": "dp^dx = dq^dpi + dpi'^dq' + dJ^dtau",
            "reduced_flow": "canonical sign dpi'/dt = -dH/dq'",
            "wave_trace_term": "+ G^{ab} C_b eta_a (certified on aff1)",
            "kernel": "homomorphism assembly; see lambda criterion report",
        },
    }
    return report, timings
