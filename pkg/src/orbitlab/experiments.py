"""Experiment drivers.

Each named experiment turns a validated config into a ``RunReport``: a list
of tolerance-judged criteria plus the tables those judgments came from.
Sweep cells are independent and may run on a thread pool; aggregation sorts
before reporting, so identical config and seed give identical tables no
matter the schedule.  A crash inside one cell is recorded and the rest of
the sweep still reports.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .ggp import (
    disintegration_report,
    ev,
    ggp_catalog,
    is_stable,
    is_stable_pair,
    random_element,
    restrict_H,
    satake_view,
    stability_sweep,
    torsor_check,
)
from .liecore import algebra_catalog, rep_catalog
from .orbits import (
    character_orbit,
    equal_volume_strips,
    nilcone_rescaling,
    sphere_chart,
    strip_masses,
)
from .quantize import (
    QuantizationContext,
    compose_residual,
    kirillov_residual,
    microlocal_support,
    opp,
    polynomial_opp,
)
from .relchar import compact_branching, order_fit, plancherel_check, relchar_residual
from .starprod import expansion_study
from .symbols import conjugate, gaussian, gaussian_poly, polynomial_symbol

__all__ = ["Criterion", "Artifact", "RunReport", "run"]

_REP_FAMILY = {"su2": "su2_spin"}


@dataclass(frozen=True)
class Criterion:
    """One pass/fail judgment: the measured statistic and its tolerance."""

    criterion_id: str
    measured: float
    threshold: float
    passed: bool


@dataclass(frozen=True)
class Artifact:
    name: str
    kind: str
    fieldnames: tuple
    rows: tuple


@dataclass(frozen=True)
class RunReport:
    experiment: str
    criteria: tuple
    artifacts: tuple
    errors: tuple = ()

    @property
    def passed(self) -> bool:
        return not self.errors and all(c.passed for c in self.criteria)

    def artifact(self, name: str) -> Artifact:
        for art in self.artifacts:
            if art.name == name:
                return art
        raise KeyError(name)


def _map_cells(fn, cells, jobs: int):
    """Run independent sweep cells, capturing per-cell failures."""

    def guarded(args):
        try:
            return fn(*args), None
        except Exception as exc:
            return None, f"{fn.__name__}{args!r}: {type(exc).__name__}: {exc}"

    if jobs <= 1 or len(cells) <= 1:
        return [guarded(c) for c in cells]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(guarded, cells))


def _split(outs):
    results = [r for r, e in outs if e is None]
    errors = tuple(e for _, e in outs if e is not None)
    return results, errors


def _running_fit(hs, residuals):
    """Least-squares order through the first k points, per row."""
    slopes = []
    for k in range(len(hs)):
        if k == 0 or min(residuals[: k + 1]) <= 0:
            slopes.append(float("nan"))
        else:
            slopes.append(float(np.polyfit(np.log(hs[: k + 1]),
                                           np.log(residuals[: k + 1]), 1)[0]))
    return slopes


def _window(criterion_id, fit, half_width, clean=True) -> Criterion:
    ok = clean and np.isfinite(fit) and abs(fit - 1.0) <= half_width
    return Criterion(criterion_id, float(fit), float(half_width), bool(ok))


# ---------------------------------------------------------------------------
# kirillov: orbit mass identity and the trace asymptotics


def _run_kirillov(config: ExperimentConfig) -> RunReport:
    tol = {"orbit_mass": 1e-6, "trace_order": 0.3, **config.tolerances}
    alg = algebra_catalog(config.algebra)
    mass_rows = []
    for j in config.grid("mass_j"):
        chart = character_orbit(alg, j)
        mass_rows.append({"j": int(j), "mass": chart.mass,
                          "error": abs(chart.mass - (2 * j + 1))})
    a = config.symbols[0].build(alg.dim)

    def trace_cell(j):
        h = 1.0 / (j + 0.5)
        ctx = QuantizationContext(rep_catalog(_REP_FAMILY[config.algebra], j=j), h)
        chart = sphere_chart(alg, h * j, check=False)
        lhs, rhs, gap = kirillov_residual(ctx, a, chart, via="character")
        return {"j": int(j), "h": h, "lhs": lhs.real, "rhs": rhs.real, "residual": gap}

    outs = _map_cells(trace_cell, [(j,) for j in config.grid("trace_j")], config.jobs)
    trace_rows, errors = _split(outs)
    trace_rows.sort(key=lambda r: -r["h"])
    hs = [r["h"] for r in trace_rows]
    res = [r["residual"] for r in trace_rows]
    for row, slope in zip(trace_rows, _running_fit(hs, res)):
        row["fitted_order_so_far"] = slope
    fit = trace_rows[-1]["fitted_order_so_far"] if len(trace_rows) >= 2 else float("nan")
    max_err = max(r["error"] for r in mass_rows)
    criteria = (
        Criterion("orbit_mass", max_err, tol["orbit_mass"], max_err <= tol["orbit_mass"]),
        _window("trace_order", fit, tol["trace_order"], clean=not errors),
    )
    artifacts = (
        Artifact("results", "csv",
                 ("j", "h", "lhs", "rhs", "residual", "fitted_order_so_far"),
                 tuple(trace_rows)),
        Artifact("orbit_mass", "csv", ("j", "mass", "error"), tuple(mass_rows)),
    )
    return RunReport("kirillov", criteria, artifacts, errors)


# ---------------------------------------------------------------------------
# star: expansion orders for the J = 1, 2 truncations


def _run_star(config: ExperimentConfig) -> RunReport:
    tol = {"order_gap_j1": 0.2, "order_gap_j2": 0.3, **config.tolerances}
    hs = [1.0 / k for k in config.grid("h_inverse")]
    grades = tuple(int(J) for J in config.grid("grades"))
    names = [s.strip() for s in str(config.params.get("algebras", "su2,heisenberg")).split(",")]
    ns = int(config.params.get("ns_axis", 18))
    nu = int(config.params.get("nu_axis", 36))

    def cell(name):
        alg = algebra_catalog(name)
        a = config.symbols[0].build(alg.dim)
        b = config.symbols[1].build(alg.dim)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            tables = expansion_study(alg, a, b, hs, grades, ns_axis=ns, nu_axis=nu)
        return name, tables

    outs = _map_cells(cell, [(n,) for n in names], config.jobs)
    done, errors = _split(outs)
    done.sort(key=lambda item: item[0])
    rows, criteria = [], []
    for name, tables in done:
        for J in grades:
            table = tables[J]
            for rec in table.as_records():
                rows.append({"algebra": name, "grade": J, **rec})
            gap = abs(table.fitted_order - J)
            half = tol[f"order_gap_j{J}"]
            criteria.append(Criterion(f"star_order_{name}_J{J}", float(table.fitted_order),
                                      half, bool(np.isfinite(gap) and gap <= half)))
    artifacts = (
        Artifact("results", "csv",
                 ("algebra", "grade", "h", "residual", "fitted_order_so_far"),
                 tuple(rows)),
    )
    return RunReport("star", tuple(criteria), artifacts, errors)


# ---------------------------------------------------------------------------
# compose: the exact operator identities (composition, adjoint, polynomial)


def _run_compose(config: ExperimentConfig) -> RunReport:
    tol = {"composition": 1e-6, "adjoint": 1e-8, "polynomial": 1e-3, **config.tolerances}
    j = int(config.params.get("j", 5))
    h = 1.0 / float(config.params.get("h_inverse", 8))
    ns = int(config.params.get("ns_axis", 18))
    nu = int(config.params.get("nu_axis", 36))
    rep = rep_catalog(_REP_FAMILY[config.algebra], j=j)
    ctx = QuantizationContext(rep, h)

    rng = np.random.default_rng((config.seed, 0))
    pair_ids = [int(k) for k in config.grid("pairs")]
    drawn = []
    for _ in range(max(pair_ids) + 1):
        ca, cb = rng.uniform(-0.7, 0.7, 3), rng.uniform(-0.7, 0.7, 3)
        wa, wb = rng.uniform(0.35, 0.55, 2)
        drawn.append((gaussian(ca, width=wa), gaussian(cb, width=wb)))

    def pair_cell(k):
        a, b = drawn[k]
        return {"check": "composition", "index": k,
                "value": compose_residual(ctx, a, b, ns_axis=ns, nu_axis=nu)}

    outs = _map_cells(pair_cell, [(k,) for k in pair_ids], config.jobs)
    rows, errors = _split(outs)
    rows.sort(key=lambda r: r["index"])

    rng_adj = np.random.default_rng((config.seed, 1))
    adj_vals = []
    for k in range(int(config.params.get("n_adjoint", 20))):
        a = gaussian(rng_adj.uniform(-0.8, 0.8, 3),
                     width=float(rng_adj.uniform(0.25, 0.6)),
                     modulation=rng_adj.uniform(-0.4, 0.4, 3),
                     amplitude=complex(rng_adj.normal(), rng_adj.normal()))
        gap = float(np.linalg.norm(opp(ctx, a).conj().T - opp(ctx, conjugate(a)), 2))
        adj_vals.append(gap)
        rows.append({"check": "adjoint", "index": k, "value": gap})

    hp = 1.0 / float(config.params.get("poly_h_inverse", 32))
    p = "1 + xi0**2 + xi1**2 + xi2**2"
    exact = polynomial_opp(rep, p, h=hp)
    wide = 8.0 / hp
    areg = gaussian_poly(3, poly=p, A=np.eye(3) / wide**2)
    ctxp = QuantizationContext(rep, hp)
    rel = float(np.linalg.norm(opp(ctxp, areg) - exact, 2) / np.linalg.norm(exact, 2))
    exact_gap = float(np.linalg.norm(opp(ctxp, polynomial_symbol(3, p)) - exact, 2))
    rows.append({"check": "polynomial", "index": 0, "value": rel})
    rows.append({"check": "polynomial_exact_path", "index": 0, "value": exact_gap})

    comp_vals = [r["value"] for r in rows if r["check"] == "composition"]
    criteria = (
        Criterion("composition", max(comp_vals) if comp_vals else float("nan"),
                  tol["composition"],
                  bool(comp_vals) and not errors and max(comp_vals) <= tol["composition"]),
        Criterion("adjoint", max(adj_vals), tol["adjoint"], max(adj_vals) <= tol["adjoint"]),
        Criterion("polynomial", rel, tol["polynomial"],
                  rel <= tol["polynomial"] and exact_gap == 0.0),
    )
    artifacts = (Artifact("results", "csv", ("check", "index", "value"), tuple(rows)),)
    return RunReport("compose", criteria, artifacts, errors)


# ---------------------------------------------------------------------------
# stability: three characterizations per sample, and the multiset shadow


def _run_stability(config: ExperimentConfig) -> RunReport:
    tol = {"agreement": 1.0, "satake": 1.0, **config.tolerances}
    n = int(config.grid("samples")[0])
    frac = float(config.params.get("unstable_fraction", 0.3))
    families = [s.strip() for s in str(config.params.get(
        "families", "gl3_gl2,so4_so3,so3_so2,u2_u1")).split(",")]

    def cell(name):
        return name, stability_sweep(ggp_catalog(name), n, seed=config.seed,
                                     unstable_fraction=frac)

    outs = _map_cells(cell, [(f,) for f in families], config.jobs)
    done, errors = _split(outs)
    done.sort(key=lambda item: item[0])

    sample_rows, judged, agreeing = [], 0, 0
    for _, recs in done:
        for rec in recs:
            verdicts = [rec["stable_ev"], rec["stable_witness"], rec["stable_cyclic"]]
            agree = verdicts[0] == verdicts[1] == verdicts[2] and not rec["witness_error"]
            if not rec["borderline"]:
                judged += 1
                agreeing += int(agree)
            sample_rows.append({
                "case": rec["case"], "n": rec["index"], "x_hash": rec["x_hash"],
                "verdicts": verdicts, "margin": rec["min_gap"],
                "planted": rec["planted"], "borderline": rec["borderline"],
            })
    agreement = agreeing / judged if judged else float("nan")

    rng = np.random.default_rng((config.seed, 2))
    n_sat = int(config.params.get("satake_samples", 1000))
    sat_rows, sat_agree = [], 0
    for k in range(n_sat):
        lam = rng.normal(size=3) + 1j * rng.normal(size=3)
        mu = rng.normal(size=2) + 1j * rng.normal(size=2)
        if rng.random() < 0.3:
            mu[int(rng.integers(2))] = lam[int(rng.integers(3))]
        unitary = bool(rng.random() < 0.5)
        _, sat_verdict = satake_view(lam, mu, unitary=unitary)
        ms_verdict = bool(is_stable_pair(lam, mu))
        sat_agree += int(sat_verdict == ms_verdict)
        sat_rows.append({"index": k, "unitary": unitary,
                         "stable_multiset": ms_verdict, "stable_satake": sat_verdict})
    sat_fraction = sat_agree / n_sat if n_sat else float("nan")

    criteria = (
        Criterion("stability_agreement", agreement, tol["agreement"],
                  bool(judged) and not errors and agreement >= tol["agreement"]),
        Criterion("satake_agreement", sat_fraction, tol["satake"],
                  bool(n_sat) and sat_fraction >= tol["satake"]),
    )
    artifacts = (
        Artifact("results", "csv",
                 ("case", "n", "x_hash", "planted", "borderline", "margin"),
                 tuple({k: r[k] for k in
                        ("case", "n", "x_hash", "planted", "borderline", "margin")}
                       for r in sample_rows)),
        Artifact("stability_samples", "json",
                 ("case", "n", "x_hash", "verdicts", "margin", "planted", "borderline"),
                 tuple(sample_rows)),
        Artifact("satake", "csv",
                 ("index", "unitary", "stable_multiset", "stable_satake"),
                 tuple(sat_rows)),
    )
    return RunReport("stability", criteria, artifacts, errors)


# ---------------------------------------------------------------------------
# torsor: transport residuals and uniqueness on stable fibers


def _run_torsor(config: ExperimentConfig) -> RunReport:
    tol = {"residual": 1e-8, "uniqueness": 1e-6, **config.tolerances}
    transports = int(config.params.get("transports", 5))
    starts = int(config.params.get("starts", 8))

    cells = []
    rng = np.random.default_rng((config.seed, 3))
    pair_so3 = ggp_catalog("so3_so2")
    for k in range(int(config.grid("so3_samples")[0])):
        r = float(rng.uniform(0.7, 1.4))
        z = r * float(rng.uniform(-0.85, 0.85))
        cells.append(("so3_so2", k, pair_so3, r, z))
    pair_gl3 = ggp_catalog("gl3_gl2")
    made = 0
    while made < int(config.grid("gl3_samples")[0]):
        x = random_element(pair_gl3, rng)
        if not is_stable(pair_gl3, x):
            continue
        lam = ev(pair_gl3, x)
        mu = ev(pair_gl3, restrict_H(pair_gl3, x), space="h")
        cells.append(("gl3_gl2", made, pair_gl3, lam, mu))
        made += 1

    def cell(case, k, pair, lam, mu):
        report = torsor_check(pair, lam, mu, samples=transports,
                              seed=config.seed * 100003 + k, starts=starts)
        return {"case": case, "index": k,
                "max_residual": report.max_residual,
                "max_uniqueness_gap": report.max_uniqueness_gap}

    outs = _map_cells(cell, cells, config.jobs)
    rows, errors = _split(outs)
    rows.sort(key=lambda r: (r["case"], r["index"]))
    worst_res = max((r["max_residual"] for r in rows), default=float("nan"))
    worst_gap = max((r["max_uniqueness_gap"] for r in rows), default=float("nan"))
    criteria = (
        Criterion("torsor_residual", worst_res, tol["residual"],
                  bool(rows) and not errors and worst_res <= tol["residual"]),
        Criterion("torsor_uniqueness", worst_gap, tol["uniqueness"],
                  bool(rows) and not errors and worst_gap <= tol["uniqueness"]),
    )
    artifacts = (
        Artifact("results", "csv",
                 ("case", "index", "max_residual", "max_uniqueness_gap"), tuple(rows)),
    )
    return RunReport("torsor", criteria, artifacts, errors)


# ---------------------------------------------------------------------------
# disintegrate: the slice identity, calibrated once on the constant symbol


def _run_disintegrate(config: ExperimentConfig) -> RunReport:
    tol = {"residual": 1e-6, "dispersion": 1e-6, **config.tolerances}
    pair = ggp_catalog(config.pair)
    radius = float(config.params.get("radius", 1.3))
    n_mu = int(config.params.get("n_mu", 48))
    n_fiber = int(config.params.get("n_fiber", 96))
    count = int(config.grid("symbols")[0])

    rng = np.random.default_rng((config.seed, 4))
    syms = [lambda pts: np.ones(len(np.atleast_2d(pts)))]
    labels = ["ones"]
    for k in range(count):
        center = radius * rng.uniform(-0.6, 0.6, 3)
        syms.append(gaussian(center, width=float(rng.uniform(0.3, 0.5))))
        labels.append(f"gaussian_{k}")

    raw = disintegration_report(pair, radius, syms, n_mu=n_mu, n_fiber=n_fiber)
    calibration = float(np.real(raw[0]["ratio"]))
    rows = []
    for label, rec in zip(labels, raw):
        lhs, rhs = float(np.real(rec["lhs"])), float(np.real(rec["rhs"]))
        rows.append({
            "symbol": label, "lhs": lhs, "rhs": rhs,
            "ratio": float(np.real(rec["ratio"])),
            "residual": abs(lhs - calibration * rhs),
            "calibration": calibration,
        })
    gauss = rows[1:]
    worst = max(r["residual"] for r in gauss)
    dispersion = max(abs(r["ratio"] - calibration) for r in gauss)
    criteria = (
        Criterion("disintegration_residual", worst, tol["residual"],
                  worst <= tol["residual"]),
        Criterion("ratio_dispersion", dispersion, tol["dispersion"],
                  dispersion <= tol["dispersion"]),
    )
    artifacts = (
        Artifact("results", "csv",
                 ("symbol", "lhs", "rhs", "ratio", "residual", "calibration"),
                 tuple(rows)),
    )
    return RunReport("disintegrate", criteria, artifacts, ())


# ---------------------------------------------------------------------------
# relchar: weight-element asymptotics against the fiber integral


def _run_relchar(config: ExperimentConfig) -> RunReport:
    tol = {"order": 0.3, "empty_fiber": 1e-8, "plancherel": 1e-10, **config.tolerances}
    a = config.symbols[0].build(3)
    b = config.symbols[1].build(3) if len(config.symbols) > 1 else a
    weight = int(config.params.get("weight", 2))
    attach = str(config.params.get("radius_attachment", "highest_weight"))
    n_fiber = int(config.params.get("n_fiber", 96))

    def cell(j):
        h = 1.0 / (j + 0.5)
        rep = rep_catalog(_REP_FAMILY[config.algebra], j=j)
        ctx = QuantizationContext(rep, h)
        branching = compact_branching(rep)
        radius = h * j if attach == "highest_weight" else h * (j + 0.5)
        lhs, rhs, gap = relchar_residual(branching, a, h, weight, radius=radius,
                                         n_fiber=n_fiber, ctx=ctx)
        lhs0, _, _ = relchar_residual(branching, a, h, j + 3, radius=radius,
                                      n_fiber=n_fiber, ctx=ctx)
        return {"j": int(j), "h": h, "weight": weight, "lhs": lhs.real,
                "rhs": rhs.real, "residual": gap, "empty_fiber_lhs": abs(lhs0)}

    outs = _map_cells(cell, [(j,) for j in config.grid("trace_j")], config.jobs)
    rows, errors = _split(outs)
    rows.sort(key=lambda r: -r["h"])
    hs = [r["h"] for r in rows]
    res = [r["residual"] for r in rows]
    for row, slope in zip(rows, _running_fit(hs, res)):
        row["fitted_order_so_far"] = slope
    fit = order_fit(hs, res) if len(rows) >= 2 else float("nan")
    empty_worst = max((r["empty_fiber_lhs"] for r in rows), default=float("nan"))

    jp = int(config.grid("plancherel_j")[0])
    repp = rep_catalog(_REP_FAMILY[config.algebra], j=jp)
    ctxp = QuantizationContext(repp, 1.0 / (jp + 0.5))
    branchp = compact_branching(repp)
    d = repp.dim_rep
    ops = [opp(ctxp, a), opp(ctxp, b)]
    ops.append(ops[0] @ ops[1])
    ops.append(ops[0].conj().T)
    ops.append(np.eye(d, dtype=complex))
    rngp = np.random.default_rng((config.seed, 5))
    total = int(config.params.get("plancherel_samples", 50))
    plan_rows = []
    for k, T in enumerate(ops):
        plan_rows.append({"kind": "operator", "index": k,
                          "residual": plancherel_check(branchp, T)})
    for k in range(max(0, total - len(ops))):
        g = rngp.normal(size=(d, d)) + 1j * rngp.normal(size=(d, d))
        plan_rows.append({"kind": "random", "index": k,
                          "residual": plancherel_check(branchp, g + g.conj().T)})
    plan_worst = max(r["residual"] for r in plan_rows)

    criteria = (
        _window("relchar_order", fit, tol["order"], clean=not errors),
        Criterion("relchar_empty_fiber", empty_worst, tol["empty_fiber"],
                  bool(rows) and empty_worst <= tol["empty_fiber"]),
        Criterion("plancherel", plan_worst, tol["plancherel"],
                  plan_worst <= tol["plancherel"]),
    )
    artifacts = (
        Artifact("results", "csv",
                 ("j", "h", "weight", "lhs", "rhs", "residual",
                  "fitted_order_so_far", "empty_fiber_lhs"), tuple(rows)),
        Artifact("plancherel", "csv", ("kind", "index", "residual"), tuple(plan_rows)),
    )
    return RunReport("relchar", criteria, artifacts, errors)


# ---------------------------------------------------------------------------
# nilcone: figure reproduction (equal-mass strips, rescaling frames, fibers)


def _run_nilcone(config: ExperimentConfig) -> RunReport:
    tol = {"strip_mass": 1e-6, **config.tolerances}
    hs = [1.0 / k for k in config.grid("h_inverse")]
    window = (float(config.params.get("window_z", 2.0)),
              float(config.params.get("window_rho", 2.5)))
    steps = nilcone_rescaling(hs, window=window,
                              invariant=float(config.params.get("invariant", 1.0)),
                              n_theta=64, n_z=129)
    results = [{"h": s.h, "hausdorff": s.hausdorff, "points": len(s.points)}
               for s in steps]
    dists = [s.hausdorff for s in steps]
    max_step = max(b - a for a, b in zip(dists, dists[1:])) if len(dists) > 1 else float("nan")

    alg = algebra_catalog("su2")
    j = int(config.params.get("strips_j", 5))
    chart = character_orbit(alg, j)
    bounds = equal_volume_strips(chart)
    masses = strip_masses(chart, bounds)
    strip_rows = [{"band": k, "mass": float(m), "error": abs(float(m) - 1.0)}
                  for k, m in enumerate(masses)]
    strip_worst = max(r["error"] for r in strip_rows)

    cloud = [{"x": float(p[0]), "y": float(p[1]), "z": float(p[2]), "h": s.h}
             for s in steps for p in s.points]
    band_of = np.searchsorted(bounds, chart.nodes[:, 2])
    strip_cloud = [{"x": float(p[0]), "y": float(p[1]), "z": float(p[2]), "band": int(b)}
                   for p, b in zip(chart.nodes, band_of)]
    radius = j + 0.5
    n_heights = int(config.params.get("fiber_heights", 9))
    theta = 2 * np.pi * np.arange(64) / 64
    fiber_rows = []
    for k in range(1, n_heights + 1):
        z = -radius + 2 * radius * k / (n_heights + 1)
        rho = np.sqrt(radius**2 - z**2)
        for t in theta:
            fiber_rows.append({"x": float(rho * np.cos(t)), "y": float(rho * np.sin(t)),
                               "z": float(z), "level": k})
    c = float(config.params.get("invariant", 1.0))
    hyp_rows = []
    for k in range(1, n_heights + 1):
        z = -window[0] + 2 * window[0] * k / (n_heights + 1)
        rho = np.sqrt(hs[0] ** 2 * c + z**2)
        for t in theta:
            hyp_rows.append({"x": float(rho * np.cos(t)), "y": float(rho * np.sin(t)),
                             "z": float(z), "level": k})

    criteria = (
        Criterion("strip_mass", strip_worst, tol["strip_mass"],
                  strip_worst <= tol["strip_mass"]),
        Criterion("nilcone_decreasing", max_step, 0.0,
                  bool(np.isfinite(max_step)) and max_step < 0.0),
    )
    artifacts = (
        Artifact("results", "csv", ("h", "hausdorff", "points"), tuple(results)),
        Artifact("strips", "csv", ("band", "mass", "error"), tuple(strip_rows)),
        Artifact("nilcone_cloud", "csv", ("x", "y", "z", "h"), tuple(cloud)),
        Artifact("strips_cloud", "csv", ("x", "y", "z", "band"), tuple(strip_cloud)),
        Artifact("fiber_circles", "csv", ("x", "y", "z", "level"), tuple(fiber_rows)),
        Artifact("hyperboloid_fibers", "csv", ("x", "y", "z", "level"), tuple(hyp_rows)),
    )
    return RunReport("nilcone", criteria, artifacts, ())


# ---------------------------------------------------------------------------
# microlocal: where a weight vector sees symbols concentrate


def _run_microlocal(config: ExperimentConfig) -> RunReport:
    tol = {"cap_location": 0.25, **config.tolerances}
    j = int(config.params.get("j", 5))
    h = 1.0 / float(config.params.get("h_inverse", 8))
    weight = int(config.params.get("weight", j))
    extent = float(config.params.get("extent", 1.3))
    width = float(config.params.get("width", 0.3))
    m = int(config.grid("grid")[0])
    rep = rep_catalog(_REP_FAMILY[config.algebra], j=j)
    ctx = QuantizationContext(rep, h)
    axis = np.linspace(-extent, extent, m)
    xs, zs = np.meshgrid(axis, axis, indexing="ij")
    centers = np.stack([xs.ravel(), np.zeros(m * m), zs.ravel()], axis=-1)
    vals = microlocal_support(ctx, weight, centers, width=width)
    rows = [{"x": float(c[0]), "z": float(c[2]), "value": float(v)}
            for c, v in zip(centers, vals)]
    peak = centers[int(np.argmax(vals))]
    caps = np.array([[0.0, 0.0, h * j], [0.0, 0.0, -h * j]])
    cap_dist = float(np.min(np.linalg.norm(caps - peak, axis=1)))
    criteria = (
        Criterion("cap_location", cap_dist, tol["cap_location"],
                  cap_dist <= tol["cap_location"]),
    )
    artifacts = (Artifact("results", "csv", ("x", "z", "value"), tuple(rows)),)
    return RunReport("microlocal", criteria, artifacts, ())


_DRIVERS = {
    "kirillov": _run_kirillov,
    "star": _run_star,
    "compose": _run_compose,
    "stability": _run_stability,
    "torsor": _run_torsor,
    "disintegrate": _run_disintegrate,
    "relchar": _run_relchar,
    "nilcone": _run_nilcone,
    "microlocal": _run_microlocal,
}


def run(config: ExperimentConfig) -> RunReport:
    """Execute the configured experiment and judge its criteria."""
    return _DRIVERS[config.experiment](config)
