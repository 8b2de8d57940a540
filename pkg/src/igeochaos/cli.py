"""Scenario runner and command-line entry point.

Usage::

    igeochaos <subcommand> --scenario FILE [--out DIR] [--seed N] [--quick] [--json]

The process exits with status 0 iff every check in the report passed.
"""

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import acceptance as ac
from . import dynamics as dy
from . import entropy as en
from . import families as fa
from . import geometry as ge
from . import jacobi as ja
from . import newtonian as nw
from .errors import IGeoError, ValidationError

EXPERIMENTS = ("curvature", "geodesic", "jacobi", "ige", "ratios", "newtonian", "iho", "ohmic")
NEEDS_CHART = ("curvature", "geodesic", "jacobi", "ige")
CLOSED_FORM_KINDS = ("ED1", "ED2", "GaussianProduct6N")


@dataclass
class Scenario:
    name: str
    experiment: str
    chart: dict = None
    params: dict = field(default_factory=dict)
    settings: dict = field(default_factory=dict)
    seed: int = 0

    @classmethod
    def from_dict(cls, doc, experiment=None):
        if not isinstance(doc, dict):
            raise ValidationError("scenario must be a JSON object")
        exp = doc.get("experiment", experiment)
        if experiment is not None and exp != experiment:
            raise ValidationError(f"scenario experiment {exp!r} does not match subcommand {experiment!r}")
        if exp not in EXPERIMENTS:
            raise ValidationError(f"unknown experiment {exp!r}")
        sc = cls(
            name=str(doc.get("name", exp)),
            experiment=exp,
            chart=doc.get("chart"),
            params=dict(doc.get("params", {})),
            settings=dict(doc.get("settings", {})),
            seed=int(doc.get("seed", 0)),
        )
        sc.validate()
        return sc

    def validate(self):
        for k, v in self.settings.items():
            if k in ("tol", "tau_end", "n_samples", "n_points") and not (
                isinstance(v, (int, float)) and v > 0
            ):
                raise ValidationError(f"setting {k} must be a positive number, got {v!r}")
        if self.experiment in NEEDS_CHART:
            if not isinstance(self.chart, dict) or not self.chart.get("kind"):
                raise ValidationError(f"{self.experiment} needs a chart with a 'kind'")
            try:
                self.family()
            except IGeoError as exc:
                raise ValidationError(f"invalid chart: {exc}") from exc
            kind = self.chart["kind"]
            if self.experiment != "curvature" and kind not in CLOSED_FORM_KINDS:
                raise ValidationError(f"{self.experiment} supports {CLOSED_FORM_KINDS}, got {kind!r}")
        if self.experiment in ("jacobi", "ratios") or (
            self.experiment in ("geodesic", "ige") and not self._has_constants()
        ):
            a = self.params.get("alpha")
            if not (isinstance(a, (int, float)) and a > 0):
                raise ValidationError(f"{self.experiment} needs params.alpha > 0 or explicit constants")
        if self.experiment == "newtonian":
            pot = self.params.get("potential")
            if not isinstance(pot, dict) or "name" not in pot:
                raise ValidationError("newtonian needs params.potential with a 'name'")
            for k in ("theta0", "thetadot0"):
                if k not in self.params:
                    raise ValidationError(f"newtonian needs params.{k}")
            if len(self.params["theta0"]) != len(self.params["thetadot0"]):
                raise ValidationError("theta0 and thetadot0 differ in length")
        if self.experiment == "iho":
            om = self.params.get("omegas")
            if not om or not all(isinstance(w, (int, float)) and w > 0 for w in om):
                raise ValidationError("iho needs params.omegas, all positive")
        if self.experiment == "ohmic":
            for k in ("n", "Omega", "xi"):
                v = self.params.get(k)
                if not (isinstance(v, (int, float)) and v > 0):
                    raise ValidationError(f"ohmic needs params.{k} > 0")

    def _has_constants(self):
        return "constants" in self.params or "rates" in self.params or "blocks" in self.params

    def family(self):
        c = self.chart
        return fa.build_family(c["kind"], N=c.get("N"), r=c.get("r"))

    def to_dict(self):
        return {"name": self.name, "experiment": self.experiment, "chart": self.chart,
                "params": self.params, "settings": self.settings, "seed": self.seed}


def load_scenario(path, experiment=None):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    return Scenario.from_dict(doc, experiment)


# -- report plumbing --------------------------------------------------------


class _Report:
    def __init__(self, scenario):
        self.scenario = scenario
        self.checks = []
        self.results = {}
        self.artifacts = {}

    def check(self, c):
        self.checks.append(c)

    def to_dict(self, runtime):
        return ac._jsonable({
            "scenario": self.scenario.to_dict(),
            "results": self.results,
            "checks": [vars(c) for c in self.checks],
            "passed": all(c.passed for c in self.checks),
            "artifacts": sorted(self.artifacts),
            "runtime": runtime,
        })


def _expected_scalar(fam):
    kind = fam.kind
    if kind == "ED1":
        return -1.0, "paper"
    if kind == "ED2":
        return -2.0, "paper"
    if kind == "GaussianProduct6N":
        return -3.0 * fam.N, "paper"
    if kind == "Gaussian1D":
        return -1.0, "derived"
    if kind == "Exponential1D":
        return 0.0, "trivial"
    return float(fa.printed_correlated_scalar(fam.r)), "paper"


def _csv_rows(header, rows):
    import csv
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([dy._f17(x) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def _run_curvature(sc, rep):
    fam = sc.family()
    n = int(sc.settings.get("n_points", 20))
    rng = np.random.default_rng(sc.seed)
    pts = sc.params.get("points") or [fam.sample_point(rng) for _ in range(n)]
    R, prov = _expected_scalar(fam)
    rows, ea, en_, sym = [], 0.0, 0.0, 0.0
    for th in pts:
        a = ge.curvature(fam, th)
        b = ge.curvature_numeric(fam, th)
        ea = max(ea, abs(a.scalar - R))
        en_ = max(en_, abs(b.scalar - R))
        sym = max(sym, max(ge.symmetry_errors(a).values()))
        rows.append(list(map(float, th)) + [a.scalar, b.scalar])
    rep.results = {"chart_id": fam.chart_id, "expected_scalar": R, "max_abs_err_analytic": ea,
                   "max_abs_err_fd": en_, "n_points": len(pts),
                   "scalar_first_point": rows[0][-2]}
    rep.check(ac._le("analytic scalar error", ea, 1e-9, prov, "scalar curvature"))
    rep.check(ac._le("FD oracle scalar error", en_, 1e-4, prov, "scalar curvature"))
    rep.check(ac._le("Riemann symmetries", sym, 1e-9, "trivial", "Riemann"))
    rep.artifacts["curvature.csv"] = _csv_rows(fam.names + ["R_analytic", "R_fd"], rows)


def _closed_form(sc, alpha=None):
    kind = sc.chart["kind"]
    p = sc.params
    if kind == "GaussianProduct6N":
        N = int(sc.chart["N"])
        if "blocks" in p:
            blocks = p["blocks"]
        elif "rates" in p:
            blocks = [{"B": 1.0, "beta": b} for b in p["rates"]]
        else:
            blocks = [{"B": 1.0, "beta": alpha or p["alpha"]}] * (3 * N)
        if len(blocks) != 3 * N:
            raise ValidationError(f"need {3 * N} Gaussian blocks for N={N}")
        return dy.gaussian6N_geodesic(blocks)
    if "constants" in p and alpha is None:
        ctor = dy.ed1_geodesic if kind == "ED1" else dy.ed2_geodesic
        return ctor(**p["constants"])
    return dy.matched_geodesic(kind, alpha or p["alpha"])


def _run_geodesic(sc, rep):
    fam = sc.family()
    geo = _closed_form(sc)
    tau_end = float(sc.settings.get("tau_end", 5.0))
    tol = float(sc.settings.get("tol", 1e-12))
    grid = np.linspace(0.0, tau_end, int(sc.settings.get("n_samples", 201)))
    res = max(dy.ode_residual(fam.chart, geo.position, t) for t in np.linspace(0.5, tau_end, 10))
    th0, v0 = geo.initial_conditions()
    num = dy.integrate_geodesic(fam, th0, v0, tau_end, tol=tol, tau_grid=grid)
    dev = float(np.max(np.abs(num.points - geo.position(grid[: num.points.shape[0]]))))
    rep.results = {"chart_id": geo.chart_id, "ode_residual": res, "sup_deviation": dev,
                   "speed": geo.speed(), "speed_drift": num.speed_drift(), "status": num.status}
    rep.check(ac._le("closed-form ODE residual", res, 1e-8, "derived", "closed-form geodesic"))
    rep.check(ac._le("numeric vs closed form", dev, 1e-6, "derived", "closed-form geodesic"))
    rep.check(ac._le("speed drift", num.speed_drift(), 1e-6, "trivial", "geodesic speed"))
    rep.artifacts["geodesic.csv"] = num.to_csv(fam.names)
    rep.artifacts["geodesic_closed_form.csv"] = geo.trajectory(grid).to_csv(fam.names)


def _run_jacobi(sc, rep):
    fam = sc.family()
    a = float(sc.params["alpha"])
    da = float(sc.params.get("dalpha", 1e-6))
    tau_end = float(sc.settings.get("tau_end", 15.0 / a))
    mk = lambda x: _closed_form(sc, alpha=x)
    thf = lambda x: mk(x).initial_conditions()[0]
    vf = lambda x: mk(x).initial_conditions()[1]
    var = ja.jacobi_by_variation(fam, thf, vf, a, da, tau_end)
    jlc = ja.integrate_jlc(fam, var.base, var.deviation[0], var.deviation_rate[0], covariant_rate=True)
    est = ja.intensity_asymptote(jlc)
    err = ja.relative_intensity_error(jlc, var)
    rep.results = {"chart_id": fam.chart_id, "alpha": a, "tau_end": tau_end, **est.to_dict(),
                   "jlc_vs_variation": err, "nonlinear": var.nonlinear}
    rep.check(ac._rel("lambda_J = alpha", est.lambda_J, a, 0.05, "paper", "Jacobi growth rate"))
    rep.check(ac._le("JLC vs variation", err, 1e-3, "derived", "Jacobi field"))
    rep.artifacts["jacobi.csv"] = jlc.to_csv()


def _run_ige(sc, rep):
    fam = sc.family()
    geo = _closed_form(sc)
    tau_end = sc.settings.get("tau_end")
    trace, r = en.ige(fam, geo, tau_end, int(sc.settings.get("n_samples", 4000)))
    rep.results = r.to_dict()
    rep.check(ac._rel("entropy slope", r.slope, r.slope_expected, 0.05, "paper", "entropy slope"))
    rep.check(ac.Check("fit r^2", r.r_squared, 0.999, 0.0, "paper", r.r_squared >= 0.999, "fit quality"))
    rep.artifacts["volume.csv"] = trace.to_csv()


def _run_ratios(sc, rep):
    rec = ac.ratio_record(float(sc.params["alpha"]))
    rep.results = rec
    rep.check(ac._abs("curvature ratio", rec["curvature_ratio"]["value"], 2.0, 1e-12, "paper",
                      "curvature ratio"))
    rep.check(ac._rel("entropy slope ratio", rec["entropy_slope_ratio"]["value"], 2.0, 0.10, "paper",
                      "entropy ratio"))
    rep.check(ac._rel("Jacobi intensity ratio", rec["jacobi_intensity_ratio"]["value"], 2.0, 0.10,
                      "paper", "Jacobi ratio"))


def _run_newtonian(sc, rep):
    p = sc.params
    th = np.asarray(p["theta0"], float)
    v = np.asarray(p["thetadot0"], float)
    d = th.size
    sig = np.asarray(p.get("sigmas", [1.0] * d), float)
    eps = float(p.get("epsilon", 1.0))
    kap = float(p.get("kappa", 1.0))
    masses = eps * kap**2 / sig**2
    pot_doc = dict(p["potential"])
    pot = nw.make_potential(pot_doc.pop("name"), d, masses, **pot_doc)
    E = float(p.get("E", 0.5 * float(np.sum(masses * v**2)) + pot.phi(th)))
    chart = nw.ConformalChart(d, pot, E, sigmas=sig, epsilon=eps, kappa=kap)
    tau_end = float(sc.settings.get("tau_end", 10.0))
    r = nw.geometrization_error(chart, th, v, tau_end, tol=float(sc.settings.get("tol", 1e-12)))
    rep.results = {k: v for k, v in r.items() if not hasattr(v, "points")}
    rep.results["E"] = E
    rep.check(ac._le("position sup error", r["position_sup_error"], 1e-5, "derived", "Newtonian equations"))
    rep.check(ac._le("energy drift", r["energy_drift"], 1e-7, "paper", "energy conservation"))
    rep.check(ac._le("|Phi - T|", r["phi_minus_T"], 1e-6, "paper", "kinetic-potential identity"))
    g, n_ = r["geometrized"], r["newton"]
    rows = [[t] + list(a) + list(b) for t, a, b in zip(g.tau_grid, g.points, n_.points)]
    rep.artifacts["trajectories.csv"] = _csv_rows(
        ["tau"] + [f"geo{i}" for i in range(d)] + [f"newton{i}" for i in range(d)], rows)


def _run_iho(sc, rep):
    p = sc.params
    chart = nw.IHOChart(p["omegas"], p.get("Xi", 1.0))
    r = nw.iho_ige(chart, sc.settings.get("tau_end"), int(sc.settings.get("n_samples", 2000)))
    rep.results = {"ige": r.to_dict()}
    rep.check(ac._rel("entropy slope", r.slope, r.slope_expected, 0.05, "derived", "IHO entropy slope"))
    if chart.n_osc == 2:
        th = p.get("theta", [0.0, 0.0])
        cr = nw.iho_curvature(chart, th)
        rep.results["curvature"] = {"scalar": cr.scalar, **cr.extras}
        rep.check(ac._abs("computed vs printed scalar", cr.scalar, cr.extras["printed_scalar"], 1e-9,
                          "derived", "IHO scalar curvature"))
        w = chart.omegas
        if np.isclose(w[0], w[1]) and not np.any(th):
            rep.check(ac._abs("R(0) = -2 w^2", cr.scalar, -2 * w[0] ** 2, 1e-9, "derived",
                              "IHO scalar curvature"))


def _run_ohmic(sc, rep):
    p = sc.params
    r = nw.ohmic_ensemble(int(p["n"]), float(p["Omega"]), float(p["xi"]), sc.settings.get("tau_end"))
    rep.results = r.to_dict()
    rep.check(ac._rel("entropy slope", r.slope, r.slope_expected, 0.05, "derived", "Ohmic entropy slope"))
    rep.check(ac._abs("density normalization", r.notes["normalization"], 1.0, 1e-15, "trivial",
                      "Ohmic density"))
    spec = nw.OhmicSpectrum(float(p["xi"]) * float(p["Omega"]))
    rep.check(ac._rel("mean frequency", r.notes["mean_frequency"], 2 * spec.cutoff / 3, 1e-15, "derived",
                      "Ohmic density"))


RUNNERS = {
    "curvature": _run_curvature, "geodesic": _run_geodesic, "jacobi": _run_jacobi, "ige": _run_ige,
    "ratios": _run_ratios, "newtonian": _run_newtonian, "iho": _run_iho, "ohmic": _run_ohmic,
}


def run_scenario(scenario, out_dir=None):
    """Execute a scenario and return its report dict.

    Artifacts (CSV tables and ``<name>_report.json``) are written to
    ``out_dir`` when given.
    """
    if isinstance(scenario, dict):
        scenario = Scenario.from_dict(scenario)
    t0 = time.perf_counter()
    rep = _Report(scenario)
    RUNNERS[scenario.experiment](scenario, rep)
    doc = rep.to_dict(time.perf_counter() - t0)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for fname, text in rep.artifacts.items():
            (out / f"{scenario.name}_{fname}").write_text(text, newline="")
        (out / f"{scenario.name}_report.json").write_text(dump_json(doc))
    return doc


def dump_json(doc):
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def strip_runtime(doc):
    """Copy of a report without wall-clock fields (for determinism checks)."""
    if isinstance(doc, dict):
        return {k: strip_runtime(v) for k, v in doc.items() if k not in ("runtime", "runtime_limit")}
    if isinstance(doc, list):
        return [strip_runtime(v) for v in doc]
    return doc


def _criterion_worker(args):
    i, seed = args
    fn = ac.CRITERIA[i - 1]
    import inspect
    return fn(seed=seed) if "seed" in inspect.signature(fn).parameters else fn()


def reproduce_all(quick=False, seed=0, workers=1, out_dir=None):
    """Run the acceptance suite; returns the suite report dict."""
    ids = [i for i in range(1, len(ac.CRITERIA) + 1) if not quick or i in ac.QUICK]
    t0 = time.perf_counter()
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            crits = list(ex.map(_criterion_worker, [(i, seed) for i in ids]))
    else:
        crits = [_criterion_worker((i, seed)) for i in ids]
    doc = ac._jsonable({
        "suite": "acceptance",
        "quick": quick,
        "seed": seed,
        "criteria": [c.to_dict() for c in crits],
        "summary": [c.summary_line() for c in crits],
        "passed": all(c.passed for c in crits),
        "runtime": time.perf_counter() - t0,
    })
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "acceptance_report.json").write_text(dump_json(doc))
    return doc


# -- entry point ------------------------------------------------------------


def build_parser():
    ap = argparse.ArgumentParser(prog="igeochaos", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS + ("reproduce-all",):
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=name != "reproduce-all", help="scenario JSON file")
        p.add_argument("--out", help="output directory for CSV/JSON artifacts")
        p.add_argument("--seed", type=int, default=None, help="PRNG seed (default: scenario or 0)")
        p.add_argument("--quick", action="store_true", help="run a reduced subset")
        p.add_argument("--json", action="store_true", help="print the JSON report")
        if name == "reproduce-all":
            p.add_argument("--workers", type=int, default=1)
    return ap


def _print_scenario(doc):
    sc = doc["scenario"]
    print(f"{sc['name']} ({sc['experiment']})")
    for c in doc["checks"]:
        tag = "PASS" if c["passed"] else "FAIL"
        print(f"  [{tag}] {c['name']}: {c['value']} (expected {c['expected']}, tol {c['tol']}, "
              f"{c['provenance']})")


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "reproduce-all":
            seed = 0 if args.seed is None else args.seed
            doc = reproduce_all(args.quick, seed, args.workers, args.out)
            if args.json:
                sys.stdout.write(dump_json(doc))
            else:
                for line in doc["summary"]:
                    print(line)
        else:
            sc = load_scenario(args.scenario, args.command)
            if args.seed is not None:
                sc.seed = args.seed
            if args.quick:
                sc.settings.setdefault("n_points", 5)
            doc = run_scenario(sc, args.out)
            if args.json:
                sys.stdout.write(dump_json(doc))
            else:
                _print_scenario(doc)
    except (IGeoError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0 if doc["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
