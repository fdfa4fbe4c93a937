"""Problem files, run persistence, CSV emission and the command line.

A problem file is a JSON document (schema 1) holding the cone data, the
omega directions, the target weights and the run configuration.  Each run
writes into a directory named by the content digest of the problem; the
directory is populated in a temporary location and atomically renamed, so
failed runs leave nothing behind and concurrent writers of the same
problem simply keep the first result.

Exit codes: 0 ok, 2 not converged / checks failed, 3 infeasible,
4 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import shutil
import sys
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .checks import (
    check_cone_volume_bound,
    check_ehrhard_wulff,
    check_minkowski_inequality,
    check_mixed_minkowski,
    check_mixed_volume_bound,
    find_nonuniqueness,
    random_wulff_pair,
)
from .errors import (
    InfeasibleWeight,
    ParseError,
    PseudoConeError,
    ValidationError,
)
from .gaussian import (
    MCConfig,
    SQRT_2PI,
    facet_surface,
    facet_surface_exact,
    gauss_volume,
)
from .geometry import build_cone, direction_set, make_wulff
from .measures import (
    DiscreteMeasure,
    cone_measure,
    normalization_c,
    surface_measure,
)
from .solver import SolveOptions, solve_gaussian_minkowski, solve_log_minkowski

SCHEMA_VERSION = 1
PROBLEM_KINDS = ("surface", "log", "measure", "verify", "counterexample", "scan")
RUN_ROOT_ENV = "PSEUDOCONE_RUNS"

EXIT_OK = 0
EXIT_NOT_CONVERGED = 2
EXIT_INFEASIBLE = 3
EXIT_INVALID = 4


@dataclass
class ProblemFile:
    """Validated problem description plus the constructed domain objects."""

    raw: dict
    problem: str
    cone: object
    omega: object
    mu: DiscreteMeasure | None
    h: np.ndarray | None
    kind: str
    seed: int
    solver_options: SolveOptions
    mc: MCConfig
    scan_grid: np.ndarray


@dataclass
class RunRecord:
    digest: str
    run_dir: str | None
    report: dict
    exit_code: int
    version: str = __version__
    timestamps: dict = field(default_factory=dict)


def canonical_json(data):
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def problem_digest(raw):
    return hashlib.sha256(canonical_json(raw).encode("utf-8")).hexdigest()[:16]


def _require(cond, reason, field_name):
    if not cond:
        raise ValidationError(reason, field=field_name)


def parse_problem(path):
    """Load and validate a problem file; see the README for the schema."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    return problem_from_dict(raw)


def problem_from_dict(raw):
    _require(isinstance(raw, dict), "problem file must hold a JSON object", "")
    schema = raw.get("schema", SCHEMA_VERSION)
    _require(schema == SCHEMA_VERSION, f"unsupported schema {schema}", "schema")
    problem = raw.get("problem")
    _require(problem in PROBLEM_KINDS,
             f"problem must be one of {PROBLEM_KINDS}", "problem")

    cone_spec = raw.get("cone")
    _require(isinstance(cone_spec, dict), "cone block is required", "cone")
    dim = raw.get("dimension")
    gens = cone_spec.get("generators")
    _require(gens is not None, "cone.generators is required", "cone.generators")
    try:
        cone = build_cone(gens, cone_spec.get("normals"), cone_spec.get("ref_dir"))
    except ValidationError:
        raise
    except PseudoConeError as exc:
        raise ValidationError(str(exc), field="cone") from None
    if dim is not None:
        _require(int(dim) == cone.dim, "dimension disagrees with cone data",
                 "dimension")

    omega_spec = raw.get("omega")
    _require(omega_spec is not None, "omega is required", "omega")
    try:
        omega = direction_set(cone, omega_spec)
    except ValidationError as exc:
        if "unit vectors" in str(exc):
            raise ValidationError(
                "omega directions must be unit vectors "
                "(divide each by its Euclidean norm)", field="omega",
            ) from None
        raise
    m = len(omega)

    mu = None
    if raw.get("mu") is not None:
        weights = np.asarray(raw["mu"], dtype=float)
        if weights.shape != (m,):
            raise ValidationError(
                f"mu has {weights.size} weights for {m} omega directions",
                field="mu",
            )
        mu = DiscreteMeasure(omega=omega, weights=weights)
    h = None
    if raw.get("h") is not None:
        h = np.asarray(raw["h"], dtype=float)
        if h.shape != (m,):
            raise ValidationError(
                f"h has {h.size} values for {m} omega directions", field="h"
            )

    if problem in ("surface", "log"):
        _require(mu is not None, "mu is required for solve problems", "mu")
        _require(mu.is_nonzero(), "mu must have a positive weight", "mu")
    if problem == "measure":
        _require(h is not None, "h is required for measure problems", "h")

    seed = int(raw.get("seed", 0))
    kind = raw.get("kind", "surface")
    _require(kind in ("surface", "cone"), "kind must be surface or cone", "kind")

    sol = raw.get("solver", {})
    _require(isinstance(sol, dict), "solver block must be an object", "solver")
    try:
        solver_options = SolveOptions(
            max_iters=int(sol.get("max_iters", 60)),
            step_init=float(sol.get("step_init", 1.0)),
            armijo_c=float(sol.get("armijo_c", 1e-4)),
            damping=float(sol.get("damping", 0.5)),
            mc_schedule=tuple(sol.get("mc_schedule", (10_000, 50_000, 200_000))),
            tol_residual=float(sol.get("tol_residual", 0.02)),
            seed=seed,
            method=sol.get("method", "gradient"),
            screen=sol.get("screen", "warn"),
        )
    except PseudoConeError as exc:
        raise ValidationError(str(exc), field="solver") from None

    mc_spec = raw.get("mc", {})
    _require(isinstance(mc_spec, dict), "mc block must be an object", "mc")
    try:
        mc = MCConfig(
            seed=seed,
            n_samples=int(mc_spec.get("n_samples", 200_000)),
            batch_size=int(mc_spec.get("batch_size", 65_536)),
            antithetic=bool(mc_spec.get("antithetic", True)),
        )
    except PseudoConeError as exc:
        raise ValidationError(str(exc), field="mc") from None

    scan = raw.get("scan", {})
    t_min = float(scan.get("t_min", 0.05))
    t_max = float(scan.get("t_max", 5.0))
    points = int(scan.get("points", 100))
    _require(0 < t_min < t_max, "scan range must satisfy 0 < t_min < t_max",
             "scan")
    _require(points >= 2, "scan needs at least two points", "scan.points")
    if scan.get("log", True):
        grid = np.geomspace(t_min, t_max, points)
    else:
        grid = np.linspace(t_min, t_max, points)

    return ProblemFile(
        raw=raw, problem=problem, cone=cone, omega=omega, mu=mu, h=h,
        kind=kind, seed=seed, solver_options=solver_options, mc=mc,
        scan_grid=grid,
    )


def _estimate_dict(est):
    return {"value": est.value, "std_err": est.std_err,
            "n_samples": est.n_samples, "seed": est.seed}


def _check_dict(rep):
    return {
        "name": rep.name,
        "lhs": _estimate_dict(rep.lhs),
        "rhs": _estimate_dict(rep.rhs),
        "margin": rep.margin,
        "passed": rep.passed,
        "inputs": rep.inputs,
    }


def emit_scan(cone, b, t_grid, mc, stream=None):
    """Scan single-facet shapes over t and write a plot-ready CSV.

    Columns: t, the raw boundary integral g and its support-weighted
    version h = t*g, the surface weight S and the cone weight C = t*S,
    each with a standard-error companion.
    """
    b = np.atleast_2d(np.asarray(b, dtype=float))
    own = stream is None
    if own:
        stream = io.StringIO()
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow([
        "t", "g", "g_std_err", "h", "h_std_err",
        "S", "S_std_err", "C", "C_std_err",
    ])
    n = cone.dim
    scale = SQRT_2PI**n
    for t in t_grid:
        K = make_wulff(cone, b, np.array([float(t)]))
        est = facet_surface_exact(K, 0) if n == 2 else facet_surface(K, 0, mc)
        s_val, s_err = est.value, est.std_err
        writer.writerow([
            f"{t:.12g}",
            f"{scale * s_val:.12g}", f"{scale * s_err:.12g}",
            f"{t * scale * s_val:.12g}", f"{t * scale * s_err:.12g}",
            f"{s_val:.12g}", f"{s_err:.12g}",
            f"{t * s_val:.12g}", f"{t * s_err:.12g}",
        ])
    return stream.getvalue() if own else None


def _solve_report_dict(rep):
    out = {
        "kind": rep.kind,
        "converged": rep.converged,
        "iterations": rep.iterations,
        "solution_h": [float(x) for x in rep.solution_h],
        "residuals": [float(x) for x in rep.residuals],
        "gauss_volume": _estimate_dict(rep.gauss_volume),
        "covolume": _estimate_dict(rep.covolume),
        "warnings": list(rep.warnings),
    }
    if rep.c_value is not None:
        out["c"] = _estimate_dict(rep.c_value)
    return out


def _run_solve(problem):
    solve = solve_gaussian_minkowski if problem.problem == "surface" \
        else solve_log_minkowski
    rep = solve(problem.cone, problem.omega, problem.mu, problem.solver_options)
    report = {"solve": _solve_report_dict(rep)}
    trace = [["iteration", "objective", "objective_sigma", "residual",
              "gamma", "c"]]
    trace += [
        [r["iteration"], f"{r['objective']:.12g}",
         f"{r['objective_sigma']:.12g}", f"{r['residual']:.12g}",
         f"{r['gamma']:.12g}", f"{r['c']:.12g}"]
        for r in rep.trace_rows
    ]
    code = EXIT_OK if rep.converged else EXIT_NOT_CONVERGED
    return report, {"trace.csv": trace}, code


def _run_measure(problem):
    K = make_wulff(problem.cone, problem.omega, problem.h)
    s = surface_measure(K, problem.mc)
    c = cone_measure(K, problem.mc)
    vol = gauss_volume(K, problem.mc)
    report = {
        "measure": {
            "effective_h": [float(x) for x in K.effective_h],
            "facet_active": [bool(b) for b in K.facet_active],
            "surface_weights": [float(x) for x in s.weights],
            "surface_std_errs": [float(x) for x in s.std_errs],
            "cone_weights": [float(x) for x in c.weights],
            "cone_std_errs": [float(x) for x in c.std_errs],
            "gauss_volume": _estimate_dict(vol),
        }
    }
    if problem.mu is not None and problem.mu.is_nonzero():
        report["measure"]["normalization_c"] = _estimate_dict(
            normalization_c(K, problem.mu, problem.mc)
        )
    return report, {}, EXIT_OK


def _run_verify(problem):
    rng = np.random.default_rng(problem.seed)
    mc = problem.mc
    reports = []
    pairs = max(2, int(problem.raw.get("verify_pairs", 10)))
    for _ in range(pairs):
        K, L = random_wulff_pair(problem.cone, min(3, max(1, len(problem.omega))),
                                 rng)
        t = float(rng.uniform(0.2, 0.8))
        reports.append(check_minkowski_inequality(K, L, mc))
        reports.append(check_mixed_minkowski(K, L, mc))
        reports.append(check_ehrhard_wulff(K, L, t, mc))
        reports.append(check_cone_volume_bound(K, mc))
        reports.append(check_mixed_volume_bound(K, mc))
    all_passed = all(r.passed for r in reports)
    report = {"verify": {"checks": [_check_dict(r) for r in reports],
                         "all_passed": all_passed}}
    return report, {}, EXIT_OK if all_passed else EXIT_NOT_CONVERGED


def _run_counterexample(problem):
    b = problem.omega.dirs[0]
    pair = find_nonuniqueness(problem.cone, b, problem.kind, problem.mc)
    report = {
        "counterexample": {
            "kind": pair.kind,
            "t1": pair.t1,
            "t2": pair.t2,
            "common_value": pair.common_value,
        }
    }
    return report, {}, EXIT_OK


def _run_scan(problem):
    text = emit_scan(problem.cone, problem.omega.dirs[0], problem.scan_grid,
                     problem.mc)
    rows = [line.split(",") for line in text.strip().split("\n")]
    return {"scan": {"points": len(problem.scan_grid)}}, {"scan.csv": rows}, EXIT_OK


def run(problem, run_root=None, write=True):
    """Execute a problem and persist the run directory.

    Value fields in report.json are bit-identical across reruns of the
    same problem and seed; wall-clock metadata lives in meta.json.
    """
    digest = problem_digest(problem.raw)
    started = time.time()
    dispatch = {
        "surface": _run_solve,
        "log": _run_solve,
        "measure": _run_measure,
        "verify": _run_verify,
        "counterexample": _run_counterexample,
        "scan": _run_scan,
    }
    try:
        report, extra_files, code = dispatch[problem.problem](problem)
    except InfeasibleWeight as exc:
        report = {"error": str(exc)}
        record = RunRecord(digest=digest, run_dir=None, report=report,
                           exit_code=EXIT_INFEASIBLE)
        return record
    report = {"schema": SCHEMA_VERSION, "digest": digest,
              "problem": problem.problem, **report}

    run_dir = None
    if write:
        root = run_root or os.environ.get(RUN_ROOT_ENV) or "runs"
        os.makedirs(root, exist_ok=True)
        target = os.path.join(root, digest)
        tmp = tempfile.mkdtemp(prefix=f".tmp-{digest}-", dir=root)
        try:
            with open(os.path.join(tmp, "report.json"), "w", encoding="utf-8") as fh:
                json.dump(report, fh, sort_keys=True, indent=2)
                fh.write("\n")
            meta = {
                "version": __version__,
                "started": started,
                "finished": time.time(),
                "exit_code": code,
            }
            with open(os.path.join(tmp, "meta.json"), "w", encoding="utf-8") as fh:
                json.dump(meta, fh, sort_keys=True, indent=2)
                fh.write("\n")
            with open(os.path.join(tmp, "problem.json"), "w", encoding="utf-8") as fh:
                fh.write(canonical_json(problem.raw))
                fh.write("\n")
            for name, rows in extra_files.items():
                with open(os.path.join(tmp, name), "w", encoding="utf-8",
                          newline="") as fh:
                    csv.writer(fh, lineterminator="\n").writerows(rows)
            try:
                os.rename(tmp, target)
                run_dir = target
            except OSError:
                shutil.rmtree(tmp)  # a complete run already sits there
                run_dir = target
        except BaseException:
            shutil.rmtree(tmp, ignore_errors=True)
            raise
    return RunRecord(
        digest=digest, run_dir=run_dir, report=report, exit_code=code,
        timestamps={"started": started, "finished": time.time()},
    )


# ---------------------------------------------------------------------------
# command line

def _apply_overrides(raw, args):
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.samples is not None:
        raw.setdefault("mc", {})["n_samples"] = args.samples
    if getattr(args, "tol", None) is not None:
        raw.setdefault("solver", {})["tol_residual"] = args.tol
    if getattr(args, "max_iters", None) is not None:
        raw.setdefault("solver", {})["max_iters"] = args.max_iters
    if getattr(args, "screen", None) is not None:
        raw.setdefault("solver", {})["screen"] = args.screen
    if getattr(args, "kind", None) is not None:
        raw["kind"] = args.kind
    if getattr(args, "t_min", None) is not None:
        raw.setdefault("scan", {})["t_min"] = args.t_min
    if getattr(args, "t_max", None) is not None:
        raw.setdefault("scan", {})["t_max"] = args.t_max
    if getattr(args, "points", None) is not None:
        raw.setdefault("scan", {})["points"] = args.points
    return raw


def _add_common(sub):
    sub.add_argument("problem_file", help="path to a JSON problem file")
    sub.add_argument("--seed", type=int, default=None, help="override the seed")
    sub.add_argument("--samples", type=int, default=None,
                     help="override mc.n_samples")
    sub.add_argument("--run-root", default=None,
                     help=f"run directory root (default $%s or ./runs)"
                     % RUN_ROOT_ENV)
    sub.add_argument("--no-write", action="store_true",
                     help="do not persist a run directory")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pseudocone",
        description="Gaussian Minkowski-type problems on polyhedral "
                    "pseudo-cones",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("solve", help="run a surface or log solve")
    _add_common(p)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=None)
    p.add_argument("--screen", choices=("warn", "enforce"), default=None)

    p = subs.add_parser("measure", help="estimate measures of a Wulff shape")
    _add_common(p)

    p = subs.add_parser("verify", help="run the randomized inequality suites")
    _add_common(p)

    p = subs.add_parser("counterexample",
                        help="construct a non-uniqueness pair")
    _add_common(p)
    p.add_argument("--kind", choices=("surface", "cone"), default=None)

    p = subs.add_parser("scan", help="scan single-facet measures over t")
    _add_common(p)
    p.add_argument("--t-min", dest="t_min", type=float, default=None)
    p.add_argument("--t-max", dest="t_max", type=float, default=None)
    p.add_argument("--points", type=int, default=None)
    return parser


_COMMAND_PROBLEMS = {
    "solve": ("surface", "log"),
    "measure": ("measure",),
    "verify": ("verify",),
    "counterexample": ("counterexample",),
    "scan": ("scan",),
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        problem = parse_problem(args.problem_file)
        raw = dict(problem.raw)
        _apply_overrides(raw, args)
        problem = problem_from_dict(raw)
        if problem.problem not in _COMMAND_PROBLEMS[args.command]:
            raise ValidationError(
                f"problem kind {problem.problem!r} does not match "
                f"command {args.command!r}", field="problem",
            )
        record = run(problem, run_root=args.run_root, write=not args.no_write)
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except InfeasibleWeight as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(json.dumps(record.report, sort_keys=True, indent=2))
    if record.run_dir:
        print(f"run directory: {record.run_dir}", file=sys.stderr)
    return record.exit_code


if __name__ == "__main__":
    sys.exit(main())
