"""Command-line front end: one job file, one command, one report.

Exit codes: 0 success with a definite verdict, 2 input error,
3 indeterminate or unresolved, 4 internal inconsistency.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, analysis, blaschke, expr, geometry
from .counting import CurveImage, count_on_grid, encode_value
from .errors import (ConfigError, ExprSyntaxError, InternalInconsistency, PseudolemError,
                     StepCollapse, UnresolvedCluster)
from .jobs import COMMANDS, JobSpec, load_job
from .locator import isolate
from .render import render_svg, write_csv
from .trace import trace_components

log = logging.getLogger("pseudolem")

EXIT_OK, EXIT_INPUT, EXIT_INDETERMINATE, EXIT_INTERNAL = 0, 2, 3, 4
INDETERMINATE_KINDS = {"Indeterminate", "DisjunctionUnresolved", "Inconclusive"}
SCHEMA_NAME = "report.schema.json"


def load_schema():
    return json.loads(resources.files("pseudolem").joinpath(SCHEMA_NAME).read_text())


def validate_report(report: dict):
    import jsonschema
    jsonschema.validate(report, load_schema())


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if x != x:
            return "nan"
        if x in (float("inf"), float("-inf")):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, complex):
        return encode_value(obj)
    if obj is expr.INF:
        return "inf"
    return obj


# -- runners --------------------------------------------------------------------
# each returns (verdict dict, samples, diagnostics, artifacts {kind: writer})


def _curve_pts(c: geometry.JordanCurve):
    return c.points


def run_classify(job: JobSpec):
    f, S, G = job.function, job.curve_S, job.curve_Gamma
    rep = analysis.classify(f, S, G, job.sample_plan, job.tolerances)
    d = rep.to_dict()
    diag = dict(d["diagnostics"], item1_check=d["item1_check"], items_agree=d["items_agree"])
    fS = f(S.points)

    def svg(path):
        render_svg([("S", S.points), ("Gamma", G.points), ("f(S)", fS)], (),
                   [(s.w, f"N={s.count}") for s in rep.samples if s.w is not expr.INF], path)

    def csv_(path):
        write_csv(["w_re", "w_im", "count", "method"],
                  [(*_w(s.w), s.count, s.method.value) for s in rep.samples], path)
    return d["verdict"], d["samples"], diag, {"svg": svg, "csv": csv_}


def _w(w):
    return ("inf", "inf") if w is expr.INF else (w.real, w.imag)


def run_nonjordan(job: JobSpec):
    f, S = job.function, job.curve_S
    rep = analysis.non_jordan_test(f, S, job.extra.get("candidates"), job.tolerances)
    d = rep.to_dict()
    diag = dict(d["diagnostics"], skipped=d["skipped"])

    def svg(path):
        render_svg([("S", S.points), ("f(S)", f(S.points))], (),
                   [(s.w, f"N={s.count}") for s in rep.samples if s.w is not expr.INF], path)

    def csv_(path):
        write_csv(["w_re", "w_im", "count"], [(*_w(s.w), s.count) for s in rep.samples], path)
    return d["verdict"], d["samples"], diag, {"svg": svg, "csv": csv_}


def run_count(job: JobSpec):
    f, S = job.function, job.curve_S
    img = CurveImage(f, S, job.tolerances)
    reps = count_on_grid(f, S, job.extra["points"], job.tolerances, return_exceptions=True, image=img)
    samples, errors = [], []
    for w, r in zip(job.extra["points"], reps):
        if isinstance(r, PseudolemError):
            errors.append({"w": encode_value(w), "error": type(r).__name__, "message": str(r)})
        elif isinstance(r, Exception):
            raise r
        else:
            samples.append(r)
    kind = "Counted" if not errors else "PartiallyCounted"
    verdict = {"kind": kind, "counts": [s.count for s in samples]}

    def csv_(path):
        write_csv(["w_re", "w_im", "count", "method"],
                  [(*_w(s.w), s.count, s.method.value) for s in samples], path)

    def svg(path):
        render_svg([("S", S.points), ("f(S)", f(S.points))], (),
                   [(s.w, f"N={s.count}") for s in samples if s.w is not expr.INF], path)
    return verdict, [s.to_dict() for s in samples], {"errors": errors}, {"svg": svg, "csv": csv_}


def run_locate(job: JobSpec):
    f, box = job.function, job.extra["box"]
    recs = isolate(f, box, job.tolerances.locator)
    rows = [{"location": encode_value(r.location), "order": r.order, "kind": r.kind.value,
             "residual": r.residual} for r in recs]
    verdict = {"kind": "Located", "zeros": sum(r.order for r in recs if r.kind.value == "Zero"),
               "poles": sum(r.order for r in recs if r.kind.value == "Pole")}

    def csv_(path):
        write_csv(["re", "im", "order", "kind", "residual"],
                  [(r.location.real, r.location.imag, r.order, r.kind.value, r.residual)
                   for r in recs], path)

    def svg(path):
        lo, hi = box.lo, box.hi
        frame = [lo, complex(hi.real, lo.imag), hi, complex(lo.real, hi.imag)]
        render_svg([("box", frame)], (), [(r.location, f"{r.kind.value} {r.order}") for r in recs], path)
    return verdict, rows, {"box": box.as_list()}, {"csv": csv_, "svg": svg}


def run_trace(job: JobSpec):
    f, G, box = job.function, job.curve_Gamma, job.extra["box"]
    comps = trace_components(f, G, box, job.tolerances)
    rows = []
    for k, c in enumerate(comps):
        rows.append({"component": k, "closed": c.closed, "n_points": int(len(c.points)),
                     "branch_points": [encode_value(b) for b in c.branch_points],
                     "branch_degrees": list(c.branch_degrees), "edges": len(c.edges)})
    verdict = {"kind": "Traced", "components": len(comps),
               "closed": sum(1 for c in comps if c.closed),
               "branch_points": sum(len(c.branch_points) for c in comps)}

    def csv_(path):
        out = []
        for k, c in enumerate(comps):
            for th, z in zip(c.parameter_track, c.points):
                out.append((k, float(th), z.real, z.imag))
        write_csv(["component", "theta", "re", "im"], out, path)

    def svg(path):
        curves = [("S", job.curve_S.points)] if job.curve_S is not None else []
        render_svg(curves, comps,
                   [(b, "branch") for c in comps for b in c.branch_points], path)
    return verdict, rows, {}, {"csv": csv_, "svg": svg}


def run_blaschke_model(job: JobSpec):
    if job.extra["mode"] == "fit":
        model = blaschke.fit_ratio_model(job.function, job.tolerances)
    else:
        model = blaschke.ratio(job.extra["zeros"], job.extra["poles"], job.extra["lambda"])
    d = model.to_dict()
    verdict = {"kind": "RatioModel", "n_minus": model.numerator.degree,
               "n_plus": model.denominator.degree}

    def csv_(path):
        rows = [("zero", a.real, a.imag) for a in model.numerator.zeros]
        rows += [("pole", a.real, a.imag) for a in model.denominator.zeros]
        rows.append(("lambda", model.constant.real, model.constant.imag))
        write_csv(["role", "re", "im"], rows, path)

    def svg(path):
        marks = [(a, "zero") for a in model.numerator.zeros] + [(a, "pole") for a in model.denominator.zeros]
        render_svg([("unit circle", geometry.circle(n=256).points)], (), marks, path)
    return verdict, [], d, {"csv": csv_, "svg": svg}


RUNNERS = {"classify": run_classify, "nonjordan": run_nonjordan, "trace": run_trace,
           "locate": run_locate, "count": run_count, "blaschke-model": run_blaschke_model}


def _print_table(report):
    v = report["verdict"]
    print(f"verdict: {v.get('kind')}")
    for k, val in v.items():
        if k != "kind":
            print(f"  {k}: {val}")
    if report["command"] == "blaschke-model" and "zeros" in report["diagnostics"]:
        d = report["diagnostics"]
        print(f"  {'role':<6} {'re':>22} {'im':>22}")
        for role, key in (("zero", "zeros"), ("pole", "poles")):
            for re_, im_ in d[key]:
                print(f"  {role:<6} {re_:>22.15g} {im_:>22.15g}")
        print(f"  lambda {d['lambda'][0]:>22.15g} {d['lambda'][1]:>22.15g}")
        print(f"  max_model_error {d['max_model_error']:.3g}")


def execute(job: JobSpec, with_timings: bool = False):
    """Run a job; returns (exit code, report dict, artifact writers)."""
    t0 = time.perf_counter()
    verdict, samples, diag, artifacts = RUNNERS[job.command](job)
    code = EXIT_INDETERMINATE if verdict.get("kind") in INDETERMINATE_KINDS else EXIT_OK
    report = {
        "command": job.command,
        "version": __version__,
        "job_echo": job.raw,
        "verdict": verdict,
        "samples": samples,
        "diagnostics": diag,
        "timings": {"total_s": time.perf_counter() - t0} if with_timings else {},
        "evidence": "sampling-based; not a certificate",
    }
    return code, _clean(report), artifacts


def error_report(raw, exc, command=None):
    command = command or (raw if isinstance(raw, dict) else {}).get("command")
    return _clean({
        "command": command if command in COMMANDS else "unknown",
        "version": __version__,
        "job_echo": raw if isinstance(raw, dict) else {},
        "verdict": {"kind": "Error", "error": type(exc).__name__, "message": str(exc),
                    **({"position": exc.position} if isinstance(exc, ExprSyntaxError) else {})},
        "samples": [],
        "diagnostics": {},
        "timings": {},
        "evidence": "none",
    })


def run_job(source, out_dir=".", seed=None, workers=None, command=None, with_timings=False):
    """Load, run and write artifacts. Returns (exit code, report)."""
    out = Path(out_dir)
    raw = None
    outputs = {"json": "report.json"}
    try:
        if isinstance(source, (str, Path)):
            try:
                raw = json.loads(Path(source).read_text())
            except Exception:
                raw = None
        else:
            raw = dict(source)
        if isinstance(raw, dict) and isinstance(raw.get("outputs"), dict):
            outputs = raw["outputs"]
        job = load_job(source, seed=seed, workers=workers, command=command)
        outputs = job.outputs
        code, report, artifacts = execute(job, with_timings)
    except InternalInconsistency as exc:
        code, report, artifacts = EXIT_INTERNAL, error_report(raw, exc, command), {}
    except (ConfigError, ExprSyntaxError) as exc:
        code, report, artifacts = EXIT_INPUT, error_report(raw, exc, command), {}
    except (StepCollapse, UnresolvedCluster) as exc:
        code, report, artifacts = EXIT_INDETERMINATE, error_report(raw, exc, command), {}
    except PseudolemError as exc:
        code, report, artifacts = EXIT_INPUT, error_report(raw, exc, command), {}
    validate_report(report)
    out.mkdir(parents=True, exist_ok=True)
    (out / outputs.get("json", "report.json")).write_text(dumps(report))
    for kind in ("svg", "csv"):
        if kind in outputs and kind in artifacts:
            artifacts[kind](out / outputs[kind])
    return code, report


def dumps(report) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


# -- reproduction of the worked example -----------------------------------------

REPRO_GEOMETRIES = (("literal", "1+4i"), ("tall", "1+8i"))


def reproduction_jobs():
    jobs = []
    for name, v in REPRO_GEOMETRIES:
        jobs.append((name, {
            "command": "nonjordan", "function": "exp(z)",
            "curve_S": {"polygon": {"vertices": ["0", "1", v, "2i"], "fillet_radius": 0.05}},
            "candidates": ["i", "e*i", "e^2*i"], "seed": 0,
            "outputs": {"json": f"reproduction_{name}.json", "svg": f"reproduction_{name}.svg"},
        }))
    return jobs


def run_reproduction(out_dir=".", workers=None):
    """Run the exp(z) quadrilateral example on both vertex lists, side by side."""
    side = {}
    worst = EXIT_OK
    for name, job in reproduction_jobs():
        code, rep = run_job(job, out_dir, workers=workers)
        side[name] = {"vertices": job["curve_S"]["polygon"]["vertices"],
                      "verdict": rep["verdict"],
                      "counts": [s["count"] for s in rep["samples"]]}
        if code in (EXIT_INPUT, EXIT_INTERNAL):
            worst = code
    summary = {"function": "exp(z)", "fillet_radius": 0.05,
               "candidates": ["i", "e*i", "e^2*i"], "geometries": side}
    Path(out_dir, "reproduction.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return worst, summary


# -- argparse -------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="pseudolem", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=f"run a {name} job")
        sp.add_argument("--job", required=True, help="job file (JSON)")
        _common(sp)
    rp = sub.add_parser("reproduce", help="run the exp(z) quadrilateral example on both vertex lists")
    _common(rp)
    return p


def _common(sp):
    sp.add_argument("--out", default=".", help="output directory")
    sp.add_argument("--seed", type=int, default=None, help="override the job seed")
    sp.add_argument("--workers", type=int, default=None, help="threads for batched counts")
    sp.add_argument("--timings", action="store_true", help="record wall-clock timings in the report")
    sp.add_argument("--verbose", "-v", action="store_true")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "reproduce":
        code, summary = run_reproduction(args.out, args.workers)
        for name, entry in summary["geometries"].items():
            print(f"{name:8s} vertices={entry['vertices']} counts={entry['counts']} "
                  f"verdict={entry['verdict']['kind']}")
        return code
    code, report = run_job(args.job, args.out, seed=args.seed, workers=args.workers,
                           command=args.command, with_timings=args.timings)
    _print_table(report)
    if args.verbose:
        print(dumps(report), end="")
    return code


if __name__ == "__main__":
    sys.exit(main())
