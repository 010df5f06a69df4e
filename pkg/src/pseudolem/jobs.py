"""Job files: JSON descriptions of one command run.

A job looks like::

    {"command": "classify", "function": "z^2",
     "curve_S": {"circle": {"center": [0, 0], "radius": 1}},
     "curve_Gamma": {"circle": {"center": 0, "radius": 1}},
     "tolerances": {"item1_tol": 1e-8}, "sample_plan": {"k_inner": 8},
     "seed": 0, "outputs": {"json": "report.json", "svg": "plot.svg"}}

Complex values are ``[re, im]`` pairs, plain numbers, or expression strings
without ``z`` (``"1+8i"``, ``"e*i"``); ``"inf"`` denotes the point at infinity
where a count target is expected.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from . import expr, geometry
from .analysis import SamplePlan
from .config import ToleranceConfig
from .errors import ConfigError, PseudolemError
from .locator import Rect

COMMANDS = ("classify", "nonjordan", "trace", "locate", "count", "blaschke-model")
CURVE_KINDS = ("circle", "polygon", "samples")
DEFAULT_OUTPUTS = {"json": "report.json"}


def complex_value(v, allow_inf=False):
    if isinstance(v, bool):
        raise ConfigError(f"not a complex value: {v!r}")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        return complex(v[0], v[1])
    if isinstance(v, str):
        if v.strip().lower() in ("inf", "infinity", "oo"):
            if allow_inf:
                return expr.INF
            raise ConfigError("infinity is not allowed here")
        try:
            fn = expr.parse(v)
        except PseudolemError as exc:
            raise ConfigError(f"bad complex value {v!r}: {exc}") from None
        if not isinstance(fn.body, expr.Const):
            raise ConfigError(f"complex value {v!r} is not a constant")
        out = expr.evaluate(fn, 0j)
        if out is expr.INF:
            raise ConfigError(f"complex value {v!r} is infinite")
        return complex(out)
    raise ConfigError(f"not a complex value: {v!r}")


def curve_from_spec(spec) -> geometry.JordanCurve:
    if not isinstance(spec, dict) or len(set(spec) & set(CURVE_KINDS)) != 1:
        raise ConfigError(f"curve spec needs exactly one of {CURVE_KINDS}")
    if "circle" in spec:
        c = spec["circle"]
        return geometry.circle(complex_value(c.get("center", 0)), float(c.get("radius", 1.0)),
                               n=int(c.get("n", 1024)))
    if "polygon" in spec:
        p = spec["polygon"]
        verts = [complex_value(v) for v in p["vertices"]]
        return geometry.rounded_polygon(verts, float(p.get("fillet_radius", 0.05)),
                                        density=float(p.get("density", 200.0)))
    pts = [complex_value(v) for v in spec["samples"]]
    return geometry.normalize(geometry.JordanCurve.from_samples(pts))


def box_from_spec(v) -> Rect:
    if not (isinstance(v, (list, tuple)) and len(v) == 4):
        raise ConfigError("box must be [x0, x1, y0, y1]")
    return Rect.from_bounds(*map(float, v))


@dataclass
class JobSpec:
    command: str
    function: expr.FunctionDef | None
    curve_S: geometry.JordanCurve | None
    curve_Gamma: geometry.JordanCurve | None
    tolerances: ToleranceConfig
    sample_plan: SamplePlan
    outputs: dict
    raw: dict
    extra: dict = field(default_factory=dict)


def load_job(source, seed: int | None = None, workers: int | None = None,
             command: str | None = None) -> JobSpec:
    """Parse and validate a job from a path or a dict.

    ``seed`` and ``workers`` override the file. Raises ConfigError (or the
    parser's errors) on invalid input.
    """
    if isinstance(source, (str, Path)):
        try:
            raw = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read job file: {exc}") from None
    else:
        raw = dict(source)
    if not isinstance(raw, dict):
        raise ConfigError("job must be a JSON object")
    cmd = command or raw.get("command")
    if cmd not in COMMANDS:
        raise ConfigError(f"command must be one of {COMMANDS}, got {cmd!r}")
    raw = dict(raw, command=cmd)
    if seed is not None:
        raw["seed"] = seed

    f = expr.parse(raw["function"]) if "function" in raw else None
    S = curve_from_spec(raw["curve_S"]) if "curve_S" in raw else None
    G = curve_from_spec(raw["curve_Gamma"]) if "curve_Gamma" in raw else None

    job_seed = raw.get("seed", 0)
    if not isinstance(job_seed, int) or isinstance(job_seed, bool):
        raise ConfigError("seed must be an integer")
    tol_kw = dict(raw.get("tolerances", {}))
    tol_kw.setdefault("seed", job_seed)
    if workers is not None:
        tol_kw["workers"] = workers
    try:
        tol = ToleranceConfig().with_overrides(**tol_kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    plan_kw = dict(raw.get("sample_plan", {}))
    plan_kw.setdefault("seed", job_seed)
    try:
        plan = SamplePlan(**plan_kw)
    except TypeError as exc:
        raise ConfigError(f"bad sample_plan: {exc}") from None

    outputs = raw.get("outputs", DEFAULT_OUTPUTS)
    if isinstance(outputs, list):
        merged = {}
        for item in outputs:
            merged.update(item)
        outputs = merged
    if not isinstance(outputs, dict) or set(outputs) - {"json", "svg", "csv"}:
        raise ConfigError("outputs must map json/svg/csv to file names")

    needs = {"classify": ("function", "curve_S", "curve_Gamma"),
             "nonjordan": ("function", "curve_S"),
             "trace": ("function", "curve_Gamma", "box"),
             "locate": ("function", "box"),
             "count": ("function", "curve_S", "points"),
             "blaschke-model": ()}[cmd]
    missing = [k for k in needs if k not in raw]
    if missing:
        raise ConfigError(f"{cmd} job is missing {missing}")

    extra = {}
    if "box" in raw:
        extra["box"] = box_from_spec(raw["box"])
    if "points" in raw:
        extra["points"] = [complex_value(v, allow_inf=True) for v in raw["points"]]
    if "candidates" in raw:
        extra["candidates"] = [complex_value(v, allow_inf=True) for v in raw["candidates"]]
    if cmd == "blaschke-model":
        if "function" in raw:
            extra["mode"] = "fit"
        elif "zeros" in raw or "poles" in raw:
            extra["mode"] = "synthesize"
            extra["zeros"] = [complex_value(v) for v in raw.get("zeros", [])]
            extra["poles"] = [complex_value(v) for v in raw.get("poles", [])]
            extra["lambda"] = complex_value(raw.get("lambda", 1))
        else:
            raise ConfigError("blaschke-model needs a function or zeros/poles")
    return JobSpec(cmd, f, S, G, tol, plan, outputs, raw, extra)
