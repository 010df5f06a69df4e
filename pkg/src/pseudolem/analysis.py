"""Decision procedures built on the counting engine.

``classify`` decides whether S is a Gamma-pseudo-lemniscate of f in two
independent ways (preimage-count sampling and a direct check of f(S) against
Gamma) and cross-reports them. ``non_jordan_test`` looks for three distinct
preimage counts, which force either a critical point on S or a non-Jordan
image curve.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import expr
from .config import DEFAULT_TOLERANCES, ToleranceConfig
from .counting import (CurveImage, PreimageCountReport, count_on_grid,
                       count_preimages_retracted, encode_value)
from .errors import ConfigError, PseudolemError, TooCloseToImage
from .geometry import JordanCurve, Location, distance_to_curve, locate_point
from .locator import critical_points_on_curve, location_key

MAX_SLIDES = 32
MAX_REDRAWS = 32
CANDIDATE_GRID = 6


@dataclass(frozen=True)
class SamplePlan:
    k_inner: int = 8
    k_outer: int = 8
    k_boundary: int = 8
    seed: int = 0
    offset: float = 0.0137   # parameter slide applied to inadmissible boundary samples

    def __post_init__(self):
        for name in ("k_inner", "k_outer", "k_boundary"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 3:
                raise ConfigError(f"{name} must be an integer >= 3, got {v!r}")
        if not 0 < self.offset < 1:
            raise ConfigError("offset must lie in (0, 1)")

    def to_dict(self):
        return {"k_inner": self.k_inner, "k_outer": self.k_outer,
                "k_boundary": self.k_boundary, "seed": self.seed, "offset": self.offset}


# -- verdicts -------------------------------------------------------------------


def _pair(w, count):
    return {"w": encode_value(w), "count": count}


@dataclass(frozen=True)
class PseudoLemniscate:
    n_minus: int
    n_plus: int
    kind = "PseudoLemniscate"

    def to_dict(self):
        return {"kind": self.kind, "n_minus": self.n_minus, "n_plus": self.n_plus}


@dataclass(frozen=True)
class NotPseudoLemniscate:
    witness_pair: tuple   # ((w, count), (w, count))
    reason: str
    kind = "NotPseudoLemniscate"

    def to_dict(self):
        return {"kind": self.kind, "reason": self.reason,
                "witness_pair": [_pair(w, c) for w, c in self.witness_pair]}


@dataclass(frozen=True)
class Indeterminate:
    reason: str
    kind = "Indeterminate"

    def to_dict(self):
        return {"kind": self.kind, "reason": self.reason}


@dataclass(frozen=True)
class ImageNotJordan:
    witnesses: tuple   # three (w, count)
    kind = "ImageNotJordan"

    def to_dict(self):
        return {"kind": self.kind, "witnesses": [_pair(w, c) for w, c in self.witnesses]}


@dataclass(frozen=True)
class CriticalPointOnCurve:
    points: tuple
    witnesses: tuple = ()
    kind = "CriticalPointOnCurve"

    def to_dict(self):
        return {"kind": self.kind, "points": [encode_value(p) for p in self.points],
                "witnesses": [_pair(w, c) for w, c in self.witnesses]}


@dataclass(frozen=True)
class DisjunctionUnresolved:
    witnesses: tuple
    reason: str
    kind = "DisjunctionUnresolved"

    def to_dict(self):
        return {"kind": self.kind, "reason": self.reason,
                "witnesses": [_pair(w, c) for w, c in self.witnesses]}


@dataclass(frozen=True)
class Inconclusive:
    counts_seen: tuple
    kind = "Inconclusive"

    def to_dict(self):
        return {"kind": self.kind, "counts_seen": list(self.counts_seen)}


@dataclass
class ClassificationReport:
    verdict: object
    item1_check: dict
    samples: list
    items_agree: bool
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {"verdict": self.verdict.to_dict(), "item1_check": self.item1_check,
                "items_agree": self.items_agree,
                "samples": [s.to_dict() for s in self.samples],
                "diagnostics": self.diagnostics}


@dataclass
class NonJordanReport:
    verdict: object
    samples: list
    skipped: list
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {"verdict": self.verdict.to_dict(),
                "samples": [s.to_dict() for s in self.samples],
                "skipped": [{"w": encode_value(w), "reason": r} for w, r in self.skipped],
                "diagnostics": self.diagnostics}


# -- sampling -------------------------------------------------------------------


def _center_radius(gamma: JordanCurve):
    lo, hi = gamma.bbox
    c = 0.5 * (lo + hi)
    return c, float(np.max(np.abs(gamma.points - c)))


def _draw_inner(gamma, rng, k, band):
    lo, hi = gamma.bbox
    out = []
    tries = 0
    while len(out) < k:
        tries += 1
        if tries > 10_000 * k:
            raise ConfigError("could not sample the bounded face of the curve")
        w = complex(rng.uniform(lo.real, hi.real), rng.uniform(lo.imag, hi.imag))
        loc = locate_point(gamma, w, band)
        if loc.kind is Location.INSIDE and loc.distance > band:
            out.append(w)
    return out


def _draw_annulus(gamma, rng, k, band):
    c, R = _center_radius(gamma)
    out = []
    while len(out) < k:
        r = R * rng.uniform(1.05, 2.0)
        w = c + r * np.exp(2j * np.pi * rng.uniform())
        if locate_point(gamma, w, band).kind is Location.OUTSIDE:
            out.append(complex(w))
    return out


def sample_faces(gamma: JordanCurve, plan: SamplePlan, band: float | None = None):
    """Seeded sample points: (inner, outer, boundary).

    ``outer`` holds ``k_outer - 1`` annulus points, one far point at three
    diameters and finally ``INF``.
    """
    inner, outer, ts = _sample(gamma, plan, gamma.default_band() if band is None else band)
    return inner, outer, [complex(p) for p in gamma.param.point(ts)]


def _sample(gamma, plan, band):
    rng = np.random.default_rng(plan.seed)
    inner = _draw_inner(gamma, rng, plan.k_inner, band)
    outer = _draw_annulus(gamma, rng, plan.k_outer - 1, band)
    c, _ = _center_radius(gamma)
    outer.append(complex(c + 3.0 * gamma.diameter))
    outer.append(expr.INF)
    return inner, outer, np.sort(rng.uniform(0.0, 1.0, plan.k_boundary))


# -- classify -------------------------------------------------------------------


def _count_face(img, ws, redraw, tol, errors):
    """Counts for ``ws``; entries too close to f(S) are replaced by fresh draws."""
    reps = count_on_grid(img.f, img.S, ws, tol, return_exceptions=True, image=img)
    out = []
    for w, rep in zip(ws, reps):
        tries = 0
        while isinstance(rep, TooCloseToImage) and tries < MAX_REDRAWS:
            errors.append({"w": encode_value(w), "error": str(rep)})
            w = redraw()
            tries += 1
            rep = count_on_grid(img.f, img.S, [w], tol, return_exceptions=True, image=img)[0]
        if isinstance(rep, Exception):
            raise rep
        out.append(rep)
    return out


def _boundary_counts(img, gamma, ts, plan, tol, diag):
    out = []
    for t0 in ts:
        rep = None
        for k in range(MAX_SLIDES + 1):
            w = complex(gamma.param.point((t0 + k * plan.offset) % 1.0))
            if not img.near(w):
                try:
                    rep = count_on_grid(img.f, img.S, [w], tol, image=img)[0]
                    break
                except TooCloseToImage:
                    continue
        slides = k
        if rep is None:
            # f(S) covers Gamma here: count along S pulled slightly inward
            w = complex(gamma.param.point(t0))
            rep = count_preimages_retracted(img.f, img.S, w, tol)
            slides = MAX_SLIDES
        diag["boundary_slides"].append(slides)
        out.append(rep)
    return out


def _item1(f, S, gamma, img, tol):
    dist = distance_to_curve(gamma, img.values)
    max_dist = float(np.max(dist))
    band = tol.critical_band if tol.critical_band is not None else 1e-6 * S.diameter
    crits = critical_points_on_curve(f, S, band, tol.locator)
    return {"max_dist_f_S_to_Gamma": max_dist,
            "critical_points_on_S": [encode_value(r.location) for r in crits]}


def _item1_ok(item1, tol):
    return item1["max_dist_f_S_to_Gamma"] <= tol.item1_tol and not item1["critical_points_on_S"]


def _first_mismatch(reps, target=None):
    base = reps[0] if target is None else None
    for r in reps:
        ref = target if target is not None else base.count
        if r.count != ref:
            return r
    return None


def classify(f: expr.FunctionDef, S: JordanCurve, gamma: JordanCurve,
             plan: SamplePlan | None = None,
             tol: ToleranceConfig = DEFAULT_TOLERANCES) -> ClassificationReport:
    """Sampling-based pseudo-lemniscate classification, cross-checked against
    the direct test (f(S) on Gamma, no critical points on S)."""
    plan = plan or SamplePlan(seed=tol.seed)
    band = tol.boundary_band if tol.boundary_band is not None else gamma.default_band()
    img = CurveImage(f, S, tol)
    inner, outer, ts = _sample(gamma, plan, band)
    redraw_rng = np.random.default_rng([plan.seed, 1])

    diag = {"redrawn": [], "boundary_slides": [], "sampling_only": True}
    inner_reps = _count_face(img, inner, lambda: _draw_inner(gamma, redraw_rng, 1, band)[0],
                             tol, diag["redrawn"])
    finite_outer = [w for w in outer if w is not expr.INF]
    outer_reps = _count_face(img, finite_outer,
                             lambda: _draw_annulus(gamma, redraw_rng, 1, band)[0],
                             tol, diag["redrawn"])
    outer_reps += count_on_grid(f, S, [expr.INF], tol, image=img)
    try:
        boundary_reps = _boundary_counts(img, gamma, ts, plan, tol, diag)
    except TooCloseToImage as exc:
        boundary_reps = None
        boundary_error = str(exc)

    item1 = _item1(f, S, gamma, img, tol)
    ok1 = _item1_ok(item1, tol)
    samples = inner_reps + outer_reps + (boundary_reps or [])

    if boundary_reps is None:
        verdict = Indeterminate(f"boundary samples not admissible: {boundary_error}")
        return ClassificationReport(verdict, item1, samples, False, diag)

    verdict = None
    bad = _first_mismatch(inner_reps)
    if bad is not None:
        verdict = NotPseudoLemniscate(((inner_reps[0].w, inner_reps[0].count), (bad.w, bad.count)),
                                      "inner counts differ")
    if verdict is None:
        bad = _first_mismatch(outer_reps)
        if bad is not None:
            verdict = NotPseudoLemniscate(((outer_reps[0].w, outer_reps[0].count), (bad.w, bad.count)),
                                          "outer counts differ")
    if verdict is None:
        n_minus, n_plus = inner_reps[0].count, outer_reps[0].count
        bad = _first_mismatch(boundary_reps, min(n_minus, n_plus))
        if bad is not None:
            ref = inner_reps[0] if n_minus <= n_plus else outer_reps[0]
            verdict = NotPseudoLemniscate(((ref.w, ref.count), (bad.w, bad.count)),
                                          "boundary count differs from min(n_minus, n_plus)")
        else:
            verdict = PseudoLemniscate(n_minus, n_plus)

    agree = isinstance(verdict, PseudoLemniscate) == ok1
    if not agree:
        diag["sampled_verdict"] = verdict.to_dict()
        verdict = Indeterminate("count sampling and the direct check disagree")
    return ClassificationReport(verdict, item1, samples, agree, diag)


# -- non-Jordan test ------------------------------------------------------------


def default_candidates(f: expr.FunctionDef, S: JordanCurve, seed: int = 0, k: int = CANDIDATE_GRID):
    """Jittered ``k x k`` grid over the bounding box of f(S), then INF."""
    vals = np.asarray(f(S.points))
    lo = complex(vals.real.min(), vals.imag.min())
    hi = complex(vals.real.max(), vals.imag.max())
    rng = np.random.default_rng(seed)
    u = (np.arange(k) + rng.uniform(0.2, 0.8, (k, k))) / k
    v = (np.arange(k)[:, None] + rng.uniform(0.2, 0.8, (k, k))) / k
    pts = lo.real + u * (hi.real - lo.real) + 1j * (lo.imag + v * (hi.imag - lo.imag))
    return [complex(p) for p in pts.ravel()] + [expr.INF]


def non_jordan_test(f: expr.FunctionDef, S: JordanCurve, candidate_ws=None,
                    tol: ToleranceConfig = DEFAULT_TOLERANCES) -> NonJordanReport:
    """Three distinct counts imply a critical point on S or a non-Jordan f(S)."""
    ws = default_candidates(f, S, tol.seed) if candidate_ws is None else list(candidate_ws)
    if len(ws) < 3:
        raise ConfigError("non_jordan_test needs at least three candidates")
    img = CurveImage(f, S, tol)
    reps = count_on_grid(f, S, ws, tol, return_exceptions=True, image=img)
    samples, skipped = [], []
    for w, rep in zip(ws, reps):
        if isinstance(rep, TooCloseToImage):
            skipped.append((w, str(rep)))
        elif isinstance(rep, Exception):
            raise rep
        else:
            samples.append(rep)

    first = {}
    for r in samples:
        first.setdefault(r.count, r)
    band = tol.critical_band if tol.critical_band is not None else 1e-6 * S.diameter
    try:
        crits = critical_points_on_curve(f, S, band, tol.locator)
        pts = tuple(sorted((r.location for r in crits), key=location_key))
        crit_error = None
    except PseudolemError as exc:
        pts, crit_error = None, str(exc)

    if len(first) < 3:
        # the disjunction says nothing here; the on-curve check is kept as a diagnostic
        diag = {"critical_points_on_S": (None if pts is None else [encode_value(p) for p in pts])}
        if crit_error is not None:
            diag["critical_point_error"] = crit_error
        verdict = Inconclusive(tuple(sorted(r.count for r in samples)))
        return NonJordanReport(verdict, samples, skipped, diag)

    picks = [first[c] for c in sorted(first)[:3]]
    witnesses = tuple((r.w, r.count) for r in picks)
    if pts is None:
        return NonJordanReport(DisjunctionUnresolved(witnesses, crit_error), samples, skipped)
    if pts:
        return NonJordanReport(CriticalPointOnCurve(pts, witnesses), samples, skipped)
    return NonJordanReport(ImageNotJordan(witnesses), samples, skipped)
