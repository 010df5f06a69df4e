"""Preimage counts N_f(w) inside a Jordan curve via the argument principle.

The winding of ``f`` along S about ``w`` only yields zeros minus poles, so
the pole count is obtained separately from the locator and added back.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import expr
from .config import DEFAULT_TOLERANCES, ToleranceConfig
from .errors import InternalInconsistency, PoleOnCurve, TooCloseToImage
from .geometry import (GateFailure, JordanCurve, WINDING_RESIDUAL, adaptive_turns,
                       distance_to_curve, inward_offset, winding_numbers)
from .locator import Rect, find_poles

IMAGE_BAND_REL = 1e-6
RETRACT_EPS_REL = (1e-3, 2.5e-4)


class Method(str, Enum):
    WINDING = "Winding"
    SUBDIVISION = "Subdivision"
    RETRACTED = "Retracted"


@dataclass(frozen=True)
class PreimageCountReport:
    w: object  # complex or expr.INF
    count: int
    method: Method
    min_image_distance: float
    refinement_depth: int

    def to_dict(self):
        return {"w": encode_value(self.w), "count": self.count, "method": self.method.value,
                "min_image_distance": self.min_image_distance,
                "refinement_depth": self.refinement_depth}


def encode_value(w):
    if w is expr.INF:
        return "inf"
    w = complex(w)
    return [w.real, w.imag]


def chordal(a, b) -> float:
    """Chordal distance on the Riemann sphere (either argument may be INF)."""
    if a is expr.INF and b is expr.INF:
        return 0.0
    if a is expr.INF:
        a, b = b, a
    if b is expr.INF:
        return 2.0 / math.sqrt(1.0 + abs(a) ** 2)
    return 2.0 * abs(a - b) / math.sqrt((1.0 + abs(a) ** 2) * (1.0 + abs(b) ** 2))


class CurveImage:
    """``f`` sampled on ``S``; shared by every count against the same pair."""

    def __init__(self, f: expr.FunctionDef, S: JordanCurve, tol: ToleranceConfig = DEFAULT_TOLERANCES):
        self.f, self.S, self.tol = f, S, tol
        self.values = np.asarray(f(S.points), dtype=np.complex128)
        bad = expr.infinite_mask(self.values)
        if bad.any():
            raise PoleOnCurve(f"f is infinite at {complex(S.points[bad][0])!r} on S")
        lo = complex(self.values.real.min(), self.values.imag.min())
        hi = complex(self.values.real.max(), self.values.imag.max())
        self.diameter = abs(hi - lo)
        self.image_band = (tol.image_band if tol.image_band is not None
                           else IMAGE_BAND_REL * max(self.diameter, 1e-300))
        self._poles = None

    def distance(self, w) -> float:
        return float(np.min(np.abs(self.values - complex(w))))

    def near(self, w) -> bool:
        """True when ``w`` is within one local image step of a sample of f(S).

        Such points may well lie on f(S) between samples; callers that are
        free to pick another ``w`` use this as a cheap rejection test.
        """
        d = np.abs(self.values - complex(w))
        k = int(np.argmin(d))
        v = self.values
        step = max(abs(v[k] - v[k - 1]), abs(v[(k + 1) % len(v)] - v[k]))
        return bool(d[k] <= max(self.image_band, step))

    def turns(self, w):
        S, f = self.S, self.f
        w = complex(w)

        def h(s):
            return f(S.param.point(s)) - w

        def dh(s):
            return f.derivative(S.param.point(s)) * S.param.tangent(s)

        try:
            res = adaptive_turns(h, S.t, max_rounds=self.tol.refine_rounds,
                                 values=self.values - w, dh=dh)
        except GateFailure as exc:
            if exc.reason == "nonfinite":
                raise PoleOnCurve(f"f is infinite on S near t={exc.where:.6g}") from None
            raise TooCloseToImage(f"f(S) passes through {w!r} (up to tolerance)") from None
        if expr.infinite_mask(res.values + w).any():
            raise PoleOnCurve("f exceeds the magnitude cap on S")
        min_dist = float(np.min(np.abs(res.values)))
        if min_dist <= self.image_band:
            raise TooCloseToImage(f"f(S) comes within {min_dist:.3g} of {w!r}")
        if res.residual >= WINDING_RESIDUAL:
            raise TooCloseToImage(f"winding residual {res.residual:.3f} about {w!r}")
        return res

    def poles(self):
        if self._poles is None:
            self._poles = _poles_inside(self.f, self.S, self.tol)
        return self._poles


def _search_box(S: JordanCurve) -> Rect:
    lo, hi = S.bbox
    return Rect(lo, hi).inflate(0.0213 * S.diameter)


def _poles_inside(f, S, tol):
    recs = find_poles(f, _search_box(S), tol.locator)
    if not recs:
        return []
    locs = np.array([r.location for r in recs])
    band = tol.boundary_band if tol.boundary_band is not None else S.default_band()
    dist = np.atleast_1d(distance_to_curve(S, locs))
    if np.any(dist <= max(band, 1e-12 * S.diameter)):
        raise PoleOnCurve("f has a pole on S")
    wn = winding_numbers(S, locs, band)
    return [r for r, k in zip(recs, wn) if k == 1]


def image_winding(f: expr.FunctionDef, S: JordanCurve, w, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> int:
    """Winding of ``f(S)`` about the finite point ``w`` (zeros of f-w minus poles in D)."""
    return CurveImage(f, S, tol).turns(w).winding


def count_poles_in(f: expr.FunctionDef, S: JordanCurve, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> int:
    """Total order of the poles of ``f`` enclosed by ``S``."""
    return sum(r.order for r in _poles_inside(f, S, tol))


def _count(img: CurveImage, w) -> PreimageCountReport:
    n_poles = sum(r.order for r in img.poles())
    if w is expr.INF:
        dist = float(np.min(2.0 / np.sqrt(1.0 + np.abs(img.values) ** 2)))
        return PreimageCountReport(expr.INF, n_poles, Method.SUBDIVISION, dist, 0)
    w = complex(w)
    res = img.turns(w)
    count = res.winding + n_poles
    if count < 0:
        raise InternalInconsistency(f"negative preimage count {count} at {w!r}")
    fv = res.values + w
    dist = float(np.min(2.0 * np.abs(res.values)
                        / np.sqrt((1.0 + np.abs(fv) ** 2) * (1.0 + abs(w) ** 2))))
    return PreimageCountReport(w, count, Method.WINDING, dist, res.rounds)


def count_preimages(f: expr.FunctionDef, S: JordanCurve, w,
                    tol: ToleranceConfig = DEFAULT_TOLERANCES) -> PreimageCountReport:
    """N_f(w): preimages of ``w`` inside ``S`` with multiplicity (``w`` may be INF)."""
    return _count(CurveImage(f, S, tol), expr.as_complex_value(w) if w is not expr.INF else w)


def count_on_grid(f: expr.FunctionDef, S: JordanCurve, ws, tol: ToleranceConfig = DEFAULT_TOLERANCES,
                  return_exceptions: bool = False, image: CurveImage | None = None):
    """Batch :func:`count_preimages` sharing one pole count and one image sampling.

    Reports come back in input order whatever ``tol.workers`` is. With
    ``return_exceptions`` a failing entry holds its exception instead.
    """
    ws = list(ws)
    if not ws:
        return []
    img = image or CurveImage(f, S, tol)
    img.poles()

    def one(w):
        try:
            return _count(img, w)
        except Exception as exc:
            if return_exceptions:
                return exc
            raise

    if tol.workers > 1 and len(ws) > 1:
        with ThreadPoolExecutor(max_workers=tol.workers) as pool:
            return list(pool.map(one, ws))
    return [one(w) for w in ws]


def count_preimages_retracted(f: expr.FunctionDef, S: JordanCurve, w,
                              tol: ToleranceConfig = DEFAULT_TOLERANCES,
                              eps_rel=RETRACT_EPS_REL) -> PreimageCountReport:
    """N_f(w) for ``w`` lying on ``f(S)``.

    The preimages on S itself are not in the open face D, so the count is
    taken along copies of S pulled inward by each distance in ``eps_rel``
    (relative to the diameter of S); the copies must agree.
    """
    w = complex(w)
    counts = []
    last = None
    for eps in eps_rel:
        inner = inward_offset(S, eps * S.diameter)
        img = CurveImage(f, inner, tol)
        rep = _count(img, w)
        counts.append(rep.count)
        last = rep
    if len(set(counts)) != 1:
        raise TooCloseToImage(f"retracted counts disagree at {w!r}: {counts}")
    return PreimageCountReport(w, counts[0], Method.RETRACTED, last.min_image_distance,
                               last.refinement_depth)
