"""Sampled Jordan curves, winding numbers and point location.

Every :class:`JordanCurve` carries a parametrization on ``t in [0, 1]`` so
that refinement can insert exact curve points (circles, rounded polygons)
or chord midpoints (curves given only by samples).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError, GeometryError, TooCloseToCurve

TWO_PI = 2.0 * math.pi
ANGLE_GATE = math.pi / 2
WINDING_RESIDUAL = 0.25
DEFAULT_BAND_REL = 1e-9
DEFAULT_REFINE_ROUNDS = 20


# ---------------------------------------------------------------------------
# adaptive argument summation (shared by winding, counting and the locator)


class GateFailure(Exception):
    """Adaptive bisection could not bring every angle step under the gate.

    ``reason`` is ``"nonfinite"`` when the sampled values contain infinities
    or NaNs, ``"zero"`` when a value is exactly zero, else ``"gate"``.
    """

    def __init__(self, reason, where=None):
        super().__init__(reason)
        self.reason = reason
        self.where = where


@dataclass
class TurnResult:
    turns: float
    s: np.ndarray
    values: np.ndarray
    rounds: int

    @property
    def winding(self) -> int:
        return int(round(self.turns))

    @property
    def residual(self) -> float:
        return abs(self.turns - round(self.turns))


LOG_STEP_GATE = 1.0


def adaptive_turns(h, s, gate=ANGLE_GATE, max_rounds=DEFAULT_REFINE_ROUNDS,
                   values=None, dh=None) -> TurnResult:
    """Total argument change of ``h`` along a closed path, in turns.

    ``h`` maps an array of path parameters to complex values; ``s`` is the
    initial increasing parameter grid whose first and last entries describe
    the same point. Segments whose angle step reaches ``gate`` are bisected,
    at most ``max_rounds`` times. ``values`` may carry ``h(s)`` if known.

    With ``dh`` (the derivative of ``h`` in ``s``) a segment is also bisected
    while ``|h'/h| * ds`` at either end reaches ``LOG_STEP_GATE``. This
    catches a zero or pole passing between two samples, which the angle
    gate alone can alias into a full turn.
    """
    s = np.asarray(s, dtype=float)
    v = np.asarray(h(s) if values is None else values, dtype=np.complex128)
    with np.errstate(all="ignore"):
        lg = None if dh is None else np.abs(np.asarray(dh(s), dtype=np.complex128) / v)
    for rnd in range(max_rounds + 1):
        finite = np.isfinite(v)
        if not finite.all():
            raise GateFailure("nonfinite", s[~finite][0])
        if np.any(v == 0):
            raise GateFailure("zero", s[v == 0][0])
        u = np.exp(1j * np.angle(v))   # no overflow for huge finite v
        steps = np.angle(u[1:] * np.conj(u[:-1]))
        bad = np.abs(steps) >= gate
        if lg is not None:
            with np.errstate(invalid="ignore"):
                bad |= ~(np.maximum(lg[1:], lg[:-1]) * np.diff(s) < LOG_STEP_GATE)
        if not bad.any():
            return TurnResult(float(steps.sum() / TWO_PI), s, v, rnd)
        if rnd == max_rounds:
            break
        idx = np.nonzero(bad)[0]
        mids = 0.5 * (s[idx] + s[idx + 1])
        vm = np.asarray(h(mids), dtype=np.complex128)
        s = np.insert(s, idx + 1, mids)
        v = np.insert(v, idx + 1, vm)
        if lg is not None:
            with np.errstate(all="ignore"):
                lg = np.insert(lg, idx + 1, np.abs(np.asarray(dh(mids), dtype=np.complex128) / vm))
    raise GateFailure("gate", s[np.nonzero(bad)[0][0]])


# ---------------------------------------------------------------------------
# parametrizations


class Parametrization:
    """A closed curve ``t -> point(t)`` with period 1."""

    def point(self, t):
        raise NotImplementedError

    def tangent(self, t):
        """Derivative of :meth:`point` with respect to ``t``."""
        raise NotImplementedError

    def reversed(self) -> "Parametrization":
        return ReversedParam(self)


class Circle(Parametrization):
    def __init__(self, center, radius):
        self.center = complex(center)
        self.radius = float(radius)
        if not self.radius > 0:
            raise GeometryError("circle radius must be positive")

    def point(self, t):
        return self.center + self.radius * np.exp(1j * TWO_PI * np.asarray(t, dtype=float))

    def tangent(self, t):
        return 1j * TWO_PI * self.radius * np.exp(1j * TWO_PI * np.asarray(t, dtype=float))

    def __repr__(self):
        return f"Circle({self.center!r}, {self.radius!r})"


class ReversedParam(Parametrization):
    def __init__(self, base):
        self.base = base

    def point(self, t):
        return self.base.point(1.0 - np.asarray(t, dtype=float))

    def tangent(self, t):
        return -self.base.tangent(1.0 - np.asarray(t, dtype=float))

    def reversed(self):
        return self.base


class PolylineParam(Parametrization):
    """Piecewise-linear interpolation of closed samples at parameters ``t``."""

    def __init__(self, t, points):
        self.t = np.asarray(t, dtype=float)
        self.points = np.asarray(points, dtype=np.complex128)

    def _locate(self, t):
        t = np.mod(np.asarray(t, dtype=float), 1.0)
        k = np.clip(np.searchsorted(self.t, t, side="right") - 1, 0, len(self.t) - 2)
        dt = self.t[k + 1] - self.t[k]
        return k, (t - self.t[k]) / dt, dt

    def point(self, t):
        k, u, _ = self._locate(t)
        return self.points[k] + u * (self.points[k + 1] - self.points[k])

    def tangent(self, t):
        k, _, dt = self._locate(t)
        return (self.points[k + 1] - self.points[k]) / dt


class PiecewiseParam(Parametrization):
    """Arc-length parametrization of straight segments and circular arcs.

    Each piece is ``("line", start, end)`` or
    ``("arc", center, radius, start_angle, sweep)``.
    """

    def __init__(self, pieces):
        self.pieces = pieces
        lengths = []
        for p in pieces:
            if p[0] == "line":
                lengths.append(abs(p[2] - p[1]))
            else:
                lengths.append(abs(p[2] * p[4]))
        self.lengths = np.array(lengths)
        self.length = float(self.lengths.sum())
        self.breaks = np.concatenate([[0.0], np.cumsum(self.lengths)]) / self.length

    def _eval(self, t, want_tangent):
        t = np.mod(np.asarray(t, dtype=float), 1.0)
        k = np.clip(np.searchsorted(self.breaks, t, side="right") - 1, 0, len(self.pieces) - 1)
        out = np.empty(t.shape, dtype=np.complex128)
        for idx in np.unique(k):
            mask = k == idx
            p = self.pieces[idx]
            span = self.breaks[idx + 1] - self.breaks[idx]
            u = (t[mask] - self.breaks[idx]) / span
            if p[0] == "line":
                if want_tangent:
                    out[mask] = (p[2] - p[1]) / span
                else:
                    out[mask] = p[1] + u * (p[2] - p[1])
            else:
                _, center, radius, a0, sweep = p
                e = np.exp(1j * (a0 + u * sweep))
                out[mask] = (1j * sweep * radius * e / span) if want_tangent else center + radius * e
        return out

    def point(self, t):
        return self._eval(t, False)

    def tangent(self, t):
        return self._eval(t, True)


# ---------------------------------------------------------------------------
# curves


def signed_area(points) -> float:
    p = np.asarray(points)
    return 0.5 * float(np.sum(p[:-1].real * p[1:].imag - p[1:].real * p[:-1].imag))


def _segments_intersect(p1, p2, q1, q2):
    """Vectorized closed-segment intersection test."""

    def cross(o, a, b):
        return (a.real - o.real) * (b.imag - o.imag) - (a.imag - o.imag) * (b.real - o.real)

    def on_seg(o, a, b):
        return ((np.minimum(o.real, a.real) <= b.real) & (b.real <= np.maximum(o.real, a.real))
                & (np.minimum(o.imag, a.imag) <= b.imag) & (b.imag <= np.maximum(o.imag, a.imag)))

    d1 = cross(q1, q2, p1)
    d2 = cross(q1, q2, p2)
    d3 = cross(p1, p2, q1)
    d4 = cross(p1, p2, q2)
    proper = (((d1 > 0) & (d2 < 0)) | ((d1 < 0) & (d2 > 0))) & \
             (((d3 > 0) & (d4 < 0)) | ((d3 < 0) & (d4 > 0)))
    touch = ((d1 == 0) & on_seg(q1, q2, p1)) | ((d2 == 0) & on_seg(q1, q2, p2)) | \
            ((d3 == 0) & on_seg(p1, p2, q1)) | ((d4 == 0) & on_seg(p1, p2, q2))
    return proper | touch


def is_simple(points) -> bool:
    """True if the closed polyline through ``points`` has no self-intersection.

    Only segments that share a grid cell are tested against each other,
    which keeps the check fast for finely sampled curves.
    """
    p = np.asarray(points, dtype=np.complex128)
    a, b = p[:-1], p[1:]
    n = len(a)
    if n < 3:
        return False
    if np.any(a == b):
        return False
    if n <= 400:
        i, j = np.triu_indices(n, k=2)
    else:
        cell = float(np.max(np.abs(b - a))) or 1.0
        lo = np.minimum(a.real, b.real), np.minimum(a.imag, b.imag)
        hi = np.maximum(a.real, b.real), np.maximum(a.imag, b.imag)
        x0, y0 = np.floor(lo[0] / cell).astype(np.int64), np.floor(lo[1] / cell).astype(np.int64)
        x1, y1 = np.floor(hi[0] / cell).astype(np.int64), np.floor(hi[1] / cell).astype(np.int64)
        buckets = {}
        for s in range(n):
            for cx in range(x0[s], x1[s] + 1):
                for cy in range(y0[s], y1[s] + 1):
                    buckets.setdefault((cx, cy), []).append(s)
        pairs = []
        for segs in buckets.values():
            if len(segs) > 1:
                arr = np.array(segs)
                ii, jj = np.triu_indices(len(arr), k=1)
                pairs.append(np.stack([arr[ii], arr[jj]], axis=1))
        if not pairs:
            return True
        pairs = np.unique(np.sort(np.concatenate(pairs), axis=1), axis=0)
        i, j = pairs[:, 0], pairs[:, 1]
        keep = j - i >= 2
        i, j = i[keep], j[keep]
    keep = ~((i == 0) & (j == n - 1))
    i, j = i[keep], j[keep]
    if len(i) == 0:
        return True
    return not bool(np.any(_segments_intersect(a[i], b[i], a[j], b[j])))


@dataclass(frozen=True, eq=False)
class JordanCurve:
    """A closed, simple, sampled curve.

    ``points[k] = param.point(t[k])``; ``t`` runs from 0 to 1 and the first
    and last points coincide exactly.
    """

    t: np.ndarray
    points: np.ndarray
    param: Parametrization

    @property
    def closed(self) -> bool:
        return True

    @property
    def orientation(self) -> int:
        return 1 if signed_area(self.points) > 0 else -1

    @property
    def n_samples(self) -> int:
        return len(self.points)

    @property
    def bbox(self):
        p = self.points
        return complex(p.real.min(), p.imag.min()), complex(p.real.max(), p.imag.max())

    @property
    def diameter(self) -> float:
        """Bounding-box diagonal, used as the length scale for tolerances."""
        lo, hi = self.bbox
        return abs(hi - lo)

    @property
    def max_spacing(self) -> float:
        return float(np.max(np.abs(np.diff(self.points))))

    def default_band(self) -> float:
        return DEFAULT_BAND_REL * self.diameter

    def segments(self):
        return self.points[:-1], self.points[1:]

    def check(self):
        p = self.points
        if not np.all(np.isfinite(p)):
            raise GeometryError("curve samples must be finite")
        if p[0] != p[-1]:
            raise GeometryError("curve is not closed")
        if not is_simple(p):
            raise GeometryError("curve is not simple")
        return self

    @classmethod
    def from_param(cls, param: Parametrization, n: int, check: bool = True) -> "JordanCurve":
        if n < 3:
            raise ConfigError("need at least 3 samples")
        t = np.linspace(0.0, 1.0, int(n) + 1)
        pts = np.asarray(param.point(t), dtype=np.complex128)
        pts[-1] = pts[0]
        curve = cls(t, pts, param)
        return curve.check() if check else curve

    @classmethod
    def from_samples(cls, points, check: bool = True) -> "JordanCurve":
        p = np.asarray(points, dtype=np.complex128).ravel()
        if len(p) and p[0] != p[-1]:
            p = np.append(p, p[0])
        if len(p) < 4:
            raise GeometryError("a closed curve needs at least 3 distinct samples")
        chord = np.abs(np.diff(p))
        if np.any(chord == 0):
            raise GeometryError("repeated consecutive samples")
        t = np.concatenate([[0.0], np.cumsum(chord)])
        t /= t[-1]
        t[-1] = 1.0
        curve = cls(t, p, PolylineParam(t, p))
        return curve.check() if check else curve


def circle(center=0j, radius=1.0, n: int = 1024, clockwise: bool = False) -> JordanCurve:
    param = Circle(center, radius)
    curve = JordanCurve.from_param(param, n, check=False)
    return _reverse(curve) if clockwise else curve


def _reverse(curve: JordanCurve) -> JordanCurve:
    t = 1.0 - curve.t[::-1]
    t[0], t[-1] = 0.0, 1.0
    return JordanCurve(t, curve.points[::-1].copy(), curve.param.reversed())


def normalize(curve: JordanCurve) -> JordanCurve:
    """Return the positively oriented version of ``curve``."""
    if signed_area(curve.points) < 0:
        return _reverse(curve)
    return curve


def refine(curve: JordanCurve, max_spacing: float, max_samples: int = 2_000_000) -> JordanCurve:
    """Insert parameter midpoints until every chord is at most ``max_spacing``."""
    if not max_spacing > 0:
        raise ConfigError("max_spacing must be positive")
    t, p = curve.t, curve.points
    while True:
        bad = np.abs(np.diff(p)) > max_spacing
        if not bad.any():
            break
        if len(p) > max_samples:
            raise ConfigError("refinement exceeds the sample budget")
        idx = np.nonzero(bad)[0]
        mids = 0.5 * (t[idx] + t[idx + 1])
        t = np.insert(t, idx + 1, mids)
        p = np.insert(p, idx + 1, curve.param.point(mids))
    if len(p) == curve.n_samples:
        return curve
    return JordanCurve(t, p, curve.param)


# ---------------------------------------------------------------------------
# rounded polygons


def polygon_is_simple(vertices) -> bool:
    v = np.asarray(vertices, dtype=np.complex128)
    return is_simple(np.append(v, v[0]))


def rounded_polygon(vertices, fillet_radius: float, density: float = 200.0) -> JordanCurve:
    """Polygon boundary pushed outward by ``fillet_radius``, with round corners.

    Straight pieces are the polygon edges offset outward; convex corners are
    joined by arcs centred at the vertex, reflex corners by concave arcs of
    the same radius tangent to both offset edges. The result is C1, positively
    oriented and contains the polygon.
    """
    v = np.asarray([complex(x) for x in vertices], dtype=np.complex128)
    if len(v) < 3:
        raise GeometryError("a polygon needs at least 3 vertices")
    if not polygon_is_simple(v):
        raise GeometryError("polygon is self-intersecting")
    if signed_area(np.append(v, v[0])) < 0:
        v = v[::-1]
    r = float(fillet_radius)
    edges = np.roll(v, -1) - v
    lengths = np.abs(edges)
    if not r > 0:
        raise GeometryError("fillet_radius must be positive")
    if r >= 0.5 * lengths.min():
        raise GeometryError("fillet_radius must be below half the shortest edge")
    u = edges / lengths
    normal = -1j * u  # outward for a counterclockwise polygon
    n = len(v)
    # turning angle at vertex k, between edge k-1 and edge k
    turn = np.angle(u / np.roll(u, 1))
    trim = np.where(turn < 0, 2 * r * np.tan(np.abs(turn) / 2), 0.0)
    pieces = []
    for k in range(n):
        k_in = (k - 1) % n
        phi = turn[k]
        if phi > 1e-15:
            pieces.append(("arc", v[k], r, float(np.angle(normal[k_in])), float(phi)))
        elif phi < -1e-15:
            n_in, n_out = normal[k_in], normal[k]
            dot = (n_in.conjugate() * n_out).real
            center = v[k] + 2 * r * (n_in + n_out) / (1 + dot)
            pieces.append(("arc", center, r, float(np.angle(-n_in)), float(phi)))
        start = v[k] + r * normal[k] + trim[k] * u[k]
        end = v[(k + 1) % n] + r * normal[k] - trim[(k + 1) % n] * u[k]
        if ((end - start) / u[k]).real <= 0:
            raise GeometryError("edge too short for the fillet radius at a reflex corner")
        pieces.append(("line", start, end))
    param = PiecewiseParam(pieces)
    n_samples = max(int(math.ceil(param.length * density)), 16)
    curve = JordanCurve.from_param(param, n_samples)
    return normalize(curve)


# ---------------------------------------------------------------------------
# distances and winding


def _polyline_nearest(curve: JordanCurve, ws):
    """Distance from each ``w`` to the polyline and the nearest segment index."""
    a, b = curve.segments()
    d = b - a
    dd = np.abs(d) ** 2
    ws = np.atleast_1d(np.asarray(ws, dtype=np.complex128))
    dist = np.empty(len(ws))
    seg = np.empty(len(ws), dtype=np.int64)
    chunk = max(1, 4_000_000 // len(a))
    for lo in range(0, len(ws), chunk):
        w = ws[lo:lo + chunk, None]
        u = np.clip(((w - a) * d.conjugate()).real / dd, 0.0, 1.0)
        dist2 = np.abs(a + u * d - w)
        k = np.argmin(dist2, axis=1)
        seg[lo:lo + chunk] = k
        dist[lo:lo + chunk] = dist2[np.arange(len(k)), k]
    return dist, seg


def _golden_refine(curve: JordanCurve, ws, seg, iters=60):
    """Minimize |param(t) - w| over the parameter span around segment ``seg``."""
    t = curve.t
    n = len(t) - 1
    lo = t[seg] - np.where(seg > 0, t[seg] - t[np.maximum(seg - 1, 0)], 1.0 - t[-2])
    hi = t[seg + 1] + np.where(seg + 1 < n, t[np.minimum(seg + 2, n)] - t[seg + 1], t[1])
    g = (math.sqrt(5) - 1) / 2

    def dist(x):
        return np.abs(curve.param.point(x) - ws)

    x1 = hi - g * (hi - lo)
    x2 = lo + g * (hi - lo)
    f1, f2 = dist(x1), dist(x2)
    for _ in range(iters):
        left = f1 < f2
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        nx1 = np.where(left, hi - g * (hi - lo), x2)
        nx2 = np.where(left, x1, lo + g * (hi - lo))
        fe = dist(np.where(left, nx1, nx2))
        f1, f2 = np.where(left, fe, f2), np.where(left, f1, fe)
        x1, x2 = nx1, nx2
    tm = 0.5 * (lo + hi)
    return np.mod(tm, 1.0), dist(tm)


def distance_to_curve(curve: JordanCurve, ws):
    """Distance from each point in ``ws`` to the underlying (unsampled) curve."""
    ws_arr = np.atleast_1d(np.asarray(ws, dtype=np.complex128))
    dist, seg = _polyline_nearest(curve, ws_arr)
    if not isinstance(curve.param, PolylineParam):
        _, dist = _golden_refine(curve, ws_arr, seg)
    return float(dist[0]) if np.ndim(ws) == 0 else dist


def nearest_param(curve: JordanCurve, ws):
    """Curve parameter of the nearest curve point for each ``w``."""
    ws_arr = np.atleast_1d(np.asarray(ws, dtype=np.complex128))
    _, seg = _polyline_nearest(curve, ws_arr)
    t, _ = _golden_refine(curve, ws_arr, seg)
    return float(t[0]) if np.ndim(ws) == 0 else t


def _curve_winding(curve: JordanCurve, w: complex, max_rounds: int) -> TurnResult:
    def h(s):
        return curve.param.point(s) - w

    s = curve.t.copy()
    return adaptive_turns(h, s, max_rounds=max_rounds)


def winding_number(curve: JordanCurve, w, band: float | None = None,
                   max_rounds: int = DEFAULT_REFINE_ROUNDS) -> int:
    """Winding number of ``curve`` about ``w`` by angle-increment summation."""
    w = complex(w)
    band = curve.default_band() if band is None else band
    if distance_to_curve(curve, w) <= band:
        raise TooCloseToCurve(f"{w!r} is within {band:g} of the curve")
    try:
        res = _curve_winding(curve, w, max_rounds)
    except GateFailure as exc:
        raise TooCloseToCurve(f"winding about {w!r} did not resolve ({exc.reason})") from None
    if res.residual >= WINDING_RESIDUAL:
        raise TooCloseToCurve(f"winding residual {res.residual:.3f} about {w!r}")
    return res.winding


def winding_numbers(curve: JordanCurve, ws, band: float | None = None):
    """Vectorized :func:`winding_number`; entries closer than ``band`` get ``None``."""
    ws = np.atleast_1d(np.asarray(ws, dtype=np.complex128))
    band = curve.default_band() if band is None else band
    dist = distance_to_curve(curve, ws)
    out = [None] * len(ws)
    p = curve.points
    chunk = max(1, 2_000_000 // len(p))
    for lo in range(0, len(ws), chunk):
        w = ws[lo:lo + chunk, None]
        with np.errstate(all="ignore"):
            steps = np.angle((p[1:] - w) / (p[:-1] - w))
        turns = steps.sum(axis=1) / TWO_PI
        smooth = np.abs(steps).max(axis=1) < ANGLE_GATE
        for k in range(len(w)):
            i = lo + k
            if dist[i] <= band:
                continue
            if smooth[k] and abs(turns[k] - round(turns[k])) < WINDING_RESIDUAL:
                out[i] = int(round(turns[k]))
            else:
                try:
                    out[i] = winding_number(curve, ws[i], band)
                except TooCloseToCurve:
                    out[i] = None
    return out


class Location(str, Enum):
    INSIDE = "Inside"
    OUTSIDE = "Outside"
    NEAR_BOUNDARY = "NearBoundary"


@dataclass(frozen=True)
class PointLocation:
    kind: Location
    distance: float


def locate_point(curve: JordanCurve, w, band: float | None = None) -> PointLocation:
    band = curve.default_band() if band is None else band
    d = float(distance_to_curve(curve, complex(w)))
    if d <= band:
        return PointLocation(Location.NEAR_BOUNDARY, d)
    try:
        wn = winding_number(curve, w, band)
    except TooCloseToCurve:
        return PointLocation(Location.NEAR_BOUNDARY, d)
    if wn == 1:
        return PointLocation(Location.INSIDE, d)
    if wn == 0:
        return PointLocation(Location.OUTSIDE, d)
    return PointLocation(Location.NEAR_BOUNDARY, d)


def inward_offset(curve: JordanCurve, eps: float, n: int | None = None) -> JordanCurve:
    """The curve moved a distance ``eps`` along its inward normal.

    Used to count preimages strictly inside a face when ``w`` lies on the
    image of the boundary. ``curve`` must be positively oriented.
    """
    if curve.orientation < 0:
        raise GeometryError("inward_offset expects a positively oriented curve")
    base = curve.param

    class _Offset(Parametrization):
        def point(self, t):
            tan = base.tangent(t)
            return base.point(t) + eps * 1j * tan / np.abs(tan)

        def tangent(self, t, h=1e-7):
            return (self.point(np.asarray(t) + h) - self.point(np.asarray(t) - h)) / (2 * h)

    m = n or curve.n_samples - 1
    return JordanCurve.from_param(_Offset(), m, check=False)


def signed_side(curve: JordanCurve, ws):
    """Signed offset of each ``w`` from the curve: positive on the left.

    For a positively oriented curve, left is the bounded face. Accurate for
    points close to the curve, where polyline winding is unreliable.
    """
    ws_arr = np.atleast_1d(np.asarray(ws, dtype=np.complex128))
    t = nearest_param(curve, ws_arr)
    t = np.atleast_1d(t)
    p = curve.param.point(t)
    tan = curve.param.tangent(t)
    return ((ws_arr - p) * np.conj(tan)).imag / np.abs(tan)
