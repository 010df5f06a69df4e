"""Isolate zeros, poles and critical points in a rectangle.

Poles are located first: the only places a parsed expression can blow up
are zeros of its denominator factors, which are isolated recursively and
then classified by the winding of ``f`` on a small circle. With the poles
known, the winding of ``f`` around a cell boundary plus the pole orders
inside the cell is the exact zero count of that cell, so empty cells can be
discarded and the rest are split (quadtree) until each holds one cluster.
Clusters are refined by Newton's method using the cluster multiplicity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache

import numpy as np

from . import expr
from .errors import BoundaryHit, ConfigError, UnresolvedCluster, UnsupportedOperation
from .geometry import GateFailure, WINDING_RESIDUAL, adaptive_turns, distance_to_curve

RECT_SAMPLES_PER_SIDE = 16
CIRCLE_SAMPLES = 32
SPLIT_RETRIES = 8
CLUSTER_RADII_SIMPLE = (1e-6, 1e-4, 1e-2, 0.25)
CLUSTER_RADII_MULTIPLE = (1e-6, 1e-5, 1e-4, 1e-3)


@dataclass(frozen=True)
class Rect:
    lo: complex
    hi: complex

    def __post_init__(self):
        lo, hi = complex(self.lo), complex(self.hi)
        if not (lo.real < hi.real and lo.imag < hi.imag):
            raise ConfigError(f"degenerate rectangle {lo}..{hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def from_bounds(cls, x0, x1, y0, y1):
        return cls(complex(x0, y0), complex(x1, y1))

    @property
    def width(self):
        return self.hi.real - self.lo.real

    @property
    def height(self):
        return self.hi.imag - self.lo.imag

    @property
    def diag(self):
        return abs(self.hi - self.lo)

    @property
    def center(self):
        return 0.5 * (self.lo + self.hi)

    def contains(self, z, margin=0.0):
        z = np.asarray(z)
        return ((z.real > self.lo.real + margin) & (z.real < self.hi.real - margin)
                & (z.imag > self.lo.imag + margin) & (z.imag < self.hi.imag - margin))

    def edge_distance(self, z):
        z = np.asarray(z)
        return np.minimum.reduce([np.abs(z.real - self.lo.real), np.abs(z.real - self.hi.real),
                                  np.abs(z.imag - self.lo.imag), np.abs(z.imag - self.hi.imag)])

    def inflate(self, d):
        return Rect(self.lo - complex(d, d), self.hi + complex(d, d))

    def corners(self):
        lo, hi = self.lo, self.hi
        return np.array([lo, complex(hi.real, lo.imag), hi, complex(lo.real, hi.imag), lo])

    def split(self, at):
        lo, hi = self.lo, self.hi
        return [Rect(lo, at),
                Rect(complex(at.real, lo.imag), complex(hi.real, at.imag)),
                Rect(at, hi),
                Rect(complex(lo.real, at.imag), complex(at.real, hi.imag))]

    def as_list(self):
        return [[self.lo.real, self.lo.imag], [self.hi.real, self.hi.imag]]


class Kind(str, Enum):
    ZERO = "Zero"
    POLE = "Pole"
    CRITICAL = "CriticalPoint"


@dataclass(frozen=True)
class ZeroPoleRecord:
    location: complex
    order: int
    kind: Kind
    residual: float


@dataclass(frozen=True)
class LocatorConfig:
    """Subdivision and refinement settings.

    ``min_cell`` of ``None`` means ``1e-8`` times the box diagonal.
    """

    min_cell: float | None = None
    max_depth: int = 48
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    seed: int = 0
    boundary_rounds: int = 30

    def __post_init__(self):
        if self.min_cell is not None and not self.min_cell > 0:
            raise ConfigError("min_cell must be positive")
        for name in ("max_depth", "newton_tol", "newton_max_iter", "boundary_rounds"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")


DEFAULT_CONFIG = LocatorConfig()


class _EdgeTrouble(Exception):
    """A zero or pole sits (numerically) on a cell edge."""


# ---------------------------------------------------------------------------
# windings on rectangles and circles


def _rect_turns(f, rect: Rect, rounds: int):
    c = rect.corners()
    d = np.diff(c)

    def path(s):
        k = np.clip(np.floor(s).astype(np.int64), 0, 3)
        return c[k] + (s - k) * d[k]

    def dh(s):
        k = np.clip(np.floor(s).astype(np.int64), 0, 3)
        return f.derivative(path(s)) * d[k]

    s = np.linspace(0.0, 4.0, 4 * RECT_SAMPLES_PER_SIDE + 1)
    return adaptive_turns(lambda s_: f(path(s_)), s, max_rounds=rounds, dh=dh)


def _circle_turns(f, center, radius, rounds: int):
    def path(s):
        return center + radius * np.exp(2j * math.pi * s)

    def dh(s):
        return f.derivative(path(s)) * 2j * math.pi * radius * np.exp(2j * math.pi * s)

    s = np.linspace(0.0, 1.0, CIRCLE_SAMPLES + 1)
    return adaptive_turns(lambda s_: f(path(s_)), s, max_rounds=rounds, dh=dh)


def _pole_order_inside(poles, inside_mask):
    return sum(order for (p, order), m in zip(poles, inside_mask) if m)


def _cell_count(f, rect: Rect, poles, rounds, pole_clearance):
    """Zero count of ``f`` inside ``rect`` (winding plus enclosed pole orders)."""
    if poles:
        locs = np.array([p for p, _ in poles])
        on_box = rect.contains(locs, -pole_clearance)
        if np.any(on_box & (rect.edge_distance(locs) <= pole_clearance)):
            raise _EdgeTrouble("pole near a cell edge")
        inside = rect.contains(locs)
    else:
        inside = []
    try:
        res = _rect_turns(f, rect, rounds)
    except GateFailure:
        raise _EdgeTrouble("boundary winding did not resolve") from None
    if res.residual >= WINDING_RESIDUAL:
        raise _EdgeTrouble("winding residual")
    count = res.winding + _pole_order_inside(poles, inside)
    if count < 0:
        raise _EdgeTrouble("negative zero count")
    return count


def _disk_count(f, center, radius, poles, rounds):
    if poles:
        locs = np.array([p for p, _ in poles])
        dist = np.abs(locs - center)
        if np.any(np.abs(dist - radius) <= 1e-3 * radius):
            return None
        inside = dist < radius
    else:
        inside = []
    try:
        res = _circle_turns(f, center, radius, rounds)
    except GateFailure:
        return None
    if res.residual >= WINDING_RESIDUAL:
        return None
    return res.winding + _pole_order_inside(poles, inside)


# ---------------------------------------------------------------------------
# Newton refinement


def _newton(f: expr.FunctionDef, z0: complex, multiplicity: int, cfg: LocatorConfig):
    """Newton iteration on ``f/f'`` scaled by the known multiplicity.

    Returns the converged iterate, or ``None`` when the iteration stalls,
    diverges or runs out of steps.
    """
    z = complex(z0)
    for _ in range(cfg.newton_max_iter):
        fz = complex(f(z))
        if not (math.isfinite(fz.real) and math.isfinite(fz.imag)):
            return None
        if fz == 0:
            return z
        dfz = complex(f.derivative(z))
        if dfz == 0 or not math.isfinite(abs(dfz)):
            return None
        step = multiplicity * fz / dfz
        z = z - step
        if abs(step) <= cfg.newton_tol * max(1.0, abs(z)):
            fz = complex(f(z))
            return z if math.isfinite(abs(fz)) else None
    return None


def _try_cluster(f, cell: Rect, n, poles, cfg: LocatorConfig):
    z = _newton(f, cell.center, n, cfg)
    if z is None or not bool(cell.contains(z)):
        return None
    room = float(cell.edge_distance(z))
    radii = CLUSTER_RADII_SIMPLE if n == 1 else CLUSTER_RADII_MULTIPLE
    for rel in radii:
        r = rel * cell.diag
        if r >= room:
            break
        if _disk_count(f, z, r, poles, cfg.boundary_rounds) == n:
            return z
    return None


# ---------------------------------------------------------------------------
# poles


def _dedupe(points, tol):
    out = []
    for p in points:
        if all(abs(p - q) > tol for q in out):
            out.append(p)
    return out


def _local_order(f, p, r0, rounds):
    """Winding of ``f`` about 0 on the smallest workable circle around ``p``."""
    for rel in (1e-3, 1e-2, 1e-1, 1.0):
        try:
            res = _circle_turns(f, p, r0 * rel, rounds)
        except GateFailure:
            continue
        if res.residual < WINDING_RESIDUAL:
            return res.winding
    return None


@lru_cache(maxsize=512)
def _factor_zeros(node, lo, hi, cfg):
    g = expr.FunctionDef.from_tree(node)
    recs = _isolate_with_inflation(g, Rect(lo, hi), cfg)
    return tuple(r.location for r in recs if r.kind is Kind.ZERO)


def _isolate_with_inflation(f, box, cfg, tries=(0.0, 0.0137, 0.0291, 0.0533)):
    last = None
    for frac in tries:
        try:
            return isolate(f, box.inflate(frac * box.diag) if frac else box, cfg)
        except BoundaryHit as exc:
            last = exc
    raise last


def _pole_list(f: expr.FunctionDef, box: Rect, cfg: LocatorConfig):
    """``[(location, order)]`` for poles of ``f`` in (a margin around) ``box``."""
    factors = expr.singular_factors(f.body)
    if not factors:
        return []
    search = box.inflate(0.05 * box.diag)
    cands = []
    for node in factors:
        cands.extend(_factor_zeros(node, search.lo, search.hi, cfg))
    tol = 1e-7 * box.diag
    cands = _dedupe(sorted(cands, key=lambda c: (c.real, c.imag)), tol)
    poles = []
    for k, p in enumerate(cands):
        others = [abs(p - q) for j, q in enumerate(cands) if j != k]
        r0 = min([0.25 * d for d in others] + [0.01 * box.diag])
        w = _local_order(f, p, r0, cfg.boundary_rounds)
        if w is None:
            raise UnresolvedCluster(f"could not classify singular point {p!r}")
        if w < 0:
            poles.append((p, -w))
        elif _blows_up(f, p, r0):
            raise UnsupportedOperation(f"essential singularity at {p!r}; only meromorphic input is supported")
    return poles


def _blows_up(f, p, r0):
    # a removable point keeps |f| bounded as the circle shrinks; an essential one does not
    t = np.exp(2j * np.pi * np.arange(64) / 64)
    with np.errstate(all="ignore"):
        outer = np.max(np.abs(f(p + r0 * t)))
        inner = np.max(np.abs(f(p + 1e-3 * r0 * t)))
    return not math.isfinite(inner) or inner > 1e8 * max(1.0, outer)


# ---------------------------------------------------------------------------
# public operations


def _min_cell(box, cfg):
    return cfg.min_cell if cfg.min_cell is not None else 1e-8 * box.diag


def _residual(f, z, kind):
    with np.errstate(all="ignore"):
        v = complex(f(z))
    if kind is Kind.POLE:
        if not math.isfinite(abs(v)):
            return 0.0
        return 1.0 / abs(v) if v != 0 else math.inf
    return abs(v) if math.isfinite(abs(v)) else math.inf


def location_key(z):
    # rounding keeps round-off noise (e.g. re = +-1e-17) from reordering points
    return (round(z.real, 9) + 0.0, round(z.imag, 9) + 0.0)


def _sorted(records):
    return sorted(records, key=lambda r: (*location_key(r.location), r.kind.value))


def find_poles(f: expr.FunctionDef, box: Rect, cfg: LocatorConfig | None = None):
    """Poles of ``f`` strictly inside ``box`` as records of kind ``Pole``."""
    cfg = cfg or DEFAULT_CONFIG
    out = []
    for p, order in _pole_list(f, box, cfg):
        if bool(box.contains(p)):
            out.append(ZeroPoleRecord(p, order, Kind.POLE, _residual(f, p, Kind.POLE)))
    return _sorted(out)


def isolate(f: expr.FunctionDef, box: Rect, cfg: LocatorConfig | None = None):
    """All zeros and poles of ``f`` in ``box``, sorted by (re, im)."""
    cfg = cfg or DEFAULT_CONFIG
    poles = _pole_list(f, box, cfg)
    min_cell = _min_cell(box, cfg)
    clearance = 1e-9 * box.diag
    try:
        total = _cell_count(f, box, poles, cfg.boundary_rounds, clearance)
    except _EdgeTrouble as exc:
        raise BoundaryHit(f"zero or pole on the search box boundary ({exc})") from None

    rng = np.random.default_rng(cfg.seed)
    zeros = []
    stack = [(box, total, 0)]
    while stack:
        cell, n, depth = stack.pop()
        if n == 0:
            continue
        z = _try_cluster(f, cell, n, poles, cfg)
        if z is not None:
            zeros.append((z, n))
            continue
        if cell.width < min_cell or depth >= cfg.max_depth:
            if not any(bool(cell.contains(p)) for p, _ in poles):
                # a zero cluster below resolution: one record with summed order
                zeros.append((cell.center, n))
                continue
            raise UnresolvedCluster(f"unresolved cluster of order {n} in cell "
                                    f"{cell.lo}..{cell.hi}", cell=cell)
        children = None
        for attempt in range(SPLIT_RETRIES + 1):
            at = cell.center
            if attempt:
                off = rng.uniform(-0.1, 0.1, size=2)
                at += complex(off[0] * cell.width, off[1] * cell.height)
            kids = cell.split(at)
            try:
                counts = [_cell_count(f, k, poles, cfg.boundary_rounds,
                                      clearance * 1e-3) for k in kids]
            except _EdgeTrouble:
                continue
            if sum(counts) == n:
                children = list(zip(kids, counts))
                break
        if children is None:
            raise BoundaryHit(f"could not split cell {cell.lo}..{cell.hi} cleanly")
        for kid, count in reversed(children):
            stack.append((kid, count, depth + 1))

    records = [ZeroPoleRecord(z, n, Kind.ZERO, _residual(f, z, Kind.ZERO)) for z, n in zeros]
    records += [ZeroPoleRecord(p, o, Kind.POLE, _residual(f, p, Kind.POLE))
                for p, o in poles if bool(box.contains(p))]
    return _sorted(records)


def boundary_winding(f: expr.FunctionDef, box: Rect, cfg: LocatorConfig | None = None) -> int:
    """Winding of ``f`` about 0 along the boundary of ``box``."""
    cfg = cfg or DEFAULT_CONFIG
    try:
        res = _rect_turns(f, box, cfg.boundary_rounds)
    except GateFailure as exc:
        raise BoundaryHit(f"boundary winding failed ({exc.reason})") from None
    return res.winding


def critical_points(f: expr.FunctionDef, box: Rect, cfg: LocatorConfig | None = None):
    """Zeros of ``f'`` in ``box`` (poles of ``f'`` are not reported)."""
    df = f.derivative_function
    recs = isolate(df, box, cfg)
    return [replace(r, kind=Kind.CRITICAL) for r in recs if r.kind is Kind.ZERO]


def critical_points_on_curve(f: expr.FunctionDef, curve, band: float | None = None,
                             cfg: LocatorConfig | None = None):
    """Critical points of ``f`` within ``band`` of ``curve``.

    The search box is the curve's bounding box inflated by ``band`` plus one
    percent of the curve diameter, so that points on the curve stay away
    from the box edges.
    """
    band = 1e-6 * curve.diameter if band is None else band
    lo, hi = curve.bbox
    box = Rect(lo, hi).inflate(band + 0.01 * curve.diameter)
    recs = _isolate_with_inflation(f.derivative_function, box, cfg or DEFAULT_CONFIG)
    out = []
    for r in recs:
        if r.kind is Kind.ZERO and distance_to_curve(curve, r.location) < band:
            out.append(replace(r, kind=Kind.CRITICAL))
    return out
