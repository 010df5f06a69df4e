"""Trace the components of f^{-1}(Gamma) by predictor-corrector continuation.

Points are tracked as solutions of ``f(z) = gamma(theta)`` while ``theta``
(the curve parameter of Gamma, unwrapped) advances. Near a critical point
whose value lies on Gamma the curve branches; there the local edges are
found by sampling ``f`` on a small circle and each one is traced in turn.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import expr
from .config import DEFAULT_TOLERANCES, ToleranceConfig
from .errors import StepCollapse
from .geometry import JordanCurve, nearest_param, signed_side
from .locator import Kind, Rect, isolate, location_key

MAX_POINTS_PER_EDGE = 200_000
CORRECTOR_ITERS = 8
BRANCH_SAMPLES = 720


@dataclass(frozen=True)
class TraceConfig:
    """Continuation settings; ``None`` entries take geometric defaults."""

    trace_tol: float | None = None         # 1e-9 * diam(Gamma)
    closure_tol: float | None = None       # 1e-6 * diag(box)
    initial_step: float = 1e-3
    max_step: float | None = None          # 1e-2 * diag(box), bound on |dz|
    branch_threshold: float | None = None  # 1e-4 * median |f'| at the seeds


@dataclass
class Edge:
    points: np.ndarray
    thetas: np.ndarray
    start: int | None = None   # node id or None
    end: int | None = None
    closed: bool = False
    exits: bool = False


@dataclass
class PathComponent:
    points: np.ndarray
    closed: bool
    branch_points: list
    parameter_track: np.ndarray
    edges: list = field(default_factory=list)
    branch_degrees: list = field(default_factory=list)


@dataclass
class _Node:
    location: complex
    radius: float
    slots: list        # [(angle, start_point, theta)]
    used: list         # bool per slot

    @property
    def degree(self):
        return len(self.slots)


def seed_points(f: expr.FunctionDef, gamma: JordanCurve, box: Rect,
                tol: ToleranceConfig = DEFAULT_TOLERANCES):
    """Solutions of ``f(z) = gamma(0)`` in ``box``."""
    g0 = complex(gamma.param.point(0.0))
    recs = isolate(f.shifted(g0), box, tol.locator)
    return sorted((r.location for r in recs if r.kind is Kind.ZERO), key=location_key)


class _Tracer:
    def __init__(self, f, gamma, box, tol, cfg):
        self.f, self.gamma, self.box, self.tol = f, gamma, box, tol
        self.cfg = cfg
        self.trace_tol = cfg.trace_tol or tol.trace_tol or 1e-9 * gamma.diameter
        self.closure_tol = cfg.closure_tol or 1e-6 * box.diag
        self.max_step = cfg.max_step or 1e-2 * box.diag
        self.branch_threshold = 0.0
        self.nodes: list[_Node] = []
        self.edges: list[Edge] = []
        self.zero_hits: list[complex] = []

    # -- primitives -----------------------------------------------------------

    def g(self, theta):
        return complex(self.gamma.param.point(theta))

    def dg(self, theta):
        return complex(self.gamma.param.tangent(theta))

    def fz(self, z):
        return complex(self.f(z))

    def dfz(self, z):
        return complex(self.f.derivative(z))

    def correct(self, z, target):
        for it in range(CORRECTOR_ITERS):
            r = self.fz(z) - target
            if abs(r) <= self.trace_tol:
                return z, it
            d = self.dfz(z)
            if d == 0 or not math.isfinite(abs(r)):
                return None, it
            z = z - r / d
        if abs(self.fz(z) - target) <= self.trace_tol:
            return z, CORRECTOR_ITERS
        return None, CORRECTOR_ITERS

    # -- marching -------------------------------------------------------------

    def march(self, z, theta, direction, origin_node=None, closable=True):
        """Follow the preimage curve from ``z`` until it closes, exits or branches.

        Returns ``(edge, stop)`` where stop is ``"closed"``, ``"exit"`` or a
        node id.
        """
        z0, th0 = z, theta
        pts, ths = [z], [theta]
        dth = self.cfg.initial_step * direction
        dth_max = 0.05
        left_origin = origin_node is None
        last_dz = None
        while True:
            if len(pts) > MAX_POINTS_PER_EDGE:
                raise StepCollapse("edge exceeds the point budget")
            # land exactly on integer parameter offsets so closure can be tested
            target_th = math.floor(theta) + 1 if direction > 0 else math.ceil(theta) - 1
            step = dth
            hit_integer = False
            if (direction > 0 and theta + step >= target_th) or (direction < 0 and theta + step <= target_th):
                step = target_th - theta
                hit_integer = True
            dfz = self.dfz(z)
            dz = self.dg(theta) * step / dfz
            if not math.isfinite(abs(dz)) or abs(dz) > self.max_step:
                dth = dth * 0.5 if math.isfinite(abs(dz)) else dth * 0.1
                if abs(dth) < 1e-14:
                    raise StepCollapse(f"step underflow near {z!r}")
                continue
            new_th = theta + step
            zc, iters = self.correct(z + dz, self.g(new_th))
            sharp = (zc is not None and last_dz is not None and zc != z
                     and abs(np.angle((zc - z) / last_dz)) > np.pi / 4
                     and abs(zc - z) > 100 * self.trace_tol)
            if (zc is None or sharp or abs(zc - z) > self.max_step
                    or abs(zc - (z + dz)) > 0.5 * abs(dz) + 10 * self.trace_tol):
                dth *= 0.5
                if abs(dth) < 1e-14:
                    if left_origin and abs(dfz) < 100 * self.branch_threshold:
                        return Edge(np.array(pts), np.array(ths)), self.branch_at(z, pts)
                    raise StepCollapse(f"step underflow near {z!r}")
                continue
            if zc != z:
                last_dz = zc - z
            z, theta = zc, new_th
            pts.append(z)
            ths.append(theta)
            if iters <= 2:
                dth = math.copysign(min(abs(dth) * 1.5, dth_max), dth)
            if hit_integer:
                self.zero_hits.append(z)
                if closable and abs(z - z0) < self.closure_tol and abs(theta - th0) > 0.5:
                    pts[-1] = z0
                    return Edge(np.array(pts), np.array(ths), closed=True), "closed"
            if not bool(self.box.contains(z)):
                return Edge(np.array(pts), np.array(ths), exits=True), "exit"
            # arrival at a known branch point
            for nid, node in enumerate(self.nodes):
                dist = abs(z - node.location)
                if nid == origin_node and not left_origin:
                    if dist > 2 * node.radius:
                        left_origin = True
                    continue
                if dist < node.radius:
                    return Edge(np.array(pts), np.array(ths)), nid
            if left_origin and abs(self.dfz(z)) < self.branch_threshold:
                return Edge(np.array(pts), np.array(ths)), self.branch_at(z, pts)

    # -- branch points --------------------------------------------------------

    def locate_critical(self, z, pts):
        step = abs(pts[-1] - pts[-2]) if len(pts) > 1 else 1e-6 * self.box.diag
        half = max(8 * step, 1e-9 * self.box.diag)
        df = self.f.derivative_function
        for _ in range(6):
            box = Rect(z - complex(half, half), z + complex(half, half))
            try:
                recs = [r for r in isolate(df, box, self.tol.locator) if r.kind is Kind.ZERO]
            except Exception:
                recs = []
            if recs:
                best = min(recs, key=lambda r: abs(r.location - z))
                return best.location, best.order
            half *= 3
        return None, 0

    def branch_at(self, z, pts):
        for nid, node in enumerate(self.nodes):
            if abs(z - node.location) < 2 * node.radius:
                return nid
        c, m = self.locate_critical(z, pts)
        if c is None:
            raise StepCollapse(f"|f'| vanishes near {z!r} but no critical point was found")
        fc = self.fz(c)
        rho = max(2 * abs(z - c), 1e-7 * self.box.diag)
        target = 1e-5 * self.gamma.diameter
        phi = 2 * np.pi * (np.arange(BRANCH_SAMPLES) + 0.5) / BRANCH_SAMPLES
        for _ in range(40):
            circ = c + rho * np.exp(1j * phi)
            vals = self.f(circ)
            if np.max(np.abs(vals - fc)) >= target or rho > 1e-2 * self.box.diag:
                break
            rho *= 2
        side = signed_side(self.gamma, vals) > 0
        slots = []
        changes = np.nonzero(side != np.roll(side, -1))[0]
        for j in changes:
            a, b = phi[j], phi[j] + (phi[1] - phi[0])
            sa = side[j]
            for _ in range(40):
                mid = 0.5 * (a + b)
                sm = bool(signed_side(self.gamma, self.f(c + rho * np.exp(1j * mid)))[0] > 0)
                if sm == sa:
                    a = mid
                else:
                    b = mid
            q = c + rho * np.exp(1j * 0.5 * (a + b))
            th = float(nearest_param(self.gamma, self.fz(q)))
            zq, _ = self.correct(q, self.g(th))
            if zq is None:
                raise StepCollapse(f"could not start an edge at the branch point {c!r}")
            slots.append((float(np.angle(zq - c)), zq, th))
        node = _Node(c, rho, slots, [False] * len(slots))
        self.nodes.append(node)
        return len(self.nodes) - 1

    def consume(self, nid, z):
        node = self.nodes[nid]
        if not node.slots:
            return
        ang = np.angle(z - node.location)
        diffs = [abs(np.angle(np.exp(1j * (ang - a)))) for a, _, _ in node.slots]
        order = np.argsort(diffs)
        for k in order:
            if not node.used[k]:
                node.used[k] = True
                return

    # -- driver ---------------------------------------------------------------

    def finish_edge(self, edge, start, stop):
        edge.start = start
        if isinstance(stop, int):
            edge.end = stop
            node = self.nodes[stop]
            self.consume(stop, edge.points[-1])
            th = float(nearest_param(self.gamma, self.fz(node.location)))
            # unwrap to stay close to the last tracked parameter
            last = edge.thetas[-1]
            th = th + round(last - th)
            edge.points = np.append(edge.points, node.location)
            edge.thetas = np.append(edge.thetas, th)
        self.edges.append(edge)

    def drain_nodes(self):
        progress = True
        while progress:
            progress = False
            for nid, node in enumerate(self.nodes):
                for k, (ang, zq, th) in enumerate(node.slots):
                    if node.used[k]:
                        continue
                    node.used[k] = True
                    progress = True
                    tangent = self.dg(th) / self.dfz(zq)
                    direction = 1 if (np.conj(zq - node.location) * tangent).real > 0 else -1
                    edge, stop = self.march(zq, th, direction, origin_node=nid, closable=False)
                    head = node.location
                    edge.points = np.insert(edge.points, 0, head)
                    th0 = float(nearest_param(self.gamma, self.fz(head)))
                    edge.thetas = np.insert(edge.thetas, 0, th0 + round(th - th0))
                    if stop == "exit":
                        self.finish_edge(edge, nid, None)
                    else:
                        self.finish_edge(edge, nid, stop)

    def run(self, seeds):
        for s in seeds:
            if any(abs(s - h) <= self.closure_tol for h in self.zero_hits):
                continue
            fwd, stop_f = self.march(s, 0.0, +1)
            if stop_f == "closed":
                self.finish_edge(fwd, None, None)
                continue
            bwd, stop_b = self.march(s, 0.0, -1, closable=False)
            edge = Edge(np.concatenate([bwd.points[::-1], fwd.points[1:]]),
                        np.concatenate([bwd.thetas[::-1], fwd.thetas[1:]]),
                        exits=fwd.exits or bwd.exits)
            start = stop_b if isinstance(stop_b, int) else None
            if start is not None:
                self.consume(start, bwd.points[-1])
                node = self.nodes[start]
                edge.points = np.insert(edge.points, 0, node.location)
                th0 = float(nearest_param(self.gamma, self.fz(node.location)))
                edge.thetas = np.insert(edge.thetas, 0, th0 + round(edge.thetas[0] - th0))
            self.finish_edge(edge, start, stop_f if isinstance(stop_f, int) else None)
            self.drain_nodes()
        self.drain_nodes()
        return self.components()

    def components(self):
        parent = list(range(len(self.edges)))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        by_node = {}
        for i, e in enumerate(self.edges):
            for nid in (e.start, e.end):
                if nid is not None:
                    by_node.setdefault(nid, []).append(i)
        for members in by_node.values():
            for i in members[1:]:
                parent[find(i)] = find(members[0])
        groups = {}
        for i in range(len(self.edges)):
            groups.setdefault(find(i), []).append(i)
        comps = []
        for members in groups.values():
            edges = [self.edges[i] for i in members]
            nodes = sorted({n for e in edges for n in (e.start, e.end) if n is not None})
            real_nodes = [n for n in nodes if self.nodes[n].degree >= 4]
            closed = not any(e.exits for e in edges)
            comps.append(PathComponent(
                points=np.concatenate([e.points for e in edges]),
                closed=closed,
                branch_points=[self.nodes[n].location for n in real_nodes],
                parameter_track=np.mod(np.concatenate([e.thetas for e in edges]), 1.0),
                edges=edges,
                branch_degrees=[self.nodes[n].degree for n in real_nodes],
            ))
        comps.sort(key=lambda c: (float(np.min(c.points.real)), float(np.min(c.points.imag))))
        return comps


def trace_components(f: expr.FunctionDef, gamma: JordanCurve, box: Rect,
                     tol: ToleranceConfig = DEFAULT_TOLERANCES,
                     cfg: TraceConfig | None = None):
    """Components of ``f^{-1}(gamma)`` that meet ``box``, traced from the seeds."""
    cfg = cfg or TraceConfig()
    seeds = seed_points(f, gamma, box, tol)
    tracer = _Tracer(f, gamma, box, tol, cfg)
    if not seeds:
        return []
    if cfg.branch_threshold is not None:
        tracer.branch_threshold = cfg.branch_threshold
    else:
        tracer.branch_threshold = 1e-4 * float(np.median(np.abs(f.derivative(np.array(seeds)))))
    return tracer.run(seeds)
