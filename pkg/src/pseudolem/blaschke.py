"""Finite Blaschke products and Blaschke-ratio models on the unit disk."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import expr
from .config import DEFAULT_TOLERANCES, ToleranceConfig
from .errors import InvalidConstant, InvalidZero, NotBoundaryUnimodular
from .locator import Kind, Rect, _isolate_with_inflation

UNIMODULAR_TOL = 1e-12
POLAR_GRID = 64


@dataclass(frozen=True)
class BlaschkeProduct:
    """``constant * prod (z - a) / (1 - conj(a) z)`` over ``zeros`` (with repetition)."""

    zeros: tuple
    unimodular_constant: complex = 1 + 0j

    @property
    def degree(self) -> int:
        return len(self.zeros)

    def factors(self, z):
        z = np.asarray(z, dtype=np.complex128)
        return [(z - a) / (1 - np.conj(a) * z) for a in self.zeros]

    def __call__(self, z):
        z = np.asarray(z, dtype=np.complex128)
        out = np.full(z.shape, self.unimodular_constant, dtype=np.complex128)
        with np.errstate(all="ignore"):
            for fac in self.factors(z):
                out = out * fac
        return out

    def derivative(self, z):
        z = np.asarray(z, dtype=np.complex128)
        with np.errstate(all="ignore"):
            facs = self.factors(z)
            out = np.zeros(z.shape, dtype=np.complex128)
            for k, a in enumerate(self.zeros):
                term = (1 - abs(a) ** 2) / (1 - np.conj(a) * z) ** 2
                for j, fac in enumerate(facs):
                    if j != k:
                        term = term * fac
                out = out + term
        return self.unimodular_constant * out

    def tree(self) -> expr.Node:
        node = expr.const(self.unimodular_constant)
        for a in self.zeros:
            fac = expr.div(expr.sub(expr.Z, expr.const(a)),
                           expr.sub(expr.ONE, expr.mul(expr.const(np.conj(a)), expr.Z)))
            node = expr.mul(node, fac)
        return node

    def as_function(self) -> expr.FunctionDef:
        return expr.FunctionDef.from_tree(self.tree())


def build(zeros, lam=1 + 0j) -> BlaschkeProduct:
    zs = tuple(complex(a) for a in zeros)
    for a in zs:
        if not abs(a) < 1:
            raise InvalidZero(f"zero {a!r} is not inside the unit disk")
    lam = complex(lam)
    if not math.isfinite(abs(lam)) or abs(abs(lam) - 1) > UNIMODULAR_TOL:
        raise InvalidConstant(f"|lambda| = {abs(lam)!r} is not 1")
    return BlaschkeProduct(zs, lam)


def verify_unimodular(B: BlaschkeProduct, n_samples: int = 1000) -> float:
    """Largest deviation of ``|B|`` from 1 on ``n_samples`` points of the unit circle."""
    theta = 2 * np.pi * np.arange(n_samples) / n_samples
    return float(np.max(np.abs(np.abs(B(np.exp(1j * theta))) - 1.0)))


@dataclass(frozen=True)
class RatioModel:
    """``constant * numerator / denominator``; the unimodular constant is kept
    separately rather than folded into the numerator."""

    numerator: BlaschkeProduct
    denominator: BlaschkeProduct
    constant: complex
    max_model_error: float

    def __call__(self, z):
        with np.errstate(all="ignore"):
            return self.constant * self.numerator(z) / self.denominator(z)

    def as_function(self) -> expr.FunctionDef:
        body = expr.mul(expr.const(self.constant),
                        expr.div(self.numerator.tree(), self.denominator.tree()))
        return expr.FunctionDef.from_tree(body)

    def to_dict(self):
        return {
            "zeros": [[a.real, a.imag] for a in self.numerator.zeros],
            "poles": [[a.real, a.imag] for a in self.denominator.zeros],
            "lambda": [self.constant.real, self.constant.imag],
            "max_model_error": self.max_model_error,
        }


def ratio(zeros, poles, lam=1 + 0j) -> RatioModel:
    """Synthesize ``lam * A / B`` from zero and pole lists (model error 0)."""
    A, B = build(zeros), build(poles)
    lam = complex(lam)
    if abs(abs(lam) - 1) > UNIMODULAR_TOL:
        raise InvalidConstant(f"|lambda| = {abs(lam)!r} is not 1")
    return RatioModel(A, B, lam, 0.0)


def _chordal(a, b):
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    with np.errstate(all="ignore"):
        fa, fb = np.isfinite(a), np.isfinite(b)
        d = 2 * np.abs(a - b) / np.sqrt((1 + np.abs(a) ** 2) * (1 + np.abs(b) ** 2))
        d = np.where(fa & ~fb, 2 / np.sqrt(1 + np.abs(a) ** 2), d)
        d = np.where(~fa & fb, 2 / np.sqrt(1 + np.abs(b) ** 2), d)
        d = np.where(~fa & ~fb, 0.0, d)
        # both huge but finite: compare on the sphere through reciprocals
        big = fa & fb & (np.abs(a) > 1e150) & (np.abs(b) > 1e150)
        d = np.where(big, 2 * np.abs(1 / a - 1 / b), d)
    return d


def polar_grid(n: int = POLAR_GRID):
    r = (np.arange(n) + 1) / n
    theta = 2 * np.pi * np.arange(n) / n
    return (r[:, None] * np.exp(1j * theta[None, :])).ravel()


def fit_ratio_model(f: expr.FunctionDef, tol: ToleranceConfig = DEFAULT_TOLERANCES,
                    n_boundary: int = 512) -> RatioModel:
    """Recover ``f = lambda * A / B`` on the closed unit disk.

    Requires ``|f| = 1`` on the unit circle (within ``tol.model_band``);
    zeros and poles come from the locator, ``lambda`` from one reference
    point, and the fit is then checked on a polar grid.
    """
    theta = 2 * np.pi * np.arange(n_boundary) / n_boundary
    vals = f(np.exp(1j * theta))
    if not np.all(np.isfinite(vals)):
        raise NotBoundaryUnimodular("f has a pole on the unit circle")
    dev = float(np.max(np.abs(np.abs(vals) - 1.0)))
    if dev > tol.model_band:
        raise NotBoundaryUnimodular(f"max ||f| - 1| on the circle is {dev:.3g}")

    recs = _isolate_with_inflation(f, Rect(-1.0137 - 1.0113j, 1.0119 + 1.0141j), tol.locator)
    zeros, poles = [], []
    for r in recs:
        if abs(r.location) < 1:
            (zeros if r.kind is Kind.ZERO else poles).extend([r.location] * r.order)
    A, B = build(zeros), build(poles)

    lam = None
    singular = zeros + poles
    for z0 in [0j, 0.1, 0.1j, -0.1, -0.1j, 0.3 + 0.2j, -0.2 + 0.3j]:
        if all(abs(z0 - s) > 1e-3 for s in singular):
            with np.errstate(all="ignore"):
                lam = complex(f(z0) * B(z0) / A(z0))
            if math.isfinite(abs(lam)) and lam != 0:
                break
    lam = lam / abs(lam)
    model = RatioModel(A, B, lam, 0.0)
    grid = polar_grid()
    err = float(np.max(_chordal(f(grid), model(grid))))
    return RatioModel(A, B, lam, err)
