"""Plain SVG 1.1 and CSV artifacts."""
from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

WIDTH = 640
MARGIN = 24
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def _polyline_pieces(points, closed):
    """Split a polyline at non-finite points; close it if asked."""
    pts = np.asarray(points, dtype=np.complex128)
    if closed and len(pts) and pts[0] != pts[-1]:
        pts = np.append(pts, pts[0])
    ok = np.isfinite(pts)
    pieces, cur = [], []
    for p, good in zip(pts, ok):
        if good:
            cur.append(p)
        elif cur:
            pieces.append(np.array(cur))
            cur = []
    if cur:
        pieces.append(np.array(cur))
    return pieces


def render_svg(curves=(), components=(), annotations=(), path=None) -> str:
    """Write an SVG scene and return its text.

    ``curves`` is a list of ``(label, points)``; ``components`` a list of
    objects with ``points`` and ``closed`` (traced components) drawn in a
    second style; ``annotations`` a list of ``(point, label)`` markers.
    """
    layers = [(label, np.asarray(pts, dtype=np.complex128), True) for label, pts in curves]
    layers += [(f"component {k}", np.asarray(c.points), bool(c.closed))
               for k, c in enumerate(components)]
    marks = [(complex(p), str(lbl)) for p, lbl in annotations]

    allpts = [p[np.isfinite(p)] for _, p, _ in layers] + [np.array([p for p, _ in marks])]
    allpts = np.concatenate([a for a in allpts if a.size]) if any(a.size for a in allpts) else np.array([])
    if allpts.size:
        lo = complex(allpts.real.min(), allpts.imag.min())
        hi = complex(allpts.real.max(), allpts.imag.max())
    else:
        lo, hi = -1 - 1j, 1 + 1j
    span = max(hi.real - lo.real, hi.imag - lo.imag, 1e-12)
    scale = (WIDTH - 2 * MARGIN) / span
    height = int(np.ceil((hi.imag - lo.imag) * scale)) + 2 * MARGIN

    def xy(z):
        return _fmt(MARGIN + (z.real - lo.real) * scale), _fmt(height - MARGIN - (z.imag - lo.imag) * scale)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" '
        f'height="{height}" viewBox="0 0 {WIDTH} {height}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{height}" fill="white"/>',
    ]
    for k, (label, pts, closed) in enumerate(layers):
        color = PALETTE[k % len(PALETTE)]
        dash = "" if k < len(curves) else ' stroke-dasharray="4 2"'
        for piece in _polyline_pieces(pts, closed):
            coords = " ".join(",".join(xy(z)) for z in piece)
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} '
                       f'points="{coords}"><title>{_escape(label)}</title></polyline>')
    for p, label in marks:
        x, y = xy(p)
        out.append(f'<circle cx="{x}" cy="{y}" r="4" fill="black"><title>{_escape(label)}</title></circle>')
    # legend
    for k, (label, _, _) in enumerate(layers):
        y = MARGIN + 14 * k
        color = PALETTE[k % len(PALETTE)]
        out.append(f'<line x1="{MARGIN}" y1="{y}" x2="{MARGIN + 16}" y2="{y}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{MARGIN + 20}" y="{y + 4}" font-size="11" font-family="sans-serif">'
                   f'{_escape(label)}</text>')
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_csv(header, rows, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in r])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text
