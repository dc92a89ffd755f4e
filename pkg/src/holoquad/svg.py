"""Static SVG 1.1 figures: the quadrilateral with its tree, and simple line plots."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .geometry import QuadGeometry
from .gradtree import GradientTree

WIDTH, HEIGHT, PAD = 480, 360, 50
COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


class _Frame:
    """Affine map from data coordinates onto the drawing area (y flipped)."""

    def __init__(self, xs, ys):
        x0, x1 = float(np.min(xs)), float(np.max(xs))
        y0, y1 = float(np.min(ys)), float(np.max(ys))
        if x1 == x0:
            x0, x1 = x0 - 1.0, x1 + 1.0
        if y1 == y0:
            y0, y1 = y0 - 1.0, y1 + 1.0
        self.x0, self.x1, self.y0, self.y1 = x0, x1, y0, y1

    def __call__(self, x, y):
        u = PAD + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2 * PAD)
        v = HEIGHT - PAD - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2 * PAD)
        return f"{u:.2f},{v:.2f}"


def _document(body: list, title: str) -> str:
    head = (f'<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">\n'
            f'<title>{escape(title)}</title>\n'
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>\n'
            f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>\n')
    return head + "\n".join(body) + "\n</svg>\n"


def _axes(frame: _Frame, xlabel: str, ylabel: str) -> list:
    out = [f'<rect x="{PAD}" y="{PAD}" width="{WIDTH - 2 * PAD}" height="{HEIGHT - 2 * PAD}" '
           f'fill="none" stroke="black"/>']
    for k in range(5):
        fx = frame.x0 + k / 4 * (frame.x1 - frame.x0)
        fy = frame.y0 + k / 4 * (frame.y1 - frame.y0)
        u = PAD + k / 4 * (WIDTH - 2 * PAD)
        v = HEIGHT - PAD - k / 4 * (HEIGHT - 2 * PAD)
        out.append(f'<text x="{u:.1f}" y="{HEIGHT - PAD + 15}" text-anchor="middle" '
                   f'font-size="10">{fx:.3g}</text>')
        out.append(f'<text x="{PAD - 4}" y="{v + 3:.1f}" text-anchor="end" font-size="10">{fy:.3g}</text>')
    out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" text-anchor="middle" '
               f'font-size="12">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{HEIGHT / 2}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 14 {HEIGHT / 2})">{escape(ylabel)}</text>')
    return out


def line_plot(xs, ys, title: str, xlabel: str, ylabel: str) -> str:
    """Polyline with markers; non-finite points are dropped."""
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    keep = np.isfinite(xs) & np.isfinite(ys)
    xs, ys = xs[keep], ys[keep]
    if xs.size == 0:
        return _document([], title + " (no finite data)")
    frame = _Frame(xs, ys)
    body = _axes(frame, xlabel, ylabel)
    pts = " ".join(frame(x, y) for x, y in zip(xs, ys))
    body.append(f'<polyline points="{pts}" fill="none" stroke="{COLOURS[0]}" stroke-width="1.5"/>')
    for x, y in zip(xs, ys):
        u, v = frame(x, y).split(",")
        body.append(f'<circle cx="{u}" cy="{v}" r="2.5" fill="{COLOURS[0]}"/>')
    return _document(body, title)


def quad_and_tree(geom: QuadGeometry, tree: GradientTree, title: str) -> str:
    """The eps-quadrilateral with the image of its gradient tree on the real axis.

    External edges run from p_i to their junction; the internal edge joins the
    two junctions.  Edges are drawn on y = 0, where the tree lives.
    """
    v = np.asarray(geom.vertices)
    xs = np.concatenate([v.real, [e.start for e in tree.edges], [e.end for e in tree.edges]])
    ys = np.concatenate([v.imag, [0.0]])
    span = max(float(np.ptp(xs)), float(np.ptp(ys)), 1e-12)
    cx, cy = 0.5 * (xs.max() + xs.min()), 0.5 * (ys.max() + ys.min())
    frame = _Frame(np.array([cx - 0.6 * span, cx + 0.6 * span]),
                   np.array([cy - 0.45 * span, cy + 0.45 * span]))
    body = [f'<polygon points="{" ".join(frame(z.real, z.imag) for z in v)}" '
            f'fill="#eef3fb" stroke="black" stroke-width="1.2"/>']
    for k, z in enumerate(v):
        u, w = frame(z.real, z.imag).split(",")
        body.append(f'<text x="{u}" y="{float(w) - 6:.2f}" font-size="11">x{k + 1}</text>')
    for k, edge in enumerate(tree.edges):
        colour = COLOURS[k % len(COLOURS)]
        a, b = frame(edge.start, 0.0), frame(edge.end, 0.0)
        body.append(f'<polyline points="{a} {b}" stroke="{colour}" stroke-width="2.5" '
                    f'stroke-opacity="0.7" fill="none"/>')
        name = "int" if edge.kind == "internal" else f"e{edge.index}"
        u, w = frame(edge.end, 0.0).split(",")
        body.append(f'<circle cx="{u}" cy="{w}" r="3" fill="{colour}"/>')
        body.append(f'<text x="{u}" y="{float(w) + 14 + 10 * (k % 2):.2f}" font-size="10" '
                    f'fill="{colour}">{name}</text>')
    return _document(body, title)


def write(path, text: str) -> Path:
    p = Path(path)
    p.write_text(text, encoding="utf-8")
    return p


def sweep_figures(prefix: str, geom: QuadGeometry, tree: GradientTree, records) -> list:
    """Write the three sweep figures and return their paths."""
    eps = np.array([r.epsilon for r in records])
    z4 = np.array([r.z4 for r in records])
    lz4 = np.array([r.log_z4 for r in records])
    l1 = np.array([r.log_one_minus_z4 for r in records])
    # plot whichever side collapses
    use = lz4 if lz4[-1] <= l1[-1] else l1
    name = "log z4" if use is lz4 else "log(1 - z4)"
    return [
        write(f"{prefix}_quad.svg", quad_and_tree(geom, tree, f"quadrilateral and tree, eps={geom.epsilon:g}")),
        write(f"{prefix}_z4.svg", line_plot(np.log10(eps), z4, "z4 against eps", "log10 eps", "z4")),
        write(f"{prefix}_logz4.svg", line_plot(1.0 / eps, use, f"{name} against 1/eps", "1/eps", name)),
    ]

