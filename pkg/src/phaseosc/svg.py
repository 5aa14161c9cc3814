"""Minimal deterministic SVG writer (no plotting dependency)."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from . import __version__


def _f(x: float) -> str:
    s = f"{float(x):.4f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


class SvgCanvas:
    """Maps data coordinates in ``bounds = (xmin, xmax, ymin, ymax)`` onto a pixel box (y up)."""

    def __init__(self, bounds, width: int = 600, height: int = 600, margin: int = 30, title: str = ""):
        xmin, xmax, ymin, ymax = (float(b) for b in bounds)
        if xmax <= xmin or ymax <= ymin:
            raise ValueError("degenerate plot bounds")
        self.bounds = (xmin, xmax, ymin, ymax)
        self.width, self.height, self.margin = width, height, margin
        self.title = title
        self._items: list[str] = []

    def _xy(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        xmin, xmax, ymin, ymax = self.bounds
        sx = (self.width - 2 * self.margin) / (xmax - xmin)
        sy = (self.height - 2 * self.margin) / (ymax - ymin)
        s = min(sx, sy)
        px = self.margin + (pts[:, 0] - xmin) * s
        py = self.height - self.margin - (pts[:, 1] - ymin) * s
        return np.column_stack([px, py])

    def polyline(self, pts, stroke="black", width=1.0, dash: str = "", opacity: float = 1.0):
        p = self._xy(pts)
        if len(p) < 2:
            return
        coords = " ".join(f"{_f(x)},{_f(y)}" for x, y in p)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        if opacity != 1.0:
            extra += f' stroke-opacity="{_f(opacity)}"'
        self._items.append(f'<polyline points="{coords}" fill="none" stroke="{stroke}" '
                           f'stroke-width="{_f(width)}"{extra}/>')

    def circle(self, pt, r=3.0, fill="black", stroke="black"):
        (x, y), = self._xy(pt)
        self._items.append(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="{_f(r)}" fill="{fill}" stroke="{stroke}"/>')

    def triangle(self, pt, size=4.0, fill="black"):
        (x, y), = self._xy(pt)
        pts = [(x, y - size), (x - size, y + size), (x + size, y + size)]
        self._items.append(f'<polygon points="{" ".join(f"{_f(a)},{_f(b)}" for a, b in pts)}" fill="{fill}"/>')

    def square(self, pt, size=3.5, fill="black", stroke="black"):
        (x, y), = self._xy(pt)
        self._items.append(f'<rect x="{_f(x - size)}" y="{_f(y - size)}" width="{_f(2 * size)}" '
                           f'height="{_f(2 * size)}" fill="{fill}" stroke="{stroke}"/>')

    def text(self, pt, s: str, size=10):
        (x, y), = self._xy(pt)
        self._items.append(f'<text x="{_f(x)}" y="{_f(y)}" font-size="{size}">{escape(s)}</text>')

    def glyph(self, pt, stability: str):
        """Equilibrium marker: triangle saddle, open circle centre, filled circle sink, square source."""
        if stability == "saddle":
            self.triangle(pt)
        elif stability == "centre":
            self.circle(pt, fill="white")
        elif stability == "sink":
            self.circle(pt, fill="black")
        elif stability == "source":
            self.square(pt, fill="white")
        else:
            self.circle(pt, r=2.0, fill="gray", stroke="gray")

    def render(self) -> str:
        head = (f'<?xml version="1.0" encoding="UTF-8"?>\n<!-- phaseosc {__version__} -->\n'
                f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
                f'viewBox="0 0 {self.width} {self.height}">\n')
        title = f"<title>{escape(self.title)}</title>\n" if self.title else ""
        return head + title + "\n".join(self._items) + "\n</svg>\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.render())
