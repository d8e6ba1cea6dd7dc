"""Tiny SVG writer for diagnostic plots.

Only the handful of primitives the experiment runners need: polylines,
circles, and text labels inside a data-coordinate viewport.  Output is a
plain string assembled with fixed number formatting, so the same data
always produces the same bytes.
"""

from typing import List, Sequence, Tuple

import numpy as np


def _fmt(x: float) -> str:
    return f"{float(x):.6g}"


class SvgCanvas:
    """Fixed-size canvas mapping a data rectangle onto pixel coordinates."""

    def __init__(self, xlim: Tuple[float, float], ylim: Tuple[float, float],
                 width: int = 640, height: int = 480, margin: int = 48):
        self.xlim = xlim
        self.ylim = ylim
        self.width = width
        self.height = height
        self.margin = margin
        self._parts: List[str] = []

    def _map(self, x: float, y: float) -> Tuple[float, float]:
        x0, x1 = self.xlim
        y0, y1 = self.ylim
        sx = (self.width - 2 * self.margin) / max(x1 - x0, 1e-300)
        sy = (self.height - 2 * self.margin) / max(y1 - y0, 1e-300)
        # y axis points up in data coordinates, down in SVG
        return (self.margin + (x - x0) * sx,
                self.height - self.margin - (y - y0) * sy)

    def polyline(self, xs: Sequence[float], ys: Sequence[float],
                 color: str = "black", width: float = 1.5) -> None:
        pts = " ".join("{},{}".format(_fmt(px), _fmt(py))
                       for px, py in (self._map(x, y)
                                      for x, y in zip(xs, ys)))
        self._parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="{_fmt(width)}"/>')

    def circle(self, x: float, y: float, radius_px: float = 3.0,
               color: str = "black", fill: str = "none") -> None:
        px, py = self._map(x, y)
        self._parts.append(
            f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="{_fmt(radius_px)}" '
            f'stroke="{color}" fill="{fill}"/>')

    def text(self, x: float, y: float, label: str,
             size: int = 12, color: str = "black") -> None:
        px, py = self._map(x, y)
        self._parts.append(
            f'<text x="{_fmt(px)}" y="{_fmt(py)}" font-size="{size}" '
            f'fill="{color}" font-family="monospace">{label}</text>')

    def axes(self, xlabel: str = "", ylabel: str = "") -> None:
        x0, x1 = self.xlim
        y0, y1 = self.ylim
        self.polyline([x0, x1], [y0, y0], color="gray", width=1.0)
        self.polyline([x0, x0], [y0, y1], color="gray", width=1.0)
        for t in np.linspace(x0, x1, 5):
            self.text(t, y0 - 0.06 * (y1 - y0), _fmt(t), size=10,
                      color="gray")
        for t in np.linspace(y0, y1, 5):
            self.text(x0 - 0.14 * (x1 - x0), t, _fmt(t), size=10,
                      color="gray")
        if xlabel:
            self.text(0.5 * (x0 + x1), y0 - 0.11 * (y1 - y0), xlabel)
        if ylabel:
            self.text(x0, y1 + 0.02 * (y1 - y0), ylabel)

    def render(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" '
                f'width="{self.width}" height="{self.height}" '
                f'viewBox="0 0 {self.width} {self.height}">')
        bg = (f'<rect width="{self.width}" height="{self.height}" '
              f'fill="white"/>')
        return "\n".join([head, bg] + self._parts + ["</svg>"]) + "\n"

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.render())


def data_limits(values: Sequence[float],
                pad: float = 0.08) -> Tuple[float, float]:
    """Padded (lo, hi) covering `values`, degenerate ranges widened."""
    arr = np.asarray(values, dtype=float)
    lo, hi = float(np.min(arr)), float(np.max(arr))
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    span = hi - lo
    return lo - pad * span, hi + pad * span
