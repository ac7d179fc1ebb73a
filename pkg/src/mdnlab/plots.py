"""Small SVG writers for box plots, line plots and bar charts.

Every figure is written next to a CSV holding the plotted numbers; the SVG
is optional (``render=False`` writes only the data).
"""
from __future__ import annotations

import csv
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .analysis.attribution import AttributionReport

W, H = 480, 320
LEFT, RIGHT, TOP, BOTTOM = 56, 16, 32, 48
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _f(x: float) -> str:
    return f"{x:.2f}"


class _Canvas:
    def __init__(self, title: str, y_range: tuple[float, float], y_label: str = ""):
        self.lo, self.hi = y_range
        if self.hi <= self.lo:
            self.hi = self.lo + 1.0
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
            f'<rect width="{W}" height="{H}" fill="white"/>',
            f'<text x="{W / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        ]
        self._axes(y_label)

    def y(self, v: float) -> float:
        return TOP + (H - TOP - BOTTOM) * (1.0 - (v - self.lo) / (self.hi - self.lo))

    def _axes(self, y_label: str) -> None:
        x0, y0, y1 = LEFT, H - BOTTOM, TOP
        self.line(x0, y0, W - RIGHT, y0)
        self.line(x0, y0, x0, y1)
        for v in np.linspace(self.lo, self.hi, 5):
            yy = self.y(v)
            self.line(x0 - 4, yy, x0, yy)
            self.text(x0 - 6, yy + 4, f"{v:.3g}", anchor="end", size=10)
        if y_label:
            self.parts.append(f'<text x="14" y="{_f(H / 2)}" font-size="11" text-anchor="middle" '
                              f'transform="rotate(-90 14 {_f(H / 2)})">{escape(y_label)}</text>')

    def line(self, x1, y1, x2, y2, color="black", width=1.0) -> None:
        self.parts.append(f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
                          f'stroke="{color}" stroke-width="{width}"/>')

    def rect(self, x, y, w, h, fill="none", stroke="black") -> None:
        self.parts.append(f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" '
                          f'fill="{fill}" stroke="{stroke}"/>')

    def text(self, x, y, s, anchor="middle", size=11) -> None:
        self.parts.append(f'<text x="{_f(x)}" y="{_f(y)}" font-size="{size}" text-anchor="{anchor}">'
                          f'{escape(s)}</text>')

    def polyline(self, pts, color) -> None:
        coords = " ".join(f"{_f(x)},{_f(y)}" for x, y in pts)
        self.parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1"/>')

    def svg(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def box_svg(groups: list[tuple[str, list[float]]], title: str, y_label: str = "",
            y_range: tuple[float, float] = (0.0, 1.0)) -> str:
    """Box (quartiles), whiskers (min/max) and median line for each group."""
    c = _Canvas(title, y_range, y_label)
    slot = (W - LEFT - RIGHT) / max(len(groups), 1)
    for i, (label, values) in enumerate(groups):
        cx = LEFT + slot * (i + 0.5)
        c.text(cx, H - BOTTOM + 18, label)
        if len(values) == 0:
            continue
        lo, q1, med, q3, hi = np.percentile(values, [0, 25, 50, 75, 100])
        bw = slot * 0.4
        c.line(cx, c.y(lo), cx, c.y(q1))
        c.line(cx, c.y(q3), cx, c.y(hi))
        c.line(cx - bw / 4, c.y(lo), cx + bw / 4, c.y(lo))
        c.line(cx - bw / 4, c.y(hi), cx + bw / 4, c.y(hi))
        c.rect(cx - bw / 2, c.y(q3), bw, max(c.y(q1) - c.y(q3), 0.5), fill="#dde8f4")
        c.line(cx - bw / 2, c.y(med), cx + bw / 2, c.y(med), color=COLORS[1], width=2)
    return c.svg()


def lines_svg(series: np.ndarray, title: str, y_label: str = "", y_range=(0.0, 1.0)) -> str:
    """One line per column of ``series`` (shape ``(T, K)``) with a legend."""
    series = np.asarray(series, dtype=np.float64)
    T, K = series.shape
    c = _Canvas(title, y_range, y_label)
    span = W - LEFT - RIGHT
    xs = LEFT + span * (np.arange(T) / max(T - 1, 1))
    for k in range(K):
        color = COLORS[k % len(COLORS)]
        c.polyline(zip(xs, (c.y(v) for v in series[:, k])), color)
        lx = LEFT + 8 + 60 * k
        c.line(lx, H - 14, lx + 14, H - 14, color=color, width=2)
        c.text(lx + 18, H - 10, f"c{k}", anchor="start", size=10)
    c.text(W - RIGHT, H - BOTTOM + 16, f"t = {T}", anchor="end", size=10)
    return c.svg()


def bars_svg(labels: list[str], values: list[float], title: str, y_label: str = "") -> str:
    top = max([float(v) for v in values] + [1.0])
    c = _Canvas(title, (0.0, top * 1.05), y_label)
    slot = (W - LEFT - RIGHT) / max(len(values), 1)
    for i, (label, v) in enumerate(zip(labels, values)):
        x = LEFT + slot * i + slot * 0.2
        c.rect(x, c.y(v), slot * 0.6, c.y(0) - c.y(v), fill=COLORS[0], stroke="none")
        c.text(x + slot * 0.3, H - BOTTOM + 18, label)
        c.text(x + slot * 0.3, c.y(v) - 4, f"{v:g}", size=10)
    return c.svg()


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_share_plots(folder, report: AttributionReport, render: bool = True) -> list[Path]:
    """Per event: paired event/overall shares as CSV, plus a two-box SVG."""
    folder = Path(folder)
    folder.mkdir(parents=True, exist_ok=True)
    out = []
    for row in report.rows:
        csv_path = folder / f"shares_{row.event}.csv"
        _write_csv(csv_path, ["model_id", "dream_index", "main_component", "event_share", "overall_share"],
                   [(d.model_id, d.dream_index, d.main_component, repr(d.event_share), repr(d.overall_share))
                    for d in row.dreams])
        out.append(csv_path)
        if render:
            p = "n/a" if row.p is None else f"{row.p:.3g}"
            svg = box_svg([("event share", [d.event_share for d in row.dreams]),
                           ("overall share", [d.overall_share for d in row.dreams])],
                          f"{row.event} (n={row.dream_count}, p={p})", "share of frames")
            svg_path = csv_path.with_suffix(".svg")
            svg_path.write_text(svg)
            out.append(svg_path)
    return out


def write_weight_plot(folder, name: str, pi: np.ndarray, render: bool = True) -> list[Path]:
    """Mixture weights over one dream: ``step, c0, c1, ...`` CSV and a line plot."""
    folder = Path(folder)
    folder.mkdir(parents=True, exist_ok=True)
    csv_path = folder / f"weights_{name}.csv"
    K = pi.shape[1]
    _write_csv(csv_path, ["step"] + [f"c{k}" for k in range(K)],
               [[t] + [repr(float(v)) for v in row] for t, row in enumerate(pi)])
    out = [csv_path]
    if render:
        svg_path = csv_path.with_suffix(".svg")
        svg_path.write_text(lines_svg(pi, f"mixture weights: {name}", "weight"))
        out.append(svg_path)
    return out


def write_committed_plot(folder, counts: dict[int, dict[str, int]], event: str = "explosion_active",
                         render: bool = True) -> list[Path]:
    """Event frame counts per committed component (all events in the CSV, one in the chart)."""
    folder = Path(folder)
    folder.mkdir(parents=True, exist_ok=True)
    csv_path = folder / "committed_counts.csv"
    events = sorted({e for c in counts.values() for e in c})
    _write_csv(csv_path, ["component"] + events, [[k] + [counts[k][e] for e in events] for k in counts])
    out = [csv_path]
    if render and counts:
        svg_path = folder / f"committed_{event}.svg"
        svg_path.write_text(bars_svg([f"c{k}" for k in counts], [counts[k].get(event, 0) for k in counts],
                                     f"{event} frames per committed component", "frames"))
        out.append(svg_path)
    return out
