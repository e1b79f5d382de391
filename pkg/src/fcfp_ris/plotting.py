"""Minimal line-plot SVG writer for experiment CSVs.

Purely presentational: reads columns from a CSV and draws polylines.
"""

import csv
import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

__all__ = ["PlotSpec", "PlotError", "emit_plot", "read_columns"]

WIDTH, HEIGHT = 640, 420
MARGIN = {"left": 70, "right": 150, "top": 40, "bottom": 50}
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


class PlotError(ValueError):
    """Malformed or empty plot input."""


@dataclass(frozen=True)
class PlotSpec:
    """Which columns to draw.

    ``y`` lists one or more numeric columns; ``group`` splits rows into one
    series per distinct value of that column.  ``log_y`` draws ``log10``
    of the values and labels ticks as powers of ten.
    """

    x: str
    y: tuple
    group: str | None = None
    log_y: bool = False
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    filters: dict = field(default_factory=dict)


def read_columns(csv_path):
    """Header and rows of a CSV; raises :class:`PlotError` if there is no data row."""
    try:
        with open(csv_path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except (OSError, csv.Error) as exc:
        raise PlotError(f"cannot read {csv_path}: {exc}") from None
    if not rows:
        raise PlotError(f"{csv_path} is empty")
    header, body = rows[0], [r for r in rows[1:] if r]
    if not body:
        raise PlotError(f"{csv_path} has no data rows")
    if any(len(r) != len(header) for r in body):
        raise PlotError(f"{csv_path} has rows with the wrong number of fields")
    return header, body


def _number(text, where):
    try:
        v = float(text)
    except ValueError:
        raise PlotError(f"non-numeric value {text!r} in column {where!r}") from None
    return v


def _series(spec, header, body):
    idx = {h: i for i, h in enumerate(header)}
    for col in (spec.x, *spec.y, *([spec.group] if spec.group else []), *spec.filters):
        if col not in idx:
            raise PlotError(f"column {col!r} not in CSV header {header}")
    rows = [r for r in body if all(r[idx[k]] == str(v) for k, v in spec.filters.items())]
    if not rows:
        raise PlotError("no rows left after filtering")
    series = {}
    for r in rows:
        for ycol in spec.y:
            key = ycol if not spec.group else (f"{r[idx[spec.group]]}" if len(spec.y) == 1 else f"{r[idx[spec.group]]} {ycol}")
            x = _number(r[idx[spec.x]], spec.x)
            y = _number(r[idx[ycol]], ycol)
            if spec.log_y:
                y = math.log10(y) if y > 0 else float("nan")
            series.setdefault(key, []).append((x, y))
    return series


def _ticks(lo, hi, n=5):
    if hi == lo:
        return [lo]
    step = 10 ** math.floor(math.log10((hi - lo) / n))
    for m in (1, 2, 5, 10):
        if (hi - lo) / (m * step) <= n:
            step *= m
            break
    start = math.ceil(lo / step) * step
    out, v = [], start
    while v <= hi + 1e-9 * step:
        out.append(round(v, 12))
        v += step
    return out


def _fmt(v):
    return f"{v:g}"


def emit_plot(csv_path, plot_spec, svg_path=None):
    """Draw ``plot_spec`` from ``csv_path`` into an SVG file and return its path."""
    header, body = read_columns(csv_path)
    series = _series(plot_spec, header, body)
    pts = [p for s in series.values() for p in s if math.isfinite(p[0]) and math.isfinite(p[1])]
    if not pts:
        raise PlotError("no finite points to plot")
    xs, ys = [p[0] for p in pts], [p[1] for p in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(v):
        return MARGIN["left"] + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return MARGIN["top"] + (1 - (v - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{sx(t):.2f}" y1="{MARGIN["top"] + ph}" x2="{sx(t):.2f}" y2="{MARGIN["top"] + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{MARGIN["top"] + ph + 18}" font-size="11" text-anchor="middle">{_fmt(t)}</text>')
    for t in _ticks(y0, y1):
        label = f"1e{_fmt(t)}" if plot_spec.log_y else _fmt(t)
        out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{sy(t):.2f}" x2="{MARGIN["left"]}" y2="{sy(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{sy(t) + 4:.2f}" font-size="11" text-anchor="end">{label}</text>')
    for i, (name, s) in enumerate(series.items()):
        color = COLORS[i % len(COLORS)]
        good = sorted((p for p in s if math.isfinite(p[0]) and math.isfinite(p[1])), key=lambda p: p[0])
        if not good:
            continue
        path = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in good)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{path}"/>')
        for a, b in good if len(good) <= 40 else ():
            out.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="2.5" fill="{color}"/>')
        ly = MARGIN["top"] + 14 * i + 10
        lx = WIDTH - MARGIN["right"] + 10
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 25}" y="{ly + 4}" font-size="11">{escape(name)}</text>')
    ylabel = plot_spec.ylabel or ", ".join(plot_spec.y)
    if plot_spec.log_y:
        ylabel += " (log10)"
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 10}" font-size="12" text-anchor="middle">{escape(plot_spec.xlabel or plot_spec.x)}</text>')
    out.append(f'<text x="15" y="{MARGIN["top"] + ph / 2:.1f}" font-size="12" text-anchor="middle" transform="rotate(-90 15 {MARGIN["top"] + ph / 2:.1f})">{escape(ylabel)}</text>')
    if plot_spec.title:
        out.append(f'<text x="{WIDTH / 2:.1f}" y="22" font-size="14" text-anchor="middle">{escape(plot_spec.title)}</text>')
    out.append("</svg>")
    svg_path = svg_path or str(csv_path).rsplit(".", 1)[0] + ".svg"
    with open(svg_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")
    return svg_path
