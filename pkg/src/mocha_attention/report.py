"""CSV and SVG output for benchmark records and alignment traces.

SVG is written by hand so the bytes depend only on the input data.
"""

import csv
import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from mocha_attention.bench import BenchRecord

CSV_HEADER = ["mechanism", "T", "U", "w", "mean_seconds", "trials", "dim", "seed", "stddev_seconds"]
_INT_FIELDS = {"T", "U", "w", "trials", "dim", "seed"}
_FLOAT_FIELDS = {"mean_seconds", "stddev_seconds"}

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"]


def emit_csv(records, path):
    """One row per record; floats in shortest round-trip form, LF line endings."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow([repr(getattr(r, k)) if k in _FLOAT_FIELDS else getattr(r, k) for k in CSV_HEADER])


def read_csv(path) -> list[BenchRecord]:
    with open(path, encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    records = []
    for row in rows:
        kwargs = {}
        for key, value in row.items():
            if key in _INT_FIELDS:
                kwargs[key] = int(value)
            elif key in _FLOAT_FIELDS:
                kwargs[key] = float(value)
            else:
                kwargs[key] = value
        records.append(BenchRecord(**kwargs))
    return records


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _svg(width, height, body) -> str:
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">\n'
        f'<rect width="{width}" height="{height}" fill="white"/>\n'
        + "".join(body)
        + "</svg>\n"
    )


def emit_scaling_plot(records, path):
    """Mean decode time against T, one polyline per mechanism (log-scaled y axis)."""
    records = list(records)
    if not records:
        raise ValueError("nothing to plot")
    series = {}
    for r in records:
        series.setdefault(r.label, []).append((r.T, r.mean_seconds))
    width, height, left, right, top, bottom = 640, 420, 70, 150, 20, 50
    xs = [t for pts in series.values() for t, _ in pts]
    ys = [math.log10(s) for pts in series.values() for _, s in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = math.floor(min(ys)), math.ceil(max(ys))
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y1 = y0 + 1
    pw, ph = width - left - right, height - top - bottom

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(logy):
        return top + (1 - (logy - y0) / (y1 - y0)) * ph

    body = [
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>\n',
        f'<text x="{left + pw / 2:.2f}" y="{height - 12}" text-anchor="middle">T = U</text>\n',
        f'<text x="16" y="{top + ph / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + ph / 2:.2f})">mean seconds</text>\n',
    ]
    for t in sorted(set(xs)):
        body.append(f'<text x="{_fmt(px(t))}" y="{top + ph + 16}" text-anchor="middle">{t}</text>\n')
    for e in range(y0, y1 + 1):
        body.append(f'<text x="{left - 6}" y="{_fmt(py(e) + 4)}" text-anchor="end">1e{e}</text>\n')
    for k, (label, pts) in enumerate(series.items()):
        color = _PALETTE[k % len(_PALETTE)]
        pts = sorted(pts)
        coords = " ".join(f"{_fmt(px(t))},{_fmt(py(math.log10(s)))}" for t, s in pts)
        body.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>\n')
        ly = top + 16 + 18 * k
        body.append(
            f'<line x1="{left + pw + 10}" y1="{ly - 4}" x2="{left + pw + 30}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>\n'
            f'<text x="{left + pw + 36}" y="{ly}">{escape(label)}</text>\n'
        )
    Path(path).write_text(_svg(width, height, body), encoding="utf-8", newline="\n")


def emit_alignment_plot(trace, path, cell: int = 16):
    """Grayscale heatmap: columns are memory entries, rows are output steps."""
    weights = np.asarray(getattr(trace, "weights", trace), dtype=np.float64)
    if weights.size == 0:
        raise ValueError("empty alignment trace")
    rows, cols = weights.shape
    left, top = 40, 20
    width, height = left + cols * cell + 10, top + rows * cell + 30
    body = [
        f'<text x="{left + cols * cell / 2:.2f}" y="{height - 8}" text-anchor="middle">memory index</text>\n',
        f'<text x="12" y="{top + rows * cell / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 12 {top + rows * cell / 2:.2f})">output step</text>\n',
    ]
    peak = weights.max()
    scale = 1.0 / peak if peak > 0 else 0.0
    for i in range(rows):
        for j in range(cols):
            level = int(round(255 * (1.0 - min(1.0, max(0.0, weights[i, j] * scale)))))
            body.append(
                f'<rect x="{left + j * cell}" y="{top + i * cell}" width="{cell}" height="{cell}" '
                f'fill="rgb({level},{level},{level})"/>\n'
            )
    body.append(
        f'<rect x="{left}" y="{top}" width="{cols * cell}" height="{rows * cell}" fill="none" stroke="black"/>\n'
    )
    Path(path).write_text(_svg(width, height, body), encoding="utf-8", newline="\n")
