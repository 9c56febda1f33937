"""Artifact emission: atomic file writes, CSV tables, and small SVG charts.

CSV is the contract; SVG is a thin optional rendering of the same data with
no plotting dependency. Writers go through a temp file and rename, so a
failed command never leaves partial output behind.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from pathlib import Path
from typing import Iterable, Sequence


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".tmp-{path.name}")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    atomic_write_text(path, buf.getvalue())


def write_json(path: str | Path, doc: object) -> None:
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def fmt(x: float, digits: int = 6) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{x:.{digits}g}" if isinstance(x, float) else str(x)


# --- SVG ----------------------------------------------------------------

_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def line_chart_svg(
    series: dict[str, list[tuple[float, float]]],
    title: str,
    width: int = 640,
    height: int = 360,
) -> str:
    """Multi-line chart; one polyline per named series, with a small legend."""
    pad = 45
    xs = [p[0] for pts in series.values() for p in pts]
    ys = [p[1] for pts in series.values() for p in pts if not math.isnan(p[1])]
    if not xs or not ys:
        return f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}"/>'
    x0, x1 = min(xs), max(xs) or 1
    y0, y1 = min(0.0, min(ys)), max(ys) or 1

    def sx(x: float) -> float:
        return pad + (x - x0) / (x1 - x0 or 1) * (width - 2 * pad)

    def sy(y: float) -> float:
        return height - pad - (y - y0) / (y1 - y0 or 1) * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="11">',
        f'<text x="{width/2:.0f}" y="16" text-anchor="middle" font-size="13">{title}</text>',
        f'<line x1="{pad}" y1="{height-pad}" x2="{width-pad}" y2="{height-pad}" stroke="#444"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height-pad}" stroke="#444"/>',
        f'<text x="{pad}" y="{height-pad+14}">{fmt(x0)}</text>',
        f'<text x="{width-pad}" y="{height-pad+14}" text-anchor="end">{fmt(x1)}</text>',
        f'<text x="{pad-4}" y="{height-pad}" text-anchor="end">{fmt(y0,3)}</text>',
        f'<text x="{pad-4}" y="{pad+4}" text-anchor="end">{fmt(y1,3)}</text>',
    ]
    for i, (name, pts) in enumerate(series.items()):
        color = _SVG_COLORS[i % len(_SVG_COLORS)]
        coords = " ".join(
            f"{sx(x):.1f},{sy(y):.1f}" for x, y in pts if not math.isnan(y)
        )
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>'
        )
        parts.append(
            f'<text x="{width-pad}" y="{pad + 14*i}" text-anchor="end" fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def heatmap_svg(
    matrix: list[list[float]],
    row_labels: Sequence,
    col_labels: Sequence,
    title: str,
    cell: int = 34,
) -> str:
    """Grid heatmap with value annotations; NaN cells render hollow."""
    pad = 60
    rows, cols = len(matrix), len(matrix[0]) if matrix else 0
    width = pad + cols * cell + 20
    height = pad + rows * cell + 20
    finite = [v for row in matrix for v in row if not math.isnan(v)]
    vmax = max(finite) if finite else 1.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="10">',
        f'<text x="{width/2:.0f}" y="16" text-anchor="middle" font-size="13">{title}</text>',
    ]
    for j, lab in enumerate(col_labels):
        parts.append(
            f'<text x="{pad + j*cell + cell/2:.0f}" y="{pad-6}" text-anchor="middle">{lab}</text>'
        )
    for i, lab in enumerate(row_labels):
        parts.append(
            f'<text x="{pad-6}" y="{pad + i*cell + cell/2 + 3:.0f}" text-anchor="end">{lab}</text>'
        )
    for i, row in enumerate(matrix):
        for j, v in enumerate(row):
            x, y = pad + j * cell, pad + i * cell
            if math.isnan(v):
                parts.append(
                    f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                    f'fill="none" stroke="#ccc"/>'
                )
                continue
            frac = v / vmax if vmax else 0.0
            shade = int(255 - 205 * frac)
            parts.append(
                f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                f'fill="rgb({shade},{shade},255)" stroke="#ccc"/>'
            )
            parts.append(
                f'<text x="{x + cell/2:.0f}" y="{y + cell/2 + 3:.0f}" '
                f'text-anchor="middle">{fmt(v, 3)}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts)
