"""Deterministic serialisation: SVG figures, JSON reports, CSV rows."""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

PX_PER_UNIT = 100.0
MARGIN_PX = 20.0

CSV_COLUMNS = (
    "anisotropy_id",
    "beta",
    "mode",
    "vertex_count",
    "restarts",
    "best_ratio",
    "winterbottom_ratio",
    "relative_gap",
    "hausdorff_mod_translation",
    "seconds",
)

_STYLE = (
    ".substrate{stroke:#444;stroke-width:1.5}"
    ".wulff{fill:#9ab;fill-opacity:0.25;stroke:#9ab;stroke-dasharray:4 3}"
    ".winterbottom{fill:#e94;fill-opacity:0.6;stroke:#a52}"
    ".candidate{fill:none;stroke:#27c;stroke-width:1.5}"
)


def fmt(x: float) -> str:
    """Twelve significant digits, locale independent."""
    return format(float(x), ".12g")


def rounded(obj):
    """Recursively round floats to 12 significant digits for serialisation."""
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return float(fmt(x))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, np.ndarray):
        return rounded(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [rounded(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(rounded(obj), indent=2, allow_nan=False) + "\n"


def svg(shapes, substrate: bool = True) -> str:
    """Closed paths (``[(vertices, css_class), ...]``) with the substrate rule.

    One model unit is 100 px and the y axis points up on screen.
    """
    pts = np.vstack([np.asarray(v, dtype=float) for v, _ in shapes] + [np.zeros((1, 2))])
    xmin, ymin = pts.min(axis=0)
    xmax, ymax = pts.max(axis=0)
    width = PX_PER_UNIT * (xmax - xmin) + 2 * MARGIN_PX
    height = PX_PER_UNIT * (ymax - ymin) + 2 * MARGIN_PX

    def X(x):
        return MARGIN_PX + PX_PER_UNIT * (x - xmin)

    def Y(y):
        return MARGIN_PX + PX_PER_UNIT * (ymax - y)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.3f}" height="{height:.3f}" '
        f'viewBox="0 0 {width:.3f} {height:.3f}">',
        f"<style>{_STYLE}</style>",
    ]
    for V, cls in shapes:
        V = np.asarray(V, dtype=float)
        d = "M " + " L ".join(f"{X(x):.3f},{Y(y):.3f}" for x, y in V) + " Z"
        out.append(f'<path class="{cls}" d="{d}"/>')
    if substrate:
        y0 = Y(0.0)
        out.append(f'<line class="substrate" x1="0" y1="{y0:.3f}" x2="{width:.3f}" y2="{y0:.3f}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()
