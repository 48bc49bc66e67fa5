"""CSV/JSON emission with atomic writes, plus bare-bones SVG plots."""
from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path

import numpy as np


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise
    return path


def write_csv(path, header, rows):
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return atomic_write(path, "\n".join(lines) + "\n")


def read_csv(path):
    """Columns as float arrays keyed by header name."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = [[float(v) for v in row] for row in reader]
    arr = np.array(data, dtype=float).reshape(-1, len(header))
    return {h: arr[:, i] for i, h in enumerate(header)}


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default, allow_nan=True)


def write_json(path, obj):
    return atomic_write(path, dumps(obj) + "\n")


# --- table adapters -------------------------------------------------------------

MODES_HEADER = ("khat", "mode", "re_c", "im_c", "abs_mu")
CFL_HEADER = ("iota", "sigma", "cfl")
ERROR_HEADER = ("khat", "t_or_n", "error_norm", "saturated")
HALF_LIFE_HEADER = ("khat", "mode", "half_life")
ORDER_HEADER = ("n_elements", "dx", "l2_error")


def table_to_grid(cols, row_key, col_key, value_key):
    """Pivot long-format columns back to (rows, cols, 2D values)."""
    r = np.unique(cols[row_key])
    c = np.unique(cols[col_key])
    grid = np.full((len(r), len(c)), np.nan)
    ri = np.searchsorted(r, cols[row_key])
    ci = np.searchsorted(c, cols[col_key])
    grid[ri, ci] = cols[value_key]
    return r, c, grid


# --- SVG ------------------------------------------------------------------------

_W, _H, _M = 640, 420, 60
_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _scale(v, lo, hi, a, b):
    if hi == lo:
        return (a + b) / 2
    return a + (v - lo) * (b - a) / (hi - lo)


def _frame(title, xlabel, ylabel, xr, yr):
    x0, x1 = xr
    y0, y1 = yr
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" font-family="sans-serif" font-size="12">',
        f'<rect x="{_M}" y="{_M // 2}" width="{_W - 1.5 * _M}" height="{_H - 1.5 * _M}" fill="none" stroke="black"/>',
        f'<text x="{_W / 2}" y="18" text-anchor="middle">{title}</text>',
        f'<text x="{_W / 2}" y="{_H - 8}" text-anchor="middle">{xlabel}</text>',
        f'<text x="14" y="{_H / 2}" transform="rotate(-90 14 {_H / 2})" text-anchor="middle">{ylabel}</text>',
        f'<text x="{_M}" y="{_H - _M + 16}" text-anchor="middle">{x0:.3g}</text>',
        f'<text x="{_W - _M / 2}" y="{_H - _M + 16}" text-anchor="middle">{x1:.3g}</text>',
        f'<text x="{_M - 4}" y="{_H - _M}" text-anchor="end">{y0:.3g}</text>',
        f'<text x="{_M - 4}" y="{_M // 2 + 10}" text-anchor="end">{y1:.3g}</text>',
    ]
    return out


def svg_lines(path, series, title="", xlabel="", ylabel="", logx=False, logy=False):
    """series: iterable of (x, y, label)."""
    tx = np.log10 if logx else (lambda v: v)
    ty = np.log10 if logy else (lambda v: v)
    pts = []
    for x, y, label in series:
        x, y = tx(np.asarray(x, float)), ty(np.asarray(y, float))
        ok = np.isfinite(x) & np.isfinite(y)
        pts.append((x[ok], y[ok], label))
    allx = np.concatenate([p[0] for p in pts]) if pts else np.array([0.0, 1.0])
    ally = np.concatenate([p[1] for p in pts]) if pts else np.array([0.0, 1.0])
    xr = (allx.min(), allx.max()) if allx.size else (0.0, 1.0)
    yr = (ally.min(), ally.max()) if ally.size else (0.0, 1.0)
    out = _frame(title, xlabel, ylabel, xr, yr)
    for n, (x, y, label) in enumerate(pts):
        colour = _COLOURS[n % len(_COLOURS)]
        px = _scale(x, *xr, _M, _W - _M / 2)
        py = _scale(y, *yr, _H - _M, _M / 2)
        d = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.2" points="{d}"/>')
        out.append(f'<text x="{_W - _M}" y="{_M + 14 * n}" fill="{colour}" text-anchor="end">{label}</text>')
    out.append("</svg>")
    return atomic_write(path, "\n".join(out) + "\n")


def svg_heatmap(path, x, y, z, title="", xlabel="", ylabel="", log=False):
    """z has shape (len(y), len(x)); cells coloured on a blue-to-red ramp."""
    z = np.asarray(z, float)
    v = np.log10(np.maximum(z, 1e-300)) if log else z
    ok = np.isfinite(v)
    lo, hi = (v[ok].min(), v[ok].max()) if ok.any() else (0.0, 1.0)
    x, y = np.asarray(x, float), np.asarray(y, float)
    out = _frame(title, xlabel, ylabel, (x.min(), x.max()), (y.min(), y.max()))
    w = (_W - 1.5 * _M) / len(x)
    h = (_H - 1.5 * _M) / len(y)
    for i in range(len(y)):
        for j in range(len(x)):
            if not ok[i, j]:
                colour = "#ffffff"
            else:
                s = _scale(v[i, j], lo, hi, 0.0, 1.0)
                colour = f"#{int(255 * s):02x}30{int(255 * (1 - s)):02x}"
            out.append(
                f'<rect x="{_M + j * w:.2f}" y="{_H - _M - (i + 1) * h:.2f}" '
                f'width="{w + 0.3:.2f}" height="{h + 0.3:.2f}" fill="{colour}"/>'
            )
    out.append("</svg>")
    return atomic_write(path, "\n".join(out) + "\n")
