"""Result tables (CSV) and PCS-versus-budget charts (SVG)."""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from xml.sax.saxutils import escape

COLUMNS = ("experiment", "policy", "family", "K", "T", "replications", "pcs", "stderr",
           "mean_evaluations", "base_seed", "wall_time_s")

PALETTE = ("#000000", "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd")
DASHES = ("", "6,4", "2,3", "8,3,2,3", "4,2", "1,2")


class SchemaError(ValueError):
    pass


def result_rows(experiment: str, plan, estimates) -> list[dict]:
    return [{
        "experiment": experiment,
        "policy": plan.policy,
        "family": plan.instance.family,
        "K": plan.instance.K,
        "T": e.T,
        "replications": e.R,
        "pcs": repr(e.pcs),
        "stderr": repr(e.stderr),
        "mean_evaluations": repr(e.mean_evaluations),
        "base_seed": plan.base_seed,
        "wall_time_s": f"{e.wall_time:.3f}",
    } for e in estimates]


def format_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in COLUMNS if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
        return list(reader)


def atomic_write(path, text: str) -> None:
    """Write via a temporary file in the target directory and rename into place."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def summary_table(rows) -> str:
    lines = [f"{'policy':<12} {'T':>8} {'pcs':>7} {'stderr':>7} {'mean_evals':>11}"]
    for r in rows:
        lines.append(f"{r['policy']:<12} {int(r['T']):>8} {float(r['pcs']):>7.3f} "
                     f"{float(r['stderr']):>7.3f} {float(r['mean_evaluations']):>11.1f}")
    return "\n".join(lines)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step) * step
    out, k = [], 0
    while first + k * step <= hi + 1e-9 * step:
        out.append(first + k * step)
        k += 1
    return out


def render_svg(rows, log_pfs: bool = False, title: str | None = None,
               width: int = 640, height: int = 420) -> str:
    """One polyline per policy with +-1 stderr bars; PCS on y unless ``log_pfs``."""
    series = {}
    for r in rows:
        series.setdefault(r["policy"], []).append(
            (int(r["T"]), float(r["pcs"]), float(r["stderr"]), int(r["replications"])))
    for pts in series.values():
        pts.sort()
    left, right, top, bottom = 70, 150, 40, 55
    pw, ph = width - left - right, height - top - bottom
    all_T = [p[0] for pts in series.values() for p in pts]
    t_lo, t_hi = min(all_T), max(all_T)
    if t_lo == t_hi:
        t_lo, t_hi = t_lo - 1, t_hi + 1

    if log_pfs:
        def yval(pcs, R):
            return math.log10(max(1 - pcs, 0.5 / R))
        lows = [yval(min(p[1] + p[2], 1.0), p[3]) for pts in series.values() for p in pts]
        y_lo = math.floor(min(lows))
        y_hi = 0.0
        ylabel = "PFS (log10)"
    else:
        y_lo, y_hi = 0.0, 1.0
        ylabel = "PCS"

    def sx(T):
        return left + (T - t_lo) / (t_hi - t_lo) * pw

    def sy(v):
        v = min(max(v, y_lo), y_hi)
        return top + (y_hi - v) / (y_hi - y_lo) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    if title:
        out.append(f'<text x="{left + pw / 2:.2f}" y="22" text-anchor="middle" font-family="sans-serif" '
                   f'font-size="14">{escape(title)}</text>')
    out.append(f'<g class="axes" stroke="#000000" stroke-width="1">'
               f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}"/>'
               f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}"/></g>')
    for t in _ticks(t_lo, t_hi):
        x = sx(t)
        out.append(f'<line class="tick" x1="{_fmt(x)}" y1="{top + ph}" x2="{_fmt(x)}" y2="{top + ph + 5}" '
                   f'stroke="#000000"/>')
        out.append(f'<text x="{_fmt(x)}" y="{top + ph + 18}" text-anchor="middle" font-family="sans-serif" '
                   f'font-size="11">{t:g}</text>')
    for v in _ticks(y_lo, y_hi):
        y = sy(v)
        label = f"1e{v:g}" if log_pfs else f"{v:g}"
        out.append(f'<line class="tick" x1="{left - 5}" y1="{_fmt(y)}" x2="{left}" y2="{_fmt(y)}" '
                   f'stroke="#000000"/>')
        out.append(f'<text x="{left - 8}" y="{_fmt(y + 4)}" text-anchor="end" font-family="sans-serif" '
                   f'font-size="11">{label}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 12}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="12">Total budget T</text>')
    out.append(f'<text x="18" y="{top + ph / 2:.2f}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="12" transform="rotate(-90 18 {top + ph / 2:.2f})">{ylabel}</text>')

    for k, (policy, pts) in enumerate(series.items()):
        color, dash = PALETTE[k % len(PALETTE)], DASHES[k % len(DASHES)]
        if log_pfs:
            ys = [yval(p[1], p[3]) for p in pts]
            lo_hi = [(yval(min(p[1] + p[2], 1.0), p[3]), yval(max(p[1] - p[2], 0.0), p[3])) for p in pts]
        else:
            ys = [p[1] for p in pts]
            lo_hi = [(p[1] - p[2], p[1] + p[2]) for p in pts]
        coords = " ".join(f"{_fmt(sx(p[0]))},{_fmt(sy(y))}" for p, y in zip(pts, ys))
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<g class="series" data-policy="{escape(policy)}">')
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2"{dash_attr} points="{coords}"/>')
        for p, (a, b) in zip(pts, lo_hi):
            x = _fmt(sx(p[0]))
            out.append(f'<line class="errorbar" x1="{x}" y1="{_fmt(sy(a))}" x2="{x}" y2="{_fmt(sy(b))}" '
                       f'stroke="{color}" stroke-width="1"/>')
        for p, y in zip(pts, ys):
            out.append(f'<circle cx="{_fmt(sx(p[0]))}" cy="{_fmt(sy(y))}" r="2.5" fill="{color}"/>')
        out.append("</g>")
        ly = top + 10 + 18 * k
        lx = left + pw + 15
        out.append(f'<line class="legend" x1="{lx}" y1="{ly}" x2="{lx + 25}" y2="{ly}" stroke="{color}" '
                   f'stroke-width="2"{dash_attr}/>')
        out.append(f'<text x="{lx + 30}" y="{ly + 4}" font-family="sans-serif" font-size="11">'
                   f'{escape(policy)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
