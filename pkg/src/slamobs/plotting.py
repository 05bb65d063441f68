"""Minimal SVG 1.1 line plots, written without a plotting library."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

COLORS = {"truth": "#000000", "hybrid": "#d62728", "smooth": "#1f77b4"}
_PALETTE = ["#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]

W, H = 640, 400
ML, MR, MT, MB = 70, 20, 40, 50


def _ticks(lo: float, hi: float, k: int = 5) -> np.ndarray:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / k
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    return np.arange(np.ceil(lo / step) * step, hi + 0.5 * step, step)


def _panel(series, x0, y0, w, h, title, xlabel, ylabel, logy=False, equal=False,
           markers=()) -> list[str]:
    xs = np.concatenate([np.asarray(s[1], float) for s in series] + [np.asarray(m[1], float) for m in markers])
    ys = np.concatenate([np.asarray(s[2], float) for s in series] + [np.asarray(m[2], float) for m in markers])
    if logy:
        ys = np.log10(np.clip(ys, 1e-16, None))
    xs, ys = xs[np.isfinite(xs)], ys[np.isfinite(ys)]
    xlo, xhi = (xs.min(), xs.max()) if xs.size else (0.0, 1.0)
    ylo, yhi = (ys.min(), ys.max()) if ys.size else (0.0, 1.0)
    if xhi - xlo < 1e-12:
        xlo, xhi = xlo - 1, xhi + 1
    if yhi - ylo < 1e-12:
        ylo, yhi = ylo - 1, yhi + 1
    if equal:
        span = max(xhi - xlo, (yhi - ylo) * w / h)
        cx, cy = 0.5 * (xlo + xhi), 0.5 * (ylo + yhi)
        xlo, xhi = cx - span / 2, cx + span / 2
        ylo, yhi = cy - span * h / w / 2, cy + span * h / w / 2

    def px(x):
        return x0 + (x - xlo) / (xhi - xlo) * w

    def py(y):
        return y0 + h - (y - ylo) / (yhi - ylo) * h

    out = [f'<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="#444"/>',
           f'<text x="{x0 + w / 2:.1f}" y="{y0 - 12}" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<text x="{x0 + w / 2:.1f}" y="{y0 + h + 38}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>',
           f'<text x="{x0 - 52}" y="{y0 + h / 2:.1f}" text-anchor="middle" font-size="12" '
           f'transform="rotate(-90 {x0 - 52} {y0 + h / 2:.1f})">{escape(ylabel)}</text>']
    for t in _ticks(xlo, xhi):
        out.append(f'<text x="{px(t):.1f}" y="{y0 + h + 16}" text-anchor="middle" font-size="10">{t:g}</text>')
    for t in _ticks(ylo, yhi):
        lab = f"1e{t:g}" if logy else f"{t:g}"
        out.append(f'<text x="{x0 - 6}" y="{py(t) + 3:.1f}" text-anchor="end" font-size="10">{lab}</text>')
        out.append(f'<line x1="{x0}" x2="{x0 + w}" y1="{py(t):.1f}" y2="{py(t):.1f}" stroke="#eee"/>')
    for i, (label, x, y, color) in enumerate(series):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if logy:
            y = np.log10(np.clip(y, 1e-16, None))
        stride = max(1, len(x) // 2000)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[::stride], y[::stride])
                       if np.isfinite(a) and np.isfinite(b))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{x0 + w - 8}" y="{y0 + 16 + 14 * i}" text-anchor="end" '
                   f'font-size="11" fill="{color}">{escape(label)}</text>')
    for label, x, y, color in markers:
        for a, b in zip(np.atleast_1d(x), np.atleast_1d(y)):
            out.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="3.5" fill="none" stroke="{color}"/>')
    return out


def svg_document(parts: list[str], width: int = W, height: int = H) -> str:
    body = "\n".join(parts)
    return ('<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
            f'font-family="sans-serif">\n<rect width="100%" height="100%" fill="white"/>\n{body}\n</svg>\n')


def line_plot(series, title="", xlabel="", ylabel="", logy=False) -> str:
    """``series`` is a list of ``(label, x, y, color)`` tuples."""
    return svg_document(_panel(series, ML, MT, W - ML - MR, H - MT - MB, title, xlabel, ylabel, logy))


def trajectory_plot(paths, landmarks_true, landmarks_est=(), title="trajectory") -> str:
    """Two panes (x-y and x-z) of 3D paths; ``paths`` holds ``(label, P, color)``
    with ``P`` of shape ``(N, 3)``."""
    parts = []
    pw = (2 * W - 2 * ML - 2 * MR) // 2
    for k, (a, b, name) in enumerate(((0, 1, "x-y"), (0, 2, "x-z"))):
        series = [(lab, P[:, a], P[:, b], c) for lab, P, c in paths]
        marks = [("landmarks", landmarks_true[a], landmarks_true[b], COLORS["truth"])]
        marks += [(lab, L[a], L[b], c) for lab, L, c in landmarks_est]
        parts += _panel(series, ML + k * (pw + ML + MR), MT, pw, H - MT - MB,
                        f"{title} ({name})", f"{name[0]} [m]", f"{name[2]} [m]",
                        equal=True, markers=marks)
    return svg_document(parts, width=2 * W, height=H)


METRIC_PLOTS = [
    ("att_err_rad", "attitude error", "rad", False),
    ("pos_err_m", "position error", "m", False),
    ("lmk_err_m", "landmark error (Frobenius)", "m", False),
    ("bias_w_err", "angular velocity bias error", "rad/s", False),
    ("bias_v_err", "linear velocity bias error", "m/s", False),
    ("lyapunov", "Lyapunov function", "log10 V", True),
]


def write_experiment_plots(out: Path, cfg, results: dict) -> dict:
    """One SVG per metric (all observers overlaid) plus the trajectory panes."""
    paths = {}
    for key, title, unit, logy in METRIC_PLOTS:
        series = [(name, res.trace.times, res.trace.column(key), COLORS.get(name, _PALETTE[i]))
                  for i, (name, res) in enumerate(results.items())]
        p = out / f"{key}.svg"
        p.write_text(line_plot(series, f"{cfg.experiment}: {title}", "t [s]", unit, logy),
                     encoding="utf-8")
        paths[f"svg_{key}"] = p
    first = next(iter(results.values()))
    truth = np.array([r.diagnostics["p_true"] for r in first.trace])
    traj = [("truth", truth, COLORS["truth"])]
    est = []
    for i, (name, res) in enumerate(results.items()):
        color = COLORS.get(name, _PALETTE[i])
        traj.append((name, np.array([r.state.Xhat.p for r in res.trace]), color))
        est.append((name, res.trace[-1].state.Xhat.eta, color))
    p = out / "trajectory.svg"
    p.write_text(trajectory_plot(traj, np.asarray(cfg.landmarks), est, cfg.experiment),
                 encoding="utf-8")
    paths["svg_trajectory"] = p
    return paths
