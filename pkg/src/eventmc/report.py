"""Report emission: CSV files, text summaries, and self-contained SVG charts.

CSV is the machine contract; floats are written with repr-faithful %.17g so
deterministic runs produce byte-identical files.  Charts are decorative and
dependency-free.
"""

from __future__ import annotations

import os

from .tally import SCORES

TIMING_KEYS = ("lookup", "advance", "collision", "sort", "reduce", "merge")


def _f(x: float) -> str:
    return format(float(x), ".17g")


def write_tallies_csv(path: str, result) -> None:
    """Columns: region_kind, axial_index, score, mean, stderr."""
    lines = ["region_kind,axial_index,score,mean,stderr"]
    if result.tally_mean is not None:
        layout = result.layout
        for region in range(layout.n_regions):
            kind, axial = layout.region_label(region)
            ax = "" if axial is None else str(axial)
            for s, score in enumerate(SCORES):
                b = layout.bin_index(region, s)
                lines.append(f"{kind},{ax},{score},"
                             f"{_f(result.tally_mean[b])},"
                             f"{_f(result.tally_stderr[b])}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_keff_csv(path: str, result) -> None:
    lines = ["batch,phase,k_collision"]
    n_inactive = result.keff.n_inactive
    for b, k in enumerate(result.keff.values):
        phase = "inactive" if b < n_inactive else "active"
        lines.append(f"{b},{phase},{_f(k)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_timings_csv(path: str, result) -> None:
    lines = ["kernel,seconds"]
    for key in TIMING_KEYS:
        lines.append(f"{key},{_f(result.timings.get(key, 0.0))}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def summary_text(result) -> str:
    cfg = result.config
    out = ["eventmc run summary", "===================", ""]
    out.append("configuration:")
    for k, v in cfg.items():
        out.append(f"  {k} = {v}")
    out.append("")
    if result.k_mean is not None:
        out.append(f"k-effective (collision estimator): "
                   f"{result.k_mean:.6f} +/- {result.k_stderr:.6f}")
    else:
        out.append("k-effective: needs >= 2 active batches for statistics")
    out.append(f"k by batch: "
               + " ".join(f"{k:.5f}" for k in result.keff.values))
    out.append("")
    if result.inactive_rate is not None:
        out.append(f"inactive particles/sec: {result.inactive_rate:,.0f}")
    if result.active_rate is not None:
        out.append(f"active particles/sec:   {result.active_rate:,.0f}")
    out.append("")
    out.append("kernel seconds:")
    for key in TIMING_KEYS:
        out.append(f"  {key:10s} {result.timings.get(key, 0.0):.4f}")
    out.append("")
    c = result.counters
    out.append(f"collisions: {c.get('events_collision', 0):,} "
               f"(captures {c.get('captures', 0):,}, "
               f"fissions {c.get('fissions', 0):,})")
    out.append(f"max draws in one history: {c.get('max_draws_per_history', 0)}")
    out.append(f"energy clamps: {c.get('energy_clamps', 0)}")
    out.append("")
    out.append(f"library fingerprint:  {result.library_fingerprint}")
    out.append(f"geometry fingerprint: {result.geometry_fingerprint}")
    out.append(f"physics fingerprint:  {result.physics_fingerprint()}")
    return "\n".join(out) + "\n"


def write_summary(path: str, result) -> None:
    with open(path, "w") as fh:
        fh.write(summary_text(result))


def write_run_outputs(outdir: str, result) -> None:
    os.makedirs(outdir, exist_ok=True)
    write_summary(os.path.join(outdir, "summary.txt"), result)
    write_tallies_csv(os.path.join(outdir, "tallies.csv"), result)
    write_keff_csv(os.path.join(outdir, "keff.csv"), result)
    write_timings_csv(os.path.join(outdir, "timings.csv"), result)


def write_compare_csv(path: str, rows: list[dict], inactive_only: bool = False) -> None:
    cols = ["mode", "sort", "max_in_flight", "tally_mode", "accel",
            "inactive_rate"]
    if not inactive_only:
        cols.append("active_rate")
    lines = [",".join(cols)]
    for r in rows:
        cells = [str(r[c]) if c in ("mode", "sort", "max_in_flight",
                                    "tally_mode", "accel") else _f(r[c])
                 for c in cols]
        lines.append(",".join(cells))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_scaling_csv(path: str, rows) -> None:
    lines = ["workers,particles,inactive_rate,active_rate,efficiency"]
    for r in rows:
        lines.append(f"{r.workers},{r.workers * r.particles_per_worker},"
                     f"{_f(r.inactive_rate)},{_f(r.active_rate)},"
                     f"{_f(r.efficiency)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_bench_csv(path: str, row: dict, inactive_only: bool = False) -> None:
    cols = ["mode", "sort", "max_in_flight", "tally_mode", "accel",
            "inactive_rate"]
    if not inactive_only:
        cols.append("active_rate")
    cols += list(TIMING_KEYS)
    lines = [",".join(cols)]
    cells = []
    for c in cols:
        v = row[c]
        cells.append(str(v) if isinstance(v, (str, int, bool)) else _f(v))
    lines.append(",".join(cells))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ======================================================================================
# Minimal SVG charts (no dependencies; decorative output only)
# ======================================================================================

_W, _H = 640, 400
_ML, _MR, _MT, _MB = 70, 20, 40, 90


def _svg_header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="24" text-anchor="middle" font-size="16">'
        f'{title}</text>',
    ]


def svg_bar_chart(path: str, labels: list[str], values: list[float],
                  title: str, ylabel: str) -> None:
    parts = _svg_header(title)
    vmax = max(values) if values else 1.0
    vmax = vmax or 1.0
    plot_w = _W - _ML - _MR
    plot_h = _H - _MT - _MB
    n = len(values)
    bw = plot_w / max(n, 1) * 0.7
    gap = plot_w / max(n, 1) * 0.3
    parts.append(f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" '
                 f'y2="{_MT + plot_h}" stroke="black"/>')
    parts.append(f'<line x1="{_ML}" y1="{_MT + plot_h}" x2="{_ML + plot_w}" '
                 f'y2="{_MT + plot_h}" stroke="black"/>')
    parts.append(f'<text x="16" y="{_MT + plot_h / 2}" font-size="12" '
                 f'transform="rotate(-90 16 {_MT + plot_h / 2})" '
                 f'text-anchor="middle">{ylabel}</text>')
    for i, (lab, v) in enumerate(zip(labels, values)):
        h = plot_h * v / vmax
        x = _ML + gap / 2 + i * (bw + gap)
        y = _MT + plot_h - h
        parts.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{bw:.1f}" '
                     f'height="{h:.1f}" fill="#4878a8"/>')
        parts.append(f'<text x="{x + bw / 2:.1f}" y="{y - 4:.1f}" '
                     f'font-size="10" text-anchor="middle">{v:,.0f}</text>')
        parts.append(f'<text x="{x + bw / 2:.1f}" y="{_MT + plot_h + 12:.1f}" '
                     f'font-size="9" text-anchor="end" transform="rotate(-45 '
                     f'{x + bw / 2:.1f} {_MT + plot_h + 12:.1f})">{lab}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def svg_scaling_chart(path: str, rows, title: str) -> None:
    """Rate vs workers with the ideal-linear reference line."""
    parts = _svg_header(title)
    plot_w = _W - _ML - _MR
    plot_h = _H - _MT - _MB
    xs = [r.workers for r in rows]
    ys = [r.active_rate for r in rows]
    ideal = [rows[0].active_rate * w for w in xs]
    xmax = max(xs)
    ymax = max(max(ys), max(ideal)) or 1.0

    def px(w):
        return _ML + plot_w * w / xmax

    def py(v):
        return _MT + plot_h - plot_h * v / ymax

    parts.append(f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" '
                 f'y2="{_MT + plot_h}" stroke="black"/>')
    parts.append(f'<line x1="{_ML}" y1="{_MT + plot_h}" x2="{_ML + plot_w}" '
                 f'y2="{_MT + plot_h}" stroke="black"/>')
    ideal_pts = " ".join(f"{px(w):.1f},{py(v):.1f}" for w, v in zip(xs, ideal))
    parts.append(f'<polyline points="{ideal_pts}" fill="none" '
                 f'stroke="#999999" stroke-dasharray="6 4"/>')
    real_pts = " ".join(f"{px(w):.1f},{py(v):.1f}" for w, v in zip(xs, ys))
    parts.append(f'<polyline points="{real_pts}" fill="none" '
                 f'stroke="#b04030" stroke-width="2"/>')
    for w, v in zip(xs, ys):
        parts.append(f'<circle cx="{px(w):.1f}" cy="{py(v):.1f}" r="4" '
                     f'fill="#b04030"/>')
        parts.append(f'<text x="{px(w):.1f}" y="{_MT + plot_h + 16}" '
                     f'font-size="11" text-anchor="middle">{w}</text>')
    parts.append(f'<text x="{_ML + plot_w / 2}" y="{_MT + plot_h + 36}" '
                 f'font-size="12" text-anchor="middle">workers</text>')
    parts.append(f'<text x="16" y="{_MT + plot_h / 2}" font-size="12" '
                 f'transform="rotate(-90 16 {_MT + plot_h / 2})" '
                 f'text-anchor="middle">active particles/sec</text>')
    parts.append(f'<text x="{_W - _MR}" y="{_MT - 6}" font-size="10" '
                 f'text-anchor="end">dashed = ideal linear</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
