"""Sweep report rendering: matplotlib figures and gnuplot companion scripts."""

from __future__ import annotations

import math
import os
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .harness import SweepRow

_VARIANT_STYLE = {
    "TIME_ONLY": dict(color="tab:blue", marker="o"),
    "TIME_FREQ_SIMULTANEOUS": dict(color="tab:red", marker="s"),
    "TIME_THEN_FREQ": dict(color="tab:green", marker="^"),
}

_X_LABEL = {
    "delta_theta_deg": "azimuth step (deg)",
    "snr_db": "SNR (dB)",
}


def render_sweep_figure(
    rows: Sequence[SweepRow], path: str | Path, x_field: str, title: str
) -> None:
    """Pcc (solid) and unclassified rate (dotted) per variant vs x_field."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    by_variant: dict[str, list[SweepRow]] = {}
    for r in rows:
        by_variant.setdefault(r.variant, []).append(r)

    for variant, vrows in by_variant.items():
        style = _VARIANT_STYLE.get(variant, dict(marker="x"))
        finite = sorted(
            (r for r in vrows if math.isfinite(getattr(r, x_field))),
            key=lambda r: getattr(r, x_field),
        )
        xs = [getattr(r, x_field) for r in finite]
        if xs:
            ax.plot(xs, [r.pcc_percent for r in finite], label=variant, **style)
            ax.plot(
                xs,
                [r.unclassified_percent for r in finite],
                linestyle=":",
                color=style.get("color"),
                alpha=0.6,
            )
        for r in vrows:
            if not math.isfinite(getattr(r, x_field)):
                ax.axhline(
                    r.pcc_percent, linestyle="--", color=style.get("color"), alpha=0.5
                )
                ax.annotate(
                    f"{variant} (no noise)",
                    xy=(0.02, r.pcc_percent),
                    xycoords=("axes fraction", "data"),
                    fontsize=7,
                    color=style.get("color"),
                )

    ax.set_xlabel(_X_LABEL.get(x_field, x_field))
    ax.set_ylabel("percent of trials")
    ax.set_ylim(0, 102)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8, loc="lower right")
    ax.set_title(title + "  (solid: Pcc, dotted: unclassified)", fontsize=10)
    fig.tight_layout()

    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    fig.savefig(tmp, dpi=150, format=path.suffix.lstrip(".") or "png")
    os.replace(tmp, path)
    plt.close(fig)


def gnuplot_script(csv_name: str, x_field: str, title: str) -> str:
    """A gnuplot script plotting Pcc per variant from the sweep CSV."""
    x_col = {"delta_theta_deg": 2, "snr_db": 3}[x_field]
    lines = [
        f'# Plots {csv_name}; run: gnuplot -persist <this file>',
        'set datafile separator ","',
        f'set title "{title}"',
        f'set xlabel "{_X_LABEL[x_field]}"',
        'set ylabel "Pcc (%)"',
        "set yrange [0:102]",
        "set key outside",
        "set grid",
        'variants = "TIME_ONLY TIME_FREQ_SIMULTANEOUS TIME_THEN_FREQ"',
        f'plot for [v in variants] "{csv_name}" skip 1 '
        f"using (strcol(1) eq v ? ${x_col} : NaN):4 with linespoints title v",
        "",
    ]
    return "\n".join(lines)


def write_sweep_reports(
    rows: Sequence[SweepRow], out_dir: str | Path, stem: str, x_field: str, title: str
) -> dict[str, Path]:
    """Write <stem>.csv plus its gnuplot script and rendered figure."""
    from .harness import atomic_write_text, write_sweep_csv

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "csv": out_dir / f"{stem}.csv",
        "gnuplot": out_dir / f"{stem}.gp",
        "figure": out_dir / f"{stem}.png",
    }
    write_sweep_csv(rows, paths["csv"])
    atomic_write_text(paths["gnuplot"], gnuplot_script(f"{stem}.csv", x_field, title))
    render_sweep_figure(rows, paths["figure"], x_field, title)
    return paths
