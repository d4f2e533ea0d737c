"""Batch renderer for the gate-design landscape figures.

Consumes the CSV files written by the sweep toolkit's ``reproduce`` command
and emits one image per panel (PNG plus an SVG twin). Reading is strictly
read-only; a malformed or missing input aborts with a nonzero exit naming
the offending file or column.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

PANELS = {
    "1": ("fig1a", "fig1b"),
    "2": ("fig2a", "fig2b"),
    "3": ("fig3",),
}


class InputError(RuntimeError):
    pass


def _load_csv(csv_dir: str, name: str, columns: tuple[str, ...]) -> list[dict]:
    path = os.path.join(csv_dir, f"{name}.csv")
    if not os.path.isfile(path):
        raise InputError(f"missing input file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in columns:
            if col not in header:
                raise InputError(f"{path}: missing column '{col}'")
        rows = list(reader)
    if not rows:
        raise InputError(f"{path}: no data rows")
    return rows


def _number(row: dict, column: str, where: str) -> float:
    try:
        return float(row[column])
    except (TypeError, ValueError):
        raise InputError(
            f"{where}: malformed value {row[column]!r} in column '{column}'"
        ) from None


def _group(
    rows: list[dict], key: str, x: str, y: str, where: str
) -> dict[str, tuple[list, list]]:
    series: dict[str, tuple[list, list]] = defaultdict(lambda: ([], []))
    for row in rows:
        if row[y] == "":
            continue
        xs, ys = series[row[key]]
        xs.append(_number(row, x, where))
        ys.append(_number(row, y, where))
    return series


def _save(fig, out_dir: str, name: str) -> list[str]:
    paths = []
    for ext in ("png", "svg"):
        path = os.path.join(out_dir, f"{name}.{ext}")
        fig.savefig(path, dpi=200 if ext == "png" else None)
        paths.append(path)
    plt.close(fig)
    return paths


def _render_fidelity_panel(
    csv_dir: str, out_dir: str, name: str, key: str, label: str, y: str, ylabel: str
) -> list[str]:
    rows = _load_csv(csv_dir, name, ("mu", key, y))
    series = _group(rows, key, "mu", y, f"{name}.csv")
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    try:
        order = sorted(series, key=float)
    except ValueError:
        raise InputError(f"{name}.csv: malformed value in column '{key}'") from None
    for tag in order:
        xs, ys = series[tag]
        ax.plot(xs, ys, lw=0.9, label=f"{label} = {float(tag):g}")
    ax.set_xlabel("detuning (trap frequency units)")
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8, loc="lower right")
    ax.set_title(name)
    fig.tight_layout()
    return _save(fig, out_dir, name)


def _render_sequences(csv_dir: str, out_dir: str) -> list[str]:
    rows = _load_csv(csv_dir, "fig2b", ("segment_index", "scope", "amp_normalized"))
    series = _group(rows, "scope", "segment_index", "amp_normalized", "fig2b.csv")
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    try:
        order = sorted(series, key=lambda s: int(s.split("=")[1]))
    except (IndexError, ValueError):
        raise InputError("fig2b.csv: malformed value in column 'scope'") from None
    for tag in order:
        xs, ys = series[tag]
        ax.step(xs, ys, where="mid", label=tag)
    ax.set_xlabel("segment")
    ax.set_ylabel("amplitude / first segment")
    ax.legend(fontsize=8)
    ax.set_title("fig2b")
    fig.tight_layout()
    return _save(fig, out_dir, "fig2b")


def render(fig_id: str, csv_dir: str, out_dir: str) -> list[str]:
    """Render one figure id ('1' | '2' | '3' | 'all'); returns written paths."""
    if fig_id == "all":
        written = []
        for one in ("1", "2", "3"):
            written.extend(render(one, csv_dir, out_dir))
        return written
    if fig_id not in PANELS:
        raise InputError(f"unknown figure id {fig_id!r}")
    os.makedirs(out_dir, exist_ok=True)
    written: list[str] = []
    if fig_id == "1":
        written += _render_fidelity_panel(
            csv_dir, out_dir, "fig1a", "tau_over_tau0", "tau/tau0", "fidelity",
            "gate fidelity",
        )
        written += _render_fidelity_panel(
            csv_dir, out_dir, "fig1b", "tau_over_tau0", "tau/tau0", "required_amp",
            "required drive amplitude",
        )
    elif fig_id == "2":
        written += _render_fidelity_panel(
            csv_dir, out_dir, "fig2a", "tau_over_tau0", "tau/tau0", "fidelity",
            "gate fidelity",
        )
        written += _render_sequences(csv_dir, out_dir)
    else:
        written += _render_fidelity_panel(
            csv_dir, out_dir, "fig3", "segments", "m", "fidelity", "gate fidelity"
        )
    return written


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="render_figures", description="Render landscape figures from sweep CSVs"
    )
    parser.add_argument("--csv-dir", required=True)
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--fig", required=True, choices=["1", "2", "3", "all"])
    args = parser.parse_args(argv)
    try:
        for path in render(args.fig, args.csv_dir, args.out_dir):
            print(path)
    except InputError as err:
        print(f"render_figures: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
