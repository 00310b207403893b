#!/usr/bin/env python3
"""Render figures from a sweep results CSV.

Strictly a projection of CSV contents: nothing is recomputed. Three
figure kinds are supported:

    e2e_rate      mean end-to-end rate vs the swept parameter, one curve
                  per water type, error bars from stderr_e2e_bps
    connectivity  connectivity probability vs the swept parameter, one
                  curve per water type
    rmse          localization RMSE vs the swept parameter, one curve per
                  ranging mode (acoustic/optical/hybrid), error bars from
                  the stderr_rmse_*_m columns

Rows from several runs may be concatenated into one CSV (shared header);
curves are grouped by the water_type column for rate/connectivity kinds.
Exit codes: 0 success, 1 schema/usage error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

KINDS = ("e2e_rate", "connectivity", "rmse")

#: columns each kind projects out of the CSV
REQUIRED = {
    "e2e_rate": ["sweep_value", "water_type", "mean_e2e_bps", "stderr_e2e_bps"],
    "connectivity": ["sweep_value", "water_type", "conn_prob"],
    "rmse": [
        "sweep_value",
        "rmse_acoustic_m",
        "rmse_optical_m",
        "rmse_hybrid_m",
    ],
}

MODES = ("acoustic", "optical", "hybrid")


class SchemaError(Exception):
    pass


def read_rows(path: str, kind: str):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in REQUIRED[kind]:
            if column not in header:
                raise SchemaError(f"missing column: {column}")
        rows = list(reader)
    if not rows:
        raise SchemaError("CSV has no data rows")
    return rows


def _value(row, column):
    try:
        return float(row[column])
    except (TypeError, ValueError):
        raise SchemaError(f"non-numeric value in column: {column}") from None


def _series_by_group(rows, group_col, y_col, err_col=None):
    """Ordered {group: (x, y, yerr)} preserving row order within a group."""
    out = {}
    for row in rows:
        g = row[group_col]
        x = _value(row, "sweep_value")
        y = _value(row, y_col)
        err = _value(row, err_col) if err_col and row.get(err_col) else 0.0
        out.setdefault(g, ([], [], []))
        out[g][0].append(x)
        out[g][1].append(y)
        out[g][2].append(err)
    return out


def build_figure(rows, kind: str):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    sweep_param = rows[0].get("sweep_param") or "sweep value"

    if kind == "e2e_rate":
        series = _series_by_group(rows, "water_type", "mean_e2e_bps", "stderr_e2e_bps")
        for label, (x, y, err) in series.items():
            ax.errorbar(x, [v / 1e6 for v in y], yerr=[e / 1e6 for e in err],
                        marker="o", capsize=3, label=label)
        ax.set_ylabel("mean end-to-end rate (Mbps)")
    elif kind == "connectivity":
        series = _series_by_group(rows, "water_type", "conn_prob")
        for label, (x, y, _) in series.items():
            ax.plot(x, y, marker="o", label=label)
        ax.set_ylabel("connectivity probability")
        ax.set_ylim(-0.05, 1.05)
    else:
        for mode in MODES:
            err_col = f"stderr_rmse_{mode}_m"
            has_err = err_col in rows[0]
            x = [_value(r, "sweep_value") for r in rows]
            y = [_value(r, f"rmse_{mode}_m") for r in rows]
            err = [_value(r, err_col) if has_err else 0.0 for r in rows]
            ax.errorbar(x, y, yerr=err, marker="o", capsize=3, label=mode)
        ax.set_ylabel("localization RMSE (m)")

    ax.set_xlabel(sweep_param)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return fig


def save_figure(fig, out_path: str) -> None:
    # strip volatile metadata so identical inputs give identical bytes
    if out_path.endswith(".svg"):
        plt.rcParams["svg.hashsalt"] = "fig3"
        fig.savefig(out_path, metadata={"Date": None})
    else:
        fig.savefig(out_path, metadata={"Software": None})


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Plot sweep results from a CSV file")
    parser.add_argument("--csv", required=True, help="sweep results CSV")
    parser.add_argument("--kind", required=True, choices=KINDS, help="figure kind")
    parser.add_argument("--out", required=True, help="output image (.png or .svg)")
    args = parser.parse_args(argv)
    try:
        rows = read_rows(args.csv, args.kind)
        fig = build_figure(rows, args.kind)
        save_figure(fig, args.out)
    except SchemaError as err:
        print(f"schema error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"I/O error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
