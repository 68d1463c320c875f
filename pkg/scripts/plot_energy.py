#!/usr/bin/env python3
"""Render accumulated-energy figures from the CSV exports.

Usage:
    python scripts/plot_energy.py energy.csv out.png    # per-run breakdown
    python scripts/plot_energy.py sweep.csv out.png     # user-count sweep

The engine itself never imports matplotlib; plotting stays out of process.
"""

import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def plot_energy(rows, out):
    blocks = sorted({int(r["block"]) for r in rows})
    acc = {"gbs": [], "dbs": []}
    for kind in acc:
        total = 0.0
        for b in blocks:
            total += sum(float(r["energy_j"]) for r in rows
                         if r["station_kind"] == kind and int(r["block"]) == b)
            acc[kind].append(total)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(blocks, acc["dbs"], "o-", label="drone stations")
    ax.plot(blocks, acc["gbs"], "s-", label="ground stations (excess)")
    ax.set_xlabel("time block")
    ax.set_ylabel("accumulated energy (J)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)


def plot_sweep(rows, out):
    counts = [int(r["num_users"]) for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.plot(counts, [float(r["mean_dbs_energy_j"]) for r in rows], "o-",
             label="drone stations")
    ax1.plot(counts, [float(r["mean_gbs_energy_j"]) for r in rows], "s-",
             label="ground stations (excess)")
    ax1.set_xlabel("stranded users")
    ax1.set_ylabel("mean accumulated energy (J)")
    ax1.legend()
    ax2.plot(counts, [float(r["mean_active_drones"]) for r in rows], "d-")
    ax2.set_xlabel("stranded users")
    ax2.set_ylabel("mean active drones per block")
    fig.tight_layout()
    fig.savefig(out, dpi=150)


def main():
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    rows = _rows(sys.argv[1])
    if rows and "num_users" in rows[0]:
        plot_sweep(rows, sys.argv[2])
    else:
        plot_energy(rows, sys.argv[2])
    print(f"wrote {sys.argv[2]}")


if __name__ == "__main__":
    main()
