"""CSV serialization of solution reports.

All numeric cells are written with ``repr`` so files round-trip exactly:
parsing a file and re-emitting it reproduces identical bytes, and two runs
with the same seed produce identical files (iteration wall times are kept out
of the CSVs for that reason).
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

from .orchestrator import IterationRow, SolutionReport

ASSOCIATION_FIELDS = ["block", "user", "station_kind", "station_id",
                      "subchannel", "rate_bps_hz"]
ENERGY_FIELDS = ["block", "station_kind", "station_id", "energy_j"]
TRACE_FIELDS = ["iteration", "lp_objective_j", "objective_j", "best_objective_j",
                "reconstruction", "min_margin_bps_hz", "active_drones_per_block",
                "feasible"]
SWEEP_FIELDS = ["num_users", "trials", "feasible_trials", "mean_active_drones",
                "mean_dbs_energy_j", "mean_gbs_energy_j"]


def association_rows(report: SolutionReport) -> list[dict]:
    """One row per (user, block): the assigned station and its rate."""
    scenario = report.scenario
    rows = []
    for n in range(scenario.num_blocks):
        for u, user in enumerate(scenario.users):
            for l, st in enumerate(scenario.gbs):
                for m in range(scenario.num_subchannels):
                    if report.decisions.eps[u, l, m, n] > 0.5:
                        rows.append({
                            "block": str(n + 1), "user": str(user.id),
                            "station_kind": "gbs", "station_id": str(st.id),
                            "subchannel": str(m + 1),
                            "rate_bps_hz": repr(float(report.rates.r_gbs[u, l, m, n])),
                        })
            for d, st in enumerate(scenario.dbs):
                for m in range(scenario.num_subchannels):
                    if report.decisions.zeta[u, d, m, n] > 0.5:
                        rows.append({
                            "block": str(n + 1), "user": str(user.id),
                            "station_kind": "dbs", "station_id": str(st.id),
                            "subchannel": str(m + 1),
                            "rate_bps_hz": repr(float(report.rates.r_dbs[u, d, m, n])),
                        })
    return rows


def energy_report_rows(report: SolutionReport) -> list[dict]:
    scenario = report.scenario
    rows = []
    for n in range(scenario.num_blocks):
        for kind, stations, arr in (
                ("gbs", scenario.gbs, report.energy.gbs_energy),
                ("dbs", scenario.dbs, report.energy.dbs_energy)):
            for si, st in enumerate(stations):
                rows.append({"block": str(n + 1), "station_kind": kind,
                             "station_id": str(st.id),
                             "energy_j": repr(float(arr[si, n]))})
    return rows


def _fmt(value: float) -> str:
    if math.isnan(value):
        return "nan"
    return repr(float(value))


def trace_rows(trace: list[IterationRow]) -> list[dict]:
    rows = []
    for row in trace:
        rows.append({
            "iteration": str(row.iteration),
            "lp_objective_j": _fmt(row.lp_objective),
            "objective_j": _fmt(row.objective),
            "best_objective_j": _fmt(row.best_objective),
            "reconstruction": row.reconstruction,
            "min_margin_bps_hz": _fmt(row.min_margin),
            "active_drones_per_block": ";".join(str(v) for v in row.active_per_block),
            "feasible": str(int(row.feasible)),
        })
    return rows


def write_csv(rows: list[dict], fieldnames: list[str], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def read_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_report_csvs(report: SolutionReport, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"associations": out / "associations.csv",
             "energy": out / "energy.csv",
             "trace": out / "trace.csv"}
    write_csv(association_rows(report), ASSOCIATION_FIELDS, paths["associations"])
    write_csv(energy_report_rows(report), ENERGY_FIELDS, paths["energy"])
    write_csv(trace_rows(report.trace), TRACE_FIELDS, paths["trace"])
    return paths
