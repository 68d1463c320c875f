"""User-count sweeps for the accumulated-energy comparison.

Each trial draws one scenario at the largest user count and reuses its prefix
for the smaller counts (common random numbers), so the drone-demand trend
across counts is not drowned in sampling noise. Ground stations are left
heavily loaded by default: the sweep exists to show what happens when the
neighbors cannot absorb everyone.
"""

from __future__ import annotations

from dataclasses import dataclass

from .orchestrator import SolveOptions, run
from .scenario import Scenario, generate_random_scenario, scenario_from_dict


@dataclass(frozen=True)
class SweepRow:
    num_users: int
    trials: int
    feasible_trials: int
    mean_active_drones: float
    mean_dbs_energy_j: float
    mean_gbs_energy_j: float


def user_prefix_scenario(scenario: Scenario, count: int) -> Scenario:
    """Same instance restricted to the first ``count`` users."""
    raw = scenario.doc.model_dump(mode="json")
    raw["users"] = raw["users"][:count]
    return scenario_from_dict(raw)


def run_sweep(user_counts: list[int], trials: int, *, base_seed: int = 0,
              load_range: tuple[int, int] = (46, 50),
              options: SolveOptions | None = None) -> list[SweepRow]:
    options = options or SolveOptions()
    counts = sorted(user_counts)
    full = [generate_random_scenario(base_seed + t, counts[-1],
                                     load_range=load_range)
            for t in range(trials)]
    rows = []
    for count in counts:
        active, dbs_e, gbs_e, feasible = 0.0, 0.0, 0.0, 0
        for t in range(trials):
            scenario = user_prefix_scenario(full[t], count)
            report = run(scenario, options)
            if report.feasible:
                feasible += 1
            active += float(report.decisions.kappa.sum()) / scenario.num_blocks
            dbs_e += report.energy.dbs_total
            gbs_e += report.energy.gbs_total
        rows.append(SweepRow(
            num_users=count, trials=trials, feasible_trials=feasible,
            mean_active_drones=active / trials,
            mean_dbs_energy_j=dbs_e / trials,
            mean_gbs_energy_j=gbs_e / trials))
    return rows


def sweep_csv_rows(rows: list[SweepRow]) -> list[dict]:
    return [{
        "num_users": str(r.num_users),
        "trials": str(r.trials),
        "feasible_trials": str(r.feasible_trials),
        "mean_active_drones": repr(r.mean_active_drones),
        "mean_dbs_energy_j": repr(r.mean_dbs_energy_j),
        "mean_gbs_energy_j": repr(r.mean_gbs_energy_j),
    } for r in rows]
