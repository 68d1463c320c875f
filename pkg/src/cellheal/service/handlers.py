"""Service layer: the functions behind the HTTP routes.

The CLI calls these directly when no remote server is configured, so all
behavior lives here and the routes stay one-liners.
"""

from __future__ import annotations

from ..oracle import brute_force
from ..orchestrator import run
from ..scenario import generate_random_scenario, scenario_from_doc
from ..sweep import run_sweep
from .models import (
    OracleRequest,
    OracleResponse,
    RandomScenarioRequest,
    ScenarioResponse,
    SolveRequest,
    SolveResponse,
    SweepEntry,
    SweepRequest,
    SweepResponse,
    report_to_response,
)


def solve(request: SolveRequest) -> SolveResponse:
    scenario = scenario_from_doc(request.scenario)
    report = run(scenario, request.options.to_options())
    return report_to_response(report)


def random_scenario(request: RandomScenarioRequest) -> ScenarioResponse:
    scenario = generate_random_scenario(
        request.seed, request.num_users, request.num_gbs, request.num_dbs,
        request.area_half_width_m,
        num_subchannels=request.num_subchannels,
        num_blocks=request.num_blocks,
        rate_threshold=request.rate_threshold_bps_hz,
        load_range=(request.load_low, request.load_high))
    return ScenarioResponse(scenario=scenario.doc)


def oracle_compare(request: OracleRequest) -> OracleResponse:
    scenario = scenario_from_doc(request.scenario)
    options = request.options.to_options()
    result = brute_force(scenario, request.grid_step_m,
                         literal=options.literal_energy)
    report = run(scenario, options)
    ratio = report.objective / result.energy if result.energy > 0 else None
    return OracleResponse(engine_energy_j=report.objective,
                          engine_feasible=report.feasible,
                          oracle_energy_j=result.energy,
                          ratio=ratio, enumerated=result.enumerated)


def sweep(request: SweepRequest) -> SweepResponse:
    rows = run_sweep(request.user_counts, request.trials,
                     base_seed=request.base_seed,
                     load_range=(request.load_low, request.load_high),
                     options=request.options.to_options())
    return SweepResponse(rows=[SweepEntry.from_row(r) for r in rows])
