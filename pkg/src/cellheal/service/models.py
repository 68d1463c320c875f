"""Request/response models for the healing service.

The wire format mirrors the CSV exports: association, energy and trace
entries are the same rows the CLI writes to disk. Non-finite floats (the
trace carries them before the first feasible iterate) travel as null.
"""

from __future__ import annotations

import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from ..orchestrator import SolutionReport, SolveOptions
from ..schema import ScenarioDoc
from ..sweep import SweepRow


class SolveOptionsModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    max_iters: int = Field(50, ge=1)
    eps_th: float = Field(1e-3, gt=0)
    per_block: bool = True
    literal_energy: bool = False
    sca_rounds: int = Field(1, ge=1)

    def to_options(self) -> SolveOptions:
        return SolveOptions(max_iters=self.max_iters, eps_th=self.eps_th,
                            per_block=self.per_block,
                            literal_energy=self.literal_energy,
                            sca_rounds=self.sca_rounds)


class SolveRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: ScenarioDoc
    options: SolveOptionsModel = Field(default_factory=SolveOptionsModel)


class AssociationEntry(BaseModel):
    block: int
    user: int
    station_kind: Literal["gbs", "dbs"]
    station_id: int
    subchannel: int
    rate_bps_hz: float


class EnergyEntry(BaseModel):
    block: int
    station_kind: Literal["gbs", "dbs"]
    station_id: int
    energy_j: float


class TraceEntry(BaseModel):
    iteration: int
    lp_objective_j: float | None
    objective_j: float
    best_objective_j: float | None
    reconstruction: str
    min_margin_bps_hz: float | None
    active_drones_per_block: list[int]
    feasible: bool
    wall_time_s: float


class DronePosition(BaseModel):
    drone_id: int
    block: int
    x_m: float
    y_m: float


class BlockedPair(BaseModel):
    user: int
    block: int


class SolveResponse(BaseModel):
    feasible: bool
    total_energy_j: float
    dbs_energy_j: float
    gbs_energy_j: float
    active_drones_per_block: list[int]
    associations: list[AssociationEntry]
    energies: list[EnergyEntry]
    trace: list[TraceEntry]
    placement: list[DronePosition]
    blocking: list[BlockedPair]


class RandomScenarioRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int
    num_users: int = Field(..., ge=1)
    num_gbs: int = Field(4, ge=1)
    num_dbs: int = Field(4, ge=1)
    area_half_width_m: float = Field(200.0, gt=0)
    num_subchannels: int = Field(4, ge=1)
    num_blocks: int = Field(2, ge=1)
    rate_threshold_bps_hz: float = Field(2.0, gt=0)
    load_low: int = Field(0, ge=0)
    load_high: int = Field(50, ge=0)


class ScenarioResponse(BaseModel):
    scenario: ScenarioDoc


class OracleRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: ScenarioDoc
    grid_step_m: float = Field(10.0, gt=0)
    options: SolveOptionsModel = Field(default_factory=SolveOptionsModel)


class OracleResponse(BaseModel):
    engine_energy_j: float
    engine_feasible: bool
    oracle_energy_j: float
    ratio: float | None
    enumerated: int


class SweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    user_counts: list[int] = Field(default_factory=lambda: list(range(4, 11)))
    trials: int = Field(10, ge=1)
    base_seed: int = 0
    load_low: int = Field(46, ge=0)
    load_high: int = Field(50, ge=0)
    options: SolveOptionsModel = Field(default_factory=SolveOptionsModel)


class SweepEntry(BaseModel):
    num_users: int
    trials: int
    feasible_trials: int
    mean_active_drones: float
    mean_dbs_energy_j: float
    mean_gbs_energy_j: float

    @staticmethod
    def from_row(row: SweepRow) -> "SweepEntry":
        return SweepEntry(num_users=row.num_users, trials=row.trials,
                          feasible_trials=row.feasible_trials,
                          mean_active_drones=row.mean_active_drones,
                          mean_dbs_energy_j=row.mean_dbs_energy_j,
                          mean_gbs_energy_j=row.mean_gbs_energy_j)


class SweepResponse(BaseModel):
    rows: list[SweepEntry]


class HealthResponse(BaseModel):
    status: str
    version: str


def _finite_or_none(value: float) -> float | None:
    return float(value) if math.isfinite(value) else None


def report_to_response(report: SolutionReport) -> SolveResponse:
    scenario = report.scenario
    associations = []
    for n in range(scenario.num_blocks):
        for u, user in enumerate(scenario.users):
            for l, st in enumerate(scenario.gbs):
                for m in range(scenario.num_subchannels):
                    if report.decisions.eps[u, l, m, n] > 0.5:
                        associations.append(AssociationEntry(
                            block=n + 1, user=user.id, station_kind="gbs",
                            station_id=st.id, subchannel=m + 1,
                            rate_bps_hz=float(report.rates.r_gbs[u, l, m, n])))
            for d, st in enumerate(scenario.dbs):
                for m in range(scenario.num_subchannels):
                    if report.decisions.zeta[u, d, m, n] > 0.5:
                        associations.append(AssociationEntry(
                            block=n + 1, user=user.id, station_kind="dbs",
                            station_id=st.id, subchannel=m + 1,
                            rate_bps_hz=float(report.rates.r_dbs[u, d, m, n])))
    energies = []
    for n in range(scenario.num_blocks):
        for kind, stations, arr in (
                ("gbs", scenario.gbs, report.energy.gbs_energy),
                ("dbs", scenario.dbs, report.energy.dbs_energy)):
            for si, st in enumerate(stations):
                energies.append(EnergyEntry(block=n + 1, station_kind=kind,
                                            station_id=st.id,
                                            energy_j=float(arr[si, n])))
    trace = [TraceEntry(
        iteration=r.iteration,
        lp_objective_j=_finite_or_none(r.lp_objective),
        objective_j=float(r.objective),
        best_objective_j=_finite_or_none(r.best_objective),
        reconstruction=r.reconstruction,
        min_margin_bps_hz=_finite_or_none(r.min_margin),
        active_drones_per_block=list(r.active_per_block),
        feasible=r.feasible,
        wall_time_s=r.wall_time_s) for r in report.trace]
    placement = [DronePosition(drone_id=st.id, block=n + 1,
                               x_m=float(report.placement[d, n, 0]),
                               y_m=float(report.placement[d, n, 1]))
                 for d, st in enumerate(scenario.dbs)
                 for n in range(scenario.num_blocks)]
    blocking = [BlockedPair(user=scenario.users[u].id, block=n + 1)
                for u, n in report.blocking]
    return SolveResponse(
        feasible=report.feasible,
        total_energy_j=report.objective,
        dbs_energy_j=report.energy.dbs_total,
        gbs_energy_j=report.energy.gbs_total,
        active_drones_per_block=[int(v) for v in
                                 report.decisions.kappa.sum(axis=0)],
        associations=associations, energies=energies, trace=trace,
        placement=placement, blocking=blocking)
