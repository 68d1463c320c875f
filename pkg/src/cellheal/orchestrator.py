"""Outer loop: alternate the association LP and the placement improvement.

Each iteration rebuilds candidate rates under the previous iterate's activity
pattern, re-solves the relaxed association problem, reconstructs binaries,
then runs placement rounds under the new assignment. The reported solution is
the best iterate that passed the independent audit, not the last one: the
alternation with rounding is not monotone, so we keep what was provably good.

Users that cannot reach their threshold on any pair at the current placement
would make the LP infeasible outright; they are instead parked on their
best-rate drone pair so the placement step can fly a drone toward them, and
the iterate simply does not audit as feasible until that works.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .association import (
    DecisionVars,
    LpInfeasibleError,
    blocked_users,
    build_lp,
    reconstruct_binary,
    solve_lp,
)
from .audit import AuditVerdict, audit_decisions
from .placement import ScaState, sca_round, true_margins
from .power import EnergyBreakdown, build_energy_breakdown
from .radio import ActiveSet, RateTable, build_rate_table
from .scenario import Scenario


@dataclass(frozen=True)
class SolveOptions:
    max_iters: int = 50
    eps_th: float = 1e-3  # fractional objective change that ends the loop
    per_block: bool = True  # blocks share no constraints; solve them separately
    literal_energy: bool = False
    sca_rounds: int = 1


@dataclass(frozen=True)
class IterationRow:
    iteration: int
    lp_objective: float
    objective: float
    best_objective: float
    reconstruction: str
    min_margin: float
    active_per_block: tuple[int, ...]
    feasible: bool
    sca_margins: tuple[float, ...]
    wall_time_s: float


@dataclass
class SolutionReport:
    scenario: Scenario
    feasible: bool
    objective: float
    decisions: DecisionVars
    placement: np.ndarray
    rates: RateTable
    energy: EnergyBreakdown
    trace: list[IterationRow]
    blocking: list[tuple[int, int]] = field(default_factory=list)
    options: SolveOptions = field(default_factory=SolveOptions)


class NoFeasibleSolutionError(RuntimeError):
    def __init__(self, blocking: list[tuple[int, int]], message: str):
        self.blocking = blocking
        super().__init__(message)


def audit(report: SolutionReport, scenario: Scenario) -> AuditVerdict:
    """Re-check a report against every constraint from scratch."""
    return audit_decisions(report.decisions, report.placement, scenario)


def _solve_association(scenario: Scenario, rates: RateTable,
                       options: SolveOptions,
                       relax_rate_for: frozenset[tuple[int, int]]):
    if not options.per_block:
        model = build_lp(scenario, rates, relax_rate_for=relax_rate_for)
        sol = solve_lp(model)
        return sol.decisions, sol.objective
    merged = DecisionVars.empty(scenario, binary=False)
    total = 0.0
    for n in range(scenario.num_blocks):
        model = build_lp(scenario, rates, block=n, relax_rate_for=relax_rate_for)
        sol = solve_lp(model)
        merged.eps[:, :, :, n] = sol.decisions.eps[:, :, :, n]
        merged.zeta[:, :, :, n] = sol.decisions.zeta[:, :, :, n]
        merged.kappa[:, n] = sol.decisions.kappa[:, n]
        total += sol.objective
    return merged, total


def _force_drone_assign(decisions: DecisionVars, scenario: Scenario,
                        rates: RateTable, pairs: list[tuple[int, int]]):
    """Park the given (user, block) pairs on their best-rate drone pair,
    respecting drone capacity. Returns new decisions and unresolved pairs."""
    zeta, eps = decisions.zeta.copy(), decisions.eps.copy()
    unresolved: list[tuple[int, int]] = []
    for u, n in sorted(set(pairs)):
        eps[u, :, :, n] = 0.0
        zeta[u, :, :, n] = 0.0
        th = scenario.users[u].rate_threshold
        best = None
        for d, drone in enumerate(scenario.dbs):
            load = sum(scenario.users[v].rate_threshold
                       * float(zeta[v, d, :, n].sum())
                       for v in range(scenario.num_users))
            if load + th > drone.max_rate + 1e-9:
                continue
            for m in range(scenario.num_subchannels):
                key = (-rates.r_dbs[u, d, m, n], d, m)
                if best is None or key < best[0]:
                    best = (key, d, m)
        if best is None:
            unresolved.append((u, n))
        else:
            zeta[u, best[1], best[2], n] = 1.0
    kappa = (zeta.sum(axis=(0, 2)) > 0.5).astype(float)
    return DecisionVars(zeta=zeta, eps=eps, kappa=kappa, binary=True), unresolved


def _snapshot(decisions: DecisionVars, placement: np.ndarray,
              scenario: Scenario, options: SolveOptions):
    breakdown = build_energy_breakdown(decisions.zeta, decisions.eps,
                                       decisions.kappa, scenario,
                                       literal=options.literal_energy)
    return decisions, placement.copy(), breakdown


def _empty_report(scenario: Scenario, options: SolveOptions) -> SolutionReport:
    decisions = DecisionVars.empty(scenario)
    placement = scenario.initial_placement()
    rates = build_rate_table(placement, decisions.active_set(), scenario)
    energy = build_energy_breakdown(decisions.zeta, decisions.eps,
                                    decisions.kappa, scenario,
                                    literal=options.literal_energy)
    return SolutionReport(scenario=scenario, feasible=True, objective=energy.total,
                          decisions=decisions, placement=placement, rates=rates,
                          energy=energy, trace=[], options=options)


def run(scenario: Scenario, options: SolveOptions | None = None) -> SolutionReport:
    """Solve one healing instance end to end."""
    options = options or SolveOptions()
    if options.max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if options.eps_th <= 0:
        raise ValueError("eps_th must be > 0")
    if scenario.num_users == 0:
        return _empty_report(scenario, options)

    placement = scenario.initial_placement()
    active = ActiveSet.warm_start(scenario)
    decisions: DecisionVars | None = None
    best: tuple[float, tuple] | None = None
    trace: list[IterationRow] = []
    prev_obj: float | None = None
    prev_margin: float | None = None
    last_verdict: AuditVerdict | None = None
    last_blocked: list[tuple[int, int]] = []

    for it in range(1, options.max_iters + 1):
        t0 = time.perf_counter()
        rates = build_rate_table(placement, active, scenario)
        blocked = blocked_users(scenario, rates)
        last_blocked = blocked
        lp_objective = math.nan
        status = "ok"
        try:
            relaxed, lp_objective = _solve_association(
                scenario, rates, options, frozenset(blocked))
            recon = reconstruct_binary(relaxed, scenario, rates)
            candidate = recon.decisions
            to_park = list(blocked) + [idx for kind, idx in recon.violations
                                       if kind == "unassigned"]
            if to_park:
                candidate, unresolved = _force_drone_assign(
                    candidate, scenario, rates, to_park)
                status = "rescued"
                if unresolved:
                    status = "rescue_exhausted"
            elif not recon.feasible:
                status = "reconstruction_infeasible"
            decisions = candidate
        except LpInfeasibleError as exc:
            if decisions is None:
                raise NoFeasibleSolutionError(
                    blocked, f"association problem infeasible on iteration {it}: "
                             f"{exc.row_classes}") from exc
            status = "lp_infeasible_kept_previous"

        sca_margins = []
        state = ScaState.initial(scenario, placement)
        _, margin0 = true_margins(placement, decisions, scenario)
        sca_margins.append(margin0)
        for _ in range(options.sca_rounds):
            state = sca_round(state, decisions, scenario)
            sca_margins.append(state.min_margin)
        placement = state.anchors
        active = decisions.active_set()

        snap = _snapshot(decisions, placement, scenario, options)
        objective = snap[2].total
        verdict = audit_decisions(decisions, placement, scenario)
        last_verdict = verdict
        min_margin = sca_margins[-1]
        if verdict.ok and (best is None or objective < best[0]):
            best = (objective, snap)
        best_objective = best[0] if best else math.inf
        trace.append(IterationRow(
            iteration=it, lp_objective=lp_objective, objective=objective,
            best_objective=best_objective, reconstruction=status,
            min_margin=min_margin,
            active_per_block=tuple(int(v) for v in decisions.kappa.sum(axis=0)),
            feasible=verdict.ok, sca_margins=tuple(sca_margins),
            wall_time_s=time.perf_counter() - t0))

        if prev_obj is not None:
            frac = abs(objective - prev_obj) / max(abs(prev_obj), 1e-12)
            margin_stalled = (prev_margin is not None
                              and not (min_margin > prev_margin + 1e-9))
            if frac <= options.eps_th and (verdict.ok or margin_stalled):
                break
        prev_obj, prev_margin = objective, min_margin

    if best is not None:
        final_dec, final_placement, breakdown = best[1]
        feasible = True
        blocking: list[tuple[int, int]] = []
    else:
        final_dec, final_placement, breakdown = _snapshot(
            decisions, placement, scenario, options)
        feasible = False
        blocking = sorted({v.indices for v in (last_verdict.violations if last_verdict else [])
                           if v.constraint in ("rate", "association")}
                          | set(last_blocked))
    final_rates = build_rate_table(final_placement, final_dec.active_set(), scenario)
    return SolutionReport(scenario=scenario, feasible=feasible,
                          objective=breakdown.total, decisions=final_dec,
                          placement=final_placement, rates=final_rates,
                          energy=breakdown, trace=trace, blocking=blocking,
                          options=options)
