"""Exhaustive reference solver for tiny instances.

Enumerates every binary assignment and, for assignments that need drones,
searches a regular grid of hover positions for one that satisfies the rate
floors. Energy does not depend on where a drone hovers, so an assignment's
cost is fixed and the grid search is a pure feasibility check, cached by the
drone-load signature. Deliberately slow and simple: this is the ground truth
the fast path is measured against.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .association import DecisionVars, eps_cost, zeta_cost
from .audit import audit_decisions
from .power import activation_energy, build_energy_breakdown
from .scenario import Scenario

_LIMITS = {"users": 4, "dbs": 2, "gbs": 2, "subchannels": 2, "blocks": 1}


class OracleError(RuntimeError):
    pass


class InstanceTooLargeError(OracleError):
    pass


@dataclass
class OracleResult:
    energy: float
    decisions: DecisionVars
    placement: np.ndarray  # (D, 1, 2)
    enumerated: int


def _check_size(scenario: Scenario) -> None:
    actual = {"users": scenario.num_users, "dbs": scenario.num_dbs,
              "gbs": scenario.num_gbs, "subchannels": scenario.num_subchannels}
    for key, cap in _LIMITS.items():
        if key == "blocks":
            if scenario.num_blocks != 1:
                raise InstanceTooLargeError("exhaustive search handles a single block")
        elif actual[key] > cap:
            raise InstanceTooLargeError(
                f"{key}={actual[key]} exceeds the exhaustive-search cap {cap}")


def _grid(lo: np.ndarray, hi: np.ndarray, step: float) -> np.ndarray:
    counts = []
    for a, b in zip(lo, hi):
        span = (b - a) / step
        if abs(span - round(span)) > 1e-9:
            raise OracleError(f"grid step {step} does not divide the box evenly")
        counts.append(int(round(span)) + 1)
    xs = lo[0] + step * np.arange(counts[0])
    ys = lo[1] + step * np.arange(counts[1])
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def brute_force(scenario: Scenario, grid_step: float = 10.0, *,
                literal: bool = False) -> OracleResult:
    """Exact constrained minimum of the healing energy with drone positions
    restricted to the grid."""
    _check_size(scenario)
    u_n, l_n = scenario.num_users, scenario.num_gbs
    d_n, m_n = scenario.num_dbs, scenario.num_subchannels
    noise = scenario.radio.noise_power_w
    rho0 = scenario.radio.rho0

    if u_n == 0:
        dec = DecisionVars.empty(scenario)
        placement = scenario.initial_placement()
        energy = build_energy_breakdown(dec.zeta, dec.eps, dec.kappa,
                                        scenario, literal=literal).total
        return OracleResult(energy=energy, decisions=dec, placement=placement,
                            enumerated=1)

    grids = [_grid(d.box_min, d.box_max, grid_step) for d in scenario.dbs]
    # received power from every grid point of every drone to every user
    rx_grid = []
    users_xy = scenario.user_positions()
    for d, drone in enumerate(scenario.dbs):
        diff = grids[d][:, None, :] - users_xy[None, :, :]
        sq = (diff ** 2).sum(axis=2)
        rx_grid.append(drone.per_subchannel_power * rho0
                       / (drone.altitude ** 2 + sq))  # (G, U)

    gbs_rx = np.empty((u_n, l_n))
    alpha = scenario.radio.pathloss_exponent_gbs
    for li, g in enumerate(scenario.gbs):
        diff = users_xy - g.position[None, :]
        dist = np.sqrt(g.height ** 2 + (diff ** 2).sum(axis=1))
        gbs_rx[:, li] = g.per_subchannel_power * rho0 / dist ** alpha

    thresholds = np.array([u.rate_threshold for u in scenario.users])
    snr_floor = 2.0 ** thresholds - 1.0  # gamma needed per user

    pairs = ([("gbs", li, mi) for li in range(l_n) for mi in range(m_n)]
             + [("dbs", di, mi) for di in range(d_n) for mi in range(m_n)])

    gbs_spare = np.array([g.max_rate - g.own_user_rate * float(g.own_user_load[0])
                          for g in scenario.gbs])

    drone_feas_cache: dict[tuple, dict | None] = {}

    def _closeness(d: int, users: set[int]) -> np.ndarray:
        """Sum of squared horizontal distances from each grid point of drone
        d to its served users; used to pick a canonical witness position."""
        score = np.zeros(len(grids[d]))
        for u in users:
            score += ((grids[d] - users_xy[u]) ** 2).sum(axis=1)
        return score

    def drone_feasible(served: dict[tuple[int, int], tuple[int, ...]]):
        """served maps (drone, sub-channel) -> user indices. Returns a grid
        position per active drone (nearest-to-users among feasible) or None."""
        key = tuple(sorted((dm, tuple(us)) for dm, us in served.items()))
        if key in drone_feas_cache:
            return drone_feas_cache[key]
        active = sorted({d for d, _ in served})
        users_of = {d: {u for (dd, _), us in served.items() for u in us if dd == d}
                    for d in active}
        result = None
        if len(active) == 1:
            d = active[0]
            ok = np.ones(len(grids[d]), dtype=bool)
            for (dd, m), us in served.items():
                for u in us:
                    ok &= rx_grid[d][:, u] >= snr_floor[u] * noise
            if ok.any():
                score = np.where(ok, _closeness(d, users_of[d]), np.inf)
                result = {d: grids[d][int(np.argmin(score))]}
        elif len(active) == 2:
            d1, d2 = active
            shared = ({m for d, m in served if d == d1}
                      & {m for d, m in served if d == d2})
            if not shared:
                pos = {}
                for d in active:
                    ok = np.ones(len(grids[d]), dtype=bool)
                    for (dd, m), us in served.items():
                        if dd != d:
                            continue
                        for u in us:
                            ok &= rx_grid[d][:, u] >= snr_floor[u] * noise
                    if not ok.any():
                        pos = None
                        break
                    score = np.where(ok, _closeness(d, users_of[d]), np.inf)
                    pos[d] = grids[d][int(np.argmin(score))]
                result = pos
            else:
                ok = np.ones((len(grids[d1]), len(grids[d2])), dtype=bool)
                for (d, m), us in served.items():
                    other = d2 if d == d1 else d1
                    other_on_m = (other, m) in served
                    for u in us:
                        sig = rx_grid[d][:, u]
                        if other_on_m:
                            interf = rx_grid[other][:, u]
                            if d == d1:
                                ok &= sig[:, None] >= snr_floor[u] * (interf[None, :] + noise)
                            else:
                                ok &= sig[None, :] >= snr_floor[u] * (interf[:, None] + noise)
                        else:
                            good = sig >= snr_floor[u] * noise
                            ok &= good[:, None] if d == d1 else good[None, :]
                if ok.any():
                    score = (_closeness(d1, users_of[d1])[:, None]
                             + _closeness(d2, users_of[d2])[None, :])
                    score = np.where(ok, score, np.inf)
                    i, j = np.unravel_index(int(np.argmin(score)), score.shape)
                    result = {d1: grids[d1][i], d2: grids[d2][j]}
        drone_feas_cache[key] = result
        return result

    best: tuple[float, tuple, dict] | None = None
    enumerated = 0
    for combo in itertools.product(range(len(pairs)), repeat=u_n):
        enumerated += 1
        choice = [pairs[k] for k in combo]
        gbs_load = np.zeros(l_n)
        dbs_load = np.zeros(d_n)
        for u, (kind, s, _) in enumerate(choice):
            if kind == "gbs":
                gbs_load[s] += thresholds[u]
            else:
                dbs_load[s] += thresholds[u]
        if (gbs_load > gbs_spare + 1e-9).any():
            continue
        if (dbs_load > np.array([d.max_rate for d in scenario.dbs]) + 1e-9).any():
            continue

        active_gbs_m = {(s, m) for kind, s, m in choice if kind == "gbs"}
        ok = True
        for u, (kind, s, m) in enumerate(choice):
            if kind != "gbs":
                continue
            interf = sum(gbs_rx[u, s2] for s2, m2 in active_gbs_m
                         if m2 == m and s2 != s)
            if gbs_rx[u, s] < snr_floor[u] * (interf + noise):
                ok = False
                break
        if not ok:
            continue

        served: dict[tuple[int, int], tuple[int, ...]] = {}
        for u, (kind, s, m) in enumerate(choice):
            if kind == "dbs":
                served[(s, m)] = served.get((s, m), ()) + (u,)
        active_drones = sorted({d for d, _ in served})
        energy = 0.0
        for u, (kind, s, _) in enumerate(choice):
            energy += eps_cost(scenario, s) if kind == "gbs" else zeta_cost(scenario, s)
        for d in active_drones:
            energy += activation_energy(d, scenario)
        if literal:
            energy += sum(scenario.block_duration * d.beta for d in scenario.dbs)
            energy -= sum(scenario.block_duration * scenario.dbs[d].beta
                          for d in active_drones)
        if best is not None and energy >= best[0]:
            continue
        if served:
            witness = drone_feasible(served)
            if witness is None:
                continue
        else:
            witness = {}
        best = (energy, tuple(choice), witness)

    if best is None:
        raise OracleError("no feasible assignment exists anywhere on the grid")

    energy, choice, witness = best
    dec = DecisionVars.empty(scenario)
    for u, (kind, s, m) in enumerate(choice):
        if kind == "gbs":
            dec.eps[u, s, m, 0] = 1.0
        else:
            dec.zeta[u, s, m, 0] = 1.0
    dec.kappa[:, :] = (dec.zeta.sum(axis=(0, 2)) > 0.5).astype(float)
    placement = scenario.initial_placement()
    for d, xy in witness.items():
        placement[d, 0] = xy
    verdict = audit_decisions(dec, placement, scenario)
    if not verdict.ok:
        raise OracleError(f"winner failed the audit: {verdict.violations}")
    check = build_energy_breakdown(dec.zeta, dec.eps, dec.kappa, scenario,
                                   literal=literal).total
    if abs(check - energy) > 1e-6:
        raise OracleError(f"energy bookkeeping mismatch: {check} vs {energy}")
    return OracleResult(energy=energy, decisions=dec, placement=placement,
                        enumerated=enumerated)
