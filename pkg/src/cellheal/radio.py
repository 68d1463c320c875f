"""Line-of-sight channel model: distances, gains, SINR and achievable rates.

Everything here is a pure function of immutable inputs. Interference is
intra-tier only: drones never interfere with ground links and vice versa.
Which stations actually transmit on a sub-channel comes from an
:class:`ActiveSet`, derived each outer iteration from the current decision
variables (a station left out of the active set radiates nothing there).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .scenario import Scenario


def dist_dbs_user(drone_xy: np.ndarray, user_xy: np.ndarray, altitude: float) -> float:
    """Slant distance from a hovering drone to a ground user."""
    offset = np.asarray(drone_xy, dtype=float) - np.asarray(user_xy, dtype=float)
    return float(np.sqrt(altitude * altitude + offset @ offset))


def dist_gbs_user(gbs_xy: np.ndarray, user_xy: np.ndarray, height: float) -> float:
    offset = np.asarray(gbs_xy, dtype=float) - np.asarray(user_xy, dtype=float)
    return float(np.sqrt(height * height + offset @ offset))


def gain_dbs(drone_xy: np.ndarray, user_xy: np.ndarray, altitude: float,
             rho0: float) -> float:
    """Free-space drone-to-user channel gain: rho0 / squared slant distance."""
    offset = np.asarray(drone_xy, dtype=float) - np.asarray(user_xy, dtype=float)
    return rho0 / (altitude * altitude + float(offset @ offset))


def gain_gbs(gbs_xy: np.ndarray, user_xy: np.ndarray, height: float,
             rho0: float, alpha: float) -> float:
    """Urban ground-to-user channel gain: rho0 / distance ** alpha."""
    return rho0 / dist_gbs_user(gbs_xy, user_xy, height) ** alpha


@dataclass(frozen=True)
class ActiveSet:
    """Which drones / ground stations transmit on each (sub-channel, block)."""

    dbs: np.ndarray  # bool (D, M, N)
    gbs: np.ndarray  # bool (L, M, N)

    @staticmethod
    def warm_start(scenario: Scenario) -> "ActiveSet":
        """Conventional-healing start: no drones aloft, every ground station
        radiating on every healing sub-channel."""
        d, l = scenario.num_dbs, scenario.num_gbs
        m, n = scenario.num_subchannels, scenario.num_blocks
        return ActiveSet(dbs=np.zeros((d, m, n), dtype=bool),
                         gbs=np.ones((l, m, n), dtype=bool))

    @staticmethod
    def from_assignments(zeta: np.ndarray, eps: np.ndarray) -> "ActiveSet":
        """Derive activity from assignment indicators (any served user on a
        sub-channel switches that transmitter on there)."""
        return ActiveSet(dbs=zeta.sum(axis=0) > 0.5, gbs=eps.sum(axis=0) > 0.5)


def check_placement(placement: np.ndarray, scenario: Scenario) -> None:
    """Validate drone coordinates against their per-drone boxes."""
    placement = np.asarray(placement, dtype=float)
    expect = (scenario.num_dbs, scenario.num_blocks, 2)
    if placement.shape != expect:
        raise ValueError(f"placement shape {placement.shape} != {expect}")
    for di, drone in enumerate(scenario.dbs):
        lo, hi = drone.box_min, drone.box_max
        if (placement[di] < lo - 1e-9).any() or (placement[di] > hi + 1e-9).any():
            raise ValueError(f"dbs {drone.id}: coordinates outside box")


def dbs_gain_matrix(placement: np.ndarray, scenario: Scenario) -> np.ndarray:
    """Drone-to-user gains, shape (U, D, N)."""
    users = scenario.user_positions()  # (U, 2)
    rho0 = scenario.radio.rho0
    out = np.empty((scenario.num_users, scenario.num_dbs, scenario.num_blocks))
    for di, drone in enumerate(scenario.dbs):
        # (U, N): squared horizontal offsets per block
        diff = placement[di][None, :, :] - users[:, None, :]
        sq = (diff ** 2).sum(axis=2)
        out[:, di, :] = rho0 / (drone.altitude ** 2 + sq)
    return out


def gbs_gain_matrix(scenario: Scenario) -> np.ndarray:
    """Ground-to-user gains, shape (U, L). Static: ground stations never move."""
    users = scenario.user_positions()
    alpha = scenario.radio.pathloss_exponent_gbs
    rho0 = scenario.radio.rho0
    out = np.empty((scenario.num_users, scenario.num_gbs))
    for li, g in enumerate(scenario.gbs):
        diff = users - g.position[None, :]
        dist = np.sqrt(g.height ** 2 + (diff ** 2).sum(axis=1))
        out[:, li] = rho0 / dist ** alpha
    return out


@dataclass(frozen=True)
class RateTable:
    """Per (user, station, sub-channel, block) achievable rates in bps/Hz.

    Carries the gain matrices it was computed from so rates under a different
    activity pattern can be re-derived without touching the placement again.
    """

    r_dbs: np.ndarray  # (U, D, M, N)
    r_gbs: np.ndarray  # (U, L, M, N)
    gains_dbs: np.ndarray  # (U, D, N)
    gains_gbs: np.ndarray  # (U, L)
    p_dbs: np.ndarray  # (D,)
    p_gbs: np.ndarray  # (L,)
    noise_w: float
    active: ActiveSet

    def with_activity(self, active: ActiveSet) -> "RateTable":
        r_dbs, r_gbs = _rates_from_gains(
            self.gains_dbs, self.gains_gbs, self.p_dbs, self.p_gbs,
            self.noise_w, active)
        return replace(self, r_dbs=r_dbs, r_gbs=r_gbs, active=active)


def _candidate_sinr(gains: np.ndarray, powers: np.ndarray, mask: np.ndarray,
                    noise_w: float) -> np.ndarray:
    """SINR of every station toward every user on one (m, n), assuming the
    candidate transmits and the stations in ``mask`` interfere.

    gains: (U, S); powers: (S,); mask: bool (S,). Returns (U, S).
    """
    rx = gains * powers[None, :]  # (U, S)
    total_interf = rx[:, mask].sum(axis=1)  # (U,)
    denom = total_interf[:, None] - np.where(mask[None, :], rx, 0.0) + noise_w
    return rx / denom


def _rates_from_gains(gains_dbs, gains_gbs, p_dbs, p_gbs, noise_w,
                      active: ActiveSet) -> tuple[np.ndarray, np.ndarray]:
    u, d, n = gains_dbs.shape
    l = gains_gbs.shape[1]
    m = active.dbs.shape[1]
    r_dbs = np.empty((u, d, m, n))
    r_gbs = np.empty((u, l, m, n))
    for ni in range(n):
        for mi in range(m):
            gd = _candidate_sinr(gains_dbs[:, :, ni], p_dbs,
                                 active.dbs[:, mi, ni], noise_w)
            gg = _candidate_sinr(gains_gbs, p_gbs,
                                 active.gbs[:, mi, ni], noise_w)
            r_dbs[:, :, mi, ni] = np.log2(1.0 + gd)
            r_gbs[:, :, mi, ni] = np.log2(1.0 + gg)
    return r_dbs, r_gbs


def sinr_dbs(u: int, d: int, m: int, n: int, placement: np.ndarray,
             active: ActiveSet, scenario: Scenario) -> float:
    """SINR of drone d toward user u on sub-channel m in block n.

    The drone must be transmitting on (m, n); otherwise its per-sub-channel
    power is zero by convention and the ratio is meaningless.
    """
    if not active.dbs[d, m, n]:
        raise ValueError(f"dbs index {d} not active on sub-channel {m}, block {n}")
    gains = dbs_gain_matrix(placement, scenario)[u, :, n]
    p = np.array([s.per_subchannel_power for s in scenario.dbs])
    rx = gains * p
    interf = rx[active.dbs[:, m, n]].sum() - rx[d]
    return float(rx[d] / (interf + scenario.radio.noise_power_w))


def sinr_gbs(u: int, l: int, m: int, n: int, active: ActiveSet,
             scenario: Scenario) -> float:
    if not active.gbs[l, m, n]:
        raise ValueError(f"gbs index {l} not active on sub-channel {m}, block {n}")
    gains = gbs_gain_matrix(scenario)[u, :]
    p = np.array([s.per_subchannel_power for s in scenario.gbs])
    rx = gains * p
    interf = rx[active.gbs[:, m, n]].sum() - rx[l]
    return float(rx[l] / (interf + scenario.radio.noise_power_w))


def build_rate_table(placement: np.ndarray, active: ActiveSet,
                     scenario: Scenario) -> RateTable:
    """Achievable rate of every candidate link under the given activity.

    Entry (u, s, m, n) is the rate user u would get from station s on
    sub-channel m in block n if s transmitted there, with co-channel
    interference from the other currently-active stations of the same tier.
    """
    check_placement(placement, scenario)
    gains_dbs = dbs_gain_matrix(placement, scenario)
    gains_gbs = gbs_gain_matrix(scenario)
    p_dbs = np.array([s.per_subchannel_power for s in scenario.dbs])
    p_gbs = np.array([s.per_subchannel_power for s in scenario.gbs])
    noise = scenario.radio.noise_power_w
    r_dbs, r_gbs = _rates_from_gains(gains_dbs, gains_gbs, p_dbs, p_gbs,
                                     noise, active)
    return RateTable(r_dbs=r_dbs, r_gbs=r_gbs, gains_dbs=gains_dbs,
                     gains_gbs=gains_gbs, p_dbs=p_dbs, p_gbs=p_gbs,
                     noise_w=noise, active=active)


def rate_table_rows(table: RateTable, scenario: Scenario) -> list[dict]:
    rows = []
    for ni in range(scenario.num_blocks):
        for ui, user in enumerate(scenario.users):
            for kind, stations, rates in (
                    ("gbs", scenario.gbs, table.r_gbs),
                    ("dbs", scenario.dbs, table.r_dbs)):
                for si, st in enumerate(stations):
                    for mi in range(scenario.num_subchannels):
                        rows.append({
                            "block": ni + 1, "user": user.id,
                            "station_kind": kind, "station_id": st.id,
                            "subchannel": mi + 1,
                            "rate_bps_hz": repr(float(rates[ui, si, mi, ni])),
                        })
    return rows


def write_rate_table_csv(table: RateTable, scenario: Scenario,
                         path: str | Path) -> None:
    """Debug export: one row per candidate link."""
    rows = rate_table_rows(table, scenario)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
