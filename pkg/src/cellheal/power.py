"""Power draw and healing-energy models for ground stations and drones.

All energies are affine in the assignment indicators for a fixed placement,
which is what lets the association step be a linear program. Two readings of
the drone energy are supported:

* default: the load-independent drone draw ``beta`` is charged only while the
  drone is actually used, and the travel burst ``T_f * P_har`` is charged once
  per activation (blocks where the drone switches from idle to active);
* ``literal=True``: ``beta`` is charged every block regardless of use, and the
  travel burst every active block.

The optimizer always prices activations per active block (the affine form);
the literal/default split only affects reported energies and coincides with
the optimizer's pricing on single-block instances.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .scenario import DronePowerParams, Scenario


def gbs_baseline_power(alpha: float, p_per_user: float, user_count: int,
                       beta: float) -> float:
    """Normal-operation draw of a ground station serving its own users.

    Reporting only: the healing objective charges excess power, not this.
    """
    if user_count < 0:
        raise ValueError("user_count must be >= 0")
    return alpha * user_count * p_per_user + beta

def gbs_healing_power(alpha_tilde: float, eps_slice: np.ndarray,
                      p_lm: float) -> float:
    """Excess radiated power of one ground station on one sub-channel.

    ``eps_slice`` holds the (possibly fractional) healed-user indicators for
    that station/sub-channel/block. The station's constant draw is excluded:
    it is spent with or without the failure.
    """
    eps_slice = np.asarray(eps_slice, dtype=float)
    if (eps_slice < -1e-12).any() or (eps_slice > 1.0 + 1e-12).any():
        raise ValueError("assignment indicators must lie in [0, 1]")
    return alpha_tilde * p_lm * float(eps_slice.sum())


def hover_power(p: DronePowerParams) -> float:
    """Rotor power needed to keep the drone aloft."""
    thrust = (p.total_mass * p.gravity) ** 3
    disk = 2.0 * math.pi * p.propeller_radius ** 2 * p.propeller_count * p.air_density
    return math.sqrt(thrust / disk)


def hardware_power(p: DronePowerParams) -> float:
    """Electronics/locomotion draw, linear between idle and full speed."""
    return (p.p_full - p.p_idle) / p.v_max * p.v_d + p.p_idle


def flying_power(p: DronePowerParams) -> float:
    return hover_power(p) + hardware_power(p)


def gbs_energy(l: int, n: int, eps: np.ndarray, scenario: Scenario) -> float:
    """Healing energy of ground station index ``l`` in block ``n`` (joules).

    ``eps`` is the full (U, L, M, N) indicator array.
    """
    station = scenario.gbs[l]
    t = scenario.block_duration
    per_sub = [gbs_healing_power(station.alpha_tilde, eps[:, l, m, n],
                                 station.per_subchannel_power)
               for m in range(scenario.num_subchannels)]
    return t * float(sum(per_sub))


def activation_energy(d: int, scenario: Scenario) -> float:
    """Energy charged per active block for switching a drone on: travel burst
    plus a block of hovering, hardware and constant draw."""
    p = scenario.dbs[d].power
    har, hov = hardware_power(p), hover_power(p)
    return (scenario.flight_time * har
            + scenario.block_duration * (har + hov)
            + scenario.block_duration * scenario.dbs[d].beta)


def dbs_energy(d: int, n: int, kappa_row: np.ndarray, zeta: np.ndarray,
               scenario: Scenario, *, literal: bool = False) -> float:
    """Healing energy of drone index ``d`` in block ``n`` (joules).

    ``kappa_row`` is that drone's activity over all blocks (needed to detect
    idle-to-active transitions), ``zeta`` the full (U, D, M, N) array.
    """
    drone = scenario.dbs[d]
    p = drone.power
    har, hov = hardware_power(p), hover_power(p)
    t, tf = scenario.block_duration, scenario.flight_time
    kappa = float(kappa_row[n])
    served = float(zeta[:, d, :, n].sum())
    transmit = t * drone.alpha * drone.per_subchannel_power * served
    if literal:
        return kappa * (tf * har + t * (har + hov)) + t * drone.beta + transmit
    freshly_active = kappa_row[n] > 0.5 and (n == 0 or kappa_row[n - 1] <= 0.5)
    travel = tf * har if freshly_active else 0.0
    return kappa * (t * (har + hov) + t * drone.beta) + kappa * travel + transmit


@dataclass(frozen=True)
class EnergyBreakdown:
    gbs_energy: np.ndarray  # (L, N) joules
    dbs_energy: np.ndarray  # (D, N) joules

    @property
    def per_block(self) -> np.ndarray:
        return self.gbs_energy.sum(axis=0) + self.dbs_energy.sum(axis=0)

    @property
    def total(self) -> float:
        return float(self.gbs_energy.sum() + self.dbs_energy.sum())

    @property
    def gbs_total(self) -> float:
        return float(self.gbs_energy.sum())

    @property
    def dbs_total(self) -> float:
        return float(self.dbs_energy.sum())


def build_energy_breakdown(zeta: np.ndarray, eps: np.ndarray,
                           kappa: np.ndarray, scenario: Scenario,
                           *, literal: bool = False) -> EnergyBreakdown:
    l_e = np.array([[gbs_energy(l, n, eps, scenario)
                     for n in range(scenario.num_blocks)]
                    for l in range(scenario.num_gbs)])
    d_e = np.array([[dbs_energy(d, n, kappa[d], zeta, scenario, literal=literal)
                     for n in range(scenario.num_blocks)]
                    for d in range(scenario.num_dbs)])
    return EnergyBreakdown(gbs_energy=l_e, dbs_energy=d_e)


def energy_rows(breakdown: EnergyBreakdown, scenario: Scenario) -> list[dict]:
    rows = []
    for ni in range(scenario.num_blocks):
        for kind, stations, arr in (("gbs", scenario.gbs, breakdown.gbs_energy),
                                    ("dbs", scenario.dbs, breakdown.dbs_energy)):
            for si, st in enumerate(stations):
                rows.append({"block": ni + 1, "station_kind": kind,
                             "station_id": st.id,
                             "energy_j": repr(float(arr[si, ni]))})
    return rows


def write_energy_csv(breakdown: EnergyBreakdown, scenario: Scenario,
                     path: str | Path) -> None:
    rows = energy_rows(breakdown, scenario)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
