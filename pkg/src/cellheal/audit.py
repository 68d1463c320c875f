"""Independent verification of a solution against every problem constraint.

This module deliberately re-derives everything from first principles with
plain per-link arithmetic: channel gains from coordinates, SINR under the
activity pattern implied by the decisions themselves, then each constraint in
turn. It shares no code with the LP builder or the vectorized channel model,
so a bookkeeping bug there cannot hide here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .association import DecisionVars
from .scenario import Scenario


@dataclass(frozen=True)
class Violation:
    constraint: str
    indices: tuple[int, ...]
    detail: str

    def __str__(self) -> str:
        return f"{self.constraint}{self.indices}: {self.detail}"


@dataclass
class AuditVerdict:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _gbs_rate(u: int, l: int, m: int, n: int, decisions: DecisionVars,
              scenario: Scenario) -> float:
    user = scenario.users[u].position
    noise = scenario.radio.noise_power_w
    rho0 = scenario.radio.rho0
    alpha = scenario.radio.pathloss_exponent_gbs

    def rx(li: int) -> float:
        st = scenario.gbs[li]
        dx = st.position[0] - user[0]
        dy = st.position[1] - user[1]
        dist = math.sqrt(st.height ** 2 + dx * dx + dy * dy)
        return st.per_subchannel_power * rho0 / dist ** alpha

    interference = sum(
        rx(li) for li in range(scenario.num_gbs)
        if li != l and decisions.eps[:, li, m, n].sum() > 0.5)
    return math.log2(1.0 + rx(l) / (interference + noise))


def _dbs_rate(u: int, d: int, m: int, n: int, placement: np.ndarray,
              decisions: DecisionVars, scenario: Scenario) -> float:
    user = scenario.users[u].position
    noise = scenario.radio.noise_power_w
    rho0 = scenario.radio.rho0

    def rx(di: int) -> float:
        st = scenario.dbs[di]
        dx = placement[di, n, 0] - user[0]
        dy = placement[di, n, 1] - user[1]
        return st.per_subchannel_power * rho0 / (st.altitude ** 2 + dx * dx + dy * dy)

    interference = sum(
        rx(di) for di in range(scenario.num_dbs)
        if di != d and decisions.zeta[:, di, m, n].sum() > 0.5)
    return math.log2(1.0 + rx(d) / (interference + noise))


def audit_decisions(decisions: DecisionVars, placement: np.ndarray,
                    scenario: Scenario, *, rate_tol: float = 1e-9) -> AuditVerdict:
    """Check the association (14), rate floor (15), capacities (16)-(17),
    activity linking (18)-(19), coordinate boxes (20) and integrality (21)."""
    v: list[Violation] = []
    zeta, eps, kappa = decisions.zeta, decisions.eps, decisions.kappa
    u_n, l_n = scenario.num_users, scenario.num_gbs
    d_n, m_n = scenario.num_dbs, scenario.num_subchannels
    q = scenario.big_q

    for arr, name in ((zeta, "zeta"), (eps, "eps"), (kappa, "kappa")):
        if not np.isin(arr, (0.0, 1.0)).all():
            v.append(Violation("binary", (), f"{name} holds non-binary values"))

    for n in range(scenario.num_blocks):
        for u in range(u_n):
            mass = float(eps[u, :, :, n].sum() + zeta[u, :, :, n].sum())
            if abs(mass - 1.0) > 1e-9:
                v.append(Violation("association", (u, n),
                                   f"total assignment {mass} != 1"))

        for u, user in enumerate(scenario.users):
            achieved = 0.0
            for l in range(l_n):
                for m in range(m_n):
                    if eps[u, l, m, n] > 0.5:
                        achieved += _gbs_rate(u, l, m, n, decisions, scenario)
            for d in range(d_n):
                for m in range(m_n):
                    if zeta[u, d, m, n] > 0.5:
                        achieved += _dbs_rate(u, d, m, n, placement, decisions, scenario)
            if achieved < user.rate_threshold - rate_tol:
                v.append(Violation("rate", (u, n),
                                   f"achieved {achieved:.6f} < threshold "
                                   f"{user.rate_threshold}"))

        for l, st in enumerate(scenario.gbs):
            used = sum(scenario.users[u].rate_threshold * float(eps[u, l, :, n].sum())
                       for u in range(u_n))
            used += st.own_user_rate * float(st.own_user_load[n])
            if used > st.max_rate + 1e-9:
                v.append(Violation("gbs_capacity", (l, n),
                                   f"load {used} > {st.max_rate}"))

        for d, st in enumerate(scenario.dbs):
            used = sum(scenario.users[u].rate_threshold * float(zeta[u, d, :, n].sum())
                       for u in range(u_n))
            if used > st.max_rate + 1e-9:
                v.append(Violation("dbs_capacity", (d, n),
                                   f"load {used} > {st.max_rate}"))

        for d in range(d_n):
            assigned = float(zeta[:, d, :, n].sum())
            if not kappa[d, n] < 1.0 + assigned / q:
                v.append(Violation("activity_upper", (d, n),
                                   "drone marked active with no assignments"))
            if kappa[d, n] < assigned / q - 1e-12:
                v.append(Violation("activity_lower", (d, n),
                                   "drone has assignments but is marked idle"))

        for d, st in enumerate(scenario.dbs):
            pos = placement[d, n]
            if (pos < st.box_min - 1e-9).any() or (pos > st.box_max + 1e-9).any():
                v.append(Violation("box", (d, n),
                                   f"coordinates {pos.tolist()} outside "
                                   f"[{st.box_min.tolist()}, {st.box_max.tolist()}]"))

    return AuditVerdict(violations=v)
