"""Association step: the relaxed assignment LP and binary reconstruction.

For a fixed drone placement the healing energy is affine in the assignment
indicators, so choosing who serves whom reduces to a linear program over the
relaxed indicators. The binary solution is then rebuilt greedily: per block,
users in order of their strongest relaxed preference, each landing on its
highest-mass feasible pair, falling back to the cheapest feasible pair with
drone activation last. A bounded repair loop re-seats users whose rate breaks
once the interference implied by the finished assignment is accounted for.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .power import activation_energy
from .radio import ActiveSet, RateTable
from .scenario import Scenario
from .simplex import LpSolution, solve_dense_lp

_RATE_TOL = 1e-12
_REPAIR_PASSES = 4


class AssociationError(RuntimeError):
    pass


class RateInfeasibleError(AssociationError):
    """Some user cannot reach its rate threshold on any pair at this placement."""

    def __init__(self, blocked: list[tuple[int, int]]):
        self.blocked = blocked  # (user index, block index)
        super().__init__(f"no pair meets the rate threshold for (user, block): {blocked}")


class LpInfeasibleError(AssociationError):
    def __init__(self, row_classes: list[str]):
        self.row_classes = row_classes
        super().__init__(f"association LP infeasible; failing constraint classes: {row_classes}")


@dataclass(frozen=True)
class DecisionVars:
    """Assignment indicators: zeta (U,D,M,N) drone links, eps (U,L,M,N) ground
    links, kappa (D,N) drone activity. ``binary`` marks reconstructed 0/1
    values as opposed to a relaxed LP iterate."""

    zeta: np.ndarray
    eps: np.ndarray
    kappa: np.ndarray
    binary: bool

    def active_set(self) -> ActiveSet:
        return ActiveSet.from_assignments(self.zeta, self.eps)

    @staticmethod
    def empty(scenario: Scenario, binary: bool = True) -> "DecisionVars":
        u, d, l = scenario.num_users, scenario.num_dbs, scenario.num_gbs
        m, n = scenario.num_subchannels, scenario.num_blocks
        return DecisionVars(zeta=np.zeros((u, d, m, n)), eps=np.zeros((u, l, m, n)),
                            kappa=np.zeros((d, n)), binary=binary)


def blocked_users(scenario: Scenario, rates: RateTable) -> list[tuple[int, int]]:
    """(user, block) pairs whose best candidate rate is below their threshold,
    which makes the LP infeasible by construction."""
    blocked = []
    for n in range(scenario.num_blocks):
        for u, user in enumerate(scenario.users):
            best = max(rates.r_dbs[u, :, :, n].max(), rates.r_gbs[u, :, :, n].max())
            if best < user.rate_threshold - _RATE_TOL:
                blocked.append((u, n))
    return blocked


@dataclass(frozen=True)
class LpModel:
    """Relaxed association problem over one block or all blocks jointly."""

    scenario: Scenario
    blocks: tuple[int, ...]
    c: np.ndarray
    a: np.ndarray
    senses: tuple[str, ...]
    b: np.ndarray
    row_labels: tuple[tuple[str, tuple[int, ...]], ...]
    var_labels: tuple[str, ...]
    objective_constant: float

    @property
    def num_vars(self) -> int:
        return self.c.size

    @property
    def num_rows(self) -> int:
        return self.b.size

    def to_lp_format(self) -> str:
        """Render in CPLEX LP text format for cross-checking with an external
        solver (the explicit [0,1] bounds restate the relaxation)."""
        def expr(coeffs: np.ndarray) -> str:
            parts = []
            for j in np.nonzero(coeffs)[0]:
                v = coeffs[j]
                sign = "-" if v < 0 else "+"
                parts.append(f"{sign} {abs(v)!r} {self.var_labels[j]}")
            text = " ".join(parts) if parts else "0 " + self.var_labels[0]
            return text.lstrip("+ ")

        lines = ["Minimize", f" obj: {expr(self.c)}", "Subject To"]
        op = {"<": "<=", ">": ">=", "=": "="}
        for i, (label, idx) in enumerate(self.row_labels):
            name = label + "_" + "_".join(str(k) for k in idx)
            lines.append(f" {name}: {expr(self.a[i])} {op[self.senses[i]]} {self.b[i]!r}")
        lines.append("Bounds")
        lines.extend(f" 0 <= {v} <= 1" for v in self.var_labels)
        lines.append("End")
        return "\n".join(lines) + "\n"


def _block_var_layout(scenario: Scenario):
    u, l = scenario.num_users, scenario.num_gbs
    d, m = scenario.num_dbs, scenario.num_subchannels
    n_eps = u * l * m
    n_zeta = u * d * m

    def eps_idx(ui, li, mi):
        return (ui * l + li) * m + mi

    def zeta_idx(ui, di, mi):
        return n_eps + (ui * d + di) * m + mi

    def kappa_idx(di):
        return n_eps + n_zeta + di

    return eps_idx, zeta_idx, kappa_idx, n_eps + n_zeta + d


def zeta_cost(scenario: Scenario, d: int) -> float:
    """Energy per unit of one drone link indicator."""
    drone = scenario.dbs[d]
    return scenario.block_duration * drone.alpha * drone.per_subchannel_power


def eps_cost(scenario: Scenario, l: int) -> float:
    """Energy per unit of one ground link indicator."""
    g = scenario.gbs[l]
    return scenario.block_duration * g.alpha_tilde * g.per_subchannel_power


def build_lp(scenario: Scenario, rates: RateTable, *,
             block: int | None = None, literal: bool = False,
             relax_rate_for: frozenset[tuple[int, int]] = frozenset(),
             tighten: bool = True) -> LpModel:
    """Assemble the relaxed association LP for one block (or all of them).

    Rows: one association equality and one rate floor per (user, block);
    capacity caps per station and block; the two activity-linking rows per
    (drone, block), with the strict one closed by a margin of 1 / (2 Q).
    The unit upper bounds on the link indicators are implied by the
    association equalities and the activity variable never exceeds one at an
    optimum, so no explicit box rows are added. Pairs in ``relax_rate_for``
    get no rate row (the caller parks them on a drone afterwards).

    With ``tighten`` (default) each drone also gets one per-user linking row
    ``kappa >= sum_m zeta`` . Every binary assignment satisfies these, so the
    model remains a valid relaxation, but without them a relaxed activation
    costs only 1/Q of the real thing and the relaxation steers every user
    toward drones regardless of the much cheaper ground option.
    """
    blocks = tuple(range(scenario.num_blocks)) if block is None else (block,)
    bl = [(u, n) for (u, n) in blocked_users(scenario, rates)
          if n in blocks and (u, n) not in relax_rate_for]
    if bl:
        raise RateInfeasibleError(bl)

    u_n, l_n = scenario.num_users, scenario.num_gbs
    d_n, m_n = scenario.num_dbs, scenario.num_subchannels
    eps_idx, zeta_idx, kappa_idx, nvars_block = _block_var_layout(scenario)
    nvars = nvars_block * len(blocks)
    mu = 1.0 / (2.0 * scenario.big_q)

    c = np.zeros(nvars)
    rows, senses, rhs, labels = [], [], [], []
    var_labels: list[str] = []
    constant = 0.0

    for bi, n in enumerate(blocks):
        off = bi * nvars_block
        for ui in range(u_n):
            for li in range(l_n):
                for mi in range(m_n):
                    var_labels.append(
                        f"eps_u{scenario.users[ui].id}_g{scenario.gbs[li].id}_m{mi + 1}_n{n + 1}")
        for ui in range(u_n):
            for di in range(d_n):
                for mi in range(m_n):
                    var_labels.append(
                        f"zeta_u{scenario.users[ui].id}_d{scenario.dbs[di].id}_m{mi + 1}_n{n + 1}")
        var_labels.extend(f"kap_d{scenario.dbs[di].id}_n{n + 1}" for di in range(d_n))

        for ui in range(u_n):
            for li in range(l_n):
                c[off + eps_idx(ui, li, 0):off + eps_idx(ui, li, m_n - 1) + 1] = \
                    eps_cost(scenario, li)
            for di in range(d_n):
                c[off + zeta_idx(ui, di, 0):off + zeta_idx(ui, di, m_n - 1) + 1] = \
                    zeta_cost(scenario, di)
        for di in range(d_n):
            act = activation_energy(di, scenario)
            if literal:
                beta_e = scenario.block_duration * scenario.dbs[di].beta
                c[off + kappa_idx(di)] = act - beta_e
                constant += beta_e
            else:
                c[off + kappa_idx(di)] = act

        for ui in range(u_n):
            row = np.zeros(nvars)
            for li in range(l_n):
                for mi in range(m_n):
                    row[off + eps_idx(ui, li, mi)] = 1.0
            for di in range(d_n):
                for mi in range(m_n):
                    row[off + zeta_idx(ui, di, mi)] = 1.0
            rows.append(row)
            senses.append("=")
            rhs.append(1.0)
            labels.append(("assoc", (ui, n)))

        for ui in range(u_n):
            if (ui, n) in relax_rate_for:
                continue
            row = np.zeros(nvars)
            for li in range(l_n):
                for mi in range(m_n):
                    row[off + eps_idx(ui, li, mi)] = rates.r_gbs[ui, li, mi, n]
            for di in range(d_n):
                for mi in range(m_n):
                    row[off + zeta_idx(ui, di, mi)] = rates.r_dbs[ui, di, mi, n]
            rows.append(row)
            senses.append(">")
            rhs.append(scenario.users[ui].rate_threshold)
            labels.append(("rate", (ui, n)))

        for li in range(l_n):
            row = np.zeros(nvars)
            for ui in range(u_n):
                for mi in range(m_n):
                    row[off + eps_idx(ui, li, mi)] = scenario.users[ui].rate_threshold
            g = scenario.gbs[li]
            rows.append(row)
            senses.append("<")
            rhs.append(g.max_rate - g.own_user_rate * float(g.own_user_load[n]))
            labels.append(("gbs_capacity", (li, n)))

        for di in range(d_n):
            row = np.zeros(nvars)
            for ui in range(u_n):
                for mi in range(m_n):
                    row[off + zeta_idx(ui, di, mi)] = scenario.users[ui].rate_threshold
            rows.append(row)
            senses.append("<")
            rhs.append(scenario.dbs[di].max_rate)
            labels.append(("dbs_capacity", (di, n)))

        for di in range(d_n):
            row = np.zeros(nvars)
            row[off + kappa_idx(di)] = 1.0
            for ui in range(u_n):
                for mi in range(m_n):
                    row[off + zeta_idx(ui, di, mi)] = -1.0 / scenario.big_q
            rows.append(row)
            senses.append("<")
            rhs.append(1.0 - mu)
            labels.append(("kappa_upper", (di, n)))

        for di in range(d_n):
            row = np.zeros(nvars)
            row[off + kappa_idx(di)] = 1.0
            for ui in range(u_n):
                for mi in range(m_n):
                    row[off + zeta_idx(ui, di, mi)] = -1.0 / scenario.big_q
            rows.append(row)
            senses.append(">")
            rhs.append(0.0)
            labels.append(("kappa_lower", (di, n)))

        if tighten:
            for di in range(d_n):
                for ui in range(u_n):
                    row = np.zeros(nvars)
                    row[off + kappa_idx(di)] = 1.0
                    for mi in range(m_n):
                        row[off + zeta_idx(ui, di, mi)] = -1.0
                    rows.append(row)
                    senses.append(">")
                    rhs.append(0.0)
                    labels.append(("kappa_link", (di, ui, n)))

    return LpModel(scenario=scenario, blocks=blocks, c=c, a=np.array(rows),
                   senses=tuple(senses), b=np.array(rhs),
                   row_labels=tuple(labels), var_labels=tuple(var_labels),
                   objective_constant=constant)


@dataclass(frozen=True)
class RelaxedSolution:
    decisions: DecisionVars
    objective: float
    lp: LpSolution


def solve_lp(model: LpModel) -> RelaxedSolution:
    """Solve the relaxed problem and unpack the variables.

    Deterministic for a given model; infeasibility reports the failing
    constraint classes so the caller can tell a capacity shortfall from a
    rate shortfall.
    """
    sol = solve_dense_lp(model.c, model.a, list(model.senses), model.b)
    if sol.status == "infeasible":
        classes = sorted({model.row_labels[i][0] for i in sol.infeasible_rows})
        raise LpInfeasibleError(classes or ["unknown"])
    if sol.status != "optimal":
        raise AssociationError(f"LP solver returned {sol.status}; the relaxed "
                               "problem is boxed and must be bounded")
    scenario = model.scenario
    eps_idx, zeta_idx, kappa_idx, nvars_block = _block_var_layout(scenario)
    dec = DecisionVars.empty(scenario, binary=False)
    for bi, n in enumerate(model.blocks):
        off = bi * nvars_block
        for ui in range(scenario.num_users):
            for li in range(scenario.num_gbs):
                for mi in range(scenario.num_subchannels):
                    dec.eps[ui, li, mi, n] = sol.x[off + eps_idx(ui, li, mi)]
            for di in range(scenario.num_dbs):
                for mi in range(scenario.num_subchannels):
                    dec.zeta[ui, di, mi, n] = sol.x[off + zeta_idx(ui, di, mi)]
        for di in range(scenario.num_dbs):
            dec.kappa[di, n] = sol.x[off + kappa_idx(di)]
    return RelaxedSolution(decisions=dec, objective=sol.objective + model.objective_constant,
                           lp=sol)


@dataclass
class ReconstructionResult:
    decisions: DecisionVars
    feasible: bool
    violations: list[tuple[str, tuple[int, ...]]] = field(default_factory=list)


def _candidate_rate(rates: RateTable, active: ActiveSet, kind: str, u: int,
                    s: int, m: int, n: int) -> float:
    """Rate of one candidate link under the working activity pattern, with the
    candidate itself switched on."""
    if kind == "dbs":
        gains, p = rates.gains_dbs[u, :, n], rates.p_dbs
        mask = active.dbs[:, m, n]
    else:
        gains, p = rates.gains_gbs[u, :], rates.p_gbs
        mask = active.gbs[:, m, n]
    rx = gains * p
    interf = float(rx[mask].sum()) - (float(rx[s]) if mask[s] else 0.0)
    return float(np.log2(1.0 + rx[s] / (interf + rates.noise_w)))


def reconstruct_binary(relaxed: DecisionVars, scenario: Scenario,
                       rates: RateTable) -> ReconstructionResult:
    u_n, l_n = scenario.num_users, scenario.num_gbs
    d_n, m_n = scenario.num_dbs, scenario.num_subchannels
    dec = DecisionVars.empty(scenario, binary=True)
    violations: list[tuple[str, tuple[int, ...]]] = []

    for n in range(scenario.num_blocks):
        gbs_spare = np.array([g.max_rate - g.own_user_rate * float(g.own_user_load[n])
                              for g in scenario.gbs])
        dbs_spare = np.array([d.max_rate for d in scenario.dbs])
        active = ActiveSet(dbs=np.zeros_like(rates.active.dbs),
                           gbs=np.zeros_like(rates.active.gbs))
        assignment: dict[int, tuple[str, int, int]] = {}

        def capacity_ok(kind: str, s: int, ui: int) -> bool:
            th = scenario.users[ui].rate_threshold
            spare = gbs_spare[s] if kind == "gbs" else dbs_spare[s]
            return th <= spare + 1e-9

        def place(ui: int, kind: str, s: int, m: int) -> None:
            th = scenario.users[ui].rate_threshold
            if kind == "gbs":
                dec.eps[ui, s, m, n] = 1.0
                gbs_spare[s] -= th
                active.gbs[s, m, n] = True
            else:
                dec.zeta[ui, s, m, n] = 1.0
                dbs_spare[s] -= th
                active.dbs[s, m, n] = True
            assignment[ui] = (kind, s, m)

        def unplace(ui: int) -> None:
            kind, s, m = assignment.pop(ui)
            th = scenario.users[ui].rate_threshold
            if kind == "gbs":
                dec.eps[ui, s, m, n] = 0.0
                gbs_spare[s] += th
                active.gbs[s, m, n] = dec.eps[:, s, m, n].sum() > 0.5
            else:
                dec.zeta[ui, s, m, n] = 0.0
                dbs_spare[s] += th
                active.dbs[s, m, n] = dec.zeta[:, s, m, n].sum() > 0.5

        def incremental_energy(kind: str, s: int) -> float:
            if kind == "gbs":
                return eps_cost(scenario, s)
            cost = zeta_cost(scenario, s)
            if not active.dbs[s, :, n].any():
                cost += activation_energy(s, scenario)
            return cost

        def harms_existing(kind: str, s: int, m: int) -> bool:
            """Would switching this station on at sub-channel m push an
            already-seated co-channel user below its threshold?"""
            arr = active.gbs if kind == "gbs" else active.dbs
            if arr[s, m, n]:
                return False  # station already radiating there
            arr[s, m, n] = True
            try:
                for v, (k2, s2, m2) in assignment.items():
                    if k2 != kind or m2 != m or s2 == s:
                        continue
                    if _candidate_rate(rates, active, k2, v, s2, m, n) \
                            < scenario.users[v].rate_threshold - _RATE_TOL:
                        return True
                return False
            finally:
                arr[s, m, n] = False

        def all_pairs() -> list[tuple[str, int, int]]:
            return ([("gbs", li, mi) for li in range(l_n) for mi in range(m_n)]
                    + [("dbs", di, mi) for di in range(d_n) for mi in range(m_n)])

        def try_assign(ui: int) -> bool:
            masses = [(float(relaxed.eps[ui, li, mi, n]), "gbs", li, mi)
                      for li in range(l_n) for mi in range(m_n)]
            masses += [(float(relaxed.zeta[ui, di, mi, n]), "dbs", di, mi)
                       for di in range(d_n) for mi in range(m_n)]
            preferred = sorted((c for c in masses if c[0] > 1e-9),
                               key=lambda t: (-t[0], t[1], t[2], t[3]))
            th = scenario.users[ui].rate_threshold
            for _, kind, s, m in preferred:
                if (capacity_ok(kind, s, ui)
                        and _candidate_rate(rates, active, kind, ui, s, m, n)
                        >= th - _RATE_TOL
                        and not harms_existing(kind, s, m)):
                    place(ui, kind, s, m)
                    return True
            fallback = sorted(all_pairs(),
                              key=lambda t: (incremental_energy(t[0], t[1]),
                                             t[0], t[1], t[2]))
            for kind, s, m in fallback:
                if (capacity_ok(kind, s, ui)
                        and _candidate_rate(rates, active, kind, ui, s, m, n)
                        >= th - _RATE_TOL
                        and not harms_existing(kind, s, m)):
                    place(ui, kind, s, m)
                    return True
            return False

        max_mass = np.maximum(relaxed.eps[:, :, :, n].reshape(u_n, -1).max(axis=1),
                              relaxed.zeta[:, :, :, n].reshape(u_n, -1).max(axis=1))
        order = sorted(range(u_n), key=lambda ui: (-max_mass[ui], ui))
        unassigned = [ui for ui in order if not try_assign(ui)]

        # repair: with the block fully assigned the true interference is
        # known; re-seat users whose chosen pair no longer meets the threshold
        for _ in range(_REPAIR_PASSES):
            bad = [ui for ui, (kind, s, m) in sorted(assignment.items())
                   if _candidate_rate(rates, active, kind, ui, s, m, n)
                   < scenario.users[ui].rate_threshold - _RATE_TOL]
            if not bad and not unassigned:
                break
            moved = False
            for ui in bad:
                unplace(ui)
                if try_assign(ui):
                    moved = True
                else:
                    unassigned.append(ui)
            retry = [ui for ui in sorted(set(unassigned)) if try_assign(ui)]
            if retry:
                moved = True
                unassigned = [ui for ui in unassigned if ui not in retry]
            if not moved:
                break

        for ui in sorted(set(unassigned)):
            violations.append(("unassigned", (ui, n)))
        for ui, (kind, s, m) in sorted(assignment.items()):
            if _candidate_rate(rates, active, kind, ui, s, m, n) \
                    < scenario.users[ui].rate_threshold - _RATE_TOL:
                violations.append(("rate", (ui, n)))

    dec.kappa[:, :] = (dec.zeta.sum(axis=(0, 2)) > 0.5).astype(float)
    return ReconstructionResult(decisions=dec, feasible=not violations,
                                violations=violations)
