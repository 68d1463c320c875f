import itertools

import numpy as np
import pytest

from cellheal.association import (
    DecisionVars,
    LpInfeasibleError,
    RateInfeasibleError,
    blocked_users,
    build_lp,
    eps_cost,
    reconstruct_binary,
    solve_lp,
    zeta_cost,
)
from cellheal.audit import audit_decisions
from cellheal.power import activation_energy
from cellheal.radio import ActiveSet, build_rate_table

from conftest import make_scenario

EPS_COST = 2030.4  # 3600 s * 5.64 * 0.1 W per healed ground link
ZETA_COST = 936.0  # 3600 s * 2.6 * 0.1 W per healed drone link


def _rates(sc, active=None):
    active = active or ActiveSet.warm_start(sc)
    return build_rate_table(sc.initial_placement(), active, sc)


def brute_force_binary(sc, rates):
    """Independent enumeration of all binary assignments against the same
    rate table: returns (best energy, assignment) or (None, None)."""
    pairs = ([("gbs", l, m) for l in range(sc.num_gbs)
              for m in range(sc.num_subchannels)]
             + [("dbs", d, m) for d in range(sc.num_dbs)
                for m in range(sc.num_subchannels)])
    best, best_choice = None, None
    for combo in itertools.product(pairs, repeat=sc.num_users):
        gbs_used = {l: g.own_user_rate * float(g.own_user_load[0])
                    for l, g in enumerate(sc.gbs)}
        dbs_used = {d: 0.0 for d in range(sc.num_dbs)}
        ok = True
        for u, (kind, s, m) in enumerate(combo):
            th = sc.users[u].rate_threshold
            rate = (rates.r_gbs if kind == "gbs" else rates.r_dbs)[u, s, m, 0]
            if rate < th:
                ok = False
                break
            if kind == "gbs":
                gbs_used[s] += th
                if gbs_used[s] > sc.gbs[s].max_rate + 1e-9:
                    ok = False
                    break
            else:
                dbs_used[s] += th
                if dbs_used[s] > sc.dbs[s].max_rate + 1e-9:
                    ok = False
                    break
        if not ok:
            continue
        active = {s for kind, s, _ in combo if kind == "dbs"}
        energy = sum(eps_cost(sc, s) if kind == "gbs" else zeta_cost(sc, s)
                     for kind, s, _ in combo)
        energy += sum(activation_energy(d, sc) for d in active)
        if best is None or energy < best:
            best, best_choice = energy, combo
    return best, best_choice


def test_row_inventory_matches_constraint_classes():
    sc = make_scenario([(250.0, 0.0), (-250.0, 0.0)],
                       gbs=[{"position_m": [300.0, 0.0]}],
                       dbs=[{"initial_position_m": [0.0, 0.0]}])
    model = build_lp(sc, _rates(sc), tighten=False)
    counts = {}
    for label, _ in model.row_labels:
        counts[label] = counts.get(label, 0) + 1
    # 2 association, 2 rate, 1 ground capacity, 1 drone capacity, 2 linking
    assert counts == {"assoc": 2, "rate": 2, "gbs_capacity": 1,
                      "dbs_capacity": 1, "kappa_upper": 1, "kappa_lower": 1}
    tightened = build_lp(sc, _rates(sc), tighten=True)
    extra = sum(1 for label, _ in tightened.row_labels if label == "kappa_link")
    assert extra == 2  # one per (drone, user)


def test_saturated_station_can_heal_nobody():
    # own load at max_rate / threshold leaves zero spare healing capacity
    sc = make_scenario([(290.0, 0.0)],
                       gbs=[{"position_m": [300.0, 0.0]}, {"position_m": [-300.0, 0.0]}],
                       gbs_load=50)
    sol = solve_lp(build_lp(sc, _rates(sc)))
    assert float(sol.decisions.eps.sum()) == pytest.approx(0.0, abs=1e-9)
    assert float(sol.decisions.zeta.sum()) == pytest.approx(1.0, abs=1e-9)


def test_kappa_lower_row_arithmetic():
    # three drone-bound users, aggregated linking only: kappa settles at 3/Q
    sc = make_scenario([(0.0, 0.0), (30.0, 0.0), (-30.0, 0.0)],
                       gbs_load=50, dbs=[{"initial_position_m": [0.0, 0.0]}])
    sol = solve_lp(build_lp(sc, _rates(sc), tighten=False))
    assert float(sol.decisions.zeta.sum()) == pytest.approx(3.0, abs=1e-8)
    assert float(sol.decisions.kappa[0, 0]) == pytest.approx(3.0 / 1000.0, abs=1e-9)


def test_lp_prefers_ground_station_when_cheaper():
    sc = make_scenario([(290.0, 0.0)],
                       gbs=[{"position_m": [300.0, 0.0]}],
                       dbs=[{"initial_position_m": [0.0, 0.0]}])
    rates = _rates(sc)
    best, choice = brute_force_binary(sc, rates)
    assert choice[0][0] == "gbs"  # the oracle agrees ground is cheaper
    sol = solve_lp(build_lp(sc, rates))
    assert float(sol.decisions.eps[0, 0, 0, 0]) == pytest.approx(1.0, abs=1e-9)
    assert float(sol.decisions.zeta.sum()) == pytest.approx(0.0, abs=1e-9)
    assert float(sol.decisions.kappa.sum()) == pytest.approx(0.0, abs=1e-9)
    assert sol.objective == pytest.approx(best, rel=1e-9)
    assert sol.objective == pytest.approx(EPS_COST, rel=1e-9)


def test_lp_uses_drone_when_ground_is_full():
    sc = make_scenario([(290.0, 0.0)],
                       gbs=[{"position_m": [300.0, 0.0]}],
                       dbs=[{"initial_position_m": [0.0, 0.0]}],
                       gbs_load=50)
    sol = solve_lp(build_lp(sc, _rates(sc)))
    assert float(sol.decisions.zeta.sum()) == pytest.approx(1.0, abs=1e-9)
    assert sol.decisions.kappa[0, 0] >= 1.0 / 1000.0 - 1e-12


def test_equal_cost_stations_break_ties_by_station_order():
    # both stations feasible at identical cost and rate: a pure degenerate tie
    sc = make_scenario([(0.0, 0.0)],
                       gbs=[{"position_m": [300.0, 0.0]},
                            {"position_m": [-300.0, 0.0]}],
                       rate_threshold=0.5)
    sol = solve_lp(build_lp(sc, _rates(sc)))
    eps = sol.decisions.eps[0, :, 0, 0]
    assert eps[0] == pytest.approx(1.0, abs=1e-9)
    assert eps[1] == pytest.approx(0.0, abs=1e-9)


def test_relaxation_lower_bounds_binary_optimum():
    rng = np.random.default_rng(21)
    for trial in range(8):
        users = [tuple(rng.uniform(-200, 200, 2)) for _ in range(int(rng.integers(1, 4)))]
        sc = make_scenario(users, gbs_load=int(rng.integers(44, 51)))
        rates = _rates(sc)
        if blocked_users(sc, rates):
            continue
        best, _ = brute_force_binary(sc, rates)
        if best is None:
            continue
        sol = solve_lp(build_lp(sc, rates))
        assert sol.objective <= best + 1e-6


def test_blocked_user_detection_and_error():
    # a threshold far above every achievable rate blocks the user
    sc = make_scenario([{"position_m": [0.0, 0.0], "rate_threshold_bps_hz": 40.0}])
    rates = _rates(sc)
    assert blocked_users(sc, rates) == [(0, 0)]
    with pytest.raises(RateInfeasibleError):
        build_lp(sc, rates)
    # relaxing that pair makes the model buildable
    build_lp(sc, rates, relax_rate_for=frozenset({(0, 0)}))


def test_lp_infeasible_names_constraint_class():
    # three users, zero ground capacity, one drone that can hold only one
    sc = make_scenario([(0.0, 0.0), (30.0, 0.0), (-30.0, 0.0)],
                       gbs_load=50,
                       dbs=[{"initial_position_m": [0.0, 0.0],
                             "max_rate_bps_hz": 2.0}])
    with pytest.raises(LpInfeasibleError) as err:
        solve_lp(build_lp(sc, _rates(sc)))
    assert any("capacity" in c or "assoc" in c for c in err.value.row_classes)


def test_solver_determinism():
    sc = make_scenario([(0.0, 0.0), (100.0, -50.0), (-120.0, 80.0)],
                       num_subchannels=2, gbs_load=48)
    model = build_lp(sc, _rates(sc))
    a = solve_lp(model)
    b = solve_lp(model)
    assert a.decisions.eps.tobytes() == b.decisions.eps.tobytes()
    assert a.decisions.zeta.tobytes() == b.decisions.zeta.tobytes()
    assert a.objective == b.objective


def test_reconstruction_idempotent_on_integral_input():
    sc = make_scenario([(290.0, 0.0)], gbs=[{"position_m": [300.0, 0.0]}])
    rates = _rates(sc)
    integral = DecisionVars.empty(sc, binary=False)
    integral.eps[0, 0, 0, 0] = 1.0
    result = reconstruct_binary(integral, sc, rates)
    assert result.feasible
    assert np.array_equal(result.decisions.eps, integral.eps)
    assert float(result.decisions.zeta.sum()) == 0.0


def test_reconstruction_follows_largest_mass():
    sc = make_scenario([(0.0, 0.0)], dbs=[{"initial_position_m": [0.0, 0.0]}])
    rates = _rates(sc)
    relaxed = DecisionVars.empty(sc, binary=False)
    relaxed.zeta[0, 0, 0, 0] = 0.6
    relaxed.eps[0, 0, 0, 0] = 0.4
    result = reconstruct_binary(relaxed, sc, rates)
    assert result.feasible
    assert result.decisions.zeta[0, 0, 0, 0] == 1.0
    assert result.decisions.kappa[0, 0] == 1.0


def test_overflow_user_lands_on_drone():
    # a ground link cheaper than a drone link (low ground power), with
    # capacity for two healed users; the third must fly
    sc = make_scenario([(240.0, 0.0), (250.0, 0.0), (260.0, 0.0)],
                       gbs=[{"position_m": [300.0, 0.0],
                             "max_rate_bps_hz": 4.0, "own_user_load": [0],
                             "per_subchannel_power_w": 0.03}],
                       dbs=[{"initial_position_m": [0.0, 0.0]}])
    rates = _rates(sc)
    best, choice = brute_force_binary(sc, rates)
    assert sum(1 for kind, _, _ in choice if kind == "dbs") == 1
    sol = solve_lp(build_lp(sc, rates))
    result = reconstruct_binary(sol.decisions, sc, rates)
    assert result.feasible
    assert float(result.decisions.eps.sum()) == 2.0
    assert float(result.decisions.zeta.sum()) == 1.0
    assert float(result.decisions.kappa[0, 0]) == 1.0


def test_reconstruction_output_passes_audit():
    rng = np.random.default_rng(33)
    for trial in range(6):
        users = [tuple(rng.uniform(-200, 200, 2))
                 for _ in range(int(rng.integers(2, 5)))]
        sc = make_scenario(users, num_subchannels=2,
                           gbs_load=int(rng.integers(40, 51)))
        rates = _rates(sc)
        if blocked_users(sc, rates):
            continue
        sol = solve_lp(build_lp(sc, rates))
        result = reconstruct_binary(sol.decisions, sc, rates)
        if not result.feasible:
            continue
        verdict = audit_decisions(result.decisions, sc.initial_placement(), sc)
        assert verdict.ok, [str(v) for v in verdict.violations]


def test_lp_format_dump():
    sc = make_scenario([(250.0, 0.0)], dbs=[{"initial_position_m": [0.0, 0.0]}])
    model = build_lp(sc, _rates(sc))
    text = model.to_lp_format()
    assert text.startswith("Minimize")
    for section in ("Subject To", "Bounds", "End"):
        assert section in text
    assert "assoc_0_0:" in text
    assert "eps_u1_g1_m1_n1" in text and "kap_d1_n1" in text
    assert f"{EPS_COST!r}" in text  # objective coefficient of the ground link
    # every variable is boxed to [0, 1] in the dump
    assert text.count("<= 1") >= model.num_vars
