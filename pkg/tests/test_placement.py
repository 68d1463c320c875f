import math

import numpy as np
import pytest

from cellheal.association import DecisionVars
from cellheal.placement import (
    ScaState,
    build_sca_subproblem,
    sca_round,
    signal_term_exact,
    solve_sca_subproblem,
    taylor_signal_bound,
    true_margins,
)
from cellheal.radio import ActiveSet, build_rate_table

from conftest import make_scenario


def _exact_signal_term(scenario, u, m, n, placement, active):
    """Independent desk evaluation of the combined-power log term."""
    total = scenario.radio.noise_power_w
    g = scenario.users[u].position
    for j, drone in enumerate(scenario.dbs):
        if not active.dbs[j, m, n]:
            continue
        d2 = drone.altitude ** 2 + float(((placement[j, n] - g) ** 2).sum())
        total += drone.per_subchannel_power * scenario.radio.rho0 / d2
    return math.log2(total)


def _two_drone_scenario():
    return make_scenario(
        [(50.0, 0.0), (-60.0, 40.0)],
        dbs=[{"initial_position_m": [150.0, 150.0]},
             {"initial_position_m": [-150.0, -150.0]}])


def test_bound_tight_at_anchor():
    sc = _two_drone_scenario()
    anchors = sc.initial_placement()
    active = ActiveSet(dbs=np.ones((2, 1, 1), dtype=bool),
                       gbs=np.zeros((2, 1, 1), dtype=bool))
    for u in range(2):
        exact = signal_term_exact(u, 0, 0, anchors, sc, active)
        desk = _exact_signal_term(sc, u, 0, 0, anchors, active)
        assert exact == pytest.approx(desk, rel=1e-14)
        bound = taylor_signal_bound(u, 0, 0, anchors, anchors, sc, active)
        assert abs(bound - exact) <= 1e-12 * max(1.0, abs(exact))


def test_bound_is_global_lower_bound():
    sc = _two_drone_scenario()
    anchors = sc.initial_placement()
    active = ActiveSet(dbs=np.ones((2, 1, 1), dtype=bool),
                       gbs=np.zeros((2, 1, 1), dtype=bool))
    rng = np.random.default_rng(7)
    for _ in range(1000):
        query = anchors.copy()
        query[:, 0, :] = rng.uniform(-200, 200, size=(2, 2))
        u = int(rng.integers(0, 2))
        bound = taylor_signal_bound(u, 0, 0, anchors, query, sc, active)
        exact = signal_term_exact(u, 0, 0, query, sc, active)
        assert bound <= exact + 1e-9


def test_single_drone_margin_equals_exact_rate_at_anchor():
    # one active drone: the interference term is pure noise, so the margin at
    # the anchor must equal the exact rate minus the threshold
    sc = make_scenario([(50.0, 0.0)], dbs=[{"initial_position_m": [150.0, 150.0]}])
    dec = DecisionVars.empty(sc)
    dec.zeta[0, 0, 0, 0] = 1.0
    dec.kappa[0, 0] = 1.0
    state = ScaState.initial(sc)
    sub = build_sca_subproblem(state, dec, sc)
    table = build_rate_table(state.anchors, dec.active_set(), sc)
    margin = sub.total_margin(state.anchors)
    assert margin == pytest.approx(
        float(table.r_dbs[0, 0, 0, 0]) - 2.0, rel=1e-12)


def test_subproblem_requires_binary_decisions():
    sc = make_scenario([(0.0, 0.0)])
    with pytest.raises(ValueError, match="binary"):
        build_sca_subproblem(ScaState.initial(sc), DecisionVars.empty(sc, binary=False), sc)


def test_gradient_matches_finite_differences():
    sc = _two_drone_scenario()
    dec = DecisionVars.empty(sc)
    dec.zeta[0, 0, 0, 0] = 1.0
    dec.zeta[1, 1, 0, 0] = 1.0
    dec.kappa[:, 0] = 1.0
    sub = build_sca_subproblem(ScaState.initial(sc), dec, sc)
    coords = sc.initial_placement() + np.array([[[3.0, -4.0]], [[-2.0, 5.0]]])
    grad = sub.gradient(coords)
    h = 1e-4
    for d in range(2):
        for axis in range(2):
            up = coords.copy()
            up[d, 0, axis] += h
            down = coords.copy()
            down[d, 0, axis] -= h
            fd = (sub.total_margin(up) - sub.total_margin(down)) / (2 * h)
            assert grad[d, 0, axis] == pytest.approx(fd, rel=1e-4, abs=1e-8)


def test_ascent_moves_single_drone_toward_user():
    sc = make_scenario([(50.0, 0.0)], dbs=[{"initial_position_m": [150.0, 150.0]}])
    dec = DecisionVars.empty(sc)
    dec.zeta[0, 0, 0, 0] = 1.0
    dec.kappa[0, 0] = 1.0
    sub = build_sca_subproblem(ScaState.initial(sc), dec, sc)
    start = sc.initial_placement()
    coords, _, margin, trouble = solve_sca_subproblem(sub)
    assert not trouble
    assert margin > sub.total_margin(start)
    d_before = np.linalg.norm(start[0, 0] - [50.0, 0.0])
    d_after = np.linalg.norm(coords[0, 0] - [50.0, 0.0])
    assert d_after < d_before


def test_user_outside_box_drives_drone_to_nearest_face():
    sc = make_scenario([(400.0, 0.0)],
                       dbs=[{"initial_position_m": [-100.0, 120.0]}])
    dec = DecisionVars.empty(sc)
    dec.zeta[0, 0, 0, 0] = 1.0
    dec.kappa[0, 0] = 1.0
    best = None  # grid-search oracle for the constrained optimum
    for x in np.linspace(-200, 200, 81):
        for y in np.linspace(-200, 200, 81):
            table = build_rate_table(np.array([[[x, y]]]), dec.active_set(), sc)
            r = float(table.r_dbs[0, 0, 0, 0])
            if best is None or r > best[0]:
                best = (r, x, y)
    assert (best[1], best[2]) == (200.0, 0.0)  # box face nearest the user
    state = ScaState.initial(sc)
    for _ in range(12):
        state = sca_round(state, dec, sc)
    assert np.linalg.norm(state.anchors[0, 0] - [200.0, 0.0]) < 5.0


def test_round_min_margin_never_decreases():
    rng = np.random.default_rng(19)
    for trial in range(6):
        users = [tuple(rng.uniform(-200, 200, 2)) for _ in range(3)]
        sc = make_scenario(users, num_subchannels=1, gbs_load=50)
        dec = DecisionVars.empty(sc)
        # all three users on the two drones, sharing one sub-channel
        dec.zeta[0, 0, 0, 0] = 1.0
        dec.zeta[1, 1, 0, 0] = 1.0
        dec.zeta[2, 0, 0, 0] = 1.0
        dec.kappa[:, 0] = 1.0
        state = ScaState.initial(sc)
        margins = [true_margins(state.anchors, dec, sc)[1]]
        for _ in range(8):
            state = sca_round(state, dec, sc)
            margins.append(state.min_margin)
        for a, b in zip(margins, margins[1:]):
            assert b >= a - 1e-8


def test_round_without_drone_users_is_identity():
    sc = make_scenario([(10.0, 0.0)])
    dec = DecisionVars.empty(sc)
    dec.eps[0, 0, 0, 0] = 1.0
    state = ScaState.initial(sc)
    after = sca_round(state, dec, sc)
    assert after is state


def test_fixed_point_when_drone_overhead():
    sc = make_scenario([(50.0, 0.0)], dbs=[{"initial_position_m": [50.0, 0.0]}])
    dec = DecisionVars.empty(sc)
    dec.zeta[0, 0, 0, 0] = 1.0
    dec.kappa[0, 0] = 1.0
    state = ScaState.initial(sc)
    after = sca_round(state, dec, sc)
    assert np.allclose(after.anchors, state.anchors, atol=1e-9)
    assert after.min_margin == pytest.approx(state.min_margin if
                                             math.isfinite(state.min_margin)
                                             else after.min_margin)


def test_round_trace_file(tmp_path):
    sc = _two_drone_scenario()
    dec = DecisionVars.empty(sc)
    dec.zeta[0, 0, 0, 0] = 1.0
    dec.zeta[1, 1, 0, 0] = 1.0
    dec.kappa[:, 0] = 1.0
    from cellheal.placement import run_rounds_with_trace
    from cellheal.reports import read_csv
    path = tmp_path / "sca.csv"
    run_rounds_with_trace(ScaState.initial(sc), dec, sc, rounds=3, path=path)
    rows = read_csv(path)
    assert len(rows) == 4 * sc.num_dbs * sc.num_blocks  # rounds 0..3
    margins = [float(r["min_true_margin_bps_hz"]) for r in rows]
    assert all(b >= a - 1e-8 for a, b in
               zip(margins[::sc.num_dbs], margins[sc.num_dbs::sc.num_dbs]))
    # the surrogate never overstates the truth at accepted points
    assert all(float(r["bound_gap_bps_hz"]) >= -1e-9 for r in rows)


def test_margins_audited_with_exact_rates():
    sc = _two_drone_scenario()
    dec = DecisionVars.empty(sc)
    dec.zeta[0, 0, 0, 0] = 1.0
    dec.zeta[1, 1, 0, 0] = 1.0
    dec.kappa[:, 0] = 1.0
    placement = sc.initial_placement()
    margins, low = true_margins(placement, dec, sc)
    table = build_rate_table(placement, dec.active_set(), sc)
    assert margins[0, 0] == pytest.approx(float(table.r_dbs[0, 0, 0, 0]) - 2.0)
    assert margins[1, 0] == pytest.approx(float(table.r_dbs[1, 1, 0, 0]) - 2.0)
    assert low == pytest.approx(float(np.nanmin(margins)))
