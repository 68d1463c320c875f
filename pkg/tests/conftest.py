"""Shared builders for hand-sized test instances."""

from __future__ import annotations

import pytest

from cellheal.scenario import Scenario, scenario_from_dict


def make_scenario(
    users: list[tuple[float, float]] | list[dict],
    gbs: list[dict] | None = None,
    dbs: list[dict] | None = None,
    *,
    num_subchannels: int = 1,
    num_blocks: int = 1,
    rate_threshold: float = 2.0,
    gbs_load: int = 0,
    **overrides,
) -> Scenario:
    """Small scenario with Table-style defaults and minimal typing effort.

    ``users`` may be plain (x, y) pairs; station dicts only need the keys that
    differ from the defaults.
    """
    user_docs = []
    for i, u in enumerate(users):
        if isinstance(u, dict):
            doc = {"id": i + 1, "rate_threshold_bps_hz": rate_threshold, **u}
        else:
            doc = {"id": i + 1, "position_m": list(u),
                   "rate_threshold_bps_hz": rate_threshold}
        user_docs.append(doc)
    if gbs is None:
        gbs = [{"position_m": [300.0, 0.0]}, {"position_m": [-300.0, 0.0]}]
    gbs_docs = []
    for i, g in enumerate(gbs):
        doc = {"id": i + 1, "own_user_load": [gbs_load] * num_blocks, **g}
        doc.setdefault("own_user_load", [gbs_load] * num_blocks)
        gbs_docs.append(doc)
    if dbs is None:
        dbs = [{"initial_position_m": [200.0, 200.0]},
               {"initial_position_m": [-200.0, -200.0]}]
    dbs_docs = [{"id": i + 1, **d} for i, d in enumerate(dbs)]
    raw = {
        "users": user_docs,
        "gbs": gbs_docs,
        "dbs": dbs_docs,
        "num_subchannels": num_subchannels,
        "num_blocks": num_blocks,
        **overrides,
    }
    return scenario_from_dict(raw)


@pytest.fixture
def two_user_scenario() -> Scenario:
    return make_scenario([(250.0, 0.0), (-250.0, 0.0)])
