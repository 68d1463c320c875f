"""Problem instances: validated in-memory scenarios and their file format.

A :class:`Scenario` is immutable after construction and safe to share across
workers. All internal quantities are SI (meters, watts, seconds, Hz); the
noise density is converted from dBm/Hz at ingestion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pydantic
import yaml

from .schema import DroneStationDoc, GroundStationDoc, ScenarioDoc, UserDoc


class ScenarioError(ValueError):
    """Malformed or invalid scenario input."""


@dataclass(frozen=True)
class RadioParams:
    rho0: float
    pathloss_exponent_gbs: float
    noise_psd_dbm_hz: float
    subchannel_bandwidth_hz: float
    carrier_freq_hz: float

    @property
    def noise_power_w(self) -> float:
        """Per-sub-channel noise power: dBm/Hz density times bandwidth."""
        return 10.0 ** ((self.noise_psd_dbm_hz - 30.0) / 10.0) * self.subchannel_bandwidth_hz


@dataclass(frozen=True)
class UserEquipment:
    id: int
    position: np.ndarray  # (2,), meters
    rate_threshold: float  # bps/Hz


@dataclass(frozen=True)
class GroundStation:
    id: int
    position: np.ndarray  # (2,), meters
    height: float
    per_subchannel_power: float
    alpha: float
    alpha_tilde: float
    beta: float
    own_user_load: np.ndarray  # (N,), users per block
    own_user_rate: float
    max_rate: float


@dataclass(frozen=True)
class DronePowerParams:
    total_mass: float
    gravity: float
    air_density: float
    propeller_radius: float
    propeller_count: int
    v_max: float
    v_d: float
    p_full: float
    p_idle: float


@dataclass(frozen=True)
class DroneStation:
    id: int
    initial_position: np.ndarray  # (2,), meters
    altitude: float
    per_subchannel_power: float
    alpha: float
    beta: float
    max_rate: float
    box_min: np.ndarray  # (2,)
    box_max: np.ndarray  # (2,)
    power: DronePowerParams


@dataclass(frozen=True)
class Scenario:
    users: tuple[UserEquipment, ...]
    gbs: tuple[GroundStation, ...]
    dbs: tuple[DroneStation, ...]
    num_subchannels: int
    num_blocks: int
    block_duration: float  # T, seconds
    flight_time: float  # T_f, seconds
    radio: RadioParams
    big_q: float
    doc: ScenarioDoc = field(repr=False, compare=False)

    @property
    def num_users(self) -> int:
        return len(self.users)

    @property
    def num_gbs(self) -> int:
        return len(self.gbs)

    @property
    def num_dbs(self) -> int:
        return len(self.dbs)

    def user_positions(self) -> np.ndarray:
        if not self.users:
            return np.zeros((0, 2))
        return np.stack([u.position for u in self.users])

    def gbs_positions(self) -> np.ndarray:
        return np.stack([g.position for g in self.gbs])

    def initial_placement(self) -> np.ndarray:
        """Initial drone coordinates, shape (D, N, 2)."""
        coords = np.stack([d.initial_position for d in self.dbs])
        return np.repeat(coords[:, None, :], self.num_blocks, axis=1)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


def scenario_from_doc(doc: ScenarioDoc) -> Scenario:
    """Build the immutable runtime scenario from a validated document."""
    users = tuple(
        UserEquipment(u.id, _freeze(np.array(u.position_m)), u.rate_threshold_bps_hz)
        for u in doc.users
    )
    gbs = tuple(
        GroundStation(
            id=g.id,
            position=_freeze(np.array(g.position_m)),
            height=g.height_m,
            per_subchannel_power=g.per_subchannel_power_w,
            alpha=g.alpha,
            alpha_tilde=g.alpha_tilde,
            beta=g.beta_w,
            own_user_load=_freeze(np.array(g.own_user_load)),
            own_user_rate=g.own_user_rate_bps_hz,
            max_rate=g.max_rate_bps_hz,
        )
        for g in doc.gbs
    )
    dbs = tuple(
        DroneStation(
            id=d.id,
            initial_position=_freeze(np.array(d.initial_position_m)),
            altitude=d.altitude_m,
            per_subchannel_power=d.per_subchannel_power_w,
            alpha=d.alpha,
            beta=d.beta_w,
            max_rate=d.max_rate_bps_hz,
            box_min=_freeze(np.array(d.box_min_m)),
            box_max=_freeze(np.array(d.box_max_m)),
            power=DronePowerParams(
                total_mass=d.power.total_mass_kg,
                gravity=d.power.gravity_m_s2,
                air_density=d.power.air_density_kg_m3,
                propeller_radius=d.power.propeller_radius_m,
                propeller_count=d.power.propeller_count,
                v_max=d.power.v_max_m_s,
                v_d=d.power.v_d_m_s,
                p_full=d.power.p_full_w,
                p_idle=d.power.p_idle_w,
            ),
        )
        for d in doc.dbs
    )
    radio = RadioParams(
        rho0=doc.radio.rho0,
        pathloss_exponent_gbs=doc.radio.pathloss_exponent_gbs,
        noise_psd_dbm_hz=doc.radio.noise_psd_dbm_hz,
        subchannel_bandwidth_hz=doc.radio.subchannel_bandwidth_hz,
        carrier_freq_hz=doc.radio.carrier_freq_hz,
    )
    return Scenario(
        users=users,
        gbs=gbs,
        dbs=dbs,
        num_subchannels=doc.num_subchannels,
        num_blocks=doc.num_blocks,
        block_duration=doc.block_duration_s,
        flight_time=doc.flight_time_s,
        radio=radio,
        big_q=doc.big_q,
        doc=doc,
    )


def scenario_from_dict(raw: dict) -> Scenario:
    try:
        doc = ScenarioDoc.model_validate(raw)
    except pydantic.ValidationError as exc:
        raise ScenarioError(str(exc)) from exc
    return scenario_from_doc(doc)


def load_scenario(path: str | Path) -> Scenario:
    """Load and validate a scenario file (YAML key/value with nested lists)."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path}: not parseable as YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScenarioError(f"{path}: top level must be a mapping")
    return scenario_from_dict(raw)


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(
        yaml.safe_dump(scenario.doc.model_dump(mode="json"), sort_keys=False))


def _ring_positions(count: int, radius: float) -> list[tuple[float, float]]:
    angles = [2.0 * math.pi * k / count for k in range(count)]
    return [(radius * math.cos(a), radius * math.sin(a)) for a in angles]


def _corner_positions(count: int, half_width: float) -> list[tuple[float, float]]:
    corners = [(half_width, half_width), (-half_width, half_width),
               (-half_width, -half_width), (half_width, -half_width)]
    return [corners[k % 4] for k in range(count)]


def generate_random_scenario(
    seed: int,
    num_users: int,
    num_gbs: int = 4,
    num_dbs: int = 4,
    area_half_width: float = 200.0,
    *,
    num_subchannels: int = 4,
    num_blocks: int = 2,
    rate_threshold: float = 2.0,
    load_range: tuple[int, int] = (0, 50),
) -> Scenario:
    """Random instance mimicking the simulated setup: the failed station sits
    at the origin, its stranded users fall uniformly in the [-w, w]^2 square,
    neighbor ground stations sit on a ring of radius 1.5 w, and standby drones
    start at the square's corners. Own-user loads are uniform integers in
    ``load_range`` per (station, block). Pure function of its arguments.
    """
    if min(num_users, num_gbs, num_dbs) < 1:
        raise ScenarioError("counts must be >= 1")
    if area_half_width <= 0:
        raise ScenarioError("area_half_width must be > 0")
    rng = np.random.default_rng(seed)
    w = float(area_half_width)
    user_xy = rng.uniform(-w, w, size=(num_users, 2))
    loads = rng.integers(load_range[0], load_range[1] + 1,
                         size=(num_gbs, num_blocks))
    doc = ScenarioDoc(
        users=[
            UserDoc(id=i + 1, position_m=(float(x), float(y)),
                    rate_threshold_bps_hz=rate_threshold)
            for i, (x, y) in enumerate(user_xy)
        ],
        gbs=[
            GroundStationDoc(id=i + 1, position_m=pos,
                             own_user_load=[int(v) for v in loads[i]])
            for i, pos in enumerate(_ring_positions(num_gbs, 1.5 * w))
        ],
        dbs=[
            DroneStationDoc(id=i + 1, initial_position_m=pos,
                            box_min_m=(-w, -w), box_max_m=(w, w))
            for i, pos in enumerate(_corner_positions(num_dbs, w))
        ],
        num_subchannels=num_subchannels,
        num_blocks=num_blocks,
    )
    return scenario_from_doc(doc)


def generate_tiny_scenario(seed: int) -> Scenario:
    """Instance small enough for the exhaustive reference solver.

    Sizes cycle with the seed (2..4 users, 1..2 sub-channels, single block);
    even seeds get nearly full ground stations so drone use is common, odd
    seeds leave more spare capacity.
    """
    rng = np.random.default_rng(seed)
    num_users = 2 + seed % 3
    num_subchannels = 1 + seed % 2
    load_range = (48, 50) if seed % 2 == 0 else (40, 50)
    loads = rng.integers(load_range[0], load_range[1] + 1, size=(2, 1))
    user_xy = rng.uniform(-200.0, 200.0, size=(num_users, 2))
    doc = ScenarioDoc(
        users=[UserDoc(id=i + 1, position_m=(float(x), float(y)))
               for i, (x, y) in enumerate(user_xy)],
        gbs=[
            GroundStationDoc(id=1, position_m=(300.0, 0.0),
                             own_user_load=[int(loads[0, 0])]),
            GroundStationDoc(id=2, position_m=(-300.0, 0.0),
                             own_user_load=[int(loads[1, 0])]),
        ],
        dbs=[
            DroneStationDoc(id=1, initial_position_m=(200.0, 200.0)),
            DroneStationDoc(id=2, initial_position_m=(-200.0, -200.0)),
        ],
        num_subchannels=num_subchannels,
        num_blocks=1,
    )
    return scenario_from_doc(doc)
