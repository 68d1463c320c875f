"""Declarative schema for scenario documents.

A scenario document is the on-disk (YAML) and on-the-wire (JSON) description
of one healing problem instance. The same models validate files loaded by the
CLI and request bodies received by the service. Semantic cross-field
invariants live here; unit conversions and array packing happen in
:mod:`cellheal.scenario`.

Units are explicit in the key names: meters, watts, seconds, Hz, bps/Hz.
The one non-SI input is the noise power spectral density, given in dBm/Hz
and converted to watts at ingestion.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, model_validator


class RadioDoc(BaseModel):
    model_config = ConfigDict(extra="forbid")

    rho0: float = Field(0.01, gt=0, description="reference channel gain at 1 m, unitless")
    pathloss_exponent_gbs: float = Field(3.5, ge=2, description="ground-link path-loss exponent")
    noise_psd_dbm_hz: float = Field(-174.0, description="noise power spectral density")
    subchannel_bandwidth_hz: float = Field(180e3, gt=0)
    carrier_freq_hz: float = Field(2.1e9, gt=0, description="informational only")


class UserDoc(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: int
    position_m: tuple[float, float]
    rate_threshold_bps_hz: float = Field(2.0, gt=0)

    @model_validator(mode="after")
    def _finite_position(self) -> "UserDoc":
        if not all(abs(c) < 1e12 for c in self.position_m):
            raise ValueError(f"user {self.id}: position must be finite")
        return self


class GroundStationDoc(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: int
    position_m: tuple[float, float]
    height_m: float = Field(30.0, gt=0)
    per_subchannel_power_w: float = Field(0.1, gt=0)
    alpha: float = Field(4.7, gt=0, description="transmit power scaling, normal operation")
    alpha_tilde: float = Field(5.64, gt=0, description="transmit power scaling while healing")
    beta_w: float = Field(130.0, ge=0, description="load-independent power draw")
    own_user_load: list[int] = Field(..., description="own users served, one entry per time block")
    own_user_rate_bps_hz: float = Field(2.0, gt=0, description="capacity consumed per own user")
    max_rate_bps_hz: float = Field(100.0, gt=0)

    @model_validator(mode="after")
    def _check(self) -> "GroundStationDoc":
        if self.alpha_tilde < self.alpha:
            raise ValueError(f"gbs {self.id}: alpha_tilde >= alpha required "
                             f"({self.alpha_tilde} < {self.alpha})")
        if any(u < 0 for u in self.own_user_load):
            raise ValueError(f"gbs {self.id}: own_user_load entries must be >= 0")
        return self


class DronePowerDoc(BaseModel):
    model_config = ConfigDict(extra="forbid")

    total_mass_kg: float = Field(1.5, gt=0)
    gravity_m_s2: float = Field(9.81, gt=0)
    air_density_kg_m3: float = Field(1.225, gt=0)
    propeller_radius_m: float = Field(0.2, gt=0)
    propeller_count: int = Field(4, gt=0)
    v_max_m_s: float = Field(10.0, gt=0)
    v_d_m_s: float = Field(10.0, ge=0)
    p_full_w: float = Field(60.0, gt=0)
    p_idle_w: float = Field(30.0, gt=0)

    @model_validator(mode="after")
    def _speed(self) -> "DronePowerDoc":
        if self.v_d_m_s > self.v_max_m_s:
            raise ValueError("v_d_m_s must not exceed v_max_m_s")
        return self


class DroneStationDoc(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: int
    initial_position_m: tuple[float, float]
    altitude_m: float = Field(100.0, gt=0)
    per_subchannel_power_w: float = Field(0.1, gt=0)
    alpha: float = Field(2.6, gt=0)
    beta_w: float = Field(1.0, ge=0)
    max_rate_bps_hz: float = Field(10.0, gt=0)
    box_min_m: tuple[float, float] = (-200.0, -200.0)
    box_max_m: tuple[float, float] = (200.0, 200.0)
    power: DronePowerDoc = Field(default_factory=DronePowerDoc)

    @model_validator(mode="after")
    def _box(self) -> "DroneStationDoc":
        for lo, hi in zip(self.box_min_m, self.box_max_m):
            if lo > hi:
                raise ValueError(f"dbs {self.id}: box_min_m <= box_max_m required")
        for lo, c, hi in zip(self.box_min_m, self.initial_position_m, self.box_max_m):
            if not lo <= c <= hi:
                raise ValueError(f"dbs {self.id}: initial_position_m must lie inside the box")
        return self


class ScenarioDoc(BaseModel):
    """Complete problem instance as written to disk or sent to the service."""

    model_config = ConfigDict(extra="forbid")

    users: list[UserDoc]
    gbs: list[GroundStationDoc]
    dbs: list[DroneStationDoc]
    num_subchannels: int = Field(4, ge=1)
    num_blocks: int = Field(2, ge=1)
    block_duration_s: float = Field(3600.0, gt=0)
    flight_time_s: float = Field(30.0, ge=0)
    big_q: float = Field(1000.0, gt=0)
    radio: RadioDoc = Field(default_factory=RadioDoc)

    @model_validator(mode="after")
    def _cross_checks(self) -> "ScenarioDoc":
        # an empty user list is a legal degenerate instance (nothing to heal);
        # the station sets must exist
        if not self.gbs or not self.dbs:
            raise ValueError("gbs and dbs must be non-empty")
        for kind, items in (("user", self.users), ("gbs", self.gbs), ("dbs", self.dbs)):
            ids = [it.id for it in items]
            if len(set(ids)) != len(ids):
                raise ValueError(f"duplicate {kind} ids: {sorted(ids)}")
        # Q must dominate the largest possible sub-channel assignment count so
        # the kappa linking constraints keep their on/off semantics.
        if self.big_q <= len(self.users) * self.num_subchannels:
            raise ValueError(
                f"big_q must exceed num_users * num_subchannels "
                f"({self.big_q} <= {len(self.users) * self.num_subchannels})")
        for g in self.gbs:
            if len(g.own_user_load) != self.num_blocks:
                raise ValueError(
                    f"gbs {g.id}: own_user_load must have one entry per block "
                    f"({len(g.own_user_load)} != {self.num_blocks})")
        return self
