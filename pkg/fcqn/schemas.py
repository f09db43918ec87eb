# fcqn/schemas.py
from __future__ import annotations

import math
from datetime import datetime
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from fcqn import settings

BASIS_LABELS = ("H", "V", "+", "-", "L", "R")
DEFAULT_ATTACKED = (("+", "-"), ("-", "+"), ("L", "L"), ("R", "R"), ("H", "V"), ("V", "H"))
SCAN_HWP_ANGLES_DEG = (0.0, 4.5, 9.0, 13.5, 18.0, 22.5)

Scenario = Literal["source_sweep", "tomography", "witness", "attack", "mdi", "theta_scan", "allocate"]
SAMPLED_SCENARIOS = {"source_sweep", "tomography", "witness", "attack", "mdi", "theta_scan"}


class Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


# ---------- physical value objects ----------

class NoiseSpec(Frozen):
    """Decoherence model for one link. For ``werner`` the strength is the Φ⁺ fidelity the channel produces from Φ⁺."""

    kind: Literal["werner", "dephasing", "depolarizing"] = "werner"
    strength: float = Field(1.0, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _werner_floor(self):
        if self.kind == "werner" and self.strength < 0.25:
            raise ValueError("werner strength is a target fidelity and must be >= 0.25")
        return self


class InterferometerPhases(Frozen):
    phi_u: float = 0.0
    phi_v: float = 0.0
    phi_p: float = 0.0

    @field_validator("phi_u", "phi_v", "phi_p")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("phase must be finite")
        return value


class AttackSpec(Frozen):
    delay: float = Field(5.0, ge=0.0, description="ns")
    attacked_settings: frozenset[tuple[str, str]] = frozenset(DEFAULT_ATTACKED)

    @field_validator("attacked_settings", mode="before")
    @classmethod
    def _pairs(cls, value):
        pairs = set()
        for item in value:
            pair = tuple(item)
            if len(pair) != 2 or any(label not in BASIS_LABELS for label in pair):
                raise ValueError(f"attacked setting {item!r} is not a pair of {BASIS_LABELS}")
            pairs.add(pair)
        return frozenset(pairs)


class ProjSetting(Frozen):
    basis_u: str
    basis_v: str
    shots: int = Field(10_000, gt=0)
    window: float = Field(1.0, gt=0.0, description="ns")
    attack: AttackSpec | None = None

    @field_validator("basis_u", "basis_v")
    @classmethod
    def _known_basis(cls, value: str) -> str:
        if value not in BASIS_LABELS:
            raise ValueError(f"basis must be one of {BASIS_LABELS}")
        return value


class SourceParams(Frozen):
    pump_power: float = Field(0.1, ge=0.0, description="mW")
    slope_k_j: tuple[float, ...] = (45.5, 54.8, 64.1, 73.4, 82.7, 92.0)
    rep_period: float = Field(10.0, gt=0.0, description="ns")
    window: float = Field(1.0, gt=0.0, description="ns")
    detection_efficiency: float = Field(0.15, ge=0.0, le=1.0)
    channel_efficiency: tuple[float, ...] | None = None
    side_peaks: int = Field(3, ge=1)

    @field_validator("slope_k_j")
    @classmethod
    def _nonnegative(cls, value):
        if any(k < 0 for k in value):
            raise ValueError("slopes must be nonnegative")
        return value

    @model_validator(mode="after")
    def _window_inside_period(self):
        if self.window >= self.rep_period:
            raise ValueError("window must be shorter than rep_period")
        if self.channel_efficiency is not None and len(self.channel_efficiency) != len(self.slope_k_j):
            raise ValueError("channel_efficiency needs one entry per channel pair")
        return self

    def efficiency(self, j: int) -> float:
        scale = 1.0 if self.channel_efficiency is None else self.channel_efficiency[j - 1]
        return self.detection_efficiency * scale


class CountRecord(Frozen):
    """Rates in counts/s. ``N_c`` is the accidental-subtracted coincidence rate."""

    channel_pair: int
    pump_power: float
    duration: float
    N_s: float
    N_i: float
    N_c: float
    delays: tuple[float, ...] = ()
    histogram: tuple[int, ...] = ()
    rep_period: float = 10.0
    window: float = 1.0
    seed: int = 0

    @model_validator(mode="after")
    def _consistent(self):
        if len(self.delays) != len(self.histogram):
            raise ValueError("histogram and delays differ in length")
        if any(c < 0 for c in self.histogram):
            raise ValueError("histogram counts must be nonnegative")
        if self.N_c > min(self.N_s, self.N_i) + 1e-9:
            raise ValueError("coincidence rate exceeds a singles rate")
        return self


# ---------- experiment configuration ----------

class TopologySpec(Frozen):
    users: list[str]
    channel_pairs: list[tuple[int | str, int | str]]


class SourceBlock(Frozen):
    pump_powers: list[float] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
    duration: float = Field(1.0, gt=0.0, description="s")
    slopes: list[float] | None = None
    detection_efficiency: float = Field(0.15, ge=0.0, le=1.0)
    window: float = Field(1.0, gt=0.0)
    rep_period: float = Field(10.0, gt=0.0)


class AttackBlock(Frozen):
    state: Literal["ee", "ll", "phi_plus"] = "ee"
    delay: float = Field(5.0, ge=0.0)
    attacked: list[tuple[str, str]] = list(DEFAULT_ATTACKED)


class ThetaScanBlock(Frozen):
    hwp_angles_deg: list[float] = list(SCAN_HWP_ANGLES_DEG)
    calibrate: bool = True


class TomographyBlock(Frozen):
    fiber: Literal["pre", "post"] = "post"


class MdiBlock(Frozen):
    input_infidelity: float = Field(0.0, ge=0.0, le=1.0)
    calibrate: bool = True


class ExperimentConfig(Frozen):
    scenario: Scenario
    seed: int
    shots: int = Field(10_000, ge=0)
    topology: Literal["default"] | TopologySpec = "default"
    noise: list[NoiseSpec] | None = None
    output_dir: str = settings.OUTPUT_DIR
    format: Literal["csv", "json"] = "csv"
    workers: int = Field(1, ge=1)
    source: SourceBlock | None = None
    attack: AttackBlock | None = None
    theta_scan: ThetaScanBlock | None = None
    tomography: TomographyBlock | None = None
    mdi: MdiBlock | None = None

    @model_validator(mode="after")
    def _shots_for_sampling(self):
        if self.scenario in SAMPLED_SCENARIOS and self.shots <= 0:
            raise ValueError(f"shots must be > 0 for scenario {self.scenario}")
        return self


# ---------- outputs ----------

class Report(BaseModel):
    scenario: str
    seed: int
    config: dict
    config_hash: str
    versions: dict[str, str]
    tables: dict[str, list[dict]]
    summary: dict = {}


class RunOut(BaseModel):
    id: int
    scenario: str
    seed: int
    config_hash: str
    output_dir: str | None = None
    status: str
    created_at: datetime | None = None

    model_config = ConfigDict(from_attributes=True)


class FcqnRequest(BaseModel):
    users: list[str]
    channel_pairs: list[tuple[int | str, int | str]]
