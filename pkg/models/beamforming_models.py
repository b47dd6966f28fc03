"""
Beamforming Models
Joint phase-shifter / true-time-delay configurations and squint trajectories
"""

import math
from enum import Enum
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from models.channel_models import ArrayConfig
from models.geometry_models import DistanceModel, PolarPoint


class BeamKind(str, Enum):
    """Hardware driving the sweep"""
    PHASE_SHIFTER = "phase_shifter"
    TRUE_TIME_DELAY = "true_time_delay"


class BeamformerState(BaseModel):
    """Per-antenna phases (in cycles) and delays (in seconds).

    For a phase-shifter-only state the delays are all zero and end_focus is
    where the natural squint moves the beam at the highest subcarrier.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    cfg: ArrayConfig
    phase_cycles: np.ndarray = Field(..., description="phi_n in cycles, weights carry exp(-j2*pi*phi_n)")
    delays: np.ndarray = Field(..., description="t_n in seconds, delay_offset included")
    start_focus: PolarPoint
    end_focus: PolarPoint
    kind: BeamKind = BeamKind.TRUE_TIME_DELAY
    distance_model: DistanceModel = DistanceModel.FRESNEL
    delay_offset: float = Field(default=0.0, description="Common delay added to every t_n")

    @field_validator('phase_cycles', 'delays', mode='before')
    @classmethod
    def as_float_array(cls, v: Any) -> np.ndarray:
        return np.asarray(v, dtype=float)

    @model_validator(mode='after')
    def check_lengths(self) -> "BeamformerState":
        n = self.cfg.n_antennas
        if self.phase_cycles.shape != (n,) or self.delays.shape != (n,):
            raise ValueError(f"phase and delay vectors must have length N={n}")
        return self


class SquintPoint(BaseModel):
    """Focus of the beam at one subcarrier"""
    model_config = ConfigDict(frozen=True)

    m: int = Field(..., ge=0)
    frequency: float = Field(..., gt=0)
    point: PolarPoint


class SearchGrid(BaseModel):
    """Discrete (r, theta) grid for brute-force gain searches.

    Angles are in radians. Grid nodes at |theta| >= pi/2 are dropped.
    """
    model_config = ConfigDict(frozen=True)

    r_min: float = Field(..., gt=0)
    r_max: float = Field(..., gt=0)
    dr: float = Field(..., gt=0)
    theta_min: float
    theta_max: float
    dtheta: float = Field(..., gt=0)

    @model_validator(mode='after')
    def check_ranges(self) -> "SearchGrid":
        if self.r_max < self.r_min or self.theta_max < self.theta_min:
            raise ValueError("grid maxima must not be below the minima")
        return self

    @classmethod
    def from_degrees(cls, r_min: float, r_max: float, dr: float,
                     theta_min_deg: float, theta_max_deg: float, dtheta_deg: float) -> "SearchGrid":
        return cls(r_min=r_min, r_max=r_max, dr=dr,
                   theta_min=math.radians(theta_min_deg), theta_max=math.radians(theta_max_deg),
                   dtheta=math.radians(dtheta_deg))

    def radii(self) -> np.ndarray:
        count = int(math.floor((self.r_max - self.r_min) / self.dr + 1e-9)) + 1
        return self.r_min + self.dr * np.arange(count)

    def angles(self) -> np.ndarray:
        count = int(math.floor((self.theta_max - self.theta_min) / self.dtheta + 1e-9)) + 1
        grid = self.theta_min + self.dtheta * np.arange(count)
        return grid[np.abs(grid) < math.pi / 2 - 1e-12]
