"""
Localization Models
Sweep plans, user feedback and position estimates for the four schemes
"""

import math
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from models.beamforming_models import BeamformerState


class Scheme(str, Enum):
    """Localization schemes"""
    TBT = "tbt"
    CBS_LOW = "cbs_low"
    CBS_HIGH = "cbs_high"
    CBS_2BS = "cbs_2bs"


class SweepStage(str, Enum):
    """Role of a sweep inside a scheme"""
    ANGLE_STAGE = "angle_stage"
    DISTANCE_STAGE = "distance_stage"
    HIGH_P = "high_p"
    BASELINE = "baseline"


class SensingRange(BaseModel):
    """Region the BS is asked to cover; angles in radians"""
    model_config = ConfigDict(frozen=True)

    r_min: float = Field(..., gt=0)
    r_max: float = Field(..., gt=0)
    theta_min: float
    theta_max: float

    @model_validator(mode='after')
    def check_ranges(self) -> "SensingRange":
        if self.r_max <= self.r_min:
            raise ValueError("r_max must exceed r_min")
        if self.theta_max <= self.theta_min:
            raise ValueError("theta_max must exceed theta_min")
        if max(abs(self.theta_min), abs(self.theta_max)) >= math.pi / 2:
            raise ValueError("sensing angles must stay inside (-pi/2, pi/2)")
        return self

    @classmethod
    def from_degrees(cls, r_min: float, r_max: float,
                     theta_min_deg: float, theta_max_deg: float) -> "SensingRange":
        return cls(r_min=r_min, r_max=r_max,
                   theta_min=math.radians(theta_min_deg), theta_max=math.radians(theta_max_deg))

    @property
    def r_mid(self) -> float:
        return 0.5 * (self.r_min + self.r_max)


class SweepPlan(BaseModel):
    """One OFDM sweep: a TTD configuration plus its role"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    beamformer: BeamformerState
    stage: SweepStage
    index: Optional[int] = Field(None, description="Sweep number for CBS-High or baseline id")
    bs_id: str = Field(default="A", description="Base station running the sweep")

    @model_validator(mode='after')
    def check_distance_stage(self) -> "SweepPlan":
        if self.stage == SweepStage.DISTANCE_STAGE:
            if self.beamformer.start_focus.theta != self.beamformer.end_focus.theta:
                raise ValueError("distance-stage sweeps must keep a constant angle")
        return self


class UserFeedback(BaseModel):
    """What a user reports back after one sweep"""
    model_config = ConfigDict(frozen=True)

    peak_subcarrier_index: int = Field(..., ge=0)
    peak_frequency: float = Field(..., gt=0)
    peak_phase: Optional[float] = Field(None, description="Phase of the rescaled peak sample (CBS-High)")


class StageFeedback(BaseModel):
    """Feedback from one sweep, kept on the estimate for diagnostics"""
    model_config = ConfigDict(frozen=True)

    stage: SweepStage
    index: Optional[int] = None
    bs_id: str = "A"
    feedback: UserFeedback
    value: Optional[float] = Field(None, description="Angle (rad) or distance (m) read off this sweep")


class Estimate(BaseModel):
    """Estimated user position"""
    model_config = ConfigDict(frozen=True)

    theta_hat: float
    r_hat: float = Field(..., gt=0)
    scheme: Scheme
    sweeps_used: int = Field(..., ge=1)
    user_id: Optional[int] = None
    diagnostics: List[StageFeedback] = Field(default_factory=list)
    flags: List[str] = Field(default_factory=list)
    objective_peak: Optional[float] = Field(None, description="Distance-objective value at r_hat (CBS-High)")

    @property
    def theta_hat_deg(self) -> float:
        return math.degrees(self.theta_hat)

    @property
    def x_hat(self) -> float:
        return self.r_hat * math.cos(self.theta_hat)

    @property
    def y_hat(self) -> float:
        return self.r_hat * math.sin(self.theta_hat)
