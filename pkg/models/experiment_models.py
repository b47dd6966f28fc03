"""
Experiment Models
Monte-Carlo experiment description, per-trial records and results
"""

import math
from enum import Enum
from typing import List, Optional, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from models.channel_models import ArrayConfig, NoiseMode
from models.geometry_models import CartesianPoint, DistanceModel, PolarPoint
from models.localization_models import Estimate, Scheme, SensingRange

TABLE_COLUMNS = [
    'snr_db', 'user_id', 'rmse_theta_deg', 'rmse_r_m', 'rmse_2d_m',
    'mean_sweeps', 'excluded_trials',
]


class ErrorKind(str, Enum):
    """Which error an RMSE is taken over"""
    THETA = "theta"
    R = "r"
    TWO_D = "2d"


class ExperimentSpec(BaseModel):
    """Everything needed to reproduce a Monte-Carlo RMSE run"""
    model_config = ConfigDict(frozen=True)

    scheme: Scheme
    cfg: ArrayConfig
    users: List[Union[PolarPoint, CartesianPoint]] = Field(..., min_length=1)
    sensing: SensingRange
    snr_grid_db: List[float] = Field(..., min_length=1)
    trials: int = Field(..., ge=1)
    seed: int = Field(..., ge=0)

    # Channel
    channel_model: DistanceModel = DistanceModel.EXACT
    noise_mode: NoiseMode = NoiseMode.INDEPENDENT
    delay_offset: float = 0.0

    # TBT codebooks
    i_a: Optional[int] = Field(None, ge=1)
    i_d: Optional[int] = Field(None, ge=1)
    r_a: Optional[float] = Field(None, gt=0)

    # CBS sweep endpoints
    r_mid1: Optional[float] = Field(None, gt=0)
    r_mid2: Optional[float] = Field(None, gt=0)

    # CBS-High
    p_sweeps: int = Field(default=5, ge=2)
    p_r: int = Field(default=1024, ge=3)
    pad: float = Field(default=math.radians(0.5), ge=0)

    # CBS-2BS
    baseline: Optional[float] = Field(None, gt=0)
    degenerate_tol: float = Field(default=math.radians(0.5), gt=0)

    @field_validator('snr_grid_db')
    @classmethod
    def validate_snr_grid(cls, v: List[float]) -> List[float]:
        if any(math.isnan(s) for s in v):
            raise ValueError("snr grid contains NaN")
        return v

    @model_validator(mode='after')
    def check_scheme_params(self) -> "ExperimentSpec":
        if self.scheme == Scheme.CBS_2BS and self.baseline is None:
            raise ValueError("cbs_2bs needs a baseline")
        return self


class TrialRecord(BaseModel):
    """One user in one trial at one SNR"""
    model_config = ConfigDict(frozen=True)

    trial: int
    snr_db: float
    user_id: int
    truth: PolarPoint
    estimate: Optional[Estimate] = None
    theta_error: Optional[float] = None
    r_error: Optional[float] = None
    x_error: Optional[float] = None
    y_error: Optional[float] = None
    wall_time_s: float = 0.0
    error: Optional[str] = Field(None, description="Exception name when the trial was excluded")

    @property
    def excluded(self) -> bool:
        return self.estimate is None


class ExperimentResult(BaseModel):
    """Aggregated table plus the raw per-trial records"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    table: pd.DataFrame
    records: List[TrialRecord]
    spec: ExperimentSpec
