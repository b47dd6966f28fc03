"""
Run Configuration Model
Flat key = value run files, validated before anything is simulated
"""

import math
from typing import List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from models.channel_models import SPEED_OF_LIGHT, ArrayConfig, NoiseMode
from models.experiment_models import ExperimentSpec
from models.geometry_models import ApertureConvention, CartesianPoint, DistanceModel, PolarPoint
from models.localization_models import Scheme, SensingRange


class RunConfig(BaseModel):
    """All keys a run file may set; unknown keys are rejected"""
    model_config = ConfigDict(extra='forbid', frozen=True)

    seed: int = Field(..., ge=0, description="Root seed, mandatory for reproducibility")

    # Array and band
    n_antennas: int = Field(default=128, ge=2)
    d_m: Optional[float] = Field(None, gt=0, description="Antenna spacing, default lambda0/2")
    f0_ghz: float = Field(default=30.0, gt=0)
    w_ghz: float = Field(default=3.0, gt=0)
    m_intervals: int = Field(default=511, ge=1)
    c_mps: float = Field(default=SPEED_OF_LIGHT, gt=0)

    # Modelling switches
    distance_model: DistanceModel = DistanceModel.EXACT
    force_fresnel: bool = False
    aperture_convention: ApertureConvention = ApertureConvention.N_D
    noise_mode: NoiseMode = NoiseMode.INDEPENDENT
    delay_offset_s: float = 0.0

    # Sweep endpoints (trajectory / spectrum)
    start_r_m: Optional[float] = Field(None, gt=0)
    start_theta_deg: Optional[float] = None
    end_r_m: Optional[float] = Field(None, gt=0)
    end_theta_deg: Optional[float] = None

    # Oracle grid
    oracle_r_min_m: Optional[float] = Field(None, gt=0)
    oracle_r_max_m: Optional[float] = Field(None, gt=0)
    oracle_dr_m: float = Field(default=0.4, gt=0)
    oracle_theta_min_deg: float = -90.0
    oracle_theta_max_deg: float = 90.0
    oracle_dtheta_deg: float = Field(default=0.5, gt=0)

    # Users
    users_r_m: List[float] = Field(default_factory=list)
    users_theta_deg: List[float] = Field(default_factory=list)
    users_x_m: List[float] = Field(default_factory=list)
    users_y_m: List[float] = Field(default_factory=list)

    # Scheme
    scheme: Optional[Scheme] = None
    r_min_m: Optional[float] = Field(None, gt=0)
    r_max_m: Optional[float] = Field(None, gt=0)
    theta_min_deg: Optional[float] = None
    theta_max_deg: Optional[float] = None
    r_mid1_m: Optional[float] = Field(None, gt=0)
    r_mid2_m: Optional[float] = Field(None, gt=0)
    r_a_m: Optional[float] = Field(None, gt=0)
    i_a: Optional[int] = Field(None, ge=1)
    i_d: Optional[int] = Field(None, ge=1)
    p_sweeps: int = Field(default=5, ge=2)
    p_r: int = Field(default=1024, ge=3)
    pad_deg: float = Field(default=0.5, ge=0)
    baseline_m: Optional[float] = Field(None, gt=0)
    degenerate_tol_deg: float = Field(default=0.5, gt=0)

    # Noise and Monte-Carlo
    snr_db: float = math.inf
    snr_grid_db: List[float] = Field(default_factory=lambda: [0.0, 5.0, 10.0, 15.0])
    trials: int = Field(default=200, ge=1)

    # Output
    output_path: Optional[str] = None
    xlsx_path: Optional[str] = None

    @field_validator('snr_db')
    @classmethod
    def validate_snr(cls, v: float) -> float:
        if math.isnan(v):
            raise ValueError("snr_db must be a number or inf")
        return v

    @model_validator(mode='after')
    def check_pairs(self) -> "RunConfig":
        if len(self.users_r_m) != len(self.users_theta_deg):
            raise ValueError("users_r_m and users_theta_deg must have the same length")
        if len(self.users_x_m) != len(self.users_y_m):
            raise ValueError("users_x_m and users_y_m must have the same length")
        if (self.end_r_m is None) != (self.end_theta_deg is None):
            raise ValueError("end_r_m and end_theta_deg must be given together")
        return self

    # Derived objects

    @property
    def design_model(self) -> DistanceModel:
        return DistanceModel.FRESNEL

    @property
    def channel_model(self) -> DistanceModel:
        return DistanceModel.FRESNEL if self.force_fresnel else self.distance_model

    def array_config(self) -> ArrayConfig:
        return ArrayConfig(n_antennas=self.n_antennas, spacing=self.d_m, f0=self.f0_ghz * 1e9,
                           bandwidth=self.w_ghz * 1e9, m_intervals=self.m_intervals, c=self.c_mps)

    def start_focus(self) -> PolarPoint:
        if self.start_r_m is None or self.start_theta_deg is None:
            raise ValueError("start_r_m and start_theta_deg are required")
        return PolarPoint.from_degrees(self.start_r_m, self.start_theta_deg)

    def end_focus(self) -> Optional[PolarPoint]:
        if self.end_r_m is None:
            return None
        return PolarPoint.from_degrees(self.end_r_m, self.end_theta_deg)

    def sensing_range(self) -> SensingRange:
        missing = [k for k in ('r_min_m', 'r_max_m', 'theta_min_deg', 'theta_max_deg') if getattr(self, k) is None]
        if missing:
            raise ValueError(f"missing sensing range keys: {', '.join(missing)}")
        return SensingRange.from_degrees(self.r_min_m, self.r_max_m, self.theta_min_deg, self.theta_max_deg)

    def users(self) -> List[Union[PolarPoint, CartesianPoint]]:
        polar = [PolarPoint.from_degrees(r, t) for r, t in zip(self.users_r_m, self.users_theta_deg)]
        cartesian = [CartesianPoint(x=x, y=y) for x, y in zip(self.users_x_m, self.users_y_m)]
        if not polar and not cartesian:
            raise ValueError("no users given (users_r_m/users_theta_deg or users_x_m/users_y_m)")
        return polar + cartesian

    def experiment_spec(self) -> ExperimentSpec:
        if self.scheme is None:
            raise ValueError("scheme is required")
        return ExperimentSpec(
            scheme=self.scheme,
            cfg=self.array_config(),
            users=self.users(),
            sensing=self.sensing_range(),
            snr_grid_db=self.snr_grid_db,
            trials=self.trials,
            seed=self.seed,
            channel_model=self.channel_model,
            noise_mode=self.noise_mode,
            delay_offset=self.delay_offset_s,
            i_a=self.i_a,
            i_d=self.i_d,
            r_a=self.r_a_m,
            r_mid1=self.r_mid1_m,
            r_mid2=self.r_mid2_m,
            p_sweeps=self.p_sweeps,
            p_r=self.p_r,
            pad=math.radians(self.pad_deg),
            baseline=self.baseline_m,
            degenerate_tol=math.radians(self.degenerate_tol_deg),
        )
