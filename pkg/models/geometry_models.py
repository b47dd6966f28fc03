"""
Geometry Models
Points in the array plane and the conventions used to measure them
"""

import math
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, field_validator


class DistanceModel(str, Enum):
    """How per-antenna distances are evaluated"""
    EXACT = "exact"
    FRESNEL = "fresnel"


class ApertureConvention(str, Enum):
    """Array aperture used for the near-field bounds"""
    N_D = "n_d"
    N_MINUS_1_D = "n_minus_1_d"


class PolarPoint(BaseModel):
    """Point in polar coordinates around the array centre.

    theta is measured from broadside (positive x-axis) in radians.
    """
    model_config = ConfigDict(frozen=True)

    r: float = Field(..., gt=0, description="Distance to the array centre in metres")
    theta: float = Field(..., description="Angle from broadside in radians, |theta| < pi/2")

    @field_validator('theta')
    @classmethod
    def validate_theta(cls, v: float) -> float:
        if not math.isfinite(v) or abs(v) >= math.pi / 2:
            raise ValueError(f"theta must lie in (-pi/2, pi/2), got {v}")
        return v

    @classmethod
    def from_degrees(cls, r: float, theta_deg: float) -> "PolarPoint":
        return cls(r=float(r), theta=math.radians(theta_deg))

    @property
    def theta_deg(self) -> float:
        return math.degrees(self.theta)


class CartesianPoint(BaseModel):
    """Point in the array plane; the array lies on the y-axis"""
    model_config = ConfigDict(frozen=True)

    x: float = Field(..., description="Broadside coordinate in metres")
    y: float = Field(..., description="Coordinate along the array axis in metres")
