"""
Channel Models
Array/OFDM configuration and received spectra
"""

import math
from enum import Enum
from typing import Any, Dict

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

SPEED_OF_LIGHT = 3e8


class NoiseMode(str, Enum):
    """Per-subcarrier noise draws or one draw shared across the band"""
    INDEPENDENT = "independent"
    SHARED = "shared"


class ArrayConfig(BaseModel):
    """Uniform linear array driven by an OFDM signal.

    Subcarrier m (0..M) sits at f0 + m*W/M. When no spacing is given the
    array is half-wavelength spaced at f0.
    """
    model_config = ConfigDict(frozen=True)

    n_antennas: int = Field(..., ge=2, description="Number of antennas N")
    spacing: float = Field(..., gt=0, description="Antenna spacing d in metres")
    f0: float = Field(..., gt=0, description="Lowest subcarrier frequency in Hz")
    bandwidth: float = Field(..., gt=0, description="Bandwidth W in Hz")
    m_intervals: int = Field(..., ge=1, description="Number of subcarrier intervals M")
    c: float = Field(default=SPEED_OF_LIGHT, gt=0, description="Propagation speed in m/s")

    @model_validator(mode='before')
    @classmethod
    def default_spacing(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get('spacing') is None:
            data = dict(data)
            c = data.get('c') or SPEED_OF_LIGHT
            f0 = data.get('f0')
            if f0:
                data['spacing'] = c / (2.0 * float(f0))
        return data

    @property
    def f_max(self) -> float:
        return self.f0 + self.bandwidth

    @property
    def subcarrier_spacing(self) -> float:
        return self.bandwidth / self.m_intervals

    @property
    def wavelength(self) -> float:
        return self.c / self.f0

    @property
    def aperture(self) -> float:
        return self.n_antennas * self.spacing

    @property
    def antenna_indices(self) -> np.ndarray:
        return np.arange(self.n_antennas) - (self.n_antennas - 1) / 2.0

    @property
    def baseband_offsets(self) -> np.ndarray:
        return np.arange(self.m_intervals + 1) * self.bandwidth / self.m_intervals

    @property
    def subcarrier_frequencies(self) -> np.ndarray:
        return self.f0 + self.baseband_offsets

    def summary(self) -> Dict[str, Any]:
        return {
            'N': self.n_antennas,
            'd_m': self.spacing,
            'f0_ghz': self.f0 / 1e9,
            'W_ghz': self.bandwidth / 1e9,
            'M': self.m_intervals,
            'aperture_m': self.aperture,
        }


class ReceivedSpectrum(BaseModel):
    """Complex received samples, one per subcarrier"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    samples: np.ndarray = Field(..., description="Complex sample per subcarrier, length M+1")
    frequencies: np.ndarray = Field(..., description="Subcarrier frequencies in Hz")
    rescaled: bool = Field(default=False, description="Frequency-dependent path loss removed")

    @field_validator('samples', mode='before')
    @classmethod
    def validate_samples(cls, v: Any) -> np.ndarray:
        arr = np.asarray(v, dtype=complex)
        if arr.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        return arr

    @field_validator('frequencies', mode='before')
    @classmethod
    def validate_frequencies(cls, v: Any) -> np.ndarray:
        return np.asarray(v, dtype=float)

    @model_validator(mode='after')
    def check_lengths(self) -> "ReceivedSpectrum":
        if self.samples.shape != self.frequencies.shape:
            raise ValueError(
                f"{len(self.samples)} samples for {len(self.frequencies)} subcarriers"
            )
        return self

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.samples)


def snr_from_db(snr_db: float) -> float:
    """Linear SNR; +inf dB means noiseless"""
    if math.isinf(snr_db) and snr_db > 0:
        return math.inf
    return 10.0 ** (snr_db / 10.0)
