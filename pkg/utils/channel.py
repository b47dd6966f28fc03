"""
Channel
Wideband near-field LoS channel, path loss and AWGN
"""

import logging
import math
from typing import Optional, Union

import numpy as np

from models.channel_models import ArrayConfig, NoiseMode, ReceivedSpectrum
from models.geometry_models import ApertureConvention, DistanceModel, PolarPoint
from utils.exceptions import SubcarrierIndexError
from utils.geometry import distance_array, element_distances, in_near_field

logger = logging.getLogger(__name__)


def _check_index(cfg: ArrayConfig, m: int) -> None:
    if not 0 <= m <= cfg.m_intervals:
        raise SubcarrierIndexError(f"subcarrier {m} outside 0..{cfg.m_intervals}")


def subcarrier_frequency(cfg: ArrayConfig, m: int) -> float:
    _check_index(cfg, m)
    return cfg.f0 + m * cfg.bandwidth / cfg.m_intervals


def path_loss(f: Union[float, np.ndarray], r: Union[float, np.ndarray],
              c: float = 3e8) -> Union[float, np.ndarray]:
    """Free-space amplitude c / (4 pi f r)"""
    return c / (4.0 * np.pi * f * r)


def channel_vector(cfg: ArrayConfig, user: PolarPoint, m: int,
                   distance_model: DistanceModel = DistanceModel.EXACT,
                   convention: ApertureConvention = ApertureConvention.N_D) -> np.ndarray:
    """h_m for one subcarrier; warns when the user is outside the near field"""
    f = subcarrier_frequency(cfg, m)
    in_near_field(user, cfg.n_antennas, cfg.spacing, cfg.wavelength, convention)
    r_n = element_distances(user, cfg.antenna_indices, cfg.spacing, distance_model)
    alpha = path_loss(f, user.r, cfg.c)
    return alpha * np.exp(-2j * np.pi * f * r_n / cfg.c)


def channel_matrix(cfg: ArrayConfig, user: PolarPoint,
                   distance_model: DistanceModel = DistanceModel.EXACT) -> np.ndarray:
    """All subcarriers at once, shape (M+1, N)"""
    f = cfg.subcarrier_frequencies
    r_n = distance_array(user.r, user.theta, cfg.antenna_indices, cfg.spacing, distance_model)
    alpha = path_loss(f, user.r, cfg.c)
    return alpha[:, None] * np.exp(-2j * np.pi * np.outer(f, r_n) / cfg.c)


def awgn(shape, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    """Circular complex Gaussian samples with E|n|^2 = sigma2"""
    scale = math.sqrt(sigma2 / 2.0)
    draw = rng.standard_normal((2,) + tuple(np.atleast_1d(shape)))
    return scale * (draw[0] + 1j * draw[1])


def add_awgn(spectrum: ReceivedSpectrum, snr: float, rng: np.random.Generator,
             noise_mode: NoiseMode = NoiseMode.INDEPENDENT,
             reference_power: Optional[float] = None) -> ReceivedSpectrum:
    """Add noise at linear SNR snr.

    sigma^2 is the mean sample power over the sweep divided by snr unless
    reference_power is given. snr = inf returns the spectrum unchanged.
    """
    if snr <= 0:
        raise ValueError(f"linear SNR must be positive, got {snr}")
    if math.isinf(snr):
        return spectrum

    samples = spectrum.samples
    power = reference_power if reference_power is not None else float(np.mean(np.abs(samples) ** 2))
    sigma2 = power / snr
    if noise_mode == NoiseMode.SHARED:
        noise = awgn(1, sigma2, rng)[0]
    else:
        noise = awgn(samples.shape, sigma2, rng)
    return spectrum.model_copy(update={'samples': samples + noise})
