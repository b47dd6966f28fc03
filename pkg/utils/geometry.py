"""
Geometry
Coordinate conversions, per-antenna distances and near-field bounds.

Antenna n sits at (0, n*d) with n drawn from {-(N-1)/2, ..., (N-1)/2};
for even N the indices are half-integers.
"""

import logging
import math
from typing import Tuple, Union

import numpy as np

from models.geometry_models import ApertureConvention, CartesianPoint, DistanceModel, PolarPoint

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def antenna_indices(n_antennas: int) -> np.ndarray:
    return np.arange(n_antennas) - (n_antennas - 1) / 2.0


def polar_to_cartesian(p: PolarPoint) -> CartesianPoint:
    return CartesianPoint(x=p.r * math.cos(p.theta), y=p.r * math.sin(p.theta))


def cartesian_to_polar(p: CartesianPoint) -> PolarPoint:
    """Inverse of polar_to_cartesian; only the half-plane x > 0 is reachable"""
    if p.x <= 0:
        raise ValueError(f"point must lie in front of the array (x > 0), got x={p.x}")
    return PolarPoint(r=math.hypot(p.x, p.y), theta=math.atan2(p.y, p.x))


def mirrored_polar(p: CartesianPoint, baseline: float) -> PolarPoint:
    """Polar coordinates seen from a BS at (baseline, 0) facing the -x direction"""
    return cartesian_to_polar(CartesianPoint(x=baseline - p.x, y=p.y))


def distance_array(r: ArrayLike, theta: ArrayLike, n: ArrayLike, d: float,
                   model: DistanceModel = DistanceModel.EXACT) -> np.ndarray:
    """Broadcasting distance from (r, theta) to antenna index n.

    No validation; callers pass arrays shaped so they broadcast.
    """
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    offset = np.asarray(n, dtype=float) * d
    if model == DistanceModel.FRESNEL:
        cos_t = np.cos(theta)
        return r - offset * np.sin(theta) + offset ** 2 * cos_t ** 2 / (2.0 * r)
    return np.hypot(r * np.cos(theta), r * np.sin(theta) - offset)


def exact_element_distance(p: CartesianPoint, n: ArrayLike, d: float) -> ArrayLike:
    dist = np.hypot(p.x, p.y - np.asarray(n, dtype=float) * d)
    return float(dist) if np.ndim(dist) == 0 else dist


def fresnel_element_distance(p: PolarPoint, n: ArrayLike, d: float) -> ArrayLike:
    """Second-order expansion r - nd sin(theta) + n^2 d^2 cos^2(theta) / (2r)"""
    dist = distance_array(p.r, p.theta, n, d, DistanceModel.FRESNEL)
    return float(dist) if np.ndim(dist) == 0 else dist


def element_distances(p: PolarPoint, indices: np.ndarray, d: float,
                      model: DistanceModel = DistanceModel.EXACT) -> np.ndarray:
    if model == DistanceModel.FRESNEL:
        return np.asarray(fresnel_element_distance(p, indices, d))
    return np.asarray(exact_element_distance(polar_to_cartesian(p), indices, d))


def near_field_bounds(n_antennas: int, d: float, wavelength: float,
                      convention: ApertureConvention = ApertureConvention.N_D) -> Tuple[float, float]:
    """(0.62 sqrt(D^3/lambda), 2 D^2/lambda) for aperture D"""
    if n_antennas < 2 or d <= 0 or wavelength <= 0:
        raise ValueError("near-field bounds need N >= 2, d > 0 and lambda > 0")
    if convention == ApertureConvention.N_MINUS_1_D:
        aperture = (n_antennas - 1) * d
    else:
        aperture = n_antennas * d
    lower = 0.62 * math.sqrt(aperture ** 3 / wavelength)
    upper = 2.0 * aperture ** 2 / wavelength
    return lower, upper


def in_near_field(p: PolarPoint, n_antennas: int, d: float, wavelength: float,
                  convention: ApertureConvention = ApertureConvention.N_D) -> bool:
    lower, upper = near_field_bounds(n_antennas, d, wavelength, convention)
    inside = lower <= p.r <= upper
    if not inside:
        logger.warning(
            f"Point r={p.r:.3f} m lies outside the near-field region "
            f"[{lower:.3f}, {upper:.3f}] m"
        )
    return inside
