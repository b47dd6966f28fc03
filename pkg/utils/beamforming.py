"""
Beamforming
Phase-shifter and joint PS-TTD beamformers, array gain and beam squint.

Phases are kept in cycles so the channel and weight phases can be
differenced before exponentiation.
"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from models.beamforming_models import BeamformerState, BeamKind, SearchGrid, SquintPoint
from models.channel_models import ArrayConfig
from models.geometry_models import DistanceModel, PolarPoint
from utils.channel import subcarrier_frequency
from utils.exceptions import OutOfTrajectory
from utils.geometry import distance_array, element_distances

logger = logging.getLogger(__name__)


def phase_cycles(cfg: ArrayConfig, focus: PolarPoint,
                 distance_model: DistanceModel = DistanceModel.FRESNEL) -> np.ndarray:
    """f0 * r_n / c for every antenna"""
    r_n = element_distances(focus, cfg.antenna_indices, cfg.spacing, distance_model)
    return cfg.f0 * r_n / cfg.c


def ps_weights(cfg: ArrayConfig, focus: PolarPoint,
               distance_model: DistanceModel = DistanceModel.FRESNEL) -> np.ndarray:
    """Unit-norm phase-shifter beam focused on focus at f0"""
    return np.exp(-2j * np.pi * phase_cycles(cfg, focus, distance_model)) / math.sqrt(cfg.n_antennas)


def ps_state(cfg: ArrayConfig, focus: PolarPoint,
             distance_model: DistanceModel = DistanceModel.FRESNEL) -> BeamformerState:
    """Phase-shifter-only configuration, all delays zero"""
    return BeamformerState(
        cfg=cfg,
        phase_cycles=phase_cycles(cfg, focus, distance_model),
        delays=np.zeros(cfg.n_antennas),
        start_focus=focus,
        end_focus=natural_squint_point(cfg, focus, cfg.m_intervals).point,
        kind=BeamKind.PHASE_SHIFTER,
        distance_model=distance_model,
    )


def ttd_config(cfg: ArrayConfig, start: PolarPoint, end: PolarPoint,
               distance_model: DistanceModel = DistanceModel.FRESNEL,
               delay_offset: float = 0.0) -> BeamformerState:
    """Phases and delays that focus subcarrier 0 on start and subcarrier M on end.

    t_n = f_M r_{c,n} / (W c) - phi_n / W, shifted by delay_offset. With
    start == end the delays reduce to r_n / c and the squint vanishes.
    """
    phi = phase_cycles(cfg, start, distance_model)
    r_end = element_distances(end, cfg.antenna_indices, cfg.spacing, distance_model)
    delays = cfg.f_max * r_end / (cfg.bandwidth * cfg.c) - phi / cfg.bandwidth + delay_offset
    return BeamformerState(
        cfg=cfg,
        phase_cycles=phi,
        delays=delays,
        start_focus=start,
        end_focus=end,
        kind=BeamKind.TRUE_TIME_DELAY,
        distance_model=distance_model,
        delay_offset=delay_offset,
    )


def weights_at(state: BeamformerState, m: int) -> np.ndarray:
    cfg = state.cfg
    f_tilde = subcarrier_frequency(cfg, m) - cfg.f0
    cycles = state.phase_cycles + f_tilde * state.delays
    return np.exp(-2j * np.pi * cycles) / math.sqrt(cfg.n_antennas)


def weight_cycles(state: BeamformerState) -> np.ndarray:
    """phi_n + f~_m t_n for every subcarrier, shape (M+1, N)"""
    offsets = state.cfg.baseband_offsets
    return state.phase_cycles[None, :] + np.outer(offsets, state.delays)


def weight_matrix(state: BeamformerState) -> np.ndarray:
    return np.exp(-2j * np.pi * weight_cycles(state)) / math.sqrt(state.cfg.n_antennas)


def delay_range(state: BeamformerState) -> Tuple[float, float]:
    return float(np.min(state.delays)), float(np.max(state.delays))


def array_gain(weights: np.ndarray, point: PolarPoint, f: float, cfg: ArrayConfig,
               distance_model: DistanceModel = DistanceModel.EXACT) -> float:
    """|b(point, f)^H w| for a unit-magnitude array response b"""
    r_n = element_distances(point, cfg.antenna_indices, cfg.spacing, distance_model)
    response = np.exp(-2j * np.pi * f * r_n / cfg.c)
    return float(np.abs(np.vdot(weights, response)))


def gain_map(weights: np.ndarray, radii: np.ndarray, angles: np.ndarray, f: float,
             cfg: ArrayConfig, distance_model: DistanceModel = DistanceModel.EXACT) -> np.ndarray:
    """Array gain over a (radii x angles) grid, one radius row at a time"""
    n = cfg.antenna_indices
    angles = np.asarray(angles, dtype=float)
    conj_w = np.conj(weights)
    gains = np.empty((len(radii), len(angles)))
    for i, r in enumerate(radii):
        r_n = distance_array(r, angles[:, None], n[None, :], cfg.spacing, distance_model)
        gains[i] = np.abs(np.exp(-2j * np.pi * f * r_n / cfg.c) @ conj_w)
    return gains


def f_kernel(x: float, y: float, n_antennas: int) -> float:
    """|sum_n exp(j n^2 x) exp(j n y)| over the symmetric index set"""
    n = np.arange(n_antennas) - (n_antennas - 1) / 2.0
    return float(np.abs(np.sum(np.exp(1j * (n ** 2 * x + n * y)))))


# Squint trajectories

def natural_squint_point(cfg: ArrayConfig, focus: PolarPoint, m: int) -> SquintPoint:
    """Where a PS beam focused on focus at f0 lands at subcarrier m"""
    f = subcarrier_frequency(cfg, m)
    if m == 0:
        return SquintPoint(m=0, frequency=f, point=focus)
    s = cfg.f0 / f * math.sin(focus.theta)
    r = focus.r * (f / cfg.f0) * (1.0 - s * s) / math.cos(focus.theta) ** 2
    return SquintPoint(m=m, frequency=f, point=PolarPoint(r=r, theta=math.asin(s)))


def natural_trajectory(cfg: ArrayConfig, focus: PolarPoint) -> List[SquintPoint]:
    return [natural_squint_point(cfg, focus, m) for m in range(cfg.m_intervals + 1)]


def _ttd_closed_form(cfg: ArrayConfig, start: PolarPoint, end: PolarPoint,
                     f_tilde: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(sin, cos^2, 1/r) of the squint focus for baseband offsets f_tilde"""
    f = cfg.f0 + f_tilde
    w_start = (cfg.bandwidth - f_tilde) * cfg.f0 / (cfg.bandwidth * f)
    w_end = cfg.f_max * f_tilde / (cfg.bandwidth * f)
    sin_t = w_start * math.sin(start.theta) + w_end * math.sin(end.theta)
    cos2 = 1.0 - sin_t ** 2
    with np.errstate(divide='ignore', invalid='ignore'):
        inv_r = (w_start * math.cos(start.theta) ** 2 / start.r
                 + w_end * math.cos(end.theta) ** 2 / end.r) / cos2
    return sin_t, cos2, inv_r


def ttd_squint_point(state: BeamformerState, m: int) -> SquintPoint:
    """Closed-form focus of a PS-TTD beam at subcarrier m.

    Endpoints return the configured foci unchanged. A phase-shifter-only
    state follows the natural squint of its start focus.
    """
    cfg = state.cfg
    f = subcarrier_frequency(cfg, m)
    if state.kind == BeamKind.PHASE_SHIFTER:
        return natural_squint_point(cfg, state.start_focus, m)
    if m == 0:
        return SquintPoint(m=0, frequency=f, point=state.start_focus)
    if m == cfg.m_intervals:
        return SquintPoint(m=m, frequency=f, point=state.end_focus)

    sin_t, cos2, inv_r = _ttd_closed_form(cfg, state.start_focus, state.end_focus,
                                          np.array([f - cfg.f0]))
    sin_t, cos2, inv_r = float(sin_t[0]), float(cos2[0]), float(inv_r[0])
    if abs(sin_t) >= 1.0 or cos2 <= 0:
        raise OutOfTrajectory(f"sin(theta) = {sin_t:.6f} at subcarrier {m}")
    if not inv_r > 0:
        raise OutOfTrajectory(f"1/r = {inv_r:.6g} at subcarrier {m}")
    return SquintPoint(m=m, frequency=f, point=PolarPoint(r=1.0 / inv_r, theta=math.asin(sin_t)))


def ttd_trajectory(state: BeamformerState) -> List[SquintPoint]:
    return [ttd_squint_point(state, m) for m in range(state.cfg.m_intervals + 1)]


def trajectory_arrays(state: BeamformerState) -> Tuple[np.ndarray, np.ndarray]:
    """(r, theta) of the squint focus for every subcarrier, vectorised"""
    cfg = state.cfg
    if state.kind == BeamKind.PHASE_SHIFTER:
        points = [p.point for p in natural_trajectory(cfg, state.start_focus)]
        return np.array([p.r for p in points]), np.array([p.theta for p in points])
    sin_t, cos2, inv_r = _ttd_closed_form(cfg, state.start_focus, state.end_focus, cfg.baseband_offsets)
    if np.any(np.abs(sin_t) >= 1.0) or np.any(~(inv_r > 0)):
        raise OutOfTrajectory("trajectory leaves the visible region")
    r = 1.0 / inv_r
    theta = np.arcsin(sin_t)
    r[0], theta[0] = state.start_focus.r, state.start_focus.theta
    r[-1], theta[-1] = state.end_focus.r, state.end_focus.theta
    return r, theta


def squint_steps(state: BeamformerState) -> Tuple[float, float]:
    """Largest angular (rad) and radial (m) move between adjacent subcarriers"""
    r, theta = trajectory_arrays(state)
    return float(np.max(np.abs(np.diff(theta)))), float(np.max(np.abs(np.diff(r))))


def brute_force_squint_point(state: BeamformerState, m: int, grid: SearchGrid,
                             distance_model: Optional[DistanceModel] = None) -> SquintPoint:
    """Grid node with the largest gain for the beam at subcarrier m.

    Ties go to the smaller r, then the smaller theta. The response uses
    the beamformer's own distance model unless one is given. A gap of more
    than one grid step to the closed form is logged.
    """
    cfg = state.cfg
    model = distance_model or state.distance_model
    f = subcarrier_frequency(cfg, m)
    radii, angles = grid.radii(), grid.angles()
    gains = gain_map(weights_at(state, m), radii, angles, f, cfg, model)
    i, j = np.unravel_index(int(np.argmax(gains)), gains.shape)
    found = SquintPoint(m=m, frequency=f, point=PolarPoint(r=float(radii[i]), theta=float(angles[j])))

    try:
        closed = ttd_squint_point(state, m).point
    except OutOfTrajectory:
        logger.warning(f"No closed-form squint point at subcarrier {m}; oracle gives "
                       f"({found.point.r:.3f} m, {found.point.theta_deg:.3f} deg)")
        return found
    if abs(closed.r - found.point.r) > grid.dr or abs(closed.theta - found.point.theta) > grid.dtheta:
        logger.warning(
            f"Oracle/closed-form mismatch at subcarrier {m}: "
            f"closed ({closed.r:.3f} m, {closed.theta_deg:.3f} deg) vs "
            f"grid ({found.point.r:.3f} m, {found.point.theta_deg:.3f} deg)"
        )
    return found


NAMED_TRAJECTORIES = {
    'T1': ((5.0, 85.0), (80.0, 85.0)),
    'T2': ((30.0, -60.0), (50.0, -60.0)),
    'T3': ((3.0, 60.0), (82.0, -60.0)),
    'T4': ((60.0, 30.0), (60.0, -30.0)),
}


def named_trajectory(name: str, cfg: ArrayConfig,
                     distance_model: DistanceModel = DistanceModel.FRESNEL) -> BeamformerState:
    """Reference sweeps T1..T4 (distances in m, angles in degrees)"""
    key = name.upper()
    if key not in NAMED_TRAJECTORIES:
        raise ValueError(f"unknown trajectory {name!r}, expected one of {sorted(NAMED_TRAJECTORIES)}")
    (r0, t0), (rc, tc) = NAMED_TRAJECTORIES[key]
    return ttd_config(cfg, PolarPoint.from_degrees(r0, t0), PolarPoint.from_degrees(rc, tc), distance_model)
