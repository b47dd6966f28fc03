"""
Localization
Sweep simulation, feedback processing and the four localization schemes:
two-stage beam training (TBT) and controllable beam squint (CBS) in its
low-overhead, high-accuracy and double-BS forms.
"""

import logging
import math
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from models.beamforming_models import BeamformerState
from models.channel_models import ArrayConfig, NoiseMode, ReceivedSpectrum
from models.geometry_models import CartesianPoint, DistanceModel, PolarPoint
from models.localization_models import (
    Estimate, Scheme, SensingRange, StageFeedback, SweepPlan, SweepStage, UserFeedback,
)
from utils.beamforming import ttd_config, weight_cycles
from utils.channel import add_awgn, awgn, channel_matrix, path_loss
from utils.exceptions import (
    AmbiguousDistance, DegenerateGeometry, InvalidFeedback, NonPositiveDistance, SquintLocError,
)
from utils.geometry import cartesian_to_polar, distance_array, mirrored_polar

logger = logging.getLogger(__name__)

AMBIGUITY_TOLERANCE = 1e-2
# grid peaks closer than this many cells belong to the same lobe
AMBIGUITY_MIN_CELLS = 2


# Sweep simulation and feedback

def simulate_sweep(plan: SweepPlan, user: PolarPoint, snr: float = math.inf,
                   rng: Optional[np.random.Generator] = None,
                   channel_model: DistanceModel = DistanceModel.EXACT,
                   noise_mode: NoiseMode = NoiseMode.INDEPENDENT,
                   reference_power: Optional[float] = None) -> ReceivedSpectrum:
    """Raw y_m = h_m^H w_m for every subcarrier, plus AWGN when snr is finite"""
    state = plan.beamformer
    cfg = state.cfg
    f = cfg.subcarrier_frequencies
    r_n = distance_array(user.r, user.theta, cfg.antenna_indices, cfg.spacing, channel_model)
    cycles = np.outer(f, r_n) / cfg.c - weight_cycles(state)
    alpha = path_loss(f, user.r, cfg.c)
    samples = alpha * np.exp(2j * np.pi * cycles).sum(axis=1) / math.sqrt(cfg.n_antennas)
    spectrum = ReceivedSpectrum(samples=samples, frequencies=f)
    if math.isinf(snr):
        return spectrum
    if rng is None:
        raise ValueError("a random generator is required for noisy sweeps")
    return add_awgn(spectrum, snr, rng, noise_mode, reference_power)


def process_spectrum(cfg: ArrayConfig, spectrum: ReceivedSpectrum) -> ReceivedSpectrum:
    """Undo the frequency-dependent path loss: y_m * 4 pi sqrt(N) / lambda_m"""
    if spectrum.rescaled:
        raise ValueError("spectrum is already rescaled")
    gain = 4.0 * np.pi * math.sqrt(cfg.n_antennas) * spectrum.frequencies / cfg.c
    return spectrum.model_copy(update={'samples': spectrum.samples * gain, 'rescaled': True})


def peak_subcarrier(spectrum: ReceivedSpectrum, with_phase: bool = False) -> UserFeedback:
    """Strongest subcarrier; ties go to the lowest index"""
    idx = int(np.argmax(np.abs(spectrum.samples)))
    return UserFeedback(
        peak_subcarrier_index=idx,
        peak_frequency=float(spectrum.frequencies[idx]),
        peak_phase=float(np.angle(spectrum.samples[idx])) if with_phase else None,
    )


def observe(plan: SweepPlan, user: PolarPoint, snr: float = math.inf,
            rng: Optional[np.random.Generator] = None,
            channel_model: DistanceModel = DistanceModel.EXACT,
            noise_mode: NoiseMode = NoiseMode.INDEPENDENT,
            with_phase: bool = False) -> UserFeedback:
    """Simulate one sweep at a user and return what the user feeds back"""
    raw = simulate_sweep(plan, user, snr, rng, channel_model, noise_mode)
    return peak_subcarrier(process_spectrum(plan.beamformer.cfg, raw), with_phase)


def _baseband_from_peak(cfg: ArrayConfig, f_peak: float) -> float:
    half = 0.5 * cfg.subcarrier_spacing
    if not (cfg.f0 - half <= f_peak <= cfg.f_max + half):
        raise InvalidFeedback(
            f"feedback frequency {f_peak / 1e9:.6f} GHz outside "
            f"[{cfg.f0 / 1e9:.6f}, {cfg.f_max / 1e9:.6f}] GHz"
        )
    return min(max(f_peak - cfg.f0, 0.0), cfg.bandwidth)


def angle_from_peak(cfg: ArrayConfig, theta_start: float, theta_end: float,
                    f_peak: float) -> Tuple[float, bool]:
    """Invert the TTD squint for the angle seen at f_peak.

    Returns (theta_hat, clamped); clamped is True when the arcsin argument
    had to be pulled back into [-1, 1].
    """
    f_tilde = _baseband_from_peak(cfg, f_peak)
    f = cfg.f0 + f_tilde
    w = cfg.bandwidth
    s = ((w - f_tilde) * cfg.f0 * math.sin(theta_start)
         + f_tilde * cfg.f_max * math.sin(theta_end)) / (w * f)
    clamped = abs(s) > 1.0
    if clamped:
        logger.warning(f"arcsin argument {s:.9f} clamped at f={f_peak / 1e9:.6f} GHz")
        s = max(-1.0, min(1.0, s))
    return math.asin(s), clamped


def distance_from_peak(cfg: ArrayConfig, start: PolarPoint, end: PolarPoint, f_peak: float,
                       theta_hat: Optional[float] = None) -> float:
    """Invert the TTD squint for the distance seen at f_peak.

    theta_hat defaults to the start angle, which is exact for radial sweeps.
    """
    f_tilde = _baseband_from_peak(cfg, f_peak)
    f = cfg.f0 + f_tilde
    w = cfg.bandwidth
    theta_hat = start.theta if theta_hat is None else theta_hat
    inv_r = ((w - f_tilde) * cfg.f0 * math.cos(start.theta) ** 2 / start.r
             + f_tilde * cfg.f_max * math.cos(end.theta) ** 2 / end.r) / (w * f * math.cos(theta_hat) ** 2)
    if not inv_r > 0:
        raise NonPositiveDistance(f"1/r = {inv_r:.6g} at f={f_peak / 1e9:.6f} GHz")
    return 1.0 / inv_r


# Sweep plans

def angle_plan(cfg: ArrayConfig, sensing: SensingRange,
               r_mid1: Optional[float] = None, r_mid2: Optional[float] = None,
               theta_start: Optional[float] = None, theta_end: Optional[float] = None,
               distance_model: DistanceModel = DistanceModel.FRESNEL, delay_offset: float = 0.0,
               stage: SweepStage = SweepStage.ANGLE_STAGE, index: Optional[int] = None,
               bs_id: str = "A") -> SweepPlan:
    """Sweep from (r_mid1, theta_max) to (r_mid2, theta_min)"""
    r_mid1 = sensing.r_mid if r_mid1 is None else r_mid1
    r_mid2 = sensing.r_mid if r_mid2 is None else r_mid2
    theta_start = sensing.theta_max if theta_start is None else theta_start
    theta_end = sensing.theta_min if theta_end is None else theta_end
    state = ttd_config(cfg, PolarPoint(r=r_mid1, theta=theta_start), PolarPoint(r=r_mid2, theta=theta_end),
                       distance_model, delay_offset)
    return SweepPlan(beamformer=state, stage=stage, index=index, bs_id=bs_id)


def radial_plan(cfg: ArrayConfig, sensing: SensingRange, theta: float,
                distance_model: DistanceModel = DistanceModel.FRESNEL, delay_offset: float = 0.0,
                index: Optional[int] = None) -> SweepPlan:
    """Sweep from (r_min, theta) to (r_max, theta)"""
    state = ttd_config(cfg, PolarPoint(r=sensing.r_min, theta=theta), PolarPoint(r=sensing.r_max, theta=theta),
                       distance_model, delay_offset)
    return SweepPlan(beamformer=state, stage=SweepStage.DISTANCE_STAGE, index=index)


def high_schedule(sensing: SensingRange, p_sweeps: int, pad: float) -> List[Tuple[float, float]]:
    """(theta_max_p, theta_min_p) for p = 1..P, widening by pad each sweep"""
    schedule = [(sensing.theta_max + p * pad, sensing.theta_min - p * pad) for p in range(p_sweeps)]
    for theta_max, theta_min in schedule:
        if max(abs(theta_max), abs(theta_min)) >= math.pi / 2:
            raise ValueError(f"padded sweep ({math.degrees(theta_max):.2f}, "
                             f"{math.degrees(theta_min):.2f}) deg reaches endfire")
    return schedule


def _validate_schedule(sensing: SensingRange, schedule: Sequence[Tuple[float, float]]) -> None:
    if len(schedule) < 2:
        raise ValueError("CBS-High needs at least two sweeps")
    if len(set(schedule)) != len(schedule):
        raise ValueError("CBS-High sweeps must differ")
    for theta_max, theta_min in schedule:
        if theta_max < sensing.theta_max or theta_min > sensing.theta_min:
            raise ValueError("every CBS-High sweep must cover the sensing range")


def group_angles(thetas: Sequence[float], tolerance: float) -> List[List[int]]:
    """Group user indices whose angle estimates lie within tolerance of the group's first member"""
    order = sorted(range(len(thetas)), key=lambda k: (thetas[k], k))
    groups: List[List[int]] = []
    for k in order:
        if groups and thetas[k] - thetas[groups[-1][0]] <= tolerance:
            groups[-1].append(k)
        else:
            groups.append([k])
    return groups


# Two-stage beam training

def tbt_codebook(cfg: ArrayConfig, radii: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """PS codewords for every (radius, angle) pair, shape (len, N)"""
    r_n = distance_array(np.asarray(radii)[:, None], np.asarray(angles)[:, None],
                         cfg.antenna_indices[None, :], cfg.spacing, DistanceModel.FRESNEL)
    return np.exp(-2j * np.pi * cfg.f0 * r_n / cfg.c) / math.sqrt(cfg.n_antennas)


def _linspace(lo: float, hi: float, count: int) -> np.ndarray:
    if count == 1:
        return np.array([0.5 * (lo + hi)])
    return lo + (hi - lo) * np.arange(count) / (count - 1)


def _training_scores(h_conj: np.ndarray, codebook: np.ndarray, snr: float,
                     rng: Optional[np.random.Generator], reference_power: float,
                     noise_mode: NoiseMode) -> np.ndarray:
    y = h_conj @ codebook.T
    if not math.isinf(snr):
        if rng is None:
            raise ValueError("a random generator is required for noisy sweeps")
        sigma2 = reference_power / snr
        if noise_mode == NoiseMode.SHARED:
            y = y + awgn(y.shape[1], sigma2, rng)[None, :]
        else:
            y = y + awgn(y.shape, sigma2, rng)
    return np.abs(y).sum(axis=0)


def tbt_localize_many(cfg: ArrayConfig, users: Sequence[PolarPoint], sensing: SensingRange,
                      i_a: int, i_d: int, snr: float = math.inf,
                      rng: Optional[np.random.Generator] = None, r_a: Optional[float] = None,
                      channel_model: DistanceModel = DistanceModel.EXACT,
                      noise_mode: NoiseMode = NoiseMode.INDEPENDENT) -> List[Estimate]:
    """Angle codebook at r_a, then a distance codebook along each user's angle.

    The angle sweeps are shared, so K users cost I_a + K * I_d sweeps. Noise
    is referenced to the matched-beam received power.
    """
    if i_a < 1 or i_d < 1:
        raise ValueError("codebook sizes must be positive")
    r_a = sensing.r_mid if r_a is None else r_a
    angles = _linspace(sensing.theta_min, sensing.theta_max, i_a)
    radii = _linspace(sensing.r_min, sensing.r_max, i_d)
    angle_book = tbt_codebook(cfg, np.full(i_a, r_a), angles)
    sweeps = i_a + len(users) * i_d

    estimates = []
    for k, user in enumerate(users):
        h_conj = np.conj(channel_matrix(cfg, user, channel_model))
        alpha = path_loss(cfg.subcarrier_frequencies, user.r, cfg.c)
        reference_power = cfg.n_antennas * float(np.mean(alpha ** 2))

        a_idx = int(np.argmax(_training_scores(h_conj, angle_book, snr, rng, reference_power, noise_mode)))
        theta_hat = float(angles[a_idx])
        distance_book = tbt_codebook(cfg, radii, np.full(i_d, theta_hat))
        d_idx = int(np.argmax(_training_scores(h_conj, distance_book, snr, rng, reference_power, noise_mode)))
        logger.debug(f"TBT user {k}: angle codeword {a_idx}, distance codeword {d_idx}")
        estimates.append(Estimate(theta_hat=theta_hat, r_hat=float(radii[d_idx]), scheme=Scheme.TBT,
                                  sweeps_used=sweeps, user_id=k))
    return estimates


def tbt_localize(cfg: ArrayConfig, user: PolarPoint, sensing: SensingRange, i_a: int, i_d: int,
                 snr: float = math.inf, rng: Optional[np.random.Generator] = None,
                 r_a: Optional[float] = None,
                 channel_model: DistanceModel = DistanceModel.EXACT,
                 noise_mode: NoiseMode = NoiseMode.INDEPENDENT) -> Estimate:
    return tbt_localize_many(cfg, [user], sensing, i_a, i_d, snr, rng, r_a, channel_model, noise_mode)[0]


def _record_failure(errors: Optional[Dict[int, SquintLocError]], k: int, exc: SquintLocError) -> None:
    """Store a per-user failure, or re-raise when the caller collects none"""
    if errors is None:
        raise exc
    logger.debug(f"user {k} failed: {type(exc).__name__}: {exc}")
    errors[k] = exc


# CBS, low overhead

def cbs_low_localize(cfg: ArrayConfig, users: Sequence[PolarPoint], sensing: SensingRange,
                     snr: float = math.inf, rng: Optional[np.random.Generator] = None,
                     r_mid1: Optional[float] = None, r_mid2: Optional[float] = None,
                     channel_model: DistanceModel = DistanceModel.EXACT,
                     noise_mode: NoiseMode = NoiseMode.INDEPENDENT,
                     delay_offset: float = 0.0,
                     errors: Optional[Dict[int, SquintLocError]] = None) -> List[Optional[Estimate]]:
    """One angle sweep for everyone, then one radial sweep per distinct angle.

    With an errors dict, a user whose inversion fails is stored there under
    its index and left as None in the result; the other users carry on.
    """
    plan = angle_plan(cfg, sensing, r_mid1, r_mid2, delay_offset=delay_offset)
    start, end = plan.beamformer.start_focus, plan.beamformer.end_focus

    thetas: Dict[int, float] = {}
    flags: Dict[int, List[str]] = {}
    angle_feedback: Dict[int, StageFeedback] = {}
    for k, user in enumerate(users):
        fb = observe(plan, user, snr, rng, channel_model, noise_mode)
        try:
            theta_hat, clamped = angle_from_peak(cfg, start.theta, end.theta, fb.peak_frequency)
        except SquintLocError as e:
            _record_failure(errors, k, e)
            continue
        thetas[k] = theta_hat
        flags[k] = ['angle_clamped'] if clamped else []
        angle_feedback[k] = StageFeedback(stage=SweepStage.ANGLE_STAGE, feedback=fb, value=theta_hat)

    located = sorted(thetas)
    tolerance = 0.5 * abs(sensing.theta_max - sensing.theta_min) / cfg.m_intervals
    groups = [[located[i] for i in members]
              for members in group_angles([thetas[k] for k in located], tolerance)]
    sweeps = 1 + len(groups)
    logger.debug(f"CBS-Low: {len(located)} users in {len(groups)} angle groups")

    estimates: List[Optional[Estimate]] = [None] * len(users)
    for g, members in enumerate(groups):
        theta_group = float(np.mean([thetas[k] for k in members]))
        radial = radial_plan(cfg, sensing, theta_group, delay_offset=delay_offset, index=g)
        r_start, r_end = radial.beamformer.start_focus, radial.beamformer.end_focus
        for k in members:
            fb = observe(radial, users[k], snr, rng, channel_model, noise_mode)
            try:
                r_hat = distance_from_peak(cfg, r_start, r_end, fb.peak_frequency, theta_group)
            except SquintLocError as e:
                _record_failure(errors, k, e)
                continue
            estimates[k] = Estimate(
                theta_hat=thetas[k], r_hat=r_hat, scheme=Scheme.CBS_LOW, sweeps_used=sweeps, user_id=k,
                diagnostics=[angle_feedback[k],
                             StageFeedback(stage=SweepStage.DISTANCE_STAGE, index=g, feedback=fb, value=r_hat)],
                flags=flags[k],
            )
    return estimates


# CBS, high accuracy

def distance_objective(cfg: ArrayConfig, r_values: Iterable[float], feedbacks: Sequence[UserFeedback],
                       schedule: Sequence[Tuple[float, float]], theta_hats: Sequence[float],
                       r_mid1: float, r_mid2: float, delay_offset: float = 0.0) -> np.ndarray:
    """|sum_p exp(j(measured_p - predicted_p(r)))| for every candidate r.

    The predicted phase of sweep p is the constant-term phase of the
    Fresnel-expanded received signal plus the phase of the quadratic
    aperture sum, both evaluated at the fed-back subcarrier.
    """
    r = np.atleast_1d(np.asarray(r_values, dtype=float))[:, None]
    f = np.array([fb.peak_frequency for fb in feedbacks])
    measured = np.array([fb.peak_phase for fb in feedbacks], dtype=float)
    f_tilde = f - cfg.f0
    w, c, d = cfg.bandwidth, cfg.c, cfg.spacing
    cos2_hat = np.cos(np.asarray(theta_hats)) ** 2
    cos2_max = np.cos(np.array([s[0] for s in schedule])) ** 2
    cos2_min = np.cos(np.array([s[1] for s in schedule])) ** 2

    const_cycles = (f * r - ((w - f_tilde) * cfg.f0 * r_mid1 + f_tilde * cfg.f_max * r_mid2) / w) / c
    xi0 = 2.0 * np.pi * np.mod(const_cycles, 1.0)
    xi2 = (2.0 * np.pi * d ** 2 / (w * c)) * (
        w * f * cos2_hat / (2.0 * r)
        - (w - f_tilde) * cfg.f0 * cos2_max / (2.0 * r_mid1)
        - f_tilde * cfg.f_max * cos2_min / (2.0 * r_mid2)
    )
    n2 = cfg.antenna_indices ** 2
    quadratic = np.angle(np.exp(1j * xi2[..., None] * n2).sum(axis=-1))
    predicted = xi0 + quadratic - 2.0 * np.pi * f_tilde * delay_offset
    return np.abs(np.exp(1j * (measured[None, :] - predicted)).sum(axis=1))


def _local_peaks(values: np.ndarray) -> np.ndarray:
    padded = np.concatenate(([-np.inf], values, [-np.inf]))
    mask = (padded[1:-1] >= padded[:-2]) & (padded[1:-1] > padded[2:])
    return np.flatnonzero(mask)


def search_distance(cfg: ArrayConfig, sensing: SensingRange, feedbacks: Sequence[UserFeedback],
                    schedule: Sequence[Tuple[float, float]], theta_hats: Sequence[float],
                    r_mid1: float, r_mid2: float, p_r: int = 1024,
                    delay_offset: float = 0.0) -> Tuple[float, float]:
    """Grid search of the distance objective, refined by golden-section search"""
    def objective(r):
        return distance_objective(cfg, r, feedbacks, schedule, theta_hats, r_mid1, r_mid2, delay_offset)

    grid = np.linspace(sensing.r_min, sensing.r_max, p_r)
    values = objective(grid)
    peaks = _local_peaks(values)
    ranked = peaks[np.argsort(-values[peaks], kind='stable')]
    best = int(ranked[0])
    rivals = [int(i) for i in ranked[1:] if abs(int(i) - best) > AMBIGUITY_MIN_CELLS]
    if rivals:
        top, second = values[best], values[rivals[0]]
        if top - second < AMBIGUITY_TOLERANCE * top:
            raise AmbiguousDistance(
                f"distance peaks at {grid[best]:.3f} m and {grid[rivals[0]]:.3f} m are within "
                f"{AMBIGUITY_TOLERANCE:.0%} of each other",
                peaks=[float(grid[best]), float(grid[rivals[0]])],
            )

    r_best, l_best = float(grid[best]), float(values[best])
    if 0 < best < p_r - 1 and values[best] > values[best - 1] and values[best] > values[best + 1]:
        result = minimize_scalar(lambda x: -objective(x)[0], method='golden',
                                 bracket=(grid[best - 1], grid[best], grid[best + 1]))
    else:
        lo, hi = grid[max(best - 1, 0)], grid[min(best + 1, p_r - 1)]
        result = minimize_scalar(lambda x: -objective(x)[0], method='bounded', bounds=(lo, hi),
                                 options={'xatol': 1e-9})
    if result.get('success', True) and sensing.r_min <= result.x <= sensing.r_max and -result.fun >= l_best:
        r_best, l_best = float(result.x), float(-result.fun)
    return r_best, l_best


def alias_period(cfg: ArrayConfig) -> float:
    """Distance period of the objective, c M / W"""
    return cfg.c * cfg.m_intervals / cfg.bandwidth


def cbs_high_localize_many(cfg: ArrayConfig, users: Sequence[PolarPoint], sensing: SensingRange,
                           p_sweeps: int = 5, snr: float = math.inf,
                           rng: Optional[np.random.Generator] = None,
                           r_mid1: Optional[float] = None, r_mid2: Optional[float] = None,
                           pad: float = math.radians(0.5), p_r: int = 1024,
                           schedule: Optional[Sequence[Tuple[float, float]]] = None,
                           channel_model: DistanceModel = DistanceModel.EXACT,
                           noise_mode: NoiseMode = NoiseMode.INDEPENDENT,
                           delay_offset: float = 0.0,
                           errors: Optional[Dict[int, SquintLocError]] = None) -> List[Optional[Estimate]]:
    """P shifted angle sweeps; angle from the averaged inversions, distance from the phases.

    The sweeps are broadcast, so every user is served by the same P sweeps.
    Failed users go to errors, as in cbs_low_localize.
    """
    if schedule is None:
        if p_sweeps < 2:
            raise ValueError("CBS-High needs at least two sweeps")
        schedule = high_schedule(sensing, p_sweeps, pad)
    _validate_schedule(sensing, schedule)
    r_mid1 = sensing.r_mid if r_mid1 is None else r_mid1
    r_mid2 = sensing.r_mid if r_mid2 is None else r_mid2
    if sensing.r_max - sensing.r_min > alias_period(cfg):
        logger.warning(f"Distance range {sensing.r_max - sensing.r_min:.2f} m exceeds the objective period "
                       f"{alias_period(cfg):.2f} m; aliased peaks are possible")

    plans = [angle_plan(cfg, sensing, r_mid1, r_mid2, theta_max, theta_min, delay_offset=delay_offset,
                        stage=SweepStage.HIGH_P, index=p + 1)
             for p, (theta_max, theta_min) in enumerate(schedule)]

    estimates: List[Optional[Estimate]] = []
    for k, user in enumerate(users):
        feedbacks = [observe(plan, user, snr, rng, channel_model, noise_mode, with_phase=True) for plan in plans]
        try:
            thetas, diagnostics, flags = [], [], []
            for plan, fb, (theta_max, theta_min) in zip(plans, feedbacks, schedule):
                theta_p, clamped = angle_from_peak(cfg, theta_max, theta_min, fb.peak_frequency)
                if clamped and 'angle_clamped' not in flags:
                    flags.append('angle_clamped')
                thetas.append(theta_p)
                diagnostics.append(StageFeedback(stage=SweepStage.HIGH_P, index=plan.index, feedback=fb,
                                                 value=theta_p))
            r_hat, l_peak = search_distance(cfg, sensing, feedbacks, schedule, thetas, r_mid1, r_mid2, p_r,
                                            delay_offset)
        except SquintLocError as e:
            _record_failure(errors, k, e)
            estimates.append(None)
            continue

        theta_hat = float(np.mean(thetas))
        logger.debug(f"CBS-High user {k}: r={r_hat:.4f} m, L={l_peak:.4f} of {len(schedule)}")
        estimates.append(Estimate(theta_hat=theta_hat, r_hat=r_hat, scheme=Scheme.CBS_HIGH,
                                  sweeps_used=len(schedule), user_id=k, diagnostics=diagnostics,
                                  flags=flags, objective_peak=l_peak))
    return estimates


def cbs_high_localize(cfg: ArrayConfig, user: PolarPoint, sensing: SensingRange, p_sweeps: int = 5,
                      snr: float = math.inf, rng: Optional[np.random.Generator] = None,
                      **kwargs) -> Estimate:
    return cbs_high_localize_many(cfg, [user], sensing, p_sweeps, snr, rng, **kwargs)[0]


# CBS, two base stations

def triangulate(baseline: float, theta_a: float, theta_b: float,
                tolerance: float = math.radians(0.5)) -> float:
    """Range from BS A given the angles seen at both ends of the baseline"""
    if abs(theta_a) < tolerance or abs(theta_b) < tolerance:
        raise DegenerateGeometry(
            f"angles ({math.degrees(theta_a):.3f}, {math.degrees(theta_b):.3f}) deg too close to the baseline axis"
        )
    denominator = math.cos(theta_a) + math.sin(theta_a) / math.tan(theta_b)
    if not denominator > 0:
        raise DegenerateGeometry(f"triangulation denominator {denominator:.6g} is not positive")
    return baseline / denominator


def cbs_2bs_localize(cfg: ArrayConfig, baseline: float, feedback_a: UserFeedback, feedback_b: UserFeedback,
                     endpoints_a: Tuple[float, float], endpoints_b: Tuple[float, float],
                     tolerance: float = math.radians(0.5)) -> Estimate:
    """Position from one angle sweep at each BS.

    endpoints_* are the (start, end) angles of each BS's sweep. BS B sits at
    (baseline, 0) and measures angles in its own mirrored frame.
    """
    theta_a, clamped_a = angle_from_peak(cfg, endpoints_a[0], endpoints_a[1], feedback_a.peak_frequency)
    theta_b, clamped_b = angle_from_peak(cfg, endpoints_b[0], endpoints_b[1], feedback_b.peak_frequency)
    r_hat = triangulate(baseline, theta_a, theta_b, tolerance)
    return Estimate(
        theta_hat=theta_a, r_hat=r_hat, scheme=Scheme.CBS_2BS, sweeps_used=2,
        diagnostics=[
            StageFeedback(stage=SweepStage.BASELINE, bs_id="A", feedback=feedback_a, value=theta_a),
            StageFeedback(stage=SweepStage.BASELINE, bs_id="B", feedback=feedback_b, value=theta_b),
        ],
        flags=['angle_clamped'] if (clamped_a or clamped_b) else [],
    )


def cbs_2bs_run(cfg: ArrayConfig, users: Sequence[CartesianPoint], baseline: float, sensing: SensingRange,
                snr: float = math.inf, rng: Optional[np.random.Generator] = None,
                r_mid1: Optional[float] = None, r_mid2: Optional[float] = None,
                channel_model: DistanceModel = DistanceModel.EXACT,
                noise_mode: NoiseMode = NoiseMode.INDEPENDENT,
                tolerance: float = math.radians(0.5), delay_offset: float = 0.0) -> List[Estimate]:
    """Both BSs run the same angle sweep in their own frames; each user triangulates"""
    plan_a = angle_plan(cfg, sensing, r_mid1, r_mid2, delay_offset=delay_offset,
                        stage=SweepStage.BASELINE, index=0, bs_id="A")
    plan_b = angle_plan(cfg, sensing, r_mid1, r_mid2, delay_offset=delay_offset,
                        stage=SweepStage.BASELINE, index=1, bs_id="B")
    endpoints = (sensing.theta_max, sensing.theta_min)

    estimates = []
    for k, user in enumerate(users):
        fb_a = observe(plan_a, cartesian_to_polar(user), snr, rng, channel_model, noise_mode)
        fb_b = observe(plan_b, mirrored_polar(user, baseline), snr, rng, channel_model, noise_mode)
        estimate = cbs_2bs_localize(cfg, baseline, fb_a, fb_b, endpoints, endpoints, tolerance)
        estimates.append(estimate.model_copy(update={'user_id': k}))
    return estimates
