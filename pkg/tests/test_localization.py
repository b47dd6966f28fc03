import logging
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from pydantic import ValidationError

from models.channel_models import ArrayConfig, ReceivedSpectrum
from models.geometry_models import CartesianPoint, DistanceModel, PolarPoint
from models.localization_models import Estimate, Scheme, SensingRange, SweepPlan, SweepStage
from utils.beamforming import squint_steps, ttd_config, ttd_squint_point
from utils.channel import path_loss, subcarrier_frequency
from utils.exceptions import AmbiguousDistance, DegenerateGeometry, InvalidFeedback, NonPositiveDistance
from utils.localization import (
    alias_period, angle_from_peak, angle_plan, cbs_2bs_localize, cbs_2bs_run, cbs_high_localize,
    cbs_high_localize_many, cbs_low_localize, distance_from_peak, distance_objective, group_angles,
    high_schedule, observe, peak_subcarrier, process_spectrum, radial_plan, search_distance,
    simulate_sweep, tbt_localize, tbt_localize_many, triangulate,
)


def _spectrum(values):
    values = np.asarray(values, dtype=complex)
    return ReceivedSpectrum(samples=values, frequencies=30e9 + 1e6 * np.arange(len(values)))


@pytest.fixture
def cfg_2047():
    return ArrayConfig(n_antennas=128, spacing=0.005, f0=30e9, bandwidth=3e9, m_intervals=2047)


@pytest.fixture
def cfg_narrow():
    """Small, narrowband array for codebook searches"""
    return ArrayConfig(n_antennas=32, spacing=0.005, f0=30e9, bandwidth=0.2e9, m_intervals=15)


# Sweeps and feedback

def test_matched_sweep_has_full_gain(cfg_511):
    user = PolarPoint.from_degrees(30.0, 25.0)
    plan = SweepPlan(beamformer=ttd_config(cfg_511, user, user), stage=SweepStage.ANGLE_STAGE)
    raw = simulate_sweep(plan, user, channel_model=DistanceModel.FRESNEL)
    alpha = path_loss(cfg_511.subcarrier_frequencies, 30.0)
    assert_allclose(raw.magnitudes, math.sqrt(128) * alpha, rtol=1e-9)

    rescaled = process_spectrum(cfg_511, raw)
    assert rescaled.rescaled
    assert_allclose(rescaled.magnitudes, 128 / 30.0, rtol=1e-9)


def test_sweep_starting_at_user_peaks_at_first_subcarrier(cfg_511):
    user = PolarPoint.from_degrees(60.0, 30.0)
    plan = SweepPlan(beamformer=ttd_config(cfg_511, user, PolarPoint.from_degrees(60.0, -30.0)),
                     stage=SweepStage.ANGLE_STAGE)
    fb = observe(plan, user)
    assert fb.peak_subcarrier_index <= 2


def test_noiseless_sweep_ignores_generator(cfg_511):
    user = PolarPoint.from_degrees(20.0, -10.0)
    plan = angle_plan(cfg_511, SensingRange.from_degrees(10.0, 40.0, -45.0, 45.0))
    a = simulate_sweep(plan, user, math.inf, np.random.default_rng(1))
    b = simulate_sweep(plan, user)
    assert_array_equal(a.samples, b.samples)


def test_noisy_sweep_needs_generator(cfg_511):
    plan = angle_plan(cfg_511, SensingRange.from_degrees(10.0, 40.0, -45.0, 45.0))
    with pytest.raises(ValueError):
        simulate_sweep(plan, PolarPoint.from_degrees(20.0, 0.0), snr=10.0)


def test_noisy_sweep_reproducible(cfg_511):
    plan = angle_plan(cfg_511, SensingRange.from_degrees(10.0, 40.0, -45.0, 45.0))
    user = PolarPoint.from_degrees(20.0, 5.0)
    a = simulate_sweep(plan, user, 10.0, np.random.default_rng(8))
    b = simulate_sweep(plan, user, 10.0, np.random.default_rng(8))
    assert_array_equal(a.samples, b.samples)


def test_process_spectrum(cfg_t4):
    zero = ReceivedSpectrum(samples=np.zeros(9), frequencies=cfg_t4.subcarrier_frequencies)
    assert not process_spectrum(cfg_t4, zero).samples.any()

    flat = ReceivedSpectrum(samples=np.ones(9), frequencies=cfg_t4.subcarrier_frequencies)
    scaled = process_spectrum(cfg_t4, flat).magnitudes
    assert scaled[-1] / scaled[0] == pytest.approx(33.0 / 30.0, rel=1e-12)

    with pytest.raises(ValueError):
        process_spectrum(cfg_t4, process_spectrum(cfg_t4, flat))


def test_peak_subcarrier():
    one_hot = np.zeros(16)
    one_hot[7] = 1.0
    assert peak_subcarrier(_spectrum(one_hot)).peak_subcarrier_index == 7

    ties = np.zeros(16)
    ties[[3, 9]] = 2.0
    fb = peak_subcarrier(_spectrum(ties))
    assert fb.peak_subcarrier_index == 3
    assert fb.peak_frequency == pytest.approx(30e9 + 3e6)
    assert fb.peak_phase is None

    phased = np.zeros(16, dtype=complex)
    phased[5] = 2.0j
    assert peak_subcarrier(_spectrum(phased), with_phase=True).peak_phase == pytest.approx(math.pi / 2)


# Closed-form inversions

def test_angle_from_peak_endpoints(cfg_511):
    t_max, t_min = math.radians(45.0), math.radians(-45.0)
    theta, clamped = angle_from_peak(cfg_511, t_max, t_min, cfg_511.f0)
    assert theta == pytest.approx(t_max, rel=1e-12)
    assert not clamped
    theta, _ = angle_from_peak(cfg_511, t_max, t_min, cfg_511.f_max)
    assert theta == pytest.approx(t_min, rel=1e-12)


def test_angle_inversion_round_trip(cfg_511, sensing_low):
    state = angle_plan(cfg_511, sensing_low).beamformer
    for m in range(cfg_511.m_intervals + 1):
        theta_hat, clamped = angle_from_peak(cfg_511, sensing_low.theta_max, sensing_low.theta_min,
                                             subcarrier_frequency(cfg_511, m))
        assert not clamped
        assert abs(theta_hat - ttd_squint_point(state, m).point.theta) <= 1e-12


def test_feedback_outside_band_rejected(cfg_511):
    spacing = cfg_511.subcarrier_spacing
    with pytest.raises(InvalidFeedback):
        angle_from_peak(cfg_511, 0.5, -0.5, cfg_511.f0 - spacing)
    with pytest.raises(InvalidFeedback):
        angle_from_peak(cfg_511, 0.5, -0.5, cfg_511.f_max + spacing)
    # Within half a spacing the frequency is pulled back onto the band edge
    theta, _ = angle_from_peak(cfg_511, 0.5, -0.5, cfg_511.f_max + 0.4 * spacing)
    assert theta == pytest.approx(-0.5, rel=1e-12)


def test_distance_inversion_round_trip(cfg_511):
    sensing = SensingRange.from_degrees(10.0, 60.0, -45.0, 45.0)
    plan = radial_plan(cfg_511, sensing, math.radians(30.0))
    start, end = plan.beamformer.start_focus, plan.beamformer.end_focus
    assert distance_from_peak(cfg_511, start, end, cfg_511.f0) == pytest.approx(10.0, rel=1e-12)
    assert distance_from_peak(cfg_511, start, end, cfg_511.f_max) == pytest.approx(60.0, rel=1e-12)
    for m in range(cfg_511.m_intervals + 1):
        r_hat = distance_from_peak(cfg_511, start, end, subcarrier_frequency(cfg_511, m))
        assert r_hat == pytest.approx(ttd_squint_point(plan.beamformer, m).point.r, rel=1e-12)
        assert 10.0 - 1e-9 <= r_hat <= 60.0 + 1e-9


# Sweep plans

def test_distance_stage_needs_constant_angle(cfg_511):
    state = ttd_config(cfg_511, PolarPoint.from_degrees(10.0, 30.0), PolarPoint.from_degrees(40.0, 31.0))
    with pytest.raises(ValidationError):
        SweepPlan(beamformer=state, stage=SweepStage.DISTANCE_STAGE)


def test_high_schedule(sensing_low):
    schedule = high_schedule(sensing_low, 3, math.radians(0.5))
    assert_allclose(np.degrees(schedule), [[45.0, -45.0], [45.5, -45.5], [46.0, -46.0]])
    with pytest.raises(ValueError):
        high_schedule(sensing_low, 100, math.radians(0.5))


def test_group_angles():
    assert group_angles([0.1, 0.1, -0.2, 0.3], 1e-3) == [[2], [0, 1], [3]]
    assert group_angles([], 1e-3) == []


def test_estimate_requires_positive_distance():
    with pytest.raises(ValidationError):
        Estimate(theta_hat=0.1, r_hat=0.0, scheme=Scheme.CBS_LOW, sweeps_used=2)


# Two-stage beam training

def _tbt_sensing():
    return SensingRange.from_degrees(10.0, 40.0, -45.0, 45.0)


def _tbt_node(sensing, i, j, i_a=16, i_d=16):
    theta = sensing.theta_min + (sensing.theta_max - sensing.theta_min) * i / (i_a - 1)
    r = sensing.r_min + (sensing.r_max - sensing.r_min) * j / (i_d - 1)
    return r, theta


def test_tbt_on_grid_user(cfg_narrow):
    sensing = _tbt_sensing()
    r, theta = _tbt_node(sensing, 10, 6)
    est = tbt_localize(cfg_narrow, PolarPoint(r=r, theta=theta), sensing, 16, 16)
    assert est.scheme == Scheme.TBT
    assert est.theta_hat == pytest.approx(theta, rel=1e-12)
    assert est.r_hat == pytest.approx(r, rel=1e-12)
    assert est.sweeps_used == 32


def test_tbt_off_grid_user_within_half_step(cfg_narrow):
    sensing = _tbt_sensing()
    user = PolarPoint.from_degrees(22.3, 15.8)
    est = tbt_localize(cfg_narrow, user, sensing, 16, 16)
    assert abs(est.theta_hat - user.theta) <= 0.5 * math.radians(6.0)
    assert abs(est.r_hat - user.r) <= 0.5 * 2.0
    assert est.theta_hat_deg == pytest.approx(15.0)
    assert est.r_hat == pytest.approx(22.0)


def test_tbt_sweep_accounting(cfg_narrow):
    users = [PolarPoint.from_degrees(20.0, a) for a in (-30.0, 0.0, 30.0)]
    estimates = tbt_localize_many(cfg_narrow, users, _tbt_sensing(), 16, 16)
    assert [e.sweeps_used for e in estimates] == [16 + 3 * 16] * 3
    assert [e.user_id for e in estimates] == [0, 1, 2]


def test_tbt_rejects_empty_codebook(cfg_narrow):
    with pytest.raises(ValueError):
        tbt_localize(cfg_narrow, PolarPoint.from_degrees(20.0, 0.0), _tbt_sensing(), 0, 16)


# CBS, low overhead

def test_cbs_low_quantization_bound(cfg_511, sensing_low):
    users = [PolarPoint.from_degrees(r, t) for r in (12.0, 17.0, 22.0, 27.0, 32.0)
             for t in (-36.0, -18.0, 0.0, 18.0, 36.0)]
    estimates = cbs_low_localize(cfg_511, users, sensing_low)
    angular_step, _ = squint_steps(angle_plan(cfg_511, sensing_low).beamformer)

    assert len(estimates) == len(users)
    for user, est in zip(users, estimates):
        _, radial_step = squint_steps(radial_plan(cfg_511, sensing_low, est.theta_hat).beamformer)
        assert abs(est.theta_hat - user.theta) <= angular_step
        assert abs(est.r_hat - user.r) <= radial_step
        assert est.scheme == Scheme.CBS_LOW
        assert [d.stage for d in est.diagnostics] == [SweepStage.ANGLE_STAGE, SweepStage.DISTANCE_STAGE]

    groups = {est.diagnostics[1].index for est in estimates}
    assert {est.sweeps_used for est in estimates} == {1 + len(groups)}


def test_cbs_low_users_sharing_an_angle(cfg_511, sensing_low):
    theta = ttd_squint_point(angle_plan(cfg_511, sensing_low).beamformer, 200).point.theta
    users = [PolarPoint(r=15.0, theta=theta), PolarPoint(r=35.0, theta=theta)]
    estimates = cbs_low_localize(cfg_511, users, sensing_low)
    assert [e.sweeps_used for e in estimates] == [2, 2]
    assert estimates[0].theta_hat == estimates[1].theta_hat
    assert estimates[0].r_hat < estimates[1].r_hat


def test_cbs_low_distinct_angles(cfg_511, sensing_low):
    users = [PolarPoint.from_degrees(20.0, t) for t in (-30.0, 5.0, 30.0)]
    estimates = cbs_low_localize(cfg_511, users, sensing_low)
    assert [e.sweeps_used for e in estimates] == [4, 4, 4]


def test_cbs_low_isolates_a_failed_user(cfg_511, sensing_low, monkeypatch):
    def fail_below_broadside(*args):
        if args[-1] < 0:
            raise NonPositiveDistance("1/r <= 0")
        return distance_from_peak(*args)

    monkeypatch.setattr("utils.localization.distance_from_peak", fail_below_broadside)
    users = [PolarPoint.from_degrees(20.0, t) for t in (-30.0, 5.0, 30.0)]
    errors = {}
    estimates = cbs_low_localize(cfg_511, users, sensing_low, errors=errors)
    assert estimates[0] is None
    assert list(errors) == [0]
    assert isinstance(errors[0], NonPositiveDistance)
    for est in estimates[1:]:
        assert est.r_hat == pytest.approx(20.0, abs=0.5)

    with pytest.raises(NonPositiveDistance):
        cbs_low_localize(cfg_511, users, sensing_low)


# CBS, high accuracy

def test_cbs_high_recovers_distance(cfg_2047):
    sensing = SensingRange.from_degrees(10.0, 70.0, -45.0, 45.0)
    user = PolarPoint.from_degrees(60.0, 30.0)
    est = cbs_high_localize(cfg_2047, user, sensing, p_sweeps=10)

    assert est.scheme == Scheme.CBS_HIGH
    assert est.sweeps_used == 10
    assert est.r_hat == pytest.approx(60.0, abs=5e-3)
    assert abs(est.theta_hat - user.theta) <= math.radians(0.05)
    assert est.objective_peak == pytest.approx(10.0, abs=1e-3)
    assert len(est.diagnostics) == 10
    assert all(d.feedback.peak_phase is not None for d in est.diagnostics)
    # Padding moves the peak to a different subcarrier on every sweep
    assert len({d.feedback.peak_subcarrier_index for d in est.diagnostics}) == 10


def test_cbs_high_exact_with_five_sweeps(cfg_2047):
    sensing = SensingRange.from_degrees(10.0, 70.0, -45.0, 45.0)
    est = cbs_high_localize(cfg_2047, PolarPoint.from_degrees(60.0, 30.0), sensing, p_sweeps=5)
    assert est.r_hat == pytest.approx(60.0, abs=1e-3)
    assert est.objective_peak == pytest.approx(5.0, abs=1e-6)


def test_distance_objective_bounds(cfg_2047):
    sensing = SensingRange.from_degrees(10.0, 70.0, -45.0, 45.0)
    est = cbs_high_localize(cfg_2047, PolarPoint.from_degrees(60.0, 30.0), sensing, p_sweeps=5)
    schedule = high_schedule(sensing, 5, math.radians(0.5))
    feedbacks = [d.feedback for d in est.diagnostics]
    thetas = [d.value for d in est.diagnostics]
    values = distance_objective(cfg_2047, np.linspace(10.0, 70.0, 301), feedbacks, schedule, thetas,
                                sensing.r_mid, sensing.r_mid)
    assert np.all(values >= 0.0)
    assert np.all(values <= 5.0 + 1e-9)
    at_truth = distance_objective(cfg_2047, [60.0], feedbacks, schedule, thetas, sensing.r_mid, sensing.r_mid)
    assert at_truth[0] == pytest.approx(5.0, abs=1e-3)


def test_cbs_high_needs_two_sweeps(cfg_511, sensing_low):
    with pytest.raises(ValueError):
        cbs_high_localize(cfg_511, PolarPoint.from_degrees(20.0, 10.0), sensing_low, p_sweeps=1)


def test_cbs_high_schedule_must_cover_range(cfg_511, sensing_low):
    narrow = [(math.radians(40.0), math.radians(-45.0)), (math.radians(46.0), math.radians(-46.0))]
    with pytest.raises(ValueError):
        cbs_high_localize(cfg_511, PolarPoint.from_degrees(20.0, 10.0), sensing_low, schedule=narrow)
    repeated = [(math.radians(46.0), math.radians(-46.0))] * 2
    with pytest.raises(ValueError):
        cbs_high_localize(cfg_511, PolarPoint.from_degrees(20.0, 10.0), sensing_low, schedule=repeated)


def test_cbs_high_aliased_range_is_ambiguous(cfg_511, caplog):
    sensing = SensingRange.from_degrees(10.0, 75.0, -45.0, 45.0)
    assert alias_period(cfg_511) == pytest.approx(51.1)
    with caplog.at_level(logging.WARNING):
        with pytest.raises(AmbiguousDistance) as info:
            cbs_high_localize(cfg_511, PolarPoint.from_degrees(20.0, 10.0), sensing, p_sweeps=5, p_r=4096)
    assert any("exceeds the objective period" in rec.getMessage() for rec in caplog.records)
    assert sorted(round(p) for p in info.value.peaks) == [20, 71]


def _two_lobes(second):
    """Objective with lobes of height 5 at 20 m and `second` at 50 m"""
    def objective(cfg, r_values, *args):
        r = np.atleast_1d(np.asarray(r_values, dtype=float))
        return 5.0 * np.exp(-((r - 20.0) / 2.0) ** 2) + second * np.exp(-((r - 50.0) / 2.0) ** 2)
    return objective


def test_search_distance_rejects_peaks_within_one_percent(cfg_2047, monkeypatch):
    monkeypatch.setattr("utils.localization.distance_objective", _two_lobes(4.975))
    sensing = SensingRange.from_degrees(10.0, 70.0, -45.0, 45.0)
    with pytest.raises(AmbiguousDistance) as info:
        search_distance(cfg_2047, sensing, [], [], [], 40.0, 40.0, p_r=1024)
    assert sorted(round(p) for p in info.value.peaks) == [20, 50]


def test_search_distance_accepts_clear_winner(cfg_2047, monkeypatch):
    monkeypatch.setattr("utils.localization.distance_objective", _two_lobes(4.9))
    sensing = SensingRange.from_degrees(10.0, 70.0, -45.0, 45.0)
    r_hat, peak = search_distance(cfg_2047, sensing, [], [], [], 40.0, 40.0, p_r=1024)
    assert r_hat == pytest.approx(20.0, abs=1e-3)
    assert peak == pytest.approx(5.0, abs=1e-6)


def test_cbs_high_ambiguous_user_does_not_block_others(cfg_511):
    sensing = SensingRange.from_degrees(10.0, 75.0, -45.0, 45.0)
    users = [PolarPoint.from_degrees(30.0, -10.0), PolarPoint.from_degrees(20.0, 10.0)]
    errors = {}
    estimates = cbs_high_localize_many(cfg_511, users, sensing, p_sweeps=5, errors=errors)
    assert estimates[0].r_hat == pytest.approx(30.0, abs=0.01)
    assert estimates[1] is None
    assert list(errors) == [1]
    assert isinstance(errors[1], AmbiguousDistance)

    with pytest.raises(AmbiguousDistance):
        cbs_high_localize_many(cfg_511, users, sensing, p_sweeps=5)


def test_search_distance_refines_between_grid_nodes(cfg_2047):
    sensing = SensingRange.from_degrees(10.0, 70.0, -45.0, 45.0)
    est = cbs_high_localize(cfg_2047, PolarPoint.from_degrees(43.21, -12.0), sensing, p_sweeps=5, p_r=64)
    schedule = high_schedule(sensing, 5, math.radians(0.5))
    r_hat, peak = search_distance(cfg_2047, sensing, [d.feedback for d in est.diagnostics], schedule,
                                  [d.value for d in est.diagnostics], sensing.r_mid, sensing.r_mid, p_r=64)
    assert r_hat == pytest.approx(43.21, abs=0.01)
    assert r_hat == pytest.approx(est.r_hat)
    assert peak <= 5.0 + 1e-9


def test_cbs_high_many_users_share_sweeps(cfg_2047):
    sensing = SensingRange.from_degrees(10.0, 70.0, -45.0, 45.0)
    users = [PolarPoint.from_degrees(25.0, -20.0), PolarPoint.from_degrees(50.0, 15.0)]
    estimates = cbs_high_localize_many(cfg_2047, users, sensing, p_sweeps=5)
    assert [e.sweeps_used for e in estimates] == [5, 5]
    for user, est in zip(users, estimates):
        assert est.r_hat == pytest.approx(user.r, abs=0.01)


# CBS, two base stations

def test_triangulate():
    theta_a = math.asin(0.6)
    theta_b = math.asin(30.0 / math.hypot(60.0, 30.0))
    assert math.degrees(theta_a) == pytest.approx(36.87, abs=1e-2)
    assert triangulate(100.0, theta_a, theta_b) == pytest.approx(50.0, rel=1e-12)


def test_triangulate_symmetric_user():
    theta = math.atan2(30.0, 50.0)
    assert triangulate(100.0, theta, theta) == pytest.approx(math.hypot(50.0, 30.0), rel=1e-12)


def test_triangulate_degenerate():
    with pytest.raises(DegenerateGeometry):
        triangulate(100.0, 0.3, 1e-4)
    with pytest.raises(DegenerateGeometry):
        triangulate(100.0, 1e-4, 0.3)
    with pytest.raises(DegenerateGeometry):
        triangulate(100.0, 0.5, -0.5)


def test_cbs_2bs_run(cfg_511):
    sensing = SensingRange.from_degrees(10.0, 70.0, -60.0, 60.0)
    est = cbs_2bs_run(cfg_511, [CartesianPoint(x=40.0, y=30.0)], 100.0, sensing)[0]
    assert est.scheme == Scheme.CBS_2BS
    assert est.sweeps_used == 2
    assert est.theta_hat_deg == pytest.approx(36.87, abs=0.25)
    assert est.r_hat == pytest.approx(50.0, abs=0.5)
    assert [d.bs_id for d in est.diagnostics] == ["A", "B"]


def test_cbs_2bs_user_on_baseline_axis(cfg_511):
    sensing = SensingRange.from_degrees(10.0, 70.0, -60.0, 60.0)
    with pytest.raises(DegenerateGeometry):
        cbs_2bs_run(cfg_511, [CartesianPoint(x=50.0, y=0.0)], 100.0, sensing)


def test_cbs_2bs_localize_from_feedback(cfg_511):
    sensing = SensingRange.from_degrees(10.0, 70.0, -60.0, 60.0)
    plan = angle_plan(cfg_511, sensing)
    user = CartesianPoint(x=40.0, y=30.0)
    fb_a = observe(plan, PolarPoint(r=50.0, theta=math.asin(0.6)))
    fb_b = observe(plan, PolarPoint(r=math.hypot(60.0, 30.0), theta=math.atan2(user.y, 100.0 - user.x)))
    endpoints = (sensing.theta_max, sensing.theta_min)
    est = cbs_2bs_localize(cfg_511, 100.0, fb_a, fb_b, endpoints, endpoints)
    assert est.r_hat == pytest.approx(50.0, abs=0.5)


def test_cbs_2bs_random_users_within_quantization_bound(cfg_511):
    baseline = 100.0
    sensing = SensingRange.from_degrees(30.0, 80.0, -60.0, 60.0)
    step, _ = squint_steps(angle_plan(cfg_511, sensing).beamformer)
    rng = np.random.default_rng(31)
    users = [CartesianPoint(x=x, y=y) for x, y in zip(rng.uniform(35.0, 65.0, 10), rng.uniform(25.0, 40.0, 10))]

    estimates = cbs_2bs_run(cfg_511, users, baseline, sensing)
    assert len(estimates) == 10
    for user, est in zip(users, estimates):
        theta_a = math.atan2(user.y, user.x)
        theta_b = math.atan2(user.y, baseline - user.x)
        r_true = math.hypot(user.x, user.y)
        bound = max(abs(triangulate(baseline, theta_a + da, theta_b + db) - r_true)
                    for da in (-step, step) for db in (-step, step))
        assert abs(est.r_hat - r_true) <= bound + 1e-9, (user, est.r_hat, bound)
