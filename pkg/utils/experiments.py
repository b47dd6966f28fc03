"""
Experiments
Monte-Carlo RMSE runs over an SNR grid.

Each (SNR, trial) pair draws from its own generator derived from the run
seed, so results do not depend on the number of worker threads.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from models.channel_models import snr_from_db
from models.experiment_models import (
    TABLE_COLUMNS, ErrorKind, ExperimentResult, ExperimentSpec, TrialRecord,
)
from models.geometry_models import CartesianPoint, PolarPoint
from models.localization_models import Estimate, Scheme
from utils.exceptions import EmptyCellError, SquintLocError
from utils.geometry import cartesian_to_polar, polar_to_cartesian
from utils.localization import (
    cbs_2bs_run, cbs_high_localize_many, cbs_low_localize, tbt_localize_many,
)
from utils.logger import timed

logger = logging.getLogger(__name__)


def trial_rng(seed: int, snr_index: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(snr_index, trial)))


def _polar(user) -> PolarPoint:
    return cartesian_to_polar(user) if isinstance(user, CartesianPoint) else user


def _cartesian(user) -> CartesianPoint:
    return polar_to_cartesian(user) if isinstance(user, PolarPoint) else user


def _describe(exc: SquintLocError) -> str:
    return f"{type(exc).__name__}: {exc}"


def localize_users(spec: ExperimentSpec, snr: float,
                   rng: np.random.Generator) -> List[Tuple[Optional[Estimate], Optional[str]]]:
    """One estimate (or the failure name) per user, in user order"""
    users = [_polar(u) for u in spec.users]
    common = dict(channel_model=spec.channel_model, noise_mode=spec.noise_mode)

    if spec.scheme == Scheme.CBS_2BS:
        results = []
        for user in spec.users:
            try:
                estimate = cbs_2bs_run(spec.cfg, [_cartesian(user)], spec.baseline, spec.sensing, snr, rng,
                                       spec.r_mid1, spec.r_mid2, tolerance=spec.degenerate_tol,
                                       delay_offset=spec.delay_offset, **common)[0]
                results.append((estimate, None))
            except SquintLocError as e:
                results.append((None, _describe(e)))
        return results

    errors: Dict[int, SquintLocError] = {}
    if spec.scheme == Scheme.TBT:
        subcarriers = spec.cfg.m_intervals + 1
        estimates = tbt_localize_many(spec.cfg, users, spec.sensing, spec.i_a or subcarriers,
                                      spec.i_d or subcarriers, snr, rng, spec.r_a, **common)
    elif spec.scheme == Scheme.CBS_LOW:
        estimates = cbs_low_localize(spec.cfg, users, spec.sensing, snr, rng, spec.r_mid1, spec.r_mid2,
                                     delay_offset=spec.delay_offset, errors=errors, **common)
    else:
        estimates = cbs_high_localize_many(spec.cfg, users, spec.sensing, spec.p_sweeps, snr, rng,
                                           spec.r_mid1, spec.r_mid2, spec.pad, spec.p_r,
                                           delay_offset=spec.delay_offset, errors=errors, **common)
    return [(None, _describe(errors[k])) if k in errors else (estimate, None)
            for k, estimate in enumerate(estimates)]


def run_trial(spec: ExperimentSpec, snr_index: int, trial: int) -> List[TrialRecord]:
    snr_db = spec.snr_grid_db[snr_index]
    rng = trial_rng(spec.seed, snr_index, trial)
    start = time.perf_counter()
    outcomes = localize_users(spec, snr_from_db(snr_db), rng)
    elapsed = time.perf_counter() - start

    records = []
    for k, (user, (estimate, error)) in enumerate(zip(spec.users, outcomes)):
        truth = _polar(user)
        if estimate is None:
            records.append(TrialRecord(trial=trial, snr_db=snr_db, user_id=k, truth=truth,
                                       wall_time_s=elapsed, error=error))
            continue
        true_xy = polar_to_cartesian(truth)
        records.append(TrialRecord(
            trial=trial, snr_db=snr_db, user_id=k, truth=truth, estimate=estimate,
            theta_error=estimate.theta_hat - truth.theta,
            r_error=estimate.r_hat - truth.r,
            x_error=estimate.x_hat - true_xy.x,
            y_error=estimate.y_hat - true_xy.y,
            wall_time_s=elapsed,
        ))
    return records


def _squared_errors(records: Iterable[TrialRecord], kind: ErrorKind) -> np.ndarray:
    used = [rec for rec in records if not rec.excluded]
    if not used:
        raise EmptyCellError("no usable trials in this cell")
    if kind == ErrorKind.THETA:
        return np.array([rec.theta_error ** 2 for rec in used])
    if kind == ErrorKind.R:
        return np.array([rec.r_error ** 2 for rec in used])
    return np.array([rec.x_error ** 2 + rec.y_error ** 2 for rec in used])


def rmse(records: Iterable[TrialRecord], kind: ErrorKind) -> float:
    """Root-mean-square error over non-excluded records (radians for theta)"""
    return float(np.sqrt(np.mean(_squared_errors(records, kind))))


def rmse_standard_error(records: Iterable[TrialRecord], kind: ErrorKind) -> float:
    """Delta-method standard error of the RMSE"""
    sq = _squared_errors(records, kind)
    value = math.sqrt(float(np.mean(sq)))
    if len(sq) < 2 or value == 0:
        return 0.0
    se_mean = float(np.std(sq, ddof=1)) / math.sqrt(len(sq))
    return se_mean / (2.0 * value)


def summarize(records: Sequence[TrialRecord]) -> pd.DataFrame:
    """One row per (SNR, user) cell, sorted by SNR then user"""
    rows = []
    cells = {}
    for rec in records:
        cells.setdefault((rec.snr_db, rec.user_id), []).append(rec)
    for (snr_db, user_id), cell in sorted(cells.items()):
        used = [rec for rec in cell if not rec.excluded]
        excluded = len(cell) - len(used)
        if used:
            row = [snr_db, user_id,
                   math.degrees(rmse(used, ErrorKind.THETA)),
                   rmse(used, ErrorKind.R),
                   rmse(used, ErrorKind.TWO_D),
                   float(np.mean([rec.estimate.sweeps_used for rec in used])),
                   excluded]
        else:
            logger.warning(f"All {len(cell)} trials excluded at {snr_db} dB for user {user_id}")
            row = [snr_db, user_id, math.nan, math.nan, math.nan, math.nan, excluded]
        rows.append(row)
    table = pd.DataFrame(rows, columns=TABLE_COLUMNS)
    return table.astype({'user_id': int, 'excluded_trials': int})


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> ExperimentResult:
    """Run every (SNR, trial) pair and aggregate RMSE per (SNR, user)"""
    tasks = [(i, t) for i in range(len(spec.snr_grid_db)) for t in range(spec.trials)]
    logger.info(f"Running {spec.scheme.value}: {len(spec.users)} users, "
                f"{len(spec.snr_grid_db)} SNR points, {spec.trials} trials, {threads} threads")

    with timed(f"experiment {spec.scheme.value}", logger):
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as executor:
                batches = list(executor.map(lambda task: run_trial(spec, *task), tasks))
        else:
            batches = [run_trial(spec, *task) for task in tasks]

    records = [rec for batch in batches for rec in batch]
    excluded = sum(rec.excluded for rec in records)
    if excluded:
        logger.warning(f"{excluded} of {len(records)} user-trials excluded")
    return ExperimentResult(table=summarize(records), records=records, spec=spec)


# Overhead accounting

def sweep_count(scheme: Scheme, k_users: int = 1, m_intervals: Optional[int] = None,
                i_a: Optional[int] = None, i_d: Optional[int] = None, p_sweeps: Optional[int] = None) -> int:
    """Number of sweeps each scheme needs for K users"""
    if k_users < 1:
        raise ValueError("need at least one user")
    if scheme == Scheme.TBT:
        if i_a is None or i_d is None:
            if m_intervals is None:
                raise ValueError("TBT needs I_a and I_d, or M to default them to M+1")
            i_a = m_intervals + 1 if i_a is None else i_a
            i_d = m_intervals + 1 if i_d is None else i_d
        return i_a + k_users * i_d
    if scheme == Scheme.CBS_LOW:
        return k_users + 1
    if scheme == Scheme.CBS_HIGH:
        if p_sweeps is None:
            raise ValueError("CBS-High needs P")
        return p_sweeps
    return 2


def feedback_count(scheme: Scheme, p_sweeps: Optional[int] = None) -> int:
    """Values each user feeds back; CBS-High reports a frequency and a phase per sweep"""
    if scheme == Scheme.CBS_HIGH:
        if p_sweeps is None:
            raise ValueError("CBS-High needs P")
        return 2 * p_sweeps
    return 2


def computing_count(scheme: Scheme, p_sweeps: Optional[int] = None, p_r: Optional[int] = None) -> int:
    """Inversions and objective evaluations per user"""
    if scheme == Scheme.CBS_HIGH:
        if p_sweeps is None or p_r is None:
            raise ValueError("CBS-High needs P and P_R")
        return p_r + p_sweeps + 1
    if scheme == Scheme.CBS_2BS:
        return 3
    return 2


def bs_count(scheme: Scheme) -> int:
    return 2 if scheme == Scheme.CBS_2BS else 1


def savings_ratio(k_users: int, m_intervals: int) -> float:
    """Sweep savings of CBS-Low over TBT with I_a = I_d = M+1"""
    tbt = sweep_count(Scheme.TBT, k_users, m_intervals)
    return 1.0 - sweep_count(Scheme.CBS_LOW, k_users) / tbt
