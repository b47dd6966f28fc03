"""
squintloc - near-field wideband beam-squint localization simulator

Subcommands:
  trajectory   squint trajectory of a PS or PS-TTD sweep (optionally checked by brute force)
  spectrum     received power spectrum of one sweep at each user
  localize     one localization run with a chosen scheme
  experiment   Monte-Carlo RMSE over an SNR grid
"""

import argparse
import logging
import math
import os
import sys
from typing import List, Optional

import numpy as np
import pandas as pd

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from models.beamforming_models import SearchGrid
from models.channel_models import snr_from_db
from models.geometry_models import PolarPoint
from models.localization_models import SweepPlan, SweepStage
from models.run_config import RunConfig
from utils.beamforming import brute_force_squint_point, ps_state, ttd_config, ttd_trajectory
from utils.config_manager import SystemConfig, load_run_config
from utils.exceptions import ConfigError, SquintLocError
from utils.experiments import localize_users, run_experiment
from utils.export import export_to_excel, write_csv
from utils.geometry import cartesian_to_polar, in_near_field, near_field_bounds
from utils.localization import process_spectrum, simulate_sweep
from utils.logger import setup_logging, timed

logger = logging.getLogger("squintloc")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SCHEME = 3

TRAJECTORY_COLUMNS = ['m', 'f_hz', 'r_m', 'theta_deg']
ORACLE_COLUMNS = ['oracle_r_m', 'oracle_theta_deg']
SPECTRUM_COLUMNS = ['user_id', 'm', 'f_hz', 'power', 'power_normalized', 'phase_rad']
LOCALIZE_COLUMNS = ['user_id', 'scheme', 'theta_true_deg', 'r_true_m', 'theta_hat_deg', 'r_hat_m',
                    'sweeps', 'flags']
MAX_ORACLE_POINTS = 65


# ============================================================================
# COMMANDS
# ============================================================================

def _beamformer(rc: RunConfig):
    cfg = rc.array_config()
    start = rc.start_focus()
    in_near_field(start, cfg.n_antennas, cfg.spacing, cfg.wavelength, rc.aperture_convention)
    end = rc.end_focus()
    if end is None:
        return ps_state(cfg, start, rc.design_model)
    return ttd_config(cfg, start, end, rc.design_model, rc.delay_offset_s)


def cmd_trajectory(rc: RunConfig, oracle: bool) -> pd.DataFrame:
    state = _beamformer(rc)
    cfg = state.cfg
    points = ttd_trajectory(state)
    table = pd.DataFrame(
        [[p.m, p.frequency, p.point.r, p.point.theta_deg] for p in points],
        columns=TRAJECTORY_COLUMNS,
    )
    if not oracle:
        return table

    lower, upper = near_field_bounds(cfg.n_antennas, cfg.spacing, cfg.wavelength, rc.aperture_convention)
    grid = SearchGrid.from_degrees(
        rc.oracle_r_min_m or lower, rc.oracle_r_max_m or upper, rc.oracle_dr_m,
        rc.oracle_theta_min_deg, rc.oracle_theta_max_deg, rc.oracle_dtheta_deg,
    )
    stride = max(1, math.ceil((cfg.m_intervals + 1) / MAX_ORACLE_POINTS))
    checked = sorted(set(range(0, cfg.m_intervals + 1, stride)) | {cfg.m_intervals})
    table[ORACLE_COLUMNS[0]] = math.nan
    table[ORACLE_COLUMNS[1]] = math.nan
    with timed(f"oracle over {len(checked)} subcarriers", logger):
        for m in checked:
            found = brute_force_squint_point(state, m, grid)
            table.loc[m, ORACLE_COLUMNS] = [found.point.r, found.point.theta_deg]
    return table


def cmd_spectrum(rc: RunConfig) -> pd.DataFrame:
    plan = SweepPlan(beamformer=_beamformer(rc), stage=SweepStage.ANGLE_STAGE)
    cfg = plan.beamformer.cfg
    rng = np.random.default_rng(rc.seed)
    snr = snr_from_db(rc.snr_db)

    frames = []
    for k, user in enumerate(rc.users()):
        polar = user if isinstance(user, PolarPoint) else cartesian_to_polar(user)
        raw = simulate_sweep(plan, polar, snr, rng, rc.channel_model, rc.noise_mode)
        rescaled = process_spectrum(cfg, raw).samples
        power = np.abs(rescaled) ** 2
        frames.append(pd.DataFrame({
            'user_id': k,
            'm': np.arange(cfg.m_intervals + 1),
            'f_hz': cfg.subcarrier_frequencies,
            'power': power,
            'power_normalized': power / np.max(power),
            'phase_rad': np.angle(rescaled),
        }))
    return pd.concat(frames, ignore_index=True)[SPECTRUM_COLUMNS]


def cmd_localize(rc: RunConfig) -> pd.DataFrame:
    spec = rc.experiment_spec()
    rng = np.random.default_rng(rc.seed)
    outcomes = localize_users(spec, snr_from_db(rc.snr_db), rng)

    rows = []
    for k, (user, (estimate, error)) in enumerate(zip(spec.users, outcomes)):
        if estimate is None:
            raise SquintLocError(f"user {k}: {error}")
        truth = user if isinstance(user, PolarPoint) else cartesian_to_polar(user)
        rows.append([k, spec.scheme.value, truth.theta_deg, truth.r, estimate.theta_hat_deg, estimate.r_hat,
                     estimate.sweeps_used, ';'.join(estimate.flags)])
    return pd.DataFrame(rows, columns=LOCALIZE_COLUMNS)


def _records_table(result) -> pd.DataFrame:
    rows = []
    for rec in result.records:
        est = rec.estimate
        rows.append({
            'trial': rec.trial,
            'snr_db': rec.snr_db,
            'user_id': rec.user_id,
            'r_true_m': rec.truth.r,
            'theta_true_deg': rec.truth.theta_deg,
            'r_hat_m': est.r_hat if est else math.nan,
            'theta_hat_deg': est.theta_hat_deg if est else math.nan,
            'sweeps': est.sweeps_used if est else None,
            'error': rec.error or '',
        })
    return pd.DataFrame(rows)


def cmd_experiment(rc: RunConfig, system: SystemConfig) -> pd.DataFrame:
    spec = rc.experiment_spec()
    result = run_experiment(spec, threads=system.get_thread_count())
    if rc.xlsx_path:
        metadata = [('scheme', spec.scheme.value), ('seed', spec.seed), ('trials', spec.trials)]
        metadata += list(spec.cfg.summary().items())
        export_to_excel({'RMSE': result.table, 'Trials': _records_table(result)}, rc.xlsx_path, metadata)
    return result.table


# ============================================================================
# ENTRY POINT
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="squintloc", description="Near-field beam-squint localization simulator")
    parser.add_argument('--log-level', default=None, help="Console log level (default from config/system.yaml)")
    sub = parser.add_subparsers(dest='command', required=True)

    for name, help_text in [
        ('trajectory', "squint trajectory of one sweep"),
        ('spectrum', "received spectrum at each user"),
        ('localize', "localize the configured users once"),
        ('experiment', "Monte-Carlo RMSE over the SNR grid"),
    ]:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument('config', help="run file with key = value lines")
        cmd.add_argument('-o', '--output', default=None, help="CSV path (default: output_path or stdout)")
        if name == 'trajectory':
            cmd.add_argument('--oracle', action='store_true', help="add the brute-force grid maximum per subcarrier")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_CONFIG

    try:
        system = SystemConfig()
        setup_logging(args.log_level or system.get_log_level(), system.get_log_file(), system.get_log_format())
        rc = load_run_config(args.config, system)
    except ConfigError as e:
        logger.error(f"config error: {e}")
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    logger.info(f"{system.get_app_name()} {system.get_app_version()}: {args.command} {args.config}")
    try:
        if args.command == 'trajectory':
            table = cmd_trajectory(rc, args.oracle)
        elif args.command == 'spectrum':
            table = cmd_spectrum(rc)
        elif args.command == 'localize':
            table = cmd_localize(rc)
        else:
            table = cmd_experiment(rc, system)
    except (ConfigError, ValueError) as e:
        logger.error(f"config error: {e}")
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SquintLocError as e:
        logger.error(f"{args.command} failed: {type(e).__name__}: {e}")
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_SCHEME

    write_csv(table, args.output or rc.output_path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
