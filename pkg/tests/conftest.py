"""
Shared fixtures for the squintloc test suite.
"""

import os
import sys

_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, _ROOT)

import numpy as np
import pytest

from models.channel_models import ArrayConfig
from models.localization_models import SensingRange


@pytest.fixture
def cfg_t4():
    """128 antennas at 5 mm, 30-33 GHz, 9 subcarriers"""
    return ArrayConfig(n_antennas=128, spacing=0.005, f0=30e9, bandwidth=3e9, m_intervals=8)


@pytest.fixture
def cfg_wide():
    """Natural-squint setup: 30-36 GHz, 17 subcarriers, half-wavelength at 36 GHz"""
    return ArrayConfig(n_antennas=128, spacing=3e8 / (2 * 36e9), f0=30e9, bandwidth=6e9, m_intervals=16)


@pytest.fixture
def cfg_511():
    return ArrayConfig(n_antennas=128, spacing=0.005, f0=30e9, bandwidth=3e9, m_intervals=511)


@pytest.fixture
def sensing_low():
    return SensingRange.from_degrees(10.0, 40.0, -45.0, 45.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
