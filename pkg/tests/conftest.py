"""
Shared fixtures: published parameter sets, scripted minute series, small observation sets.
"""

import os
import sys
from datetime import datetime, timedelta

import pytest

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from stochcap.models import MinuteInterval, ObservationSet, WeibullParams  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: seed-ensemble tests (run by default)")


START = datetime(2024, 5, 6, 6, 0)


def build_minutes(rows, start=START):
    """
    MinuteIntervals from (pce, speed) rows; speed None means an empty minute.
    All vehicles are passenger cars, so vehicle_count == pce.
    """
    minutes = []
    for i, (pce, speed) in enumerate(rows):
        if speed is None:
            minutes.append(MinuteInterval(start + timedelta(minutes=i), 0, 0, None))
        else:
            minutes.append(MinuteInterval(start + timedelta(minutes=i), pce, pce, float(speed)))
    return minutes


@pytest.fixture
def minute_series():
    return build_minutes


@pytest.fixture
def params_without_vsl():
    """Work zone without speed harmonisation"""
    return WeibullParams(scale=146.42, shape=6.75, window_minutes=3, eval_step_minutes=1)


@pytest.fixture
def params_with_vsl():
    """Work zone with speed harmonisation"""
    return WeibullParams(scale=158.78, shape=6.86, window_minutes=3, eval_step_minutes=1)


@pytest.fixture
def plm_table_observations():
    """
    Level counts chosen so the at-risk numbers match a published PLM table excerpt:
    n(56)=6445, n(60)=5408, n(61)=5123, n(105)=18, n(108)=11, n(112)=6.
    """
    pairs = []
    pairs += [(56, True)] * 2 + [(57, False)] * 1035
    pairs += [(60, True)] + [(60, False)] * 284
    pairs += [(61, True)] + [(70, False)] * 5104
    pairs += [(105, True)] + [(105, False)] * 6
    pairs += [(108, True)] + [(108, False)] * 4
    pairs += [(112, True)] + [(112, False)] * 5
    return ObservationSet.from_pairs(pairs)


@pytest.fixture
def small_observations():
    """Five records over three levels"""
    return ObservationSet.from_pairs([(50, False), (50, False), (52, True), (54, False), (54, True)])
