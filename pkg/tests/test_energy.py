import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ehor.energy import EnergyError, RelayBuffer, commit_slot, sample_harvest


def test_harvest_examples():
    assert sample_harvest(1.0, math.exp(-2)) == pytest.approx(2.0, rel=1e-15)


def test_harvest_mean(rng):
    lam = 31.62
    x = -np.log(1.0 - rng.random(1_000_000)) / lam
    assert x.mean() == pytest.approx(1 / lam, rel=0.01)


def test_commit_examples():
    assert commit_slot(RelayBuffer(5.0), 0.0, 2.0).peb == 7.0
    assert commit_slot(RelayBuffer(12.0), 10.0, 1.0).peb == 3.0
    with pytest.raises(EnergyError):
        commit_slot(RelayBuffer(5.0), 10.0, 0.0)


def test_negative_buffer_rejected():
    with pytest.raises(EnergyError):
        RelayBuffer(-1.0)


def test_harvest_cannot_fund_same_slot():
    # 9.5 stored, 1.0 harvested this slot: still not enough for M = 10 now
    buf = RelayBuffer(9.5)
    assert not buf.can_transmit(10.0)
    with pytest.raises(EnergyError):
        commit_slot(buf, 10.0, 1.0)
    assert commit_slot(buf, 0.0, 1.0).can_transmit(10.0)


@given(st.floats(0, 1e3), st.floats(0, 1e3), st.booleans())
def test_energy_conservation(peb, harvest, spend_it):
    m = 10.0
    spend = m if (spend_it and peb >= m) else 0.0
    after = commit_slot(RelayBuffer(peb), spend, harvest)
    assert after.seb == 0.0
    assert after.peb - peb == pytest.approx(harvest - spend, abs=1e-9)
    assert after.peb >= 0.0
