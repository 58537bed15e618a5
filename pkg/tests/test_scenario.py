import math
from dataclasses import replace

import pytest
from hypothesis import given, strategies as st

from ehor.scenario import (
    DEFAULT_BINS, NodeLayout, ScenarioParseError, ScenarioValidationError,
    dbm_to_mw, derive_rates, harvest_rate_from_db, load_scenario,
    load_scenario_file, reference_scenario, snr_threshold,
)

REF_TEXT = """
# comment line
s = 0, 0
r1 = 30, 20
r2 = 60, -20
d = 100, 0
alpha = -3
p_s_dbm = 12
n0_dbm = -50
r0 = 2
m_r1_mj = 12
m_r2_mj = 10
lambda1_db = -11   # trailing comment
lambda2_db = -12
"""


def test_reference_text_round_trip():
    sc = load_scenario(REF_TEXT)
    assert sc == reference_scenario(12.0)
    assert sc.bins == DEFAULT_BINS


def test_shipped_scenario_files(tmp_path):
    import pathlib
    root = pathlib.Path(__file__).resolve().parents[1] / "scenarios"
    sc = load_scenario_file(root / "reference.cfg")
    assert sc == reference_scenario(12.0)
    fig = load_scenario_file(root / "buffer_study.cfg")
    assert (fig.energy.m_r1, fig.energy.m_r2) == (10.0, 8.0)
    assert (fig.energy.lambda1_db, fig.energy.lambda2_db) == (-15.0, -12.0)


def test_coincident_nodes_rejected():
    with pytest.raises(ScenarioValidationError):
        load_scenario(REF_TEXT.replace("d = 100, 0", "d = 0, 0"))


def test_zero_rate_rejected():
    with pytest.raises(ScenarioValidationError):
        load_scenario(REF_TEXT.replace("r0 = 2", "r0 = 0"))


@pytest.mark.parametrize("bad", [
    REF_TEXT + "bogus = 1\n",
    REF_TEXT + "r0 = 3\n",
    REF_TEXT.replace("s = 0, 0", "s = 0"),
    REF_TEXT.replace("alpha = -3", "alpha = steep"),
    REF_TEXT.replace("alpha = -3", "alpha -3"),
    REF_TEXT.replace("n0_dbm = -50", ""),
])
def test_parse_errors(bad):
    with pytest.raises(ScenarioParseError):
        load_scenario(bad)


def test_threshold():
    assert snr_threshold(2.0) == 3.0
    assert derive_rates(reference_scenario()).gamma_th == 3.0


def test_unit_conversions():
    assert dbm_to_mw(-50) == pytest.approx(1e-5, rel=1e-12)
    assert dbm_to_mw(12) == pytest.approx(15.848931924611133, rel=1e-12)
    assert harvest_rate_from_db(-15) == pytest.approx(10**1.5, rel=1e-12)


def test_reference_distances_and_direct_rate():
    sc = reference_scenario(12.0)
    assert sc.layout.distance("s", "r1") == pytest.approx(math.sqrt(1300), rel=1e-12)
    r = derive_rates(sc)
    # mean SNR = P d^alpha / N0 = 15.849e-6 / 1e-5
    assert 1.0 / r.w_sd == pytest.approx(1.5848931924611136, rel=1e-12)
    assert r.w_sd == pytest.approx(0.6310, abs=5e-5)


def test_direct_rate_matches_sampling_oracle(rng):
    # E[|h|^2] = d^alpha for h ~ CN(0, d^alpha): sample the complex gain itself
    sc = reference_scenario(12.0)
    d, alpha = 100.0, -3.0
    var = d**alpha
    h = rng.normal(scale=math.sqrt(var / 2), size=(400_000, 2))
    snr = dbm_to_mw(12) * (h**2).sum(axis=1) / dbm_to_mw(-50)
    assert snr.mean() == pytest.approx(1.0 / derive_rates(sc).w_sd, rel=0.01)


def test_doubling_coordinates_scales_rates_by_eight():
    sc = reference_scenario()
    big = replace(sc, layout=sc.layout.scaled(2.0))
    a, b = derive_rates(sc), derive_rates(big)
    for x, y in zip(a.as_tuple(), b.as_tuple()):
        assert y == pytest.approx(8.0 * x, rel=1e-12)


def test_derive_rates_pure():
    sc = reference_scenario()
    assert derive_rates(sc) == derive_rates(reference_scenario())


@given(st.floats(0.01, 10), st.floats(0.01, 10))
def test_threshold_increasing(a, b):
    if a < b:
        assert snr_threshold(a) < snr_threshold(b)


def test_with_power_overrides_only_power():
    sc = reference_scenario(12.0).with_power(3.0)
    assert sc.radio.p_s_dbm == 3.0
    assert sc.layout == NodeLayout((0.0, 0.0), (30.0, 20.0), (60.0, -20.0), (100.0, 0.0))
