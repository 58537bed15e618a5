import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ehor.fading import (BinPdf, below_prob, exceed_prob, link_bin_pdf, sample_link_snr,
                         truncated_conv)
from ehor.montecarlo import empirical_pdf, histogram, total_variation


def test_inverse_cdf_examples():
    assert sample_link_snr(1.0, math.exp(-1)) == pytest.approx(1.0, rel=1e-15)
    assert sample_link_snr(2.0, math.exp(-1)) == pytest.approx(0.5, rel=1e-15)


def test_sample_mean(rng):
    draws = 1.0 - rng.random(1_000_000)
    x = -np.log(draws) / 0.5
    assert x.mean() == pytest.approx(2.0, abs=0.01)


def test_exceed_prob_examples():
    assert exceed_prob(3.7, 0.0) == 1.0
    assert exceed_prob(0.6310, 3.0) == pytest.approx(0.1506, abs=5e-5)
    vals = [exceed_prob(r, 3.0) for r in (1, 10, 100, 1000)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-300


def test_exceed_prob_against_tail_frequency(rng):
    x = -np.log1p(-rng.random(1_000_000)) / 0.6310
    assert np.mean(x >= 3.0) == pytest.approx(exceed_prob(0.6310, 3.0), abs=2e-3)


def test_link_bin_pdf_small_case():
    p = link_bin_pdf(1.0, 3, 3.0).mass
    e = math.exp
    np.testing.assert_allclose(p, [1 - e(-1), e(-1) - e(-2), e(-2) - e(-3)], rtol=1e-14)


def test_single_bin():
    p = link_bin_pdf(0.7, 1, 3.0)
    assert p.mass[0] == pytest.approx(1 - math.exp(-2.1), rel=1e-14)


@given(st.floats(1e-6, 1e3), st.integers(1, 300), st.floats(0.1, 50))
def test_mass_plus_tail_is_one(rate, n, gth):
    p = link_bin_pdf(rate, n, gth)
    assert p.total + exceed_prob(rate, gth) == pytest.approx(1.0, abs=1e-12)
    assert np.all(p.mass >= 0)


def test_below_prob_keeps_precision_for_tiny_rates():
    assert below_prob(1e-20, 3.0) == pytest.approx(3e-20, rel=1e-12)


def test_sampled_histogram_matches_bins(rng):
    rate, n, gth = 0.631, 100, 3.0
    x = -np.log1p(-rng.random(1_000_000)) / rate
    x = x[x < gth]
    counts = histogram(x, np.arange(n + 1) * (gth / n))[:n]
    ref = link_bin_pdf(rate, n, gth).normalized()
    assert total_variation(empirical_pdf(counts), ref) <= 0.01


def test_truncated_conv():
    a = np.array([0.5, 0.5])
    b = np.array([1.0, 0.0])
    np.testing.assert_array_equal(truncated_conv(a, b), a)
    np.testing.assert_allclose(truncated_conv(np.array([0.2, 0.3, 0.1]), np.array([0.5, 0.25, 0.0])),
                               [0.1, 0.2, 0.125])
    with pytest.raises(ValueError):
        truncated_conv(a, np.ones(3))


def test_binpdf_validation():
    with pytest.raises(ValueError):
        BinPdf(np.array([0.6, 0.6]), 3.0)
    with pytest.raises(ValueError):
        BinPdf(np.array([-0.1, 0.5]), 3.0)
    p = BinPdf(np.array([0.2, 0.2]), 3.0)
    assert p.bin_width == 1.5
    np.testing.assert_allclose(p.normalized().mass, [0.5, 0.5])
