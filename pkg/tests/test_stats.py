import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pdcstore import stats
from pdcstore.errors import InsufficientStatisticsError
from pdcstore.sim import Histogram
from pdcstore.stats import CoincidenceStats, HeraldStats

INCIDENT = CoincidenceStats(2968909, 18956, 15274, 75)
RETRIEVED = CoincidenceStats(10420108, 10255, 7782, 4)


def test_published_incident_counts():
    w = stats.estimate_w(INCIDENT)
    assert w.value == pytest.approx(0.76905723703332, rel=1e-12)
    assert str(w) == "0.77 ± 0.09"
    assert w.classical_probability == pytest.approx(0.0048, abs=2e-4)


def test_published_retrieved_counts():
    w = stats.estimate_w(RETRIEVED)
    assert str(w) == "0.52 ± 0.26"
    assert w.significance == pytest.approx(1.83, abs=0.01)
    assert w.classical_probability == pytest.approx(0.034, abs=1e-3)


@settings(max_examples=50, deadline=None)
@given(k=st.integers(min_value=2, max_value=1000))
def test_scaling_counts_keeps_value_and_shrinks_error(k):
    a, b = stats.estimate_w(INCIDENT), stats.estimate_w(INCIDENT.scaled(k))
    assert b.value == pytest.approx(a.value, rel=1e-12)
    assert b.std_error == pytest.approx(a.std_error / math.sqrt(k), rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(n=st.tuples(*[st.integers(min_value=1, max_value=10**7)] * 4))
def test_error_is_sum_of_relative_poisson_terms(n):
    w = stats.estimate_w(CoincidenceStats(*n))
    rel = math.sqrt(sum(1 / x for x in n))
    assert w.std_error == pytest.approx(w.value * rel, rel=1e-12)
    assert 0.0 <= w.classical_probability <= 1.0


@pytest.mark.parametrize("zero", ["n_a", "n_ab", "n_ac", "n_abc"])
def test_w_needs_all_counts(zero):
    fields = {**dict(n_a=10, n_ab=5, n_ac=5, n_abc=1), zero: 0}
    with pytest.raises(InsufficientStatisticsError) as exc:
        stats.estimate_w(CoincidenceStats(**fields))
    assert exc.value.counts.n_abc == fields["n_abc"]


def test_negative_counts_rejected():
    with pytest.raises(ValueError):
        CoincidenceStats(-1, 0, 0, 0)
    with pytest.raises(ValueError):
        HeraldStats(1, 1, 1, 1, -5)


def test_ordered_flag():
    assert INCIDENT.ordered
    assert not CoincidenceStats(10, 5, 5, 7).ordered


def test_alpha_and_g2_t1():
    hs = HeraldStats(n_t=1000, n_t1=100, n_t2=100, n_t12=5, n_pulses=10**6, n_1=2000, n_2=2000)
    assert stats.estimate_alpha(hs).value == pytest.approx(0.5)
    g2 = stats.estimate_g2_t1(hs)
    assert g2.value == pytest.approx(50.0)
    assert g2.std_error == pytest.approx(50 * math.sqrt(1 / 100 + 1 / 1000 + 1 / 2000))
    with pytest.raises(InsufficientStatisticsError):
        stats.estimate_alpha(HeraldStats(1000, 100, 100, 0, 10**6))
    with pytest.raises(InsufficientStatisticsError):
        stats.estimate_g2_t1(HeraldStats(1000, 100, 100, 5, 10**6, n_1=0))


def test_classical_probability_is_one_sided():
    above = stats._result(1.2, (0.01,))
    below = stats._result(0.8, (0.01,))
    assert above.classical_probability > 0.5 > below.classical_probability
    assert stats._result(1.0, (0.0,)).classical_probability == 1.0


def _hist(counts, bin=1.6e-9):
    counts = np.asarray(counts, dtype=np.int64)
    return Histogram(bin, counts)


def test_g2_on_flat_histogram_is_one():
    h = _hist(np.full(1033, 50))
    g2 = stats.estimate_g2_zero(h)
    assert g2.value == pytest.approx(1.0, rel=1e-12)


def test_g2_with_central_excess():
    half, shift = 516, 344  # 550.4 ns of 1.6 ns bins
    counts = np.full(2 * half + 1, 10)
    counts[half - 10: half + 10] += 100
    g2 = stats.estimate_g2_zero(_hist(counts))
    peak_bins = 344
    assert g2.value == pytest.approx((10 * peak_bins + 2000) / (10 * peak_bins), rel=1e-12)


def test_g2_requires_baseline():
    with pytest.raises(InsufficientStatisticsError):
        stats.estimate_g2_zero(_hist(np.zeros(1033)))
    with pytest.raises(ValueError):
        stats.estimate_g2_zero(_hist(np.ones(1033)), baseline_window=(300e-9, 200e-9))


def test_correlation_fwhm_of_triangle():
    half, shift = 516, 344
    lags = (np.arange(2 * half + 1) - half) * 1.6e-9
    counts = np.zeros(lags.size)
    for k in (-1, 0, 1):
        counts += np.maximum(0, 1000 * (1 - np.abs(lags - k * 550.4e-9) / 20e-9)) * (3 if k == 0 else 1)
    fwhm = stats.correlation_fwhm(_hist(np.rint(counts)))
    assert fwhm == pytest.approx(20e-9, rel=0.02)


def test_profile_fwhm_degenerate():
    assert math.isnan(stats.profile_fwhm(np.arange(5.0), np.zeros(5)))
    assert math.isnan(stats.profile_fwhm(np.arange(3.0), np.array([1.0, 2.0, 1.5])))
