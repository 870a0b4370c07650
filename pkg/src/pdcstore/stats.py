"""Witness estimators with independent-Poisson error propagation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import InsufficientStatisticsError

PULSE_PERIOD = 550.4e-9


@dataclass(frozen=True)
class WitnessResult:
    value: float
    std_error: float
    classical_probability: float

    def __post_init__(self):
        if not self.std_error >= 0:
            raise ValueError("std_error must be non-negative")

    @property
    def significance(self) -> float:
        """Distance below the classical bound 1 in units of std_error."""
        return (1.0 - self.value) / self.std_error if self.std_error > 0 else math.inf

    def __str__(self):
        return f"{self.value:.2f} ± {self.std_error:.2f}"


def _result(value: float, rel_terms, classical_above: float = 1.0) -> WitnessResult:
    sigma = abs(value) * math.sqrt(sum(rel_terms))
    if sigma > 0:
        # one-sided: probability that the true value sits at or above the bound
        p = float(ndtr((value - classical_above) / sigma))
    else:
        p = 1.0 if value >= classical_above else 0.0
    return WitnessResult(value, sigma, p)


def _check_counts(**counts):
    for name, v in counts.items():
        if v < 0:
            raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class CoincidenceStats:
    """Triple-HBT counts.  n_ab, n_ac, n_abc are summed per-pulse products."""

    n_a: int
    n_ab: int
    n_ac: int
    n_abc: int
    duration: float = 0.0
    n_b: int = 0
    n_c: int = 0
    n_pulses: int = 0

    def __post_init__(self):
        _check_counts(n_a=self.n_a, n_ab=self.n_ab, n_ac=self.n_ac, n_abc=self.n_abc,
                      n_b=self.n_b, n_c=self.n_c, n_pulses=self.n_pulses)

    @property
    def ordered(self) -> bool:
        # holds for click counting; number-resolving products may break it
        return self.n_abc <= min(self.n_ab, self.n_ac) <= self.n_a

    def scaled(self, k: int) -> "CoincidenceStats":
        return CoincidenceStats(self.n_a * k, self.n_ab * k, self.n_ac * k, self.n_abc * k,
                                self.duration * k, self.n_b * k, self.n_c * k, self.n_pulses * k)


@dataclass(frozen=True)
class HeraldStats:
    n_t: int
    n_t1: int
    n_t2: int
    n_t12: int
    n_pulses: int
    n_1: int = 0
    n_2: int = 0

    def __post_init__(self):
        _check_counts(n_t=self.n_t, n_t1=self.n_t1, n_t2=self.n_t2, n_t12=self.n_t12,
                      n_pulses=self.n_pulses, n_1=self.n_1, n_2=self.n_2)

    @property
    def ordered(self) -> bool:
        return self.n_t12 <= min(self.n_t1, self.n_t2) <= self.n_t

    def scaled(self, k: int) -> "HeraldStats":
        return HeraldStats(*(getattr(self, f) * k for f in
                             ("n_t", "n_t1", "n_t2", "n_t12", "n_pulses", "n_1", "n_2")))


def estimate_w(stats: CoincidenceStats) -> WitnessResult:
    """w = N_A N_ABC / (N_AB N_AC); w < 1 is nonclassical."""
    if min(stats.n_a, stats.n_ab, stats.n_ac, stats.n_abc) == 0:
        raise InsufficientStatisticsError("estimate_w needs non-zero N_A, N_AB, N_AC, N_ABC", stats)
    value = stats.n_a * stats.n_abc / (stats.n_ab * stats.n_ac)
    return _result(value, (1 / stats.n_a, 1 / stats.n_ab, 1 / stats.n_ac, 1 / stats.n_abc))


def estimate_alpha(stats: HeraldStats) -> WitnessResult:
    """alpha = N_t N_t12 / (N_t1 N_t2)."""
    if min(stats.n_t, stats.n_t1, stats.n_t2, stats.n_t12) == 0:
        raise InsufficientStatisticsError("estimate_alpha needs non-zero N_t, N_t1, N_t2, N_t12", stats)
    value = stats.n_t * stats.n_t12 / (stats.n_t1 * stats.n_t2)
    return _result(value, (1 / stats.n_t, 1 / stats.n_t1, 1 / stats.n_t2, 1 / stats.n_t12))


def estimate_g2_t1(stats: HeraldStats) -> WitnessResult:
    """Trigger / signal-1 cross correlation, normalized per pulse."""
    if min(stats.n_t, stats.n_1, stats.n_t1, stats.n_pulses) == 0:
        raise InsufficientStatisticsError("estimate_g2_t1 needs non-zero N_t, N_1, N_t1 and pulses", stats)
    value = stats.n_t1 * stats.n_pulses / (stats.n_t * stats.n_1)
    # classical_probability here is just P(g2_t1 >= 1)
    return _result(value, (1 / stats.n_t1, 1 / stats.n_t, 1 / stats.n_1))


def _window_indices(hist, lo: float, hi: float) -> np.ndarray:
    """Histogram positions whose centre k*bin satisfies lo <= k*bin < hi."""
    half = (hist.counts.size - 1) // 2
    k_lo = int(round(lo / hist.bin))
    k_hi = int(round(hi / hist.bin))
    k = np.arange(max(k_lo, -half), min(k_hi, half + 1))
    return k + half


def estimate_g2_zero(hist, peak_window: float = PULSE_PERIOD / 2,
                     baseline_window: tuple[float, float] | None = None) -> WitnessResult:
    """Pulse-integrated g2(0) from a start-stop histogram.

    The central peak collects lags in [-peak_window, peak_window); the
    baseline collects both neighbouring pulse peaks, lags with
    baseline_window[0] <= |lag| < baseline_window[1].  The default baseline,
    (peak_window, 3 * peak_window), is one pulse period either side, so for
    pulsed light the ratio of per-bin rates is <n(n-1)> / <n>**2.
    """
    if baseline_window is None:
        baseline_window = (peak_window, 3 * peak_window)
    b_lo, b_hi = baseline_window
    if not 0 <= b_lo < b_hi:
        raise ValueError("baseline window must satisfy 0 <= start < end")
    peak = _window_indices(hist, -peak_window, peak_window)
    base = np.concatenate([_window_indices(hist, b_lo, b_hi), _window_indices(hist, -b_hi + hist.bin, -b_lo + hist.bin)])
    n_peak = int(hist.counts[peak].sum())
    n_base = int(hist.counts[base].sum())
    if n_base == 0 or base.size == 0:
        raise InsufficientStatisticsError("empty g2 baseline window", {"peak": n_peak, "baseline": 0})
    if n_peak == 0:
        raise InsufficientStatisticsError("empty g2 peak window", {"peak": 0, "baseline": n_base})
    value = (n_peak / peak.size) / (n_base / base.size)
    return _result(value, (1 / n_peak, 1 / n_base))


def correlation_profile(hist, period: float = PULSE_PERIOD) -> tuple[np.ndarray, np.ndarray]:
    """Central peak minus the mean of the two neighbouring pulse peaks.

    The side peaks carry only uncorrelated coincidences, so the difference
    is the correlated excess; multi-pair terms leave a weak pedestal of the
    side-peak shape.  Returns (lags, excess counts) over |lag| <= period/2.
    """
    shift = int(round(period / hist.bin))
    half = (hist.counts.size - 1) // 2
    if shift < 1 or half < shift + shift // 2:
        raise ValueError("histogram does not reach the neighbouring pulse peaks")
    k = np.arange(-(shift // 2), shift // 2 + 1)
    c = hist.counts.astype(float)
    side = 0.5 * (c[k + half + shift] + c[k + half - shift])
    return k * hist.bin, c[k + half] - side


def profile_fwhm(lags: np.ndarray, values: np.ndarray) -> float:
    """Full width at half maximum with linear interpolation at both crossings."""
    i = int(np.argmax(values))
    half = values[i] / 2
    if not half > 0:
        return math.nan
    left = np.nonzero(values[:i] < half)[0]
    right = np.nonzero(values[i:] < half)[0]
    if left.size == 0 or right.size == 0:
        return math.nan
    l0 = left[-1]
    r0 = i + right[0]
    xl = np.interp(half, [values[l0], values[l0 + 1]], [lags[l0], lags[l0 + 1]])
    xr = np.interp(half, [values[r0], values[r0 - 1]], [lags[r0], lags[r0 - 1]])
    return float(xr - xl)


def correlation_fwhm(hist, period: float = PULSE_PERIOD) -> float:
    """FWHM of the excess coincidence peak around zero lag."""
    return profile_fwhm(*correlation_profile(hist, period))
