"""Spectral filter chain: transfer functions, passive loss and pair timing."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import OutOfModelError

DEFAULT_TOTAL_TRANSMITTANCE = 0.20


class Shape(str, enum.Enum):
    LORENTZIAN = "lorentzian"
    AIRY_LIKE = "airy_like"
    FLAT_TOP = "flat_top"


@dataclass(frozen=True)
class FilterStage:
    """One filter. Frequencies in Hz; ``fsr`` is None for a flat-top passband."""

    shape: Shape
    fwhm: float
    fsr: float | None
    peak_transmittance: float
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "shape", Shape(self.shape))
        if not self.fwhm > 0:
            raise ValueError("fwhm must be positive")
        if self.fsr is not None and not self.fsr > self.fwhm:
            raise ValueError("fsr must exceed fwhm")
        if self.shape is Shape.AIRY_LIKE and self.fsr is None:
            raise ValueError("airy_like stage needs an fsr")
        if not 0 < self.peak_transmittance <= 1:
            raise ValueError("peak_transmittance must lie in (0, 1]")

    def transmission(self, detuning):
        x = np.asarray(detuning, dtype=float)
        if self.shape is Shape.LORENTZIAN:
            return self.peak_transmittance / (1.0 + (2.0 * x / self.fwhm) ** 2)
        if self.shape is Shape.FLAT_TOP:
            return np.where(np.abs(x) <= self.fwhm / 2, self.peak_transmittance, 0.0)
        # coefficient chosen so the half-maximum falls exactly at +-fwhm/2
        k = 1.0 / math.sin(math.pi * self.fwhm / (2 * self.fsr)) ** 2
        return self.peak_transmittance / (1.0 + k * np.sin(math.pi * x / self.fsr) ** 2)


@dataclass(frozen=True)
class FilterChain:
    stages: tuple[FilterStage, ...]

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if not self.stages:
            raise ValueError("a filter chain needs at least one stage")

    @property
    def on_resonance_transmittance(self) -> float:
        return math.prod(s.peak_transmittance for s in self.stages)

    @property
    def narrowest(self) -> FilterStage:
        return min(self.stages, key=lambda s: s.fwhm)

    @property
    def single_order_limit(self) -> float:
        fsrs = [s.fsr for s in self.stages if s.fsr is not None]
        return min(fsrs) / 2 if fsrs else math.inf


def reference_filter_chain(total_transmittance: float = DEFAULT_TOTAL_TRANSMITTANCE) -> FilterChain:
    """Cavity (9 MHz / 1.5 GHz), etalon (300 MHz / 37 GHz), grating + fiber (23 GHz).

    Individual peak transmittances are not known; the split 0.5 / 0.8 / 0.5
    reproduces the 20 % total, and other totals rescale all stages by a
    common exponent (total 1 gives a lossless chain of the same shape).
    """
    base = (0.5, 0.8, 0.5)
    if not 0 < total_transmittance <= 1:
        raise ValueError("total_transmittance must lie in (0, 1]")
    expo = math.log(total_transmittance) / math.log(DEFAULT_TOTAL_TRANSMITTANCE)
    peaks = [b**expo for b in base]
    return FilterChain(
        (
            FilterStage(Shape.LORENTZIAN, 9e6, 1.5e9, peaks[0], "filter cavity"),
            FilterStage(Shape.LORENTZIAN, 300e6, 37e9, peaks[1], "etalon"),
            FilterStage(Shape.FLAT_TOP, 23e9, None, peaks[2], "grating + fiber"),
        )
    )


def chain_transmission(chain: FilterChain, detuning):
    """Intensity transmission of the whole chain at ``detuning`` (Hz)."""
    x = np.asarray(detuning, dtype=float)
    if np.any(np.abs(x) >= chain.single_order_limit):
        raise OutOfModelError(
            f"|detuning| must stay below {chain.single_order_limit:.4g} Hz; "
            "adjacent filter orders are not modeled"
        )
    t = np.ones_like(x)
    for stage in chain.stages:
        t = t * stage.transmission(x)
    return t if t.ndim else float(t)


def offset_scale(chain: FilterChain) -> float:
    """Decay time of the two-sided exponential pair-offset density."""
    stage = chain.narrowest
    if stage.shape is Shape.FLAT_TOP:
        raise OutOfModelError("pair timing needs a Lorentzian narrowest stage")
    return 1.0 / (2 * math.pi * stage.fwhm)


def correlation_fwhm(chain: FilterChain) -> float:
    """FWHM of the pair-delay density exp(-2 pi fwhm |tau|)."""
    return 2 * math.log(2) * offset_scale(chain)


def pair_time_offset_sampler(chain: FilterChain, rng: np.random.Generator, size=None):
    """Relative delay between the two photons of a filtered pair (s)."""
    return rng.laplace(0.0, offset_scale(chain), size)


def binomial_thinning(count, survival: float, rng: np.random.Generator):
    """Number of photons left when each survives with probability ``survival``."""
    if not 0 <= survival <= 1:
        raise ValueError("survival must lie in [0, 1]")
    return rng.binomial(count, survival)
