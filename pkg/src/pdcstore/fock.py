"""Single-mode photon-number distributions and normally ordered moments.

Normally ordered moments of a single mode equal the factorial moments of
its photon-number distribution, so every witness in the package reduces to
sums over ``FockDistribution.probs``.  The routing enumerations here are the
brute-force reference the Monte Carlo estimators are checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln, xlogy
from scipy.stats import binom

from .errors import TruncationError

DEFAULT_N_MAX = 64
TAIL_BOUND = 1e-12
NORM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class FockDistribution:
    """Photon-number probabilities ``probs[n]`` for n = 0..n_max."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise ValueError("probs must be a 1-D vector with at least two entries")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite and non-negative")
        total = math.fsum(p)
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def n_max(self) -> int:
        return self.probs.size - 1

    @property
    def tail(self) -> float:
        # two entries so that parity-restricted states are judged fairly
        return float(self.probs[-2:].max())

    def mean(self) -> float:
        return factorial_moments(self).m1


@dataclass(frozen=True)
class MomentSet:
    """First three factorial moments <n>, <n(n-1)>, <n(n-1)(n-2)>."""

    m1: float
    m2: float
    m3: float

    @property
    def g2(self) -> float:
        """Zero-delay intensity correlation m2 / m1**2."""
        if self.m1 == 0:
            return math.nan
        return self.m2 / self.m1**2

    @property
    def w(self) -> float:
        """Classicality witness m1*m3 / m2**2 (>= 1 for non-negative P)."""
        if self.m2 == 0:
            return math.nan
        return self.m1 * self.m3 / self.m2**2


def _checked(probs: np.ndarray, what: str) -> FockDistribution:
    tail = float(probs[-2:].max())
    if tail > TAIL_BOUND:
        raise TruncationError(
            f"{what}: truncation at n_max={probs.size - 1} leaves tail "
            f"{tail:.3g} > {TAIL_BOUND:g}; increase n_max"
        )
    return FockDistribution(probs)


def _check_args(mean_photons: float, n_max: int) -> None:
    if n_max < 4:
        raise ValueError("n_max must be at least 4")
    if mean_photons < 0:
        raise ValueError("mean_photons must be non-negative")
    if mean_photons >= n_max / 4:
        raise TruncationError(f"mean_photons={mean_photons} too large for n_max={n_max}")


def vacuum(n_max: int = DEFAULT_N_MAX) -> FockDistribution:
    return fock_state(0, n_max)


def fock_state(n: int, n_max: int = DEFAULT_N_MAX) -> FockDistribution:
    """Number state |n>, padded so the tail check passes."""
    size = max(n_max, n + 2) + 1
    p = np.zeros(size)
    p[n] = 1.0
    return FockDistribution(p)


def squeezed_vacuum(mean_photons: float, n_max: int = DEFAULT_N_MAX) -> FockDistribution:
    """Single-mode squeezed vacuum with sinh(r)**2 = mean_photons.

    Only even photon numbers are populated:
    P(2k) = (2k)! / (2**k k!)**2 * tanh(r)**(2k) / cosh(r).
    """
    _check_args(mean_photons, n_max)
    p = np.zeros(n_max + 1)
    if mean_photons == 0:
        p[0] = 1.0
        return _checked(p, "squeezed_vacuum")
    k = np.arange(n_max // 2 + 1)
    t2 = mean_photons / (1.0 + mean_photons)
    logp = (
        gammaln(2 * k + 1)
        - 2 * gammaln(k + 1)
        - k * math.log(4.0)
        + k * math.log(t2)
        - 0.5 * math.log1p(mean_photons)
    )
    p[2 * k] = np.exp(logp)
    return _checked(p, "squeezed_vacuum")


def coherent(mean_photons: float, n_max: int = DEFAULT_N_MAX) -> FockDistribution:
    """Poissonian photon statistics of a coherent state."""
    _check_args(mean_photons, n_max)
    n = np.arange(n_max + 1)
    if mean_photons == 0:
        p = (n == 0).astype(float)
    else:
        p = np.exp(n * math.log(mean_photons) - mean_photons - gammaln(n + 1))
    return _checked(p, "coherent")


def thermal(mean_photons: float, n_max: int = DEFAULT_N_MAX) -> FockDistribution:
    """Geometric (Bose-Einstein) photon statistics."""
    _check_args(mean_photons, n_max)
    n = np.arange(n_max + 1)
    if mean_photons == 0:
        p = (n == 0).astype(float)
    else:
        p = np.exp(n * math.log(mean_photons) - (n + 1) * math.log1p(mean_photons))
    return _checked(p, "thermal")


def factorial_moments(dist: FockDistribution) -> MomentSet:
    """Factorial moments with compensated summation."""
    n = np.arange(dist.n_max + 1, dtype=float)
    p = dist.probs
    m1 = math.fsum(p * n)
    m2 = math.fsum(p * n * (n - 1))
    m3 = math.fsum(p * n * (n - 1) * (n - 2))
    return MomentSet(m1, m2, m3)


def g2_zero(dist: FockDistribution) -> float:
    return factorial_moments(dist).g2


def witness_w(dist: FockDistribution) -> float:
    return factorial_moments(dist).w


def thin(dist: FockDistribution, survival: float) -> FockDistribution:
    """Binomial loss: each photon survives independently with ``survival``."""
    if not 0 <= survival <= 1:
        raise ValueError("survival must lie in [0, 1]")
    n = np.arange(dist.n_max + 1)
    # kernel[m, n] = P(m survivors | n photons)
    kernel = binom.pmf(n[:, None], n[None, :], survival)
    p = kernel @ dist.probs
    return FockDistribution(p / math.fsum(p))


def convolve(a: FockDistribution, b: FockDistribution) -> FockDistribution:
    """Photon-number distribution of two independent modes merged into one count."""
    p = np.convolve(a.probs, b.probs)
    return FockDistribution(p / math.fsum(p))


def mixture(dists: Sequence[FockDistribution], weights: Sequence[float]) -> FockDistribution:
    """Incoherent mixture; components are zero-padded to a common n_max."""
    w = np.asarray(weights, dtype=float)
    if len(dists) != w.size or w.size == 0:
        raise ValueError("need one weight per distribution")
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    w = w / w.sum()
    size = max(d.probs.size for d in dists)
    p = np.zeros(size)
    for d, wi in zip(dists, w):
        p[: d.probs.size] += wi * d.probs
    return FockDistribution(p / math.fsum(p))


def compound_pairs(pair_numbers: FockDistribution, per_pair: Sequence[float]) -> FockDistribution:
    """Count distribution when each of k pairs contributes 0, 1 or 2 photons.

    ``pair_numbers.probs[k]`` is the probability of k pairs and ``per_pair``
    gives (P0, P1, P2) for one pair, identical and independent across pairs.
    The result is sum_k P(k) * per_pair^{*k}, built from repeated convolution.
    """
    x = np.asarray(per_pair, dtype=float)
    if x.shape != (3,) or np.any(x < 0) or abs(x.sum() - 1) > NORM_TOL:
        raise ValueError("per_pair must be three probabilities summing to 1")
    kmax = pair_numbers.n_max
    out = np.zeros(2 * kmax + 1)
    power = np.array([1.0])
    for k in range(kmax + 1):
        pk = pair_numbers.probs[k]
        if pk > 0:
            out[: power.size] += pk * power
        power = np.convolve(power, x)
    return FockDistribution(out / math.fsum(out))


def pair_number_distribution(dist: FockDistribution) -> FockDistribution:
    """Pair-number distribution of an even-parity state (k = n / 2)."""
    odd = dist.probs[1::2]
    if np.any(odd > 0):
        raise ValueError("state has odd photon-number components")
    return FockDistribution(dist.probs[0::2].copy())


def routing_probabilities(split_t, split_s, eff_t, eff_1, eff_2):
    """Per-photon probabilities of registering on trigger, signal-1, signal-2."""
    for name, v in (("split_t", split_t), ("split_s", split_s)):
        if not 0 < v < 1:
            raise ValueError(f"{name} must lie in (0, 1)")
    for name, v in (("eff_t", eff_t), ("eff_1", eff_1), ("eff_2", eff_2)):
        if not 0 < v <= 1:
            raise ValueError(f"{name} must lie in (0, 1]")
    p_t = split_t * eff_t
    p_1 = (1 - split_t) * split_s * eff_1
    p_2 = (1 - split_t) * (1 - split_s) * eff_2
    return p_t, p_1, p_2


def heralded_observables(
    dist: FockDistribution,
    split_t: float = 0.5,
    split_s: float = 0.5,
    eff_t: float = 1.0,
    eff_1: float = 1.0,
    eff_2: float = 1.0,
) -> tuple[float, float]:
    """Exact (g2_t1, alpha) for a pulse split trigger/signal, then signal 1/2.

    Every photon is routed independently to t, 1, 2 or lost.  The
    expectations <n_t>, <n_1>, <n_t n_1>, <n_t n_2>, <n_t n_1 n_2> are
    obtained by enumerating all multinomial routings of every photon number
    in the truncated space, with no use of the factorial-moment shortcut.
    """
    if dist.tail > TAIL_BOUND:
        raise TruncationError(f"distribution tail {dist.tail:.3g} exceeds {TAIL_BOUND:g}")
    p_t, p_1, p_2 = routing_probabilities(split_t, split_s, eff_t, eff_1, eff_2)
    p_l = max(0.0, 1.0 - p_t - p_1 - p_2)

    acc = {key: [] for key in ("t", "1", "t1", "t2", "t12")}
    for n in range(dist.n_max + 1):
        pn = dist.probs[n]
        if pn == 0:
            continue
        a, b, c = np.meshgrid(np.arange(n + 1), np.arange(n + 1), np.arange(n + 1), indexing="ij")
        ok = a + b + c <= n
        nt, n1, n2 = a[ok], b[ok], c[ok]
        nl = n - nt - n1 - n2
        logw = (
            gammaln(n + 1)
            - gammaln(nt + 1)
            - gammaln(n1 + 1)
            - gammaln(n2 + 1)
            - gammaln(nl + 1)
            + xlogy(nt, p_t)
            + xlogy(n1, p_1)
            + xlogy(n2, p_2)
            + xlogy(nl, p_l)
        )
        wgt = pn * np.exp(logw)
        acc["t"].append(np.sum(wgt * nt))
        acc["1"].append(np.sum(wgt * n1))
        acc["t1"].append(np.sum(wgt * nt * n1))
        acc["t2"].append(np.sum(wgt * nt * n2))
        acc["t12"].append(np.sum(wgt * nt * n1 * n2))
    e = {key: math.fsum(v) for key, v in acc.items()}
    g2_t1 = e["t1"] / (e["t"] * e["1"]) if e["t"] * e["1"] > 0 else math.nan
    alpha = e["t"] * e["t12"] / (e["t1"] * e["t2"]) if e["t1"] * e["t2"] > 0 else math.nan
    return g2_t1, alpha
