"""Monte Carlo photon-event engine.

Every trial is one measurement period of ``pulses_per_trial`` pulses and
draws from its own generator seeded by (seed, trial_index), so aggregate
counts do not depend on how trials are scheduled.  Coincidences are
event products within a pulse window, which is what a dead-time-free
time tagger accumulates: the expectation of sum(n_A n_B n_C) is the third
factorial moment times the three routing probabilities.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from . import eit, fock, optics
from .calibrate import REFERENCE_CORE_MEAN, REFERENCE_MEDIUM, REFERENCE_TAIL_FRACTION
from .eit import ControlTimeline, EITParams, StorageResponse
from .errors import ConfigurationError
from .optics import FilterChain
from .stats import CoincidenceStats, HeraldStats

CHANNELS = ("A", "B", "C", "t", "1", "2")
CH = {name: i for i, name in enumerate(CHANNELS)}
ORIGINS = ("source", "tail", "background")
SOURCE, TAIL, BACKGROUND = 0, 1, 2

FWHM_TO_SIGMA = 1 / (2 * math.sqrt(2 * math.log(2)))


@dataclass(frozen=True)
class SourceConfig:
    """Filtered PDC light: squeezed-vacuum pair core plus unpaired photons.

    ``tail_fraction`` is the share of incident photons in the Poissonian,
    unpaired component; it occupies the same pulse mode as the pairs.
    ``bypass_fraction`` is the share of photons whose spectrum lies outside
    the transparency window and crosses the medium unshifted and unabsorbed.
    ``kind`` 'coherent' or 'thermal' replaces the core by unpaired photons
    with that statistics (tail ignored); 'none' disables the source.
    """

    kind: str = "squeezed"
    mean_photons: float = REFERENCE_CORE_MEAN
    tail_fraction: float = REFERENCE_TAIL_FRACTION
    bypass_fraction: float = 0.0
    pulse_fwhm: float = 50e-9
    pulse_center: float = 120e-9
    pulses_per_trial: int = 1817
    pulse_period: float = 550.4e-9
    n_max: int = fock.DEFAULT_N_MAX

    def __post_init__(self):
        if self.kind not in ("squeezed", "coherent", "thermal", "none"):
            raise ConfigurationError(f"unknown source kind {self.kind!r}")
        if self.mean_photons < 0:
            raise ConfigurationError("mean_photons must be non-negative")
        if not 0 <= self.tail_fraction < 1:
            raise ConfigurationError("tail_fraction must lie in [0, 1)")
        if not 0 <= self.bypass_fraction <= 1:
            raise ConfigurationError("bypass_fraction must lie in [0, 1]")
        if self.pulses_per_trial < 1 or not self.pulse_period > 0:
            raise ConfigurationError("need at least one pulse and a positive period")
        if not 0 < self.pulse_center < self.pulse_period:
            raise ConfigurationError("pulse_center must lie inside the pulse period")

    @property
    def paired(self) -> bool:
        return self.kind == "squeezed"

    @property
    def tail_mean(self) -> float:
        if not self.paired:
            return 0.0
        return self.mean_photons * self.tail_fraction / (1 - self.tail_fraction)

    @property
    def sigma(self) -> float:
        """Standard deviation of the single-photon arrival-time density."""
        return self.pulse_fwhm * FWHM_TO_SIGMA

    def core_distribution(self) -> fock.FockDistribution:
        ctor = {
            "squeezed": fock.squeezed_vacuum,
            "coherent": fock.coherent,
            "thermal": fock.thermal,
        }.get(self.kind)
        if ctor is None:
            return fock.vacuum(self.n_max)
        return ctor(self.mean_photons, self.n_max)

    def incident_distribution(self) -> fock.FockDistribution:
        """Photon statistics of one pulse before any loss."""
        core = self.core_distribution()
        if self.tail_mean > 0:
            return fock.convolve(core, fock.coherent(self.tail_mean, self.n_max))
        return core


@dataclass(frozen=True)
class EITConfig:
    enabled: bool = False
    params: EITParams = REFERENCE_MEDIUM
    timeline: ControlTimeline = field(default_factory=ControlTimeline.storage)
    z_steps: int = 100
    dt: float = 0.4e-9


@dataclass(frozen=True)
class DetectionConfig:
    """Detector routing.

    triple_hbt: each signal photon reaches A, B or C with the given total
    transmissions (they must sum to at most 1).  heralded: a PBS before the
    medium sends a photon to the trigger arm with ``split_t``; the signal
    arm is split ``split_s`` : 1 - split_s to channels 1 and 2.  Efficiencies
    there are per arm, after the splitters.  Gates are local times (s)
    within a pulse window; in the heralded topology ``gate`` acts on the
    signal channels and ``trigger_gate`` on the trigger.
    """

    topology: str = "triple_hbt"
    eff_a: float = 0.36
    eff_b: float = 0.16
    eff_c: float = 0.14
    eff_t: float = 0.67
    eff_1: float = 0.23
    eff_2: float = 0.22
    split_t: float = 0.5
    split_s: float = 0.5
    gate: tuple[float, float] | None = None
    trigger_gate: tuple[float, float] | None = None
    background_rate: float = 0.0
    mcs_bin: float = 1.6e-9

    def __post_init__(self):
        if self.topology not in ("triple_hbt", "heralded"):
            raise ConfigurationError(f"unknown topology {self.topology!r}")
        for name in ("eff_a", "eff_b", "eff_c", "eff_t", "eff_1", "eff_2"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ConfigurationError(f"{name}={v} must lie in (0, 1]")
        if self.eff_a + self.eff_b + self.eff_c > 1 + 1e-12:
            raise ConfigurationError("triple-HBT transmissions sum above 1")
        for name in ("split_t", "split_s"):
            if not 0 < getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must lie in (0, 1)")
        for name in ("gate", "trigger_gate"):
            g = getattr(self, name)
            if g is not None:
                g = (float(g[0]), float(g[1]))
                if not g[0] < g[1]:
                    raise ConfigurationError(f"{name} start must precede its end")
                object.__setattr__(self, name, g)
        if self.background_rate < 0:
            raise ConfigurationError("background_rate must be non-negative")
        if not self.mcs_bin > 0:
            raise ConfigurationError("mcs_bin must be positive")

    @classmethod
    def desk(cls, topology="triple_hbt", **kw):
        """Lossless, balanced detection for desk-scale statistics."""
        base = dict(eff_a=1 / 3, eff_b=1 / 3, eff_c=1 / 3, eff_t=1.0, eff_1=1.0, eff_2=1.0)
        base.update(kw)
        return cls(topology=topology, **base)

    def signal_probabilities(self) -> np.ndarray:
        """Per signal-path photon: probability of each channel in CHANNELS."""
        p = np.zeros(len(CHANNELS))
        if self.topology == "triple_hbt":
            p[[CH["A"], CH["B"], CH["C"]]] = (self.eff_a, self.eff_b, self.eff_c)
        else:
            p[CH["1"]] = self.split_s * self.eff_1
            p[CH["2"]] = (1 - self.split_s) * self.eff_2
        return p


@dataclass(frozen=True)
class ScenarioConfig:
    source: SourceConfig = SourceConfig()
    chain: FilterChain = field(default_factory=optics.reference_filter_chain)
    eit: EITConfig = EITConfig()
    detection: DetectionConfig = DetectionConfig()
    trials: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigurationError("trials must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        if self.eit.enabled:
            tl = self.eit.timeline
            if not (math.isclose(tl.start, 0.0, abs_tol=1e-15)
                    and math.isclose(tl.end, self.source.pulse_period, rel_tol=1e-9)):
                raise ConfigurationError("control timeline must cover exactly one pulse period")

    @property
    def pulses(self) -> int:
        return self.trials * self.source.pulses_per_trial

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class EventRecord:
    """Detection events of one trial, sorted by timestamp (s from trial start)."""

    trial_index: int
    channels: np.ndarray
    timestamps: np.ndarray
    origins: np.ndarray
    pulse_period: float
    pulses: int

    @property
    def events(self) -> list[tuple[str, float]]:
        return [(CHANNELS[c], float(t)) for c, t in zip(self.channels, self.timestamps)]

    @property
    def pulse_index(self) -> np.ndarray:
        return np.floor(self.timestamps / self.pulse_period).astype(np.int64)

    def __len__(self):
        return int(self.timestamps.size)


@dataclass(frozen=True, eq=False)
class Prepared:
    numbers: np.ndarray
    number_probs: np.ndarray
    chain_t: float
    storage: StorageResponse | None
    background_mean: float
    background_cdf: np.ndarray | None
    grid: np.ndarray | None
    signal_probs: np.ndarray


@lru_cache(maxsize=32)
def storage_response(cfg: EITConfig, source: SourceConfig) -> StorageResponse:
    pulse = eit.gaussian_pulse(
        fwhm=source.pulse_fwhm,
        center=source.pulse_center,
        window=(0.0, source.pulse_period),
        dt=cfg.dt,
    )
    out = eit.propagate(pulse, cfg.params, cfg.timeline, cfg.z_steps)
    return StorageResponse.from_waveforms(pulse, out)


@lru_cache(maxsize=32)
def prepare(config: ScenarioConfig) -> Prepared:
    src = config.source
    dist = src.core_distribution()
    numbers = np.nonzero(dist.probs)[0]
    probs = dist.probs[numbers]
    storage = None
    bg_mean, bg_cdf, grid = 0.0, None, None
    if config.eit.enabled:
        storage = storage_response(config.eit, src)
        grid = storage.time_grid
        frac = config.eit.timeline.power_fraction(grid)
        # trapezoid CDF on the grid, so sampling and expectations agree
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (frac[1:] + frac[:-1]) * np.diff(grid))])
        bg_mean = config.detection.background_rate * float(cum[-1])
        if cum[-1] > 0:
            bg_cdf = cum / cum[-1]
    return Prepared(
        numbers=numbers,
        number_probs=probs / probs.sum(),
        chain_t=config.chain.on_resonance_transmittance,
        storage=storage,
        background_mean=bg_mean,
        background_cdf=bg_cdf,
        grid=grid,
        signal_probs=config.detection.signal_probabilities(),
    )


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial_index,)))


def run_trial(config: ScenarioConfig, trial_index: int) -> EventRecord:
    """Simulate one measurement period; a pure function of (config, trial_index)."""
    prep = prepare(config)
    src, det = config.source, config.detection
    rng = trial_rng(config.seed, trial_index)
    n_pulses = src.pulses_per_trial
    pulse_ids = np.arange(n_pulses)

    # source photons
    n = rng.choice(prep.numbers, size=n_pulses, p=prep.number_probs)
    if src.paired:
        k = n // 2
        pair_pulse = np.repeat(pulse_ids, k)
        # centre spread chosen so single photons keep the pulse variance
        b = optics.offset_scale(config.chain)
        sigma_c = math.sqrt(max(src.sigma**2 - b**2 / 2, 0.0))
        centers = rng.normal(src.pulse_center, sigma_c, pair_pulse.size)
        offsets = optics.pair_time_offset_sampler(config.chain, rng, pair_pulse.size)
        core_t = np.concatenate([centers - offsets / 2, centers + offsets / 2])
        core_p = np.concatenate([pair_pulse, pair_pulse])
    else:
        core_p = np.repeat(pulse_ids, n)
        core_t = rng.normal(src.pulse_center, src.sigma, core_p.size)
    n_tail = rng.poisson(src.tail_mean, n_pulses) if src.tail_mean > 0 else np.zeros(n_pulses, int)
    tail_p = np.repeat(pulse_ids, n_tail)
    tail_t = rng.normal(src.pulse_center, src.sigma, tail_p.size)

    pulse = np.concatenate([core_p, tail_p])
    t = np.concatenate([core_t, tail_t])
    origin = np.concatenate([np.full(core_p.size, SOURCE, np.int8), np.full(tail_p.size, TAIL, np.int8)])

    # passive filter loss
    alive = rng.random(t.size) < prep.chain_t

    # heralded scheme: PBS ahead of the medium
    to_trigger = np.zeros(t.size, bool)
    if det.topology == "heralded":
        to_trigger = rng.random(t.size) < det.split_t

    # every signal-arm photon meets the medium except the bypass share
    if prep.storage is not None:
        bypass = rng.random(t.size) < src.bypass_fraction
        in_medium = ~to_trigger & ~bypass
        survive = rng.random(t.size) < prep.storage.transmitted
        alive &= survive | ~in_medium
        t = np.where(in_medium, prep.storage.remap(t), t)

    # control-induced offset, added behind the medium
    if prep.background_mean > 0:
        n_bg = rng.poisson(prep.background_mean, n_pulses)
        bg_p = np.repeat(pulse_ids, n_bg)
        bg_t = np.interp(rng.random(bg_p.size), prep.background_cdf, prep.grid)
        pulse = np.concatenate([pulse, bg_p])
        t = np.concatenate([t, bg_t])
        origin = np.concatenate([origin, np.full(bg_p.size, BACKGROUND, np.int8)])
        alive = np.concatenate([alive, np.ones(bg_p.size, bool)])
        to_trigger = np.concatenate([to_trigger, np.zeros(bg_p.size, bool)])

    # detection
    u = rng.random(t.size)
    cum = np.cumsum(prep.signal_probs)
    chan = np.searchsorted(cum, u, side="right")  # == len(CHANNELS) means lost
    if det.topology == "heralded":
        chan = np.where(to_trigger, np.where(u < det.eff_t, CH["t"], len(CHANNELS)), chan)
    keep = alive & (chan < len(CHANNELS))
    keep &= (t >= 0) & (t < src.pulse_period)
    gate = det.gate
    if gate is not None:
        in_gate = (t >= gate[0]) & (t < gate[1])
        keep &= in_gate | to_trigger
    if det.trigger_gate is not None:
        tg = det.trigger_gate
        keep &= ~to_trigger | ((t >= tg[0]) & (t < tg[1]))

    stamps = pulse[keep] * src.pulse_period + t[keep]
    order = np.argsort(stamps, kind="stable")
    return EventRecord(
        trial_index=trial_index,
        channels=chan[keep][order].astype(np.int8),
        timestamps=stamps[order],
        origins=origin[keep][order],
        pulse_period=src.pulse_period,
        pulses=n_pulses,
    )


@dataclass
class CountTensor:
    """Per-pulse count products accumulated over trials.

    singles[i] = sum n_i, pairs[i, j] = sum n_i n_j, triples[i, j, k] =
    sum n_i n_j n_k over pulses; ``by_origin[o, i]`` splits the singles by
    photon origin.  Merging is plain addition.
    """

    pulses: int = 0
    duration: float = 0.0
    singles: np.ndarray = field(default_factory=lambda: np.zeros(len(CHANNELS), np.int64))
    pairs: np.ndarray = field(default_factory=lambda: np.zeros((len(CHANNELS),) * 2, np.int64))
    triples: np.ndarray = field(default_factory=lambda: np.zeros((len(CHANNELS),) * 3, np.int64))
    by_origin: np.ndarray = field(default_factory=lambda: np.zeros((len(ORIGINS), len(CHANNELS)), np.int64))

    def __add__(self, other: "CountTensor") -> "CountTensor":
        return CountTensor(
            self.pulses + other.pulses,
            self.duration + other.duration,
            self.singles + other.singles,
            self.pairs + other.pairs,
            self.triples + other.triples,
            self.by_origin + other.by_origin,
        )

    @classmethod
    def from_record(cls, rec: EventRecord) -> "CountTensor":
        per_pulse = np.zeros((rec.pulses, len(CHANNELS)), np.int64)
        np.add.at(per_pulse, (rec.pulse_index, rec.channels.astype(np.int64)), 1)
        busy = per_pulse[per_pulse.any(axis=1)]
        by_origin = np.zeros((len(ORIGINS), len(CHANNELS)), np.int64)
        np.add.at(by_origin, (rec.origins.astype(np.int64), rec.channels.astype(np.int64)), 1)
        return cls(
            pulses=rec.pulses,
            duration=rec.pulses * rec.pulse_period,
            singles=per_pulse.sum(axis=0),
            pairs=busy.T @ busy,
            triples=np.einsum("pi,pj,pk->ijk", busy, busy, busy),
            by_origin=by_origin,
        )

    def coincidence_stats(self) -> CoincidenceStats:
        a, b, c = CH["A"], CH["B"], CH["C"]
        return CoincidenceStats(
            n_a=int(self.singles[a]),
            n_ab=int(self.pairs[a, b]),
            n_ac=int(self.pairs[a, c]),
            n_abc=int(self.triples[a, b, c]),
            duration=self.duration,
            n_b=int(self.singles[b]),
            n_c=int(self.singles[c]),
            n_pulses=self.pulses,
        )

    def herald_stats(self) -> HeraldStats:
        t, s1, s2 = CH["t"], CH["1"], CH["2"]
        return HeraldStats(
            n_t=int(self.singles[t]),
            n_t1=int(self.pairs[t, s1]),
            n_t2=int(self.pairs[t, s2]),
            n_t12=int(self.triples[t, s1, s2]),
            n_pulses=self.pulses,
            n_1=int(self.singles[s1]),
            n_2=int(self.singles[s2]),
        )


@dataclass
class Histogram:
    """Coincidence counts versus delay (b - a); bins centred on multiples of ``bin``."""

    bin: float
    counts: np.ndarray

    @property
    def half_bins(self) -> int:
        return (self.counts.size - 1) // 2

    @property
    def centers(self) -> np.ndarray:
        return self.bin * np.arange(-self.half_bins, self.half_bins + 1)

    def __add__(self, other: "Histogram") -> "Histogram":
        if other.bin != self.bin or other.counts.size != self.counts.size:
            raise ValueError("histograms have different binning")
        return Histogram(self.bin, self.counts + other.counts)


def _empty_histogram(bin: float, max_lag: float) -> Histogram:
    half = int(math.ceil(max_lag / bin))
    return Histogram(bin, np.zeros(2 * half + 1, np.int64))


def mcs_histogram(
    records: Iterable[EventRecord], channel_a, channel_b, bin: float, max_lag: float
) -> Histogram:
    """Start-stop histogram of all event pairs within +-max_lag, per trial."""
    if not bin > 0:
        raise ValueError("bin must be positive")
    a_id = CH[channel_a] if isinstance(channel_a, str) else int(channel_a)
    b_id = CH[channel_b] if isinstance(channel_b, str) else int(channel_b)
    hist = _empty_histogram(bin, max_lag)
    half = hist.half_bins
    for rec in records:
        ta = rec.timestamps[rec.channels == a_id]
        ib = np.nonzero(rec.channels == b_id)[0]
        tb = rec.timestamps[ib]
        if ta.size == 0 or tb.size == 0:
            continue
        lo = np.searchsorted(tb, ta - max_lag, side="left")
        hi = np.searchsorted(tb, ta + max_lag, side="right")
        reps = hi - lo
        if reps.sum() == 0:
            continue
        starts = np.repeat(lo - np.cumsum(reps) + reps, reps)
        j = starts + np.arange(reps.sum())
        i = np.repeat(np.arange(ta.size), reps)
        if a_id == b_id:
            ia = np.nonzero(rec.channels == a_id)[0]
            self_pair = ia[i] == ib[j]
            i, j = i[~self_pair], j[~self_pair]
        idx = np.rint((tb[j] - ta[i]) / bin).astype(np.int64)
        ok = np.abs(idx) <= half
        hist.counts += np.bincount(idx[ok] + half, minlength=hist.counts.size)
    return hist


@dataclass
class RunResult:
    counts: CountTensor
    histograms: dict
    arrival: np.ndarray  # detected signal events per local-time bin and origin
    arrival_bin: float


def arrival_histogram(rec: EventRecord, bin: float, period: float) -> np.ndarray:
    nb = int(math.ceil(period / bin))
    local = rec.timestamps - rec.pulse_index * rec.pulse_period
    signal = rec.channels != CH["t"]
    idx = np.minimum((local[signal] / bin).astype(np.int64), nb - 1)
    out = np.zeros((len(ORIGINS), nb), np.int64)
    np.add.at(out, (rec.origins[signal].astype(np.int64), idx), 1)
    return out


def _default_max_lag(config: ScenarioConfig) -> float:
    return 1.5 * config.source.pulse_period


def _run_chunk(config, indices, hist_specs, max_lag, arrival_bin):
    counts = CountTensor()
    hists = {pair: _empty_histogram(config.detection.mcs_bin, max_lag) for pair in hist_specs}
    arrival = None
    for i in indices:
        rec = run_trial(config, i)
        counts = counts + CountTensor.from_record(rec)
        for pair in hist_specs:
            hists[pair] = hists[pair] + mcs_histogram([rec], pair[0], pair[1], config.detection.mcs_bin, max_lag)
        arr = arrival_histogram(rec, arrival_bin, config.source.pulse_period)
        arrival = arr if arrival is None else arrival + arr
    return counts, hists, arrival


def run_trials(
    config: ScenarioConfig,
    histograms: Sequence[tuple[str, str]] = (),
    threads: int = 1,
    max_lag: float | None = None,
    arrival_bin: float = 2e-9,
) -> RunResult:
    """Run ``config.trials`` trials and merge their counts and histograms."""
    max_lag = _default_max_lag(config) if max_lag is None else max_lag
    specs = tuple(tuple(s) for s in histograms)
    indices = list(range(config.trials))
    if threads > 1 and len(indices) > 1:
        chunks = [indices[k::threads] for k in range(threads)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_run_chunk, [config] * len(chunks), chunks,
                                  [specs] * len(chunks), [max_lag] * len(chunks),
                                  [arrival_bin] * len(chunks)))
    else:
        parts = [_run_chunk(config, indices, specs, max_lag, arrival_bin)]
    counts = CountTensor()
    hists = {pair: _empty_histogram(config.detection.mcs_bin, max_lag) for pair in specs}
    arrival = None
    for c, h, a in parts:
        counts = counts + c
        for pair in specs:
            hists[pair] = hists[pair] + h[pair]
        if a is not None:
            arrival = a if arrival is None else arrival + a
    return RunResult(counts, hists, arrival, arrival_bin)


# ---------------------------------------------------------------------------
# deterministic expectations for the routed state


def _signal_window(config: ScenarioConfig) -> tuple[float, float]:
    lo, hi = 0.0, config.source.pulse_period
    if config.detection.gate is not None:
        lo, hi = max(lo, config.detection.gate[0]), min(hi, config.detection.gate[1])
    return lo, hi


def _input_window(storage: StorageResponse, lo: float, hi: float) -> tuple[float, float]:
    """Input-time interval whose remapped photons land in [lo, hi)."""
    grid = storage.time_grid
    u_lo = np.interp(lo, grid, storage.output_cdf)
    u_hi = np.interp(hi, grid, storage.output_cdf)
    a = np.interp(u_lo, storage.input_cdf, grid)
    b = np.interp(u_hi, storage.input_cdf, grid)
    return float(a), float(b)


def _routes(config: ScenarioConfig) -> list[tuple[float, tuple[float, float]]]:
    """(probability, input-time window) for each way a signal-arm photon
    can reach the detectors inside the signal window."""
    src, prep = config.source, prepare(config)
    arm = 1.0 - config.detection.split_t if config.detection.topology == "heralded" else 1.0
    lo, hi = _signal_window(config)
    base = prep.chain_t * arm
    if prep.storage is None:
        return [(base, (lo, hi))]
    return [
        (base * src.bypass_fraction, (lo, hi)),
        (base * (1 - src.bypass_fraction) * prep.storage.transmitted, _input_window(prep.storage, lo, hi)),
    ]


def _gauss_window(mu: float, sigma: float, w: tuple[float, float]) -> float:
    return float(ndtr((w[1] - mu) / sigma) - ndtr((w[0] - mu) / sigma))


def pair_joint_probability(config: ScenarioConfig, w1, w2) -> float:
    """P(first pair photon emitted in w1 and second in w2), by quadrature.

    Photons sit at c -+ tau/2 with c Gaussian and tau two-sided exponential.
    """
    src = config.source
    scale = optics.offset_scale(config.chain)
    sigma_c = math.sqrt(max(src.sigma**2 - scale**2 / 2, 0.0))
    mu = src.pulse_center
    (a1, b1), (a2, b2) = w1, w2

    def integrand(y):
        # y = tau / scale, density exp(-|y|) / 2
        h = scale * y / 2
        lo = max(a1 + h, a2 - h)
        hi = min(b1 + h, b2 - h)
        if hi <= lo:
            return 0.0
        return 0.5 * math.exp(-abs(y)) * (ndtr((hi - mu) / sigma_c) - ndtr((lo - mu) / sigma_c))

    opts = dict(epsabs=1e-14, epsrel=1e-11, limit=400)
    return integrate.quad(integrand, -60, 0, **opts)[0] + integrate.quad(integrand, 0, 60, **opts)[0]


def expected_signal_photons(config: ScenarioConfig) -> dict:
    """Mean photons per pulse reaching the detection stage inside the signal window."""
    src, prep = config.source, prepare(config)
    routes = _routes(config)
    single = sum(p * _gauss_window(src.pulse_center, src.sigma, w) for p, w in routes)
    if src.kind == "none":
        core = 0.0
    elif src.paired:
        every = (-math.inf, math.inf)
        core = src.mean_photons * sum(p * pair_joint_probability(config, w, every) for p, w in routes)
    else:
        core = src.core_distribution().mean() * single
    out = {"source": core, "tail": src.tail_mean * single, "background": 0.0}
    if prep.background_cdf is not None and prep.background_mean > 0:
        lo, hi = _signal_window(config)
        share = np.interp(hi, prep.grid, prep.background_cdf) - np.interp(lo, prep.grid, prep.background_cdf)
        out["background"] = prep.background_mean * float(share)
    return out


def background_rate_for_ratio(config: ScenarioConfig, ratio: float) -> float:
    """Offset photon rate (1/s at full control) giving signal : offset = ratio in the gate."""
    if not ratio > 0:
        raise ConfigurationError("offset ratio must be positive")
    if not config.eit.enabled:
        raise ConfigurationError("the offset model needs the control timeline (EIT enabled)")
    probe = config.with_(detection=replace(config.detection, background_rate=1.0))
    expect = expected_signal_photons(probe)
    signal = expect["source"] + expect["tail"]
    if expect["background"] <= 0:
        raise ConfigurationError("control is off throughout the signal window")
    return signal / (ratio * expect["background"])


def routed_state(config: ScenarioConfig) -> fock.FockDistribution:
    """Photon-number distribution in the signal window at the detection stage.

    Each pair contributes 0, 1 or 2 photons with probabilities built from
    the per-photon routes and the exact joint window acceptance of the two
    photons; unpaired photons and the offset add independent Poisson counts.
    """
    if config.detection.topology != "triple_hbt":
        raise ConfigurationError("routed_state describes the triple-HBT topology")
    src = config.source
    expect = expected_signal_photons(config)
    extra = expect["tail"] + expect["background"]
    if src.kind == "none":
        core = fock.vacuum(src.n_max)
    elif src.paired:
        routes = _routes(config)
        every = (-math.inf, math.inf)
        x2 = sum(p1 * p2 * pair_joint_probability(config, w1, w2)
                 for p1, w1 in routes for p2, w2 in routes)
        x1 = 2 * sum(p * pair_joint_probability(config, w, every) for p, w in routes) - 2 * x2
        pairs = fock.pair_number_distribution(src.core_distribution())
        core = fock.compound_pairs(pairs, (1 - x1 - x2, x1, x2))
    else:
        mean = src.core_distribution().mean()
        core = fock.thin(src.core_distribution(), expect["source"] / mean if mean > 0 else 0.0)
    if extra > 0:
        core = fock.convolve(core, fock.coherent(extra, max(src.n_max, 4 * int(extra) + 24)))
    return core


def heralded_prediction(config: ScenarioConfig) -> tuple[float, float]:
    """Exact (g2_t1, alpha) for the heralded topology without medium or gates."""
    d = config.detection
    if d.topology != "heralded" or config.eit.enabled or d.gate or d.trigger_gate:
        raise ConfigurationError("heralded_prediction covers the ungated heralded setup without EIT")
    dist = fock.thin(config.source.incident_distribution(), config.chain.on_resonance_transmittance)
    return fock.heralded_observables(dist, d.split_t, d.split_s, d.eff_t, d.eff_1, d.eff_2)
