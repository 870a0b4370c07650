"""Lambda-type EIT medium: weak-probe response and 1-D Maxwell-Bloch propagation.

Frequencies in this module are angular (rad/s) unless a name ends in
``_hz``.  Field components evolve as exp(-i*delta*t), so a positive slope of
the transmission phase is a delay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import IntegrationUnstableError

TWO_PI = 2 * math.pi

# Rb D1 natural linewidth
GAMMA_D1 = TWO_PI * 5.75e6

MAX_GRID_STEP = 1e-9
MIN_Z_STEPS = 50


@dataclass(frozen=True)
class EITParams:
    optical_depth: float
    gamma_excited: float = GAMMA_D1
    gamma_bc: float = 0.0
    rabi_control: float = 0.0
    probe_detuning: float = 0.0

    def __post_init__(self):
        if not self.optical_depth > 0:
            raise ValueError("optical_depth must be positive")
        if not self.gamma_excited > 0:
            raise ValueError("gamma_excited must be positive")
        if self.gamma_bc < 0 or self.rabi_control < 0:
            raise ValueError("gamma_bc and rabi_control must be non-negative")

    def with_(self, **changes) -> "EITParams":
        vals = {k: getattr(self, k) for k in self.__dataclass_fields__}
        vals.update(changes)
        return EITParams(**vals)


@dataclass(frozen=True)
class ControlTimeline:
    """Piecewise-constant control power with linear ramps of ``edge_time``.

    Each ramp starts at the boundary between two segments.
    """

    segments: tuple[tuple[float, float, float], ...]
    edge_time: float = 30e-9

    def __post_init__(self):
        segs = tuple((float(a), float(b), float(p)) for a, b, p in self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ValueError("timeline needs at least one segment")
        if not self.edge_time > 0:
            raise ValueError("edge_time must be positive")
        for (a, b, p) in segs:
            if not b > a:
                raise ValueError("segment end must follow its start")
            if not 0 <= p <= 1:
                raise ValueError("power_fraction must lie in [0, 1]")
        for (_, b0, _), (a1, _, _) in zip(segs, segs[1:]):
            if not math.isclose(b0, a1, rel_tol=0, abs_tol=1e-15):
                raise ValueError("segments must be contiguous")

    @property
    def start(self) -> float:
        return self.segments[0][0]

    @property
    def end(self) -> float:
        return self.segments[-1][1]

    def power_fraction(self, t):
        t = np.asarray(t, dtype=float)
        frac = np.full(t.shape, self.segments[0][2])
        for (_, _, p0), (a1, _, p1) in zip(self.segments, self.segments[1:]):
            frac = frac + (p1 - p0) * np.clip((t - a1) / self.edge_time, 0.0, 1.0)
        return frac

    def off_times(self) -> list[float]:
        return [a1 for (_, _, p0), (a1, _, p1) in zip(self.segments, self.segments[1:]) if p1 < p0]

    def on_times(self) -> list[float]:
        return [a1 for (_, _, p0), (a1, _, p1) in zip(self.segments, self.segments[1:]) if p1 > p0]

    @classmethod
    def constant(cls, window=(0.0, 550.4e-9), fraction=1.0, edge_time=30e-9):
        return cls(((window[0], window[1], fraction),), edge_time)

    @classmethod
    def storage(cls, off=140e-9, on=390e-9, window=(0.0, 550.4e-9), edge_time=30e-9):
        return cls(
            ((window[0], off, 1.0), (off, on, 0.0), (on, window[1], 1.0)),
            edge_time,
        )

    @classmethod
    def switched_off(cls, off=140e-9, window=(0.0, 550.4e-9), edge_time=30e-9):
        return cls(((window[0], off, 1.0), (off, window[1], 0.0)), edge_time)


@dataclass(frozen=True, eq=False)
class PulseWaveform:
    """Complex envelope on a uniform grid; |amplitude|**2 is photon flux (1/s)."""

    time_grid: np.ndarray
    amplitude: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.time_grid, dtype=float)
        a = np.asarray(self.amplitude, dtype=complex)
        if t.ndim != 1 or t.shape != a.shape or t.size < 3:
            raise ValueError("time_grid and amplitude must be matching 1-D arrays")
        steps = np.diff(t)
        dt = steps.mean()
        if not dt > 0 or np.max(np.abs(steps - dt)) > 1e-6 * dt:
            raise ValueError("time grid must be uniform and increasing")
        if dt > MAX_GRID_STEP * (1 + 1e-9):
            raise ValueError(f"grid step {dt:.3g} s exceeds {MAX_GRID_STEP:g} s")
        object.__setattr__(self, "time_grid", t)
        object.__setattr__(self, "amplitude", a)

    @property
    def dt(self) -> float:
        return float(self.time_grid[1] - self.time_grid[0])

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitude) ** 2

    def photons(self, start=-math.inf, end=math.inf) -> float:
        """Integrated photon number within [start, end)."""
        sel = (self.time_grid >= start) & (self.time_grid < end)
        return float(self.intensity[sel].sum() * self.dt)

    def centroid(self) -> float:
        i = self.intensity
        return float((self.time_grid * i).sum() / i.sum())

    def peak_time(self) -> float:
        return float(self.time_grid[np.argmax(self.intensity)])


def gaussian_pulse(
    fwhm=50e-9, center=120e-9, window=(0.0, 550.4e-9), dt=0.4e-9, photons=1.0
) -> PulseWaveform:
    """Transform-limited pulse with Gaussian intensity of the given FWHM."""
    n = int(round((window[1] - window[0]) / dt))
    t = window[0] + dt * np.arange(n)
    sigma = fwhm / (2 * math.sqrt(2 * math.log(2)))
    inten = np.exp(-0.5 * ((t - center) / sigma) ** 2)
    inten *= photons / (inten.sum() * dt)
    return PulseWaveform(t, np.sqrt(inten).astype(complex))


@dataclass(frozen=True, eq=False)
class TransmissionSpectrum:
    detuning_grid: np.ndarray  # Hz
    complex_transmission: np.ndarray

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.complex_transmission) ** 2


def susceptibility_response(params: EITParams, detuning):
    """Dimensionless weak-probe response R(delta); Re R = 1 on the bare line center."""
    d = np.asarray(detuning, dtype=float)
    half = params.gamma_excited / 2
    if params.rabi_control == 0:
        # two-level limit; the ground-state factor cancels
        return half / (half - 1j * d)
    spin = params.gamma_bc - 1j * d
    return half * spin / (spin * (half - 1j * d) + params.rabi_control**2 / 4)


def field_transmission(params: EITParams, detuning):
    return np.exp(-0.5 * params.optical_depth * susceptibility_response(params, detuning))


def intensity_transmission(params: EITParams, detuning):
    return np.exp(-params.optical_depth * susceptibility_response(params, detuning).real)


def transmission_spectrum(params: EITParams, detuning_hz) -> TransmissionSpectrum:
    f = np.asarray(detuning_hz, dtype=float)
    return TransmissionSpectrum(f, field_transmission(params, TWO_PI * f))


def peak_transmission(params: EITParams) -> float:
    return float(intensity_transmission(params, 0.0))


def transparency_fwhm(params: EITParams) -> float:
    """Full width (Hz) at half of the line-center value of the transparency window."""
    if params.rabi_control == 0:
        return math.nan
    top = peak_transmission(params)
    f = lambda x: float(intensity_transmission(params, x)) - top / 2
    reach = 4 * (params.rabi_control + params.gamma_excited)
    xs = np.linspace(0.0, reach, 4001)
    vals = intensity_transmission(params, xs) - top / 2
    below = np.nonzero(vals < 0)[0]
    if below.size == 0:
        return math.nan
    i = below[0]
    return 2 * brentq(f, xs[i - 1], xs[i], xtol=1e-6) / TWO_PI


def spectrum_fwhm(spectrum: TransmissionSpectrum) -> float:
    """Window FWHM read off a sampled spectrum by linear interpolation (Hz)."""
    f = spectrum.detuning_grid
    t = spectrum.intensity
    i0 = int(np.argmin(np.abs(f)))
    half = t[i0] / 2

    def crossing(step):
        i = i0
        while 0 <= i + step < f.size and t[i + step] >= half:
            i += step
        j = i + step
        if not 0 <= j < f.size:
            return math.nan
        return f[i] + (half - t[i]) * (f[j] - f[i]) / (t[j] - t[i])

    return float(crossing(1) - crossing(-1))


def group_delay(params: EITParams, step=None) -> float:
    """d(phase)/d(omega) of the field transmission at the probe detuning (s)."""
    if params.rabi_control <= 0:
        raise ValueError("group delay needs a non-zero control field")
    h = step if step is not None else 1e-5 * params.gamma_excited
    phase = lambda x: -0.5 * params.optical_depth * susceptibility_response(params, x).imag
    x0 = params.probe_detuning
    return float((phase(x0 + h) - phase(x0 - h)) / (2 * h))


def max_time_step(params: EITParams) -> float:
    """Largest step accepted by the RK4 atomic update for these rates."""
    rate = (
        params.gamma_excited / 2
        + abs(params.probe_detuning)
        + params.rabi_control / 2
        + params.gamma_bc
        + params.optical_depth * params.gamma_excited / 4
    )
    return 1.0 / rate


def propagate(
    pulse: PulseWaveform,
    params: EITParams,
    timeline: ControlTimeline,
    z_steps: int = 100,
) -> PulseWaveform:
    """Exit field of the co-moving weak-probe Maxwell-Bloch system.

    d_z E = i k P,  d_t P = -(G/2 - i dlt) P + i E + i (Om/2) S,
    d_t S = -(g_bc - i dlt) S + i (Om/2) P,
    with z in units of the medium length and k = d G / 4, which makes the
    constant-control steady state equal to ``field_transmission``.  P and S
    advance by classical RK4 in time; E is rebuilt at every stage by
    trapezoidal integration along z.
    """
    if z_steps < MIN_Z_STEPS:
        raise ValueError(f"z_steps must be at least {MIN_Z_STEPS}")
    dt = pulse.dt
    bound = max_time_step(params)
    if dt > bound:
        raise IntegrationUnstableError(
            f"time step {dt:.3g} s exceeds the stable bound {bound:.3g} s", bound
        )
    if dt > timeline.edge_time / 5:
        raise IntegrationUnstableError(
            f"time step {dt:.3g} s does not resolve {timeline.edge_time:.3g} s control edges",
            timeline.edge_time / 5,
        )

    t = pulse.time_grid
    e_in = pulse.amplitude
    hz = 1.0 / z_steps
    kappa = params.optical_depth * params.gamma_excited / 4
    p_rate = params.gamma_excited / 2 - 1j * params.probe_detuning
    s_rate = params.gamma_bc - 1j * params.probe_detuning

    half_t = np.concatenate([t, t[:-1] + dt / 2])
    om_all = params.rabi_control * np.sqrt(timeline.power_fraction(half_t))
    om_grid, om_mid = om_all[: t.size], om_all[t.size:]

    p = np.zeros(z_steps + 1, complex)
    s = np.zeros(z_steps + 1, complex)
    cum = np.zeros(z_steps + 1, complex)
    out = np.empty(t.size, complex)

    def field(pol, e0):
        cum[1:] = np.cumsum(pol[1:] + pol[:-1]) * (hz / 2)
        return e0 + 1j * kappa * cum

    def rhs(pol, spin, e0, om):
        e = field(pol, e0)
        return -p_rate * pol + 1j * e + 0.5j * om * spin, -s_rate * spin + 0.5j * om * pol

    for n in range(t.size - 1):
        out[n] = field(p, e_in[n])[-1]
        e0, e1 = e_in[n], e_in[n + 1]
        em = 0.5 * (e0 + e1)
        o0, om_, o1 = om_grid[n], om_mid[n], om_grid[n + 1]
        k1p, k1s = rhs(p, s, e0, o0)
        k2p, k2s = rhs(p + 0.5 * dt * k1p, s + 0.5 * dt * k1s, em, om_)
        k3p, k3s = rhs(p + 0.5 * dt * k2p, s + 0.5 * dt * k2s, em, om_)
        k4p, k4s = rhs(p + dt * k3p, s + dt * k3s, e1, o1)
        p = p + (dt / 6) * (k1p + 2 * k2p + 2 * k3p + k4p)
        s = s + (dt / 6) * (k1s + 2 * k2s + 2 * k3s + k4s)
    out[-1] = field(p, e_in[-1])[-1]
    return PulseWaveform(t.copy(), out)


def propagate_fourier(pulse: PulseWaveform, params: EITParams, pad: int = 8) -> PulseWaveform:
    """Constant-control propagation by multiplying the spectrum with the analytic transfer."""
    n = pulse.time_grid.size
    size = 1 << int(math.ceil(math.log2(pad * n)))
    buf = np.zeros(size, complex)
    buf[:n] = pulse.amplitude
    freq = np.fft.fftfreq(size, pulse.dt)
    # numpy's inverse transform uses exp(+2 pi i f t), i.e. detuning -2 pi f
    h = field_transmission(params, params.probe_detuning - TWO_PI * freq)
    out = np.fft.ifft(np.fft.fft(buf) * h)[:n]
    return PulseWaveform(pulse.time_grid.copy(), out)


def relative_l2(a: PulseWaveform, b: PulseWaveform) -> float:
    return float(np.linalg.norm(a.amplitude - b.amplitude) / np.linalg.norm(b.amplitude))


@dataclass(frozen=True, eq=False)
class StorageResponse:
    """Photon-wise summary of one deterministic propagation.

    A photon entering at time t leaves with probability ``transmitted`` at
    time remap(t): the input and output photon densities are matched by
    their cumulative distributions, so the time order of photons (and the
    closeness of the two photons of a pair) is kept.
    """

    time_grid: np.ndarray
    input_density: np.ndarray
    output_density: np.ndarray
    transmitted: float
    input_cdf: np.ndarray = field(repr=False)
    output_cdf: np.ndarray = field(repr=False)

    @classmethod
    def from_waveforms(cls, incident: PulseWaveform, exiting: PulseWaveform) -> "StorageResponse":
        dt = incident.dt
        n_in = incident.photons()
        i_in = incident.intensity / n_in
        i_out = exiting.intensity / n_in
        transmitted = float(i_out.sum() * dt)
        if transmitted > 1 + 1e-6:
            raise ValueError("propagation created photons")
        cdf_in = _cdf(i_in)
        cdf_out = _cdf(i_out)
        return cls(incident.time_grid, i_in, i_out, min(transmitted, 1.0), cdf_in, cdf_out)

    def remap(self, t):
        u = np.interp(t, self.time_grid, self.input_cdf)
        return _interp_inverse(u, self.output_cdf, self.time_grid)

    def fraction_between(self, start, end) -> float:
        """Fraction of incident photons leaving within [start, end)."""
        sel = (self.time_grid >= start) & (self.time_grid < end)
        dt = self.time_grid[1] - self.time_grid[0]
        return float(self.output_density[sel].sum() * dt)


def _cdf(density):
    c = np.cumsum(density)
    c = c / c[-1]
    # flat stretches would make the inverse ill-defined; nudge them apart
    return np.maximum.accumulate(c + 1e-15 * np.arange(c.size))


def _interp_inverse(u, cdf, grid):
    return np.interp(u, cdf, grid)


def retrieved_fraction(incident: PulseWaveform, exiting: PulseWaveform, timeline: ControlTimeline) -> float:
    """Photons leaving after the last control turn-on, per incident photon."""
    ons = timeline.on_times()
    if not ons:
        return 0.0
    return exiting.photons(start=ons[-1]) / incident.photons()
