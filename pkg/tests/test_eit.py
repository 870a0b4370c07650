import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pdcstore import eit
from pdcstore.calibrate import REFERENCE_MEDIUM
from pdcstore.eit import ControlTimeline, EITParams, TWO_PI
from pdcstore.errors import IntegrationUnstableError


@pytest.fixture(scope="module")
def pulse():
    return eit.gaussian_pulse()


def test_bare_line_is_opaque():
    p = REFERENCE_MEDIUM.with_(rabi_control=0.0)
    assert eit.susceptibility_response(p, 0.0).real == pytest.approx(1.0)
    assert eit.peak_transmission(p) == pytest.approx(math.exp(-7), rel=1e-12)


def test_calibrated_window_frozen():
    assert eit.transparency_fwhm(REFERENCE_MEDIUM) == pytest.approx(12.6e6, rel=1e-6)
    assert eit.peak_transmission(REFERENCE_MEDIUM) == pytest.approx(0.98589226894519, rel=1e-9)
    assert eit.group_delay(REFERENCE_MEDIUM) == pytest.approx(16.781564449399053e-9, rel=1e-6)


def test_sampled_fwhm_matches_analytic():
    grid = np.linspace(-30e6, 30e6, 6001)
    spectrum = eit.transmission_spectrum(REFERENCE_MEDIUM, grid)
    assert eit.spectrum_fwhm(spectrum) == pytest.approx(eit.transparency_fwhm(REFERENCE_MEDIUM), rel=1e-3)


def test_group_delay_matches_small_decoherence_limit():
    p = REFERENCE_MEDIUM.with_(gamma_bc=0.0)
    approx = p.optical_depth * p.gamma_excited / p.rabi_control**2
    assert eit.group_delay(p) == pytest.approx(approx, rel=0.05)


def test_transmission_is_even_in_detuning():
    x = np.linspace(0, 50e6, 11) * TWO_PI
    np.testing.assert_allclose(eit.intensity_transmission(REFERENCE_MEDIUM, x),
                               eit.intensity_transmission(REFERENCE_MEDIUM, -x), rtol=1e-12)


def test_constant_control_matches_fourier_oracle(pulse):
    tl = ControlTimeline.constant()
    slow = eit.propagate(pulse, REFERENCE_MEDIUM, tl)
    ref = eit.propagate_fourier(pulse, REFERENCE_MEDIUM)
    assert eit.relative_l2(slow, ref) < 1e-4


def test_long_pulse_delay_matches_group_delay():
    long = eit.gaussian_pulse(fwhm=400e-9, center=1000e-9, window=(0, 2400e-9), dt=0.8e-9)
    out = eit.propagate(long, REFERENCE_MEDIUM, ControlTimeline.constant((0, 2400e-9)))
    delay = out.centroid() - long.centroid()
    assert delay == pytest.approx(eit.group_delay(REFERENCE_MEDIUM), rel=0.10)


@settings(max_examples=6, deadline=None)
@given(
    d=st.floats(min_value=0.5, max_value=15),
    rabi_mhz=st.floats(min_value=2, max_value=40),
    gbc_khz=st.floats(min_value=0, max_value=500),
)
def test_propagation_never_creates_photons(d, rabi_mhz, gbc_khz):
    p = EITParams(d, eit.GAMMA_D1, TWO_PI * gbc_khz * 1e3, TWO_PI * rabi_mhz * 1e6)
    pulse = eit.gaussian_pulse()
    out = eit.propagate(pulse, p, ControlTimeline.storage())
    assert out.photons() <= pulse.photons() * (1 + 1e-6)


def _retrieved(params, timeline, pulse):
    return eit.retrieved_fraction(pulse, eit.propagate(pulse, params, timeline), timeline)


def test_retrieval_frozen(pulse):
    assert _retrieved(REFERENCE_MEDIUM, ControlTimeline.storage(), pulse) == pytest.approx(0.14, abs=1e-6)


def test_retrieval_falls_with_decoherence(pulse):
    tl = ControlTimeline.storage()
    vals = [_retrieved(REFERENCE_MEDIUM.with_(gamma_bc=TWO_PI * g), tl, pulse) for g in (0, 50e3, 200e3)]
    assert vals[0] > vals[1] > vals[2]


def test_retrieval_falls_with_storage_time(pulse):
    vals = [_retrieved(REFERENCE_MEDIUM, ControlTimeline.storage(on=on), pulse) for on in (290e-9, 340e-9, 390e-9)]
    assert vals[0] > vals[1] > vals[2]


def test_control_off_forever_releases_nothing(pulse):
    tl = ControlTimeline.switched_off()
    out = eit.propagate(pulse, REFERENCE_MEDIUM, tl)
    # a ~1e-6 free-induction tail remains
    assert out.photons(start=300e-9) < 1e-4
    assert eit.retrieved_fraction(pulse, out, tl) == 0.0


def test_storage_response_remap_is_monotone(pulse):
    out = eit.propagate(pulse, REFERENCE_MEDIUM, ControlTimeline.storage())
    resp = eit.StorageResponse.from_waveforms(pulse, out)
    t = np.linspace(50e-9, 200e-9, 200)
    assert np.all(np.diff(resp.remap(t)) >= 0)
    assert 0 < resp.transmitted < 1
    assert resp.fraction_between(0, 1) == pytest.approx(resp.transmitted, rel=1e-9)


def test_unstable_step_is_rejected(pulse):
    with pytest.raises(IntegrationUnstableError) as info:
        eit.propagate(pulse, REFERENCE_MEDIUM.with_(optical_depth=500.0), ControlTimeline.storage())
    assert info.value.max_step < pulse.dt
    with pytest.raises(IntegrationUnstableError):
        eit.propagate(pulse, REFERENCE_MEDIUM, ControlTimeline.storage(edge_time=1e-9))


def test_too_few_z_steps(pulse):
    with pytest.raises(ValueError):
        eit.propagate(pulse, REFERENCE_MEDIUM, ControlTimeline.constant(), z_steps=10)


def test_waveform_validation():
    with pytest.raises(ValueError):
        eit.PulseWaveform(np.array([0.0, 1e-9, 3e-9]), np.ones(3))
    with pytest.raises(ValueError):
        eit.PulseWaveform(np.arange(5) * 2e-9, np.ones(5))


def test_timeline_ramps():
    tl = ControlTimeline.storage()
    assert tl.power_fraction(100e-9) == 1.0
    assert tl.power_fraction(155e-9) == pytest.approx(0.5)
    assert tl.power_fraction(300e-9) == 0.0
    assert tl.power_fraction(405e-9) == pytest.approx(0.5)
    assert tl.off_times() == [140e-9] and tl.on_times() == [390e-9]


def test_params_validation():
    with pytest.raises(ValueError):
        EITParams(0.0)
