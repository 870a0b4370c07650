import logging
import math

import pytest

from pdcstore import calibrate, eit
from pdcstore.calibrate import MediumTargets
from pdcstore.errors import CalibrationInfeasibleError


@pytest.fixture(scope="module")
def medium():
    return calibrate.calibrate_medium()


def test_recalibration_reproduces_frozen_constants(medium):
    p = medium.params
    assert p.rabi_control == pytest.approx(calibrate.REFERENCE_MEDIUM.rabi_control, rel=1e-6)
    assert p.gamma_bc == pytest.approx(calibrate.REFERENCE_MEDIUM.gamma_bc, rel=1e-4)
    assert medium.retrieval == pytest.approx(0.14, abs=1e-5)


def test_calibration_meets_window_targets(medium):
    assert medium.fwhm_hz == pytest.approx(12.6e6, rel=1e-6)
    assert medium.peak >= 0.95
    assert medium.gamma_bc_max > medium.params.gamma_bc


def test_delay_is_reported_inconsistent(medium, caplog):
    # 35 ns is out of reach at d = 7 with this window; only flagged, never fitted
    assert not medium.delay_consistent
    with caplog.at_level(logging.WARNING, logger="pdcstore.calibrate"):
        calibrate.calibrate_medium(MediumTargets(gamma_bc=medium.params.gamma_bc))
    assert "group delay" in caplog.text


def test_round_trip_through_spectrum(medium):
    assert eit.transparency_fwhm(medium.params) == pytest.approx(12.6e6, rel=1e-6)
    rows = dict(medium.as_rows())
    assert rows["fwhm_mhz"] == pytest.approx(12.6)
    assert rows["retrieved_fraction"] == pytest.approx(0.14, abs=1e-5)


def test_forced_zero_decoherence_succeeds():
    cal = calibrate.calibrate_medium(MediumTargets(gamma_bc=0.0))
    assert cal.params.gamma_bc == 0.0
    assert cal.retrieval > 0.14


def test_unreachable_retrieval_reports_closest():
    with pytest.raises(CalibrationInfeasibleError) as info:
        calibrate.calibrate_medium(MediumTargets(retrieval=0.9))
    assert info.value.closest is not None
    with pytest.raises(CalibrationInfeasibleError):
        calibrate.calibrate_medium(MediumTargets(retrieval=0.9, gamma_bc=0.0))


def test_rabi_for_fwhm_inverts_window():
    om = calibrate.rabi_for_fwhm(7.0, eit.GAMMA_D1, 0.0, 8e6)
    p = eit.EITParams(7.0, eit.GAMMA_D1, 0.0, om)
    assert eit.transparency_fwhm(p) == pytest.approx(8e6, rel=1e-6)


def test_source_calibration_frozen():
    core, tail = calibrate.calibrate_source()
    assert core == pytest.approx(calibrate.REFERENCE_CORE_MEAN, rel=1e-8)
    assert tail == pytest.approx(calibrate.REFERENCE_TAIL_FRACTION, rel=1e-8)
    m = calibrate.source_moments(core, core * tail / (1 - tail))
    assert m.g2 == pytest.approx(7.9, rel=1e-6)
    assert m.w == pytest.approx(0.77, rel=1e-6)


def test_source_w_above_pure_squeezed_is_infeasible():
    # pure squeezed vacuum at g2 = 7.9 already has w ~ 1.2, the tail only lowers it
    with pytest.raises(CalibrationInfeasibleError):
        calibrate.calibrate_source(7.9, 1.5)
