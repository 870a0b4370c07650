import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pdcstore import fock
from pdcstore.errors import TruncationError

means = st.floats(min_value=1e-3, max_value=0.5)
survivals = st.floats(min_value=0.05, max_value=1.0)


@pytest.mark.parametrize("n", [0.01, 0.0735, 0.2, 0.5])
def test_squeezed_closed_form_moments(n):
    m = fock.factorial_moments(fock.squeezed_vacuum(n))
    assert m.m1 == pytest.approx(n, rel=1e-12)
    assert m.m2 == pytest.approx(3 * n**2 + n, rel=1e-12)
    assert m.m3 == pytest.approx(15 * n**3 + 9 * n**2, rel=1e-10)


def test_squeezed_is_even_and_normalized():
    d = fock.squeezed_vacuum(0.3)
    assert np.all(d.probs[1::2] == 0)
    assert math.fsum(d.probs) == pytest.approx(1.0, abs=1e-12)
    # P(2) = (1/2) tanh^2 r / cosh r
    t2 = 0.3 / 1.3
    assert d.probs[2] == pytest.approx(0.5 * t2 / math.sqrt(1.3), rel=1e-12)


@pytest.mark.parametrize("ctor,g2", [(fock.coherent, 1.0), (fock.thermal, 2.0)])
def test_reference_states_g2(ctor, g2):
    assert fock.g2_zero(ctor(0.4)) == pytest.approx(g2, rel=1e-12)


def test_coherent_w_is_one():
    assert fock.witness_w(fock.coherent(0.7)) == pytest.approx(1.0, rel=1e-12)


def test_fock_state_moments():
    m = fock.factorial_moments(fock.fock_state(3))
    assert (m.m1, m.m2, m.m3) == (3.0, 6.0, 6.0)
    assert fock.factorial_moments(fock.fock_state(1)).m2 == 0.0
    assert math.isnan(fock.witness_w(fock.fock_state(1)))


def test_truncation_error_names_n_max():
    with pytest.raises(TruncationError, match="n_max=24"):
        fock.squeezed_vacuum(0.5, n_max=24)
    with pytest.raises(TruncationError):
        fock.thermal(10.0, n_max=30)


def test_default_cutoff_keeps_tail_below_bound():
    for ctor in (fock.squeezed_vacuum, fock.thermal, fock.coherent):
        assert ctor(0.5).tail <= fock.TAIL_BOUND


def test_invalid_distribution():
    with pytest.raises(ValueError):
        fock.FockDistribution(np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        fock.FockDistribution(np.array([1.1, -0.1]))


def test_probs_are_read_only():
    d = fock.coherent(0.1)
    with pytest.raises(ValueError):
        d.probs[0] = 0.0


@settings(max_examples=40, deadline=None)
@given(n=means, eta=survivals, kind=st.sampled_from(["squeezed", "coherent", "thermal"]))
def test_thinning_preserves_normalized_moments(n, eta, kind):
    ctor = {"squeezed": fock.squeezed_vacuum, "coherent": fock.coherent, "thermal": fock.thermal}[kind]
    d = ctor(n)
    a, b = fock.factorial_moments(d), fock.factorial_moments(fock.thin(d, eta))
    assert b.m1 == pytest.approx(eta * a.m1, rel=1e-9)
    assert b.g2 == pytest.approx(a.g2, rel=1e-9)
    assert b.w == pytest.approx(a.w, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(
    amps=st.lists(st.floats(min_value=0.05, max_value=3.0), min_size=1, max_size=5),
    weights=st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=5, max_size=5),
)
def test_classical_mixtures_satisfy_w_and_alpha_bounds(amps, weights):
    # any coherent-state mixture has a non-negative P function
    mix = fock.mixture([fock.coherent(a) for a in amps], weights[: len(amps)])
    m = fock.factorial_moments(mix)
    assert m.w >= 1 - 1e-9
    _, alpha = fock.heralded_observables(mix)
    assert alpha >= 1 - 1e-9


def test_thermal_mixture_exceeds_bound():
    assert fock.witness_w(fock.thermal(0.3)) == pytest.approx(1.5, rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(n=st.floats(min_value=1e-3, max_value=0.228))
def test_squeezed_witness_below_one_at_low_mean(n):
    assert fock.witness_w(fock.squeezed_vacuum(n)) < 1


def test_squeezed_witness_exceeds_one_at_high_mean():
    # w = n (15n + 9) / (3n + 1)^2 crosses 1 where 6n^2 + 3n - 1 = 0
    root = (math.sqrt(33) - 3) / 12
    assert fock.witness_w(fock.squeezed_vacuum(root)) == pytest.approx(1.0, rel=1e-10)
    assert fock.witness_w(fock.squeezed_vacuum(0.5)) > 1


@pytest.mark.parametrize("n", [0.01, 0.02, 0.05, 0.1])
def test_heralded_oracle_lossless_squeezed(n):
    g2_t1, alpha = fock.heralded_observables(fock.squeezed_vacuum(n))
    assert g2_t1 == pytest.approx(3 + 1 / n, rel=1e-10)
    m = fock.factorial_moments(fock.squeezed_vacuum(n))
    assert alpha == pytest.approx(m.w, rel=1e-10)


def test_heralded_oracle_frozen_value():
    g2_t1, alpha = fock.heralded_observables(fock.squeezed_vacuum(0.02))
    assert g2_t1 == pytest.approx(53.0, rel=1e-12)
    assert alpha == pytest.approx(0.16553933784264863, rel=1e-9)


@settings(max_examples=15, deadline=None)
@given(
    n=st.floats(min_value=0.005, max_value=0.2),
    split_t=st.floats(min_value=0.1, max_value=0.9),
    split_s=st.floats(min_value=0.1, max_value=0.9),
    eff=st.tuples(survivals, survivals, survivals),
)
def test_heralded_oracle_is_efficiency_independent(n, split_t, split_s, eff):
    d = fock.convolve(fock.squeezed_vacuum(n, 32), fock.coherent(n / 3, 32))
    m = fock.factorial_moments(d)
    g2_t1, alpha = fock.heralded_observables(d, split_t, split_s, *eff)
    assert g2_t1 == pytest.approx(m.g2, rel=1e-8)
    assert alpha == pytest.approx(m.w, rel=1e-8)


def test_convolve_adds_means():
    d = fock.convolve(fock.coherent(0.2), fock.coherent(0.3))
    assert fock.factorial_moments(d).m1 == pytest.approx(0.5, rel=1e-12)
    assert fock.g2_zero(d) == pytest.approx(1.0, rel=1e-10)


def test_compound_pairs_limits():
    pairs = fock.pair_number_distribution(fock.squeezed_vacuum(0.1))
    full = fock.compound_pairs(pairs, (0.0, 0.0, 1.0))
    np.testing.assert_allclose(full.probs[: 65], fock.squeezed_vacuum(0.1).probs, atol=1e-15)
    s = 0.4
    thinned = fock.compound_pairs(pairs, ((1 - s) ** 2, 2 * s * (1 - s), s * s))
    ref = fock.thin(fock.squeezed_vacuum(0.1), s)
    np.testing.assert_allclose(thinned.probs[: ref.probs.size], ref.probs, atol=1e-14)


def test_pair_number_rejects_odd_states():
    with pytest.raises(ValueError):
        fock.pair_number_distribution(fock.coherent(0.1))


def test_routing_probabilities_validation():
    assert fock.routing_probabilities(0.5, 0.5, 1, 1, 1) == (0.5, 0.25, 0.25)
    with pytest.raises(ValueError):
        fock.routing_probabilities(0.0, 0.5, 1, 1, 1)
    with pytest.raises(ValueError):
        fock.routing_probabilities(0.5, 0.5, 1.2, 1, 1)
