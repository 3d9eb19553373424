import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jacnf.array_model import (ArrayConfig, ChannelParams, SourcePosition, channel_quadratic,
                               params_from_position, synthesize_received)
from jacnf.spatial_autocorr import (autocorr_spectrum, default_xi, lag_products,
                                    lag_products_direct, model_autocorr, sinc, sinc_argument_scale)

CFG = ArrayConfig(200, ideal_c=True)


def _rank_one(h, t=3, seed=0):
    rng = np.random.default_rng(seed)
    s = np.exp(1j * rng.uniform(0, 2 * np.pi, t))
    return np.outer(h, np.conj(s))


def test_sinc_basics():
    assert sinc(0.0) == 1.0
    assert sinc(math.pi) == pytest.approx(0.0, abs=1e-16)
    assert sinc(1.0) == pytest.approx(math.sin(1.0))
    assert sinc(-2.0) == sinc(2.0)


def test_default_xi():
    assert default_xi(200) == 100
    assert default_xi(7) == 3


@pytest.mark.parametrize("n,t,xi", [(8, 1, 1), (17, 3, 8), (64, 5, 40), (200, 2, 199)])
def test_fft_matches_direct_sum(n, t, xi):
    rng = np.random.default_rng(n * 31 + t)
    y = rng.normal(size=(n, t)) + 1j * rng.normal(size=(n, t))
    assert np.allclose(lag_products(y, xi), lag_products_direct(y, xi), rtol=0, atol=1e-12)


@pytest.mark.parametrize("xi", [0, 200, 2.5])
def test_xi_bounds(xi):
    y = np.ones((200, 2), dtype=complex)
    with pytest.raises(ValueError):
        autocorr_spectrum(y, xi)


def test_spectrum_fields_and_csv():
    y = _rank_one(channel_quadratic(CFG, ChannelParams(-0.02, 0.1)))
    spec = autocorr_spectrum(y)
    assert spec.xi == 100 and spec.window_len == 100 and spec.snapshots_used == 3
    assert len(spec) == 100
    assert list(spec.lags[:3]) == [1, 2, 3]
    assert spec.lag0_power == pytest.approx(1.0)
    lines = spec.to_csv().splitlines()
    assert lines[0] == "eta,c_hat" and len(lines) == 101
    assert spec.normalized(2.0).values[0] == pytest.approx(spec.values[0] / 2)


def test_farfield_spectrum_is_flat():
    y = _rank_one(channel_quadratic(CFG, ChannelParams(0.0, 0.4)))
    assert np.allclose(autocorr_spectrum(y).values, 1.0, atol=1e-12)


def test_quadratic_model_matches_exactly():
    # |(1/W) sum exp(jk p1 (2 n eta d^2 - eta^2 d^2))| over the window is a Dirichlet
    # kernel; the sinc model agrees to O(1/W) in the argument
    par = params_from_position(SourcePosition.from_degrees(15, 25))
    spec = autocorr_spectrum(_rank_one(channel_quadratic(CFG, par)))
    model = model_autocorr(par.p1, spec.lags, CFG, spec.xi)
    assert np.max(np.abs(spec.values - model)) < 2e-3


def test_sinc_argument_scale():
    assert sinc_argument_scale(CFG, 100) == pytest.approx(2 * math.pi / 0.01 * 0.005**2 * 100)


@settings(max_examples=60, deadline=None)
@given(p1=st.floats(-0.05, -1e-4), p2a=st.floats(-0.95, 0.95), p2b=st.floats(-0.95, 0.95),
       phase=st.floats(0, 2 * math.pi))
def test_spectrum_independent_of_direction(p1, p2a, p2b, phase):
    ya = _rank_one(channel_quadratic(CFG, ChannelParams(p1, p2a)))
    yb = _rank_one(channel_quadratic(CFG, ChannelParams(p1, p2b))) * np.exp(1j * phase)
    assert np.max(np.abs(autocorr_spectrum(ya).values - autocorr_spectrum(yb).values)) < 1e-9


def test_rotation_by_j_is_bit_identical():
    sig = synthesize_received(CFG, SourcePosition.from_degrees(20, 10), 4, 10.0, seed=3)
    base = autocorr_spectrum(sig.samples).values
    for rot in (1j, -1, -1j):
        assert np.array_equal(autocorr_spectrum(sig.samples * rot).values, base)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), t=st.integers(1, 6))
def test_spectrum_bounded_for_unit_modulus(seed, t):
    rng = np.random.default_rng(seed)
    y = np.exp(1j * rng.uniform(0, 2 * np.pi, (64, t)))
    vals = autocorr_spectrum(y).values
    assert np.all(vals >= 0) and np.all(vals <= 1 + 1e-12)


def test_noise_lowers_spectrum_on_average():
    pos = SourcePosition.from_degrees(40, 0)
    clean = autocorr_spectrum(synthesize_received(CFG, pos, 32, seed=0, model_tag="quadratic").samples)
    noisy = autocorr_spectrum(synthesize_received(CFG, pos, 32, 0.0, seed=0, model_tag="quadratic").samples)
    assert np.mean(np.abs(noisy.values - clean.values)) < 0.05
    assert noisy.lag0_power == pytest.approx(2.0, rel=0.05)
