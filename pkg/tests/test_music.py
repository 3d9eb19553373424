import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jacnf.array_model import ArrayConfig, ChannelParams, channel_farfield, channel_quadratic
from jacnf.music import (MusicConfig, PowerIterationError, beam_power, beam_power_direct,
                         dominant_eigenvector, estimate_p2_music, p2_grid, pseudospectrum,
                         sample_covariance, spectrum_csv)

CFG = ArrayConfig(64, ideal_c=True)


def _snapshots(p2, t=4, snr_db=None, seed=0, cfg=CFG):
    rng = np.random.default_rng(seed)
    s = np.exp(1j * rng.uniform(0, 2 * np.pi, t))
    y = np.outer(channel_farfield(cfg, p2), np.conj(s))
    if snr_db is not None:
        sigma = math.sqrt(10 ** (-snr_db / 10) / 2)
        y = y + sigma * (rng.normal(size=y.shape) + 1j * rng.normal(size=y.shape))
    return y


def test_grid_is_open_and_uniform():
    g = p2_grid(8)
    assert np.allclose(g, [-0.875, -0.625, -0.375, -0.125, 0.125, 0.375, 0.625, 0.875])
    assert g.min() > -1 and g.max() < 1


def test_config_validation():
    with pytest.raises(ValueError):
        MusicConfig(grid_size=8)
    with pytest.raises(ValueError):
        MusicConfig(signal_dim=2)


def test_power_iteration_matches_eigh():
    rng = np.random.default_rng(3)
    y = _snapshots(0.3, t=16, snr_db=0.0, seed=4)
    u, lam, it = dominant_eigenvector(y)
    w, v = np.linalg.eigh(sample_covariance(y))
    assert lam == pytest.approx(w[-1], rel=1e-10)
    assert abs(np.vdot(v[:, -1], u)) == pytest.approx(1.0, abs=1e-10)
    assert np.linalg.norm(u) == pytest.approx(1.0)
    assert it >= 1
    del rng


def test_power_iteration_rank_one_converges_immediately():
    u, lam, it = dominant_eigenvector(_snapshots(-0.4, t=3))
    assert it == 1 and lam == pytest.approx(64.0)


def test_power_iteration_errors():
    with pytest.raises(PowerIterationError):
        dominant_eigenvector(np.zeros((8, 2), dtype=complex))
    # two equal-power orthogonal sources: no dominant direction
    a = channel_farfield(CFG, 0.0)
    b = channel_farfield(CFG, 2 / 64 * 2)  # orthogonal DFT beam
    y = np.stack([a, b], axis=1)
    with pytest.raises(PowerIterationError) as exc:
        dominant_eigenvector(y + 1e-3 * np.stack([b, a], axis=1), max_iter=5)
    assert exc.value.iterations == 5


def test_sample_covariance_hermitian():
    r = sample_covariance(_snapshots(0.2, t=5, snr_db=3.0))
    assert np.allclose(r, r.conj().T)


@pytest.mark.parametrize("grid", [64, 1000, 4096])
def test_czt_scan_matches_direct(grid):
    rng = np.random.default_rng(grid)
    u = rng.normal(size=64) + 1j * rng.normal(size=64)
    u /= np.linalg.norm(u)
    fast = beam_power(u, CFG, grid)
    slow = beam_power_direct(u, CFG, p2_grid(grid))
    assert np.max(np.abs(fast - slow)) < 1e-10


def test_pseudospectrum_positive():
    u, _, _ = dominant_eigenvector(_snapshots(0.1, snr_db=5.0))
    ps = pseudospectrum(u, CFG, 512)
    assert np.all(ps > 0) and np.all(np.isfinite(ps))


@settings(max_examples=50, deadline=None)
@given(p2=st.floats(-0.95, 0.95))
def test_noiseless_estimate_sub_cell(p2):
    est = estimate_p2_music(_snapshots(p2), CFG, MusicConfig(grid_size=1024))
    assert est == pytest.approx(p2, abs=1e-4)


def test_refinement_beats_grid():
    p2 = 0.123456
    coarse = estimate_p2_music(_snapshots(p2), CFG, MusicConfig(grid_size=256, refine=False))
    fine = estimate_p2_music(_snapshots(p2), CFG, MusicConfig(grid_size=256))
    assert abs(fine - p2) < abs(coarse - p2)
    assert abs(coarse - p2) <= 1 / 256 + 1e-12


def test_broadside_refines_to_zero():
    assert estimate_p2_music(_snapshots(0.0), CFG) == pytest.approx(0.0, abs=1e-12)


def test_noisy_estimate():
    est = estimate_p2_music(_snapshots(-0.5, t=16, snr_db=0.0, seed=9), CFG)
    assert est == pytest.approx(-0.5, abs=5e-3)


def test_curvature_biases_far_field_music():
    # without compensation the curvature spreads the beam; compensation is the estimator's job
    cfg = ArrayConfig(200, ideal_c=True)
    h = channel_quadratic(cfg, ChannelParams(-0.04, 0.3))
    p2, grid, spec = estimate_p2_music(h, cfg, return_spectrum=True)
    assert len(grid) == len(spec) == 4096
    assert abs(p2 - 0.3) > 1e-3


def test_spectrum_csv():
    text = spectrum_csv(np.array([0.5]), np.array([2.0]))
    assert text == "p2,power\n0.5,2.0\n"
