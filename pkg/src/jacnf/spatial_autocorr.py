"""Lag-domain spatial autocorrelation of the received snapshots.

For a quadratic-phase channel the magnitude of the windowed autocorrelation
at lag ``eta`` depends on the curvature only, ``|sinc(k p1 eta d^2 (N - xi))|``,
and not on the arrival direction. That is what lets the curvature be fitted
before the direction is searched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .array_model import ArrayConfig, ReceivedSignal


@dataclass(frozen=True)
class AutocorrSpectrum:
    """``values[eta - 1]`` holds the estimate at lag ``eta = 1..xi``."""

    values: np.ndarray
    xi: int
    window_len: int
    snapshots_used: int
    lag0_power: float = 1.0

    def __len__(self):
        return self.xi

    @property
    def lags(self) -> np.ndarray:
        return np.arange(1, self.xi + 1)

    def normalized(self, power: float) -> "AutocorrSpectrum":
        """Spectrum divided by a signal-power estimate (no-op for power <= 0)."""
        if not power > 0:
            return self
        return AutocorrSpectrum(self.values / power, self.xi, self.window_len,
                                self.snapshots_used, self.lag0_power / power)

    def to_csv(self) -> str:
        rows = ["eta,c_hat"] + [f"{eta},{float(v)!r}" for eta, v in zip(self.lags, self.values)]
        return "\n".join(rows) + "\n"


def default_xi(n_antennas: int) -> int:
    return n_antennas // 2


def _as_matrix(y) -> np.ndarray:
    if isinstance(y, ReceivedSignal):
        y = y.samples
    y = np.asarray(y, dtype=complex)
    if y.ndim == 1:
        y = y[:, None]
    if y.ndim != 2:
        raise ValueError(f"expected an N x T matrix, got shape {y.shape}")
    return y


def _check_xi(xi: int, n: int) -> int:
    if int(xi) != xi or not 1 <= xi <= n - 1:
        raise ValueError(f"lag count xi must be an integer in [1, {n - 1}], got {xi}")
    return int(xi)


def _mul_conj(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``a * conj(b)`` from separate real products.

    Unlike a fused complex multiply this is exactly invariant under a common
    rotation of ``a`` and ``b`` by a power of ``j``.
    """
    re = a.real * b.real + a.imag * b.imag
    im = a.imag * b.real - a.real * b.imag
    return re + 1j * im


def lag_products(y, xi: int) -> np.ndarray:
    """Complex window averages ``(1/T)(1/(N-xi)) sum_t sum_n Y[n,t] Y*[n-eta,t]``.

    Evaluated as a cross-correlation of the window ``Y[xi:]`` against ``Y`` via
    FFT, which keeps the cost at O(T N log N) instead of O(T N^2).
    """
    y = _as_matrix(y)
    n, t = y.shape
    xi = _check_xi(xi, n)
    w = n - xi
    nfft = scipy.fft.next_fast_len(2 * n)
    win = np.zeros((nfft, t), dtype=complex)
    win[:w] = y[xi:]
    # corr[m] = sum_i win[i] * conj(y[i - m]) (circular); lag eta <-> m = eta - xi
    spec = _mul_conj(scipy.fft.fft(win, axis=0), scipy.fft.fft(y, n=nfft, axis=0))
    corr = scipy.fft.ifft(spec, axis=0)
    m = (np.arange(1, xi + 1) - xi) % nfft
    return corr[m].sum(axis=1) / (t * w)


def lag_products_direct(y, xi: int) -> np.ndarray:
    """Reference O(T N xi) evaluation of :func:`lag_products` (summation n-major, then t)."""
    y = _as_matrix(y)
    n, t = y.shape
    xi = _check_xi(xi, n)
    w = n - xi
    out = np.empty(xi, dtype=complex)
    for eta in range(1, xi + 1):
        out[eta - 1] = np.sum(_mul_conj(y[xi:], y[xi - eta:n - eta]), axis=0).sum() / (t * w)
    return out


def autocorr_spectrum(y, xi: int | None = None) -> AutocorrSpectrum:
    """Magnitude autocorrelation spectrum ``c_hat[1..xi]``.

    The complex products are averaged over antennas and snapshots before the
    magnitude is taken. ``xi`` defaults to ``N // 2``.
    """
    y = _as_matrix(y)
    n, t = y.shape
    if xi is None:
        xi = default_xi(n)
    xi = _check_xi(xi, n)
    values = np.abs(lag_products(y, xi))
    lag0 = float(np.sum(np.abs(y[xi:]) ** 2) / (t * (n - xi)))
    return AutocorrSpectrum(values, xi, n - xi, t, lag0)


def sinc(x):
    """Unnormalized ``sin(x)/x`` with ``sinc(0) = 1``."""
    return np.sinc(np.asarray(x) / np.pi)


def sinc_argument_scale(cfg: ArrayConfig, xi: int) -> float:
    """``k d^2 (N - xi)``: the model argument per unit lag per unit p1."""
    return cfg.wavenumber * cfg.spacing_m**2 * (cfg.n_antennas - xi)


def model_autocorr(p1: float, eta, cfg: ArrayConfig, xi: int):
    """Theoretical spectrum ``|sinc(k p1 eta d^2 (N - xi))|``."""
    return np.abs(sinc(sinc_argument_scale(cfg, xi) * np.asarray(eta) * p1))
