"""Single-source MUSIC for the direction parameter ``p2 = sin(theta)``.

With one source the signal subspace is the dominant eigenvector ``u`` of the
sample covariance, so the noise projector is ``I - u u^H`` and the MUSIC
denominator reduces to ``N - |a^H u|^2``. ``u`` comes from power iteration on
``R = Y Y^H / T`` applied as ``Y (Y^H v) / T``; the covariance is never formed.
The scan over the uniform ``p2`` grid is a chirp-z transform of ``u``.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy.signal import czt

from .array_model import ArrayConfig


class PowerIterationError(RuntimeError):
    def __init__(self, message, iterations, residual):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


@dataclass(frozen=True)
class MusicConfig:
    grid_size: int = 4096
    refine: bool = True
    signal_dim: int = 1
    tol: float = 1e-12
    max_iter: int = 10_000

    def __post_init__(self):
        if self.grid_size < 16:
            raise ValueError(f"grid_size must be >= 16, got {self.grid_size}")
        if self.signal_dim != 1:
            # multi-source MUSIC is a non-goal; the config field is kept for the record
            raise ValueError("only signal_dim=1 is supported")


def p2_grid(grid_size: int) -> np.ndarray:
    """Open grid over (-1, 1): ``-1 + (2g + 1) / G``."""
    return -1 + (2 * np.arange(grid_size) + 1) / grid_size


def sample_covariance(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=complex)
    r = y @ y.conj().T / y.shape[1]
    return (r + r.conj().T) / 2


def dominant_eigenvector(y: np.ndarray, tol: float = 1e-12, max_iter: int = 10_000):
    """Power iteration on ``Y Y^H / T``; returns ``(u, eigenvalue, iterations)``.

    Starts from the largest-norm snapshot. Converged once the eigen-residual
    ``||R u - lambda u||`` drops below ``tol * lambda``.
    """
    y = np.asarray(y, dtype=complex)
    t = y.shape[1]
    col = int(np.argmax(np.sum(y.real**2 + y.imag**2, axis=0)))
    v = y[:, col].copy()
    norm = np.linalg.norm(v)
    if norm == 0:
        raise PowerIterationError("received matrix is identically zero", 0, math.inf)
    v /= norm
    res = math.inf
    for it in range(1, max_iter + 1):
        w = y @ (y.conj().T @ v) / t
        lam = float(np.vdot(v, w).real)
        res = float(np.linalg.norm(w - lam * v))
        if res <= tol * lam:
            return v, lam, it
        v = w / np.linalg.norm(w)
    raise PowerIterationError(
        f"power iteration did not converge in {max_iter} iterations (residual {res:.3e})",
        max_iter, res)


def beam_power(u: np.ndarray, cfg: ArrayConfig, grid_size: int) -> np.ndarray:
    """``|a(p2)^H u|^2`` over :func:`p2_grid`, with ``a[n] = exp(jk p2 n d)``."""
    kd = cfg.wavenumber * cfg.spacing_m
    step = 2.0 / grid_size
    p2_first = -1 + 1.0 / grid_size
    # sum_m u[m] z_g^-m with z_g = exp(j kd p2_g); the n = m + 1 offset is a unit-modulus factor
    vals = czt(u, m=grid_size, w=np.exp(-1j * kd * step), a=np.exp(1j * kd * p2_first))
    return vals.real**2 + vals.imag**2


def beam_power_direct(u: np.ndarray, cfg: ArrayConfig, p2: np.ndarray) -> np.ndarray:
    a = np.exp(1j * cfg.wavenumber * np.outer(cfg.positions, p2))
    return np.abs(a.conj().T @ u) ** 2


def pseudospectrum(u: np.ndarray, cfg: ArrayConfig, grid_size: int) -> np.ndarray:
    """MUSIC pseudospectrum ``1 / (a^H (I - u u^H) a)`` on the grid."""
    denom = cfg.n_antennas - beam_power(u, cfg, grid_size)
    return 1.0 / np.maximum(denom, np.finfo(float).tiny)


def _parabolic_offset(ym, y0, yp) -> float:
    curv = ym - 2 * y0 + yp
    if curv == 0:
        return 0.0
    return float(np.clip(0.5 * (ym - yp) / curv, -0.5, 0.5))


def estimate_p2_music(y_tilde: np.ndarray, cfg: ArrayConfig, mcfg: MusicConfig | None = None,
                      return_spectrum: bool = False):
    """Grid-search MUSIC estimate of ``p2`` from (equivalent far-field) snapshots.

    Refinement interpolates the MUSIC denominator ``N - |a^H u|^2`` with a
    parabola through the peak and its two neighbours. The pseudospectrum
    itself has a pole at the true direction for noiseless data, so a
    parabola in its logarithm is strongly biased; the denominator is smooth.
    """
    mcfg = mcfg or MusicConfig()
    y_tilde = np.asarray(y_tilde, dtype=complex)
    if y_tilde.ndim == 1:
        y_tilde = y_tilde[:, None]
    u, _, _ = dominant_eigenvector(y_tilde, mcfg.tol, mcfg.max_iter)
    power = beam_power(u, cfg, mcfg.grid_size)
    grid = p2_grid(mcfg.grid_size)
    g = int(np.argmax(power))
    p2 = grid[g]
    if mcfg.refine and 0 < g < mcfg.grid_size - 1:
        denom = cfg.n_antennas - power[g - 1:g + 2]
        # vertex of the parabola through the denominator (a minimum)
        p2 = grid[g] + _parabolic_offset(-denom[0], -denom[1], -denom[2]) * (2.0 / mcfg.grid_size)
    p2 = float(np.clip(p2, -1 + 1e-12, 1 - 1e-12))
    if return_spectrum:
        return p2, grid, 1.0 / np.maximum(cfg.n_antennas - power, np.finfo(float).tiny)
    return p2


def spectrum_csv(grid: np.ndarray, power: np.ndarray) -> str:
    return "p2,power\n" + "".join(f"{float(a)!r},{float(b)!r}\n" for a, b in zip(grid, power))
