"""Curvature (p1) estimators and the end-to-end JAC pipeline.

Pipeline: autocorrelation spectrum -> p1 (sinc inversion or gradient descent)
-> strip the quadratic phase -> MUSIC on the equivalent far-field snapshots
-> p2 -> channel and position.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
import json
import math

import numpy as np

from .array_model import (ArrayConfig, ChannelParams, FarField, SourcePosition,
                          channel_quadratic, position_from_params)
from .music import MusicConfig, estimate_p2_music
from .spatial_autocorr import (AutocorrSpectrum, autocorr_spectrum, default_xi, sinc,
                               sinc_argument_scale)

NORMALIZATIONS = ("none", "lag0")


@dataclass(frozen=True)
class IsfConfig:
    delta: float = 0.1
    xi: int | None = None

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")


@dataclass(frozen=True)
class GdConfig:
    """Gradient-descent settings.

    The iterate is the normalized curvature ``v = k xi d^2 (N - xi) p1`` (the
    sinc argument at the largest lag) and the objective is the mean, not the
    sum, of the absolute residuals, so ``alpha0`` does not depend on the array
    size or carrier. The step at iteration ``n`` is ``alpha0 / (1 + gamma (n - 1))``.
    """

    alpha0: float = 0.5
    gamma: float = 0.05
    n_itr: int = 300
    warm_start: str = "isf"
    gradient_mode: str = "analytic"
    p1_init: float = 0.0
    xi: int | None = None

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise ValueError("alpha0 must be positive")
        if not self.gamma >= 0:
            raise ValueError("gamma must be non-negative")
        if self.n_itr < 1:
            raise ValueError("n_itr must be >= 1")
        if self.warm_start not in ("none", "isf"):
            raise ValueError(f"warm_start must be 'none' or 'isf', got {self.warm_start!r}")
        if self.gradient_mode not in ("analytic", "central_difference"):
            raise ValueError(f"unknown gradient_mode {self.gradient_mode!r}")


@dataclass
class Estimate:
    p1_hat: float
    p2_hat: float
    theta_hat: float
    r_hat: float | None
    h_hat: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def far_field(self) -> bool:
        return self.r_hat is None

    @property
    def position(self) -> SourcePosition | FarField:
        if self.r_hat is None:
            return FarField(self.theta_hat)
        return SourcePosition(self.r_hat, self.theta_hat)

    def to_dict(self, h_true: np.ndarray | None = None) -> dict:
        out = {
            "p1_hat": self.p1_hat,
            "p2_hat": self.p2_hat,
            "theta_deg": math.degrees(self.theta_hat),
            "r_m": "far_field" if self.r_hat is None else self.r_hat,
        }
        if h_true is not None:
            from .metrics import nmse
            out["nmse_db"] = 10 * math.log10(max(nmse(h_true, self.h_hat), 1e-300))
        out["diagnostics"] = self.diagnostics
        return out

    def to_json(self, h_true: np.ndarray | None = None) -> str:
        return json.dumps(self.to_dict(h_true), indent=2, default=_json_default)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


# --- sinc inversion ---------------------------------------------------------

def arcsinc(c, clamp_tol: float = 1e-9):
    """Inverse of ``sin(y)/y`` on its monotone branch ``y in [-pi, 0]``.

    Vectorized bisection; ``arcsinc(1) = 0`` and ``arcsinc(0) = -pi``.
    """
    c = np.asarray(c, dtype=float)
    if np.any(~np.isfinite(c)) or np.any(c < -clamp_tol) or np.any(c > 1 + clamp_tol):
        raise ValueError("arcsinc is defined on [0, 1]")
    c = np.clip(c, 0.0, 1.0)
    lo = np.full(c.shape, -math.pi)  # sinc(lo) <= c
    hi = np.zeros(c.shape)           # sinc(hi) >= c
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        below = sinc(mid) < c
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(lo))):
            break
    y = np.where(c >= 1.0, 0.0, np.where(c <= 0.0, -math.pi, 0.5 * (lo + hi)))
    return float(y) if y.ndim == 0 else y


def mainlobe_cutoff(c_hat, delta: float = 0.1) -> int:
    """First lag whose spectrum value is at or below ``delta``, else ``xi``."""
    values = c_hat.values if isinstance(c_hat, AutocorrSpectrum) else np.asarray(c_hat)
    below = np.flatnonzero(values <= delta)
    return int(below[0]) + 1 if below.size else len(values)


def estimate_p1_isf(c_hat: AutocorrSpectrum, cfg: ArrayConfig, isf: IsfConfig | None = None):
    """Average of per-lag sinc inversions over the retained main lobe.

    Returns ``(p1_hat, n_eta)``.
    """
    isf = isf or IsfConfig()
    n_eta = mainlobe_cutoff(c_hat, isf.delta)
    lags = np.arange(1, n_eta + 1)
    vals = np.minimum(c_hat.values[:n_eta], 1.0)
    scale = sinc_argument_scale(cfg, c_hat.xi)
    p1 = float(np.mean(arcsinc(vals) / (scale * lags)))
    return p1, n_eta


# --- gradient descent -------------------------------------------------------

def _spectrum_values(c_hat) -> np.ndarray:
    return c_hat.values if isinstance(c_hat, AutocorrSpectrum) else np.asarray(c_hat, dtype=float)


def gd_loss(p1: float, c_hat, cfg: ArrayConfig, xi: int | None = None) -> float:
    """``sum_eta | c_hat[eta] - |sinc(k p1 eta d^2 (N - xi))| |``."""
    values = _spectrum_values(c_hat)
    xi = len(values) if xi is None else xi
    a = sinc_argument_scale(cfg, xi) * np.arange(1, len(values) + 1)
    return float(np.sum(np.abs(values - np.abs(sinc(a * p1)))))


def _sinc_slope(x: np.ndarray) -> np.ndarray:
    """d sinc / dx, exactly 0 at x = 0."""
    out = np.zeros_like(x)
    nz = x != 0
    xs = x[nz]
    out[nz] = (np.cos(xs) * xs - np.sin(xs)) / (xs * xs)
    return out


def gd_gradient(p1: float, c_hat, cfg: ArrayConfig, xi: int | None = None,
                mode: str = "analytic") -> float:
    """Derivative of :func:`gd_loss` with respect to ``p1``.

    ``sign(0) = 0`` throughout, so residual-free and zero-crossing lags do not
    contribute. ``central_difference`` uses the step ``1e-9 * max(1, |p1|)``.
    """
    values = _spectrum_values(c_hat)
    xi = len(values) if xi is None else xi
    if mode == "central_difference":
        h = 1e-9 * max(1.0, abs(p1))
        return (gd_loss(p1 + h, values, cfg, xi) - gd_loss(p1 - h, values, cfg, xi)) / (2 * h)
    if mode != "analytic":
        raise ValueError(f"unknown gradient mode {mode!r}")
    a = sinc_argument_scale(cfg, xi) * np.arange(1, len(values) + 1)
    x = a * p1
    s = sinc(x)
    terms = -np.sign(values - np.abs(s)) * np.sign(s) * a * _sinc_slope(x)
    return float(np.sum(terms))


def estimate_p1_gd(c_hat: AutocorrSpectrum, cfg: ArrayConfig, gd: GdConfig | None = None,
                   isf: IsfConfig | None = None):
    """Inverse-time-decay gradient descent on the L1 spectrum fit.

    Returns ``(p1_hat, diagnostics)`` where ``p1_hat`` is the visited iterate
    with the lowest loss; the starting point counts as visited.
    """
    gd = gd or GdConfig()
    xi = c_hat.xi
    values = c_hat.values
    if gd.warm_start == "isf":
        p1, _ = estimate_p1_isf(c_hat, cfg, isf or IsfConfig(xi=xi))
    else:
        p1 = float(gd.p1_init)
    scale = sinc_argument_scale(cfg, xi) * xi  # v = scale * p1
    v = scale * p1
    best_p1, best_loss = p1, gd_loss(p1, values, cfg, xi)
    init_loss = best_loss
    status = "ok"
    it = 0
    for it in range(1, gd.n_itr + 1):
        grad = gd_gradient(v / scale, values, cfg, xi, gd.gradient_mode)
        if not math.isfinite(grad):
            status = "non_finite_gradient"
            break
        alpha = gd.alpha0 / (1 + gd.gamma * (it - 1))
        v -= alpha * grad / (scale * xi)  # dLoss_mean/dv = dLoss/dp1 / (scale * xi)
        loss = gd_loss(v / scale, values, cfg, xi)
        if loss < best_loss:
            best_p1, best_loss = v / scale, loss
    return best_p1, {"initial_loss": init_loss, "final_loss": best_loss, "iterations": it,
                     "status": status}


# --- pipeline ---------------------------------------------------------------

def equivalent_farfield(y: np.ndarray, p1_hat: float, cfg: ArrayConfig,
                        flip_compensation_sign: bool = False) -> np.ndarray:
    """Remove the estimated quadratic phase: ``exp(-jk p1_hat x_n^2) Y[n, t]``.

    ``flip_compensation_sign=True`` multiplies by ``exp(+jk p1_hat x_n^2)``, which
    doubles the curvature instead of removing it; kept for comparison only.
    """
    x = cfg.positions
    sign = 1.0 if flip_compensation_sign else -1.0
    comp = np.exp(sign * 1j * cfg.wavenumber * p1_hat * x * x)
    y = np.asarray(y, dtype=complex)
    return comp[:, None] * y if y.ndim == 2 else comp * y


def _power_estimate(c_hat: AutocorrSpectrum, normalize: str) -> float:
    if normalize == "none":
        return 1.0
    if normalize == "lag0":
        return c_hat.lag0_power
    raise ValueError(f"normalize must be one of {NORMALIZATIONS}, got {normalize!r}")


def jac_estimate(y, cfg: ArrayConfig, method: str = "gd", isf_cfg: IsfConfig | None = None,
                 gd_cfg: GdConfig | None = None, music_cfg: MusicConfig | None = None,
                 normalize: str = "none", p1_floor: float = 1e-9,
                 flip_compensation_sign: bool = False) -> Estimate:
    """Joint autocorrelation / cross-correlation channel and position estimate.

    ``method`` is ``"isf"``, ``"gd"`` or ``"music"`` (no curvature stage,
    far-field MUSIC only). ``normalize`` chooses the power reference the
    spectrum is divided by before fitting: ``"none"`` assumes unit transmit
    power; ``"lag0"`` divides by the zero-lag power, which includes the
    noise power and therefore shrinks the spectrum at low SNR.
    """
    y = np.asarray(getattr(y, "samples", y), dtype=complex)
    if y.ndim == 1:
        y = y[:, None]
    if y.shape[0] != cfg.n_antennas:
        raise ValueError(f"signal has {y.shape[0]} rows, array has {cfg.n_antennas} antennas")
    isf_cfg = isf_cfg or IsfConfig()
    gd_cfg = gd_cfg or GdConfig()
    xi = isf_cfg.xi if method == "isf" else gd_cfg.xi
    xi = default_xi(cfg.n_antennas) if xi is None else xi
    diag: dict = {"method_tag": f"jac_{method}" if method != "music" else "music_only", "xi": xi}

    if method == "music":
        p1 = 0.0
    else:
        c_hat = autocorr_spectrum(y, xi)
        c_hat = c_hat.normalized(_power_estimate(c_hat, normalize))
        if method == "isf":
            p1, n_eta = estimate_p1_isf(c_hat, cfg, isf_cfg)
            diag.update(n_eta=n_eta, final_loss=gd_loss(p1, c_hat, cfg, xi), iterations=0)
        elif method == "gd":
            p1, gd_diag = estimate_p1_gd(c_hat, cfg, gd_cfg, IsfConfig(isf_cfg.delta, xi))
            diag.update(n_eta=mainlobe_cutoff(c_hat, isf_cfg.delta), **gd_diag)
        else:
            raise ValueError(f"unknown method {method!r}; expected 'isf', 'gd' or 'music'")

    y_tilde = equivalent_farfield(y, p1, cfg, flip_compensation_sign) if p1 != 0 else y
    p2 = estimate_p2_music(y_tilde, cfg, music_cfg)
    par = ChannelParams(p1, p2)
    h_hat = channel_quadratic(cfg, par)
    pos = position_from_params(par, p1_floor)
    r_hat = None if isinstance(pos, FarField) else pos.r_m
    return Estimate(p1, p2, pos.theta_rad, r_hat, h_hat, diag)
