"""Beamforming rate, channel NMSE and localization error."""

from __future__ import annotations

from dataclasses import dataclass
import math
from typing import Iterable, Sequence

import numpy as np

from .array_model import ChannelParams, SourcePosition


def rate_max(ps: float, sigma2: float, n: int) -> float:
    """Perfect-CSI rate ``log2(1 + Ps N / sigma2)``."""
    return math.log2(1 + ps * n / sigma2)


def achievable_rate(h: np.ndarray, h_hat: np.ndarray, ps: float, sigma2: float, n: int | None = None) -> float:
    """Rate when combining with ``h_hat``.

    The beamforming gain ``|h^H h_hat|^2 / (||h_hat||^2 ||h||^2)`` is
    normalized by both norms, so ``h_hat = h`` reaches :func:`rate_max`.
    """
    h = np.asarray(h)
    h_hat = np.asarray(h_hat)
    n = len(h) if n is None else n
    nh = np.vdot(h_hat, h_hat).real
    if not nh > 0:
        raise ValueError("estimated channel is zero")
    gain = abs(np.vdot(h, h_hat)) ** 2 / (nh * np.vdot(h, h).real)
    return math.log2(1 + ps * n / sigma2 * min(gain, 1.0))


def nmse(h: np.ndarray, h_hat: np.ndarray) -> float:
    h = np.asarray(h)
    return float(np.sum(np.abs(h - np.asarray(h_hat)) ** 2) / np.sum(np.abs(h) ** 2))


def aggregate_nmse(values: Iterable[float]) -> float:
    """Mean NMSE over trials, in dB."""
    values = np.asarray(list(values), dtype=float)
    return 10 * math.log10(float(np.mean(values)))


def rmse_position(pairs: Sequence[tuple]) -> float:
    """Root-mean-square Euclidean error over ``(p, p_hat)`` pairs.

    Positions are :class:`SourcePosition` or cartesian ``(p_x, p_z)`` tuples;
    ``None`` estimates (unresolved range) are skipped.
    """
    errs = [_sq_dist(p, q) for p, q in pairs if q is not None]
    if not errs:
        raise ValueError("no resolved trials to average")
    return math.sqrt(sum(errs) / len(errs))


def mse_position(pairs: Sequence[tuple]) -> float:
    return rmse_position(pairs) ** 2


def rmse_scalar(pairs: Sequence[tuple[float, float | None]]) -> float:
    errs = [(v - w) ** 2 for v, w in pairs if w is not None]
    if not errs:
        raise ValueError("no resolved trials to average")
    return math.sqrt(sum(errs) / len(errs))


def _xy(p) -> np.ndarray:
    if isinstance(p, SourcePosition):
        return np.array(p.cartesian)
    return np.asarray(p, dtype=float)


def _sq_dist(p, q) -> float:
    return float(np.sum((_xy(p) - _xy(q)) ** 2))


@dataclass
class TrialOutcome:
    params: ChannelParams
    position: SourcePosition
    h: np.ndarray
    estimate: object
    rate_bps_hz: float
    nmse: float
    pos_err2_m2: float | None
