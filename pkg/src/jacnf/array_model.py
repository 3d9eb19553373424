"""Uniform linear array geometry, near-field channel synthesis and parameter maps.

Antenna ``n`` (1-based) sits at ``x_n = n * d`` on the x-axis; the phase
reference is the origin. A single-antenna user at distance ``r`` and
elevation ``theta`` sits at ``(r sin(theta), 0, r cos(theta))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

SPEED_OF_LIGHT = 299792458.0
"Physical speed of light, m/s."

IDEAL_SPEED_OF_LIGHT = 3e8
"Round-number speed of light (lambda = 1 cm at 30 GHz)."

MODEL_TAGS = ("exact", "quadratic")


@dataclass(frozen=True)
class ArrayConfig:
    """ULA geometry and carrier.

    ``spacing_m=None`` selects half-wavelength spacing.
    """

    n_antennas: int
    carrier_hz: float = 30e9
    spacing_m: float | None = None
    ideal_c: bool = False

    def __post_init__(self):
        if int(self.n_antennas) != self.n_antennas or self.n_antennas < 2:
            raise ValueError(f"n_antennas must be an integer >= 2, got {self.n_antennas}")
        if not self.carrier_hz > 0:
            raise ValueError(f"carrier_hz must be positive, got {self.carrier_hz}")
        if self.spacing_m is None:
            object.__setattr__(self, "spacing_m", self.wavelength_m / 2)
        elif not self.spacing_m > 0:
            raise ValueError(f"spacing_m must be positive, got {self.spacing_m}")

    @property
    def c(self) -> float:
        return IDEAL_SPEED_OF_LIGHT if self.ideal_c else SPEED_OF_LIGHT

    @property
    def wavelength_m(self) -> float:
        return self.c / self.carrier_hz

    @property
    def wavenumber(self) -> float:
        return 2 * math.pi / self.wavelength_m

    @property
    def aperture_m(self) -> float:
        return self.n_antennas * self.spacing_m

    @property
    def positions(self) -> np.ndarray:
        """Antenna x-coordinates ``n * d`` for ``n = 1..N``."""
        return np.arange(1, self.n_antennas + 1) * self.spacing_m

    def with_antennas(self, n_antennas: int) -> "ArrayConfig":
        """Same carrier and spacing rule, different element count."""
        spacing = None if self._half_wave else self.spacing_m
        return ArrayConfig(n_antennas, self.carrier_hz, spacing, self.ideal_c)

    @property
    def _half_wave(self) -> bool:
        return math.isclose(self.spacing_m, self.wavelength_m / 2, rel_tol=1e-15)


@dataclass(frozen=True)
class SourcePosition:
    r_m: float
    theta_rad: float

    def __post_init__(self):
        if not self.r_m > 0:
            raise ValueError(f"r_m must be positive, got {self.r_m}")
        if not abs(self.theta_rad) < math.pi / 2:
            raise ValueError(f"|theta| must be < pi/2, got {self.theta_rad}")

    @property
    def cartesian(self) -> tuple[float, float]:
        """``(p_x, p_z)`` in meters."""
        return self.r_m * math.sin(self.theta_rad), self.r_m * math.cos(self.theta_rad)

    @classmethod
    def from_cartesian(cls, p_x: float, p_z: float) -> "SourcePosition":
        return cls(math.hypot(p_x, p_z), math.atan2(p_x, p_z))

    @classmethod
    def from_degrees(cls, r_m: float, theta_deg: float) -> "SourcePosition":
        return cls(r_m, math.radians(theta_deg))


@dataclass(frozen=True)
class FarField:
    """Position whose range could not be resolved (curvature too small)."""

    theta_rad: float


@dataclass(frozen=True)
class ChannelParams:
    """Quadratic phase coefficients: ``p1`` curvature (1/m), ``p2`` = sin(AoA)."""

    p1: float
    p2: float

    @property
    def coa(self) -> float:
        return 2 * self.p1


@dataclass(frozen=True)
class ReceivedSignal:
    samples: np.ndarray
    snr_db: float
    sigma2: float
    seed: int | None
    model_tag: str
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.samples.shape


def rayleigh_distance(cfg: ArrayConfig) -> float:
    """Fraunhofer boundary ``2 (N d)^2 / lambda``."""
    return 2 * cfg.aperture_m**2 / cfg.wavelength_m


def params_from_position(pos: SourcePosition) -> ChannelParams:
    c = math.cos(pos.theta_rad)
    return ChannelParams(-c * c / (2 * pos.r_m), math.sin(pos.theta_rad))


def position_from_params(par: ChannelParams, p1_floor: float = 0.0) -> SourcePosition | FarField:
    """Invert :func:`params_from_position`.

    Returns :class:`FarField` when ``p1 >= -p1_floor``: the curvature carries
    no usable range information.
    """
    theta = math.asin(min(1.0, max(-1.0, par.p2)))
    if not par.p1 < -p1_floor:
        return FarField(theta)
    c = math.cos(theta)
    r = -c * c / (2 * par.p1)
    if not r > 0 or not abs(theta) < math.pi / 2:
        return FarField(theta)
    return SourcePosition(r, theta)


def channel_quadratic(cfg: ArrayConfig, par: ChannelParams) -> np.ndarray:
    """``h[n] = exp(jk (p1 x_n^2 + p2 x_n))``."""
    x = cfg.positions
    return np.exp(1j * cfg.wavenumber * (par.p1 * x * x + par.p2 * x))


def channel_farfield(cfg: ArrayConfig, p2: float) -> np.ndarray:
    return channel_quadratic(cfg, ChannelParams(0.0, p2))


def channel_exact(cfg: ArrayConfig, pos: SourcePosition) -> np.ndarray:
    """Spherical-wave channel ``exp(-jk (|p - x_n| - |p|))``."""
    x = cfg.positions
    r, s = pos.r_m, math.sin(pos.theta_rad)
    # |p - x| - r computed without cancellation: (x^2 - 2 r s x) / (|p - x| + r)
    q = x * x - 2 * r * s * x
    delta = q / (np.sqrt(r * r + q) + r)
    return np.exp(-1j * cfg.wavenumber * delta)


def local_direction(par: ChannelParams, x: float | np.ndarray) -> float | np.ndarray:
    """Direction cosine ``beta(x) = 2 p1 x + p2`` seen from position ``x``."""
    return 2 * par.p1 * x + par.p2


def snr_to_sigma2(snr_db: float, ps: float = 1.0) -> float:
    if snr_db == math.inf:
        return 0.0
    return ps / 10 ** (snr_db / 10)


def channel_for(cfg: ArrayConfig, pos: SourcePosition, model_tag: str) -> np.ndarray:
    if model_tag == "exact":
        return channel_exact(cfg, pos)
    if model_tag == "quadratic":
        return channel_quadratic(cfg, params_from_position(pos))
    raise ValueError(f"unknown model_tag {model_tag!r}, expected one of {MODEL_TAGS}")


def synthesize_received(
    cfg: ArrayConfig,
    pos: SourcePosition,
    snapshots: int,
    snr_db: float = math.inf,
    seed: int | np.random.SeedSequence | None = 0,
    model_tag: str = "exact",
) -> ReceivedSignal:
    """Draw ``Y = h s^H + noise`` for one user.

    Symbols are unit-modulus with i.i.d. uniform phase; noise is circular
    complex Gaussian with per-entry variance ``1 / SNR``. ``snr_db=inf``
    disables the noise draw entirely.
    """
    if int(snapshots) != snapshots or snapshots < 1:
        raise ValueError(f"snapshot count must be a positive integer, got {snapshots}")
    h = channel_for(cfg, pos, model_tag)
    rng = np.random.default_rng(seed)
    psi = rng.uniform(0.0, 2 * np.pi, size=snapshots)
    s = np.exp(1j * psi)
    y = np.outer(h, s.conj())
    sigma2 = snr_to_sigma2(snr_db)
    if sigma2 > 0:
        noise = rng.standard_normal((2, cfg.n_antennas, snapshots))
        y = y + math.sqrt(sigma2 / 2) * (noise[0] + 1j * noise[1])
    seed_tag = seed if isinstance(seed, (int, type(None))) else None
    return ReceivedSignal(y, snr_db, sigma2, seed_tag, model_tag, {"symbols": s, "channel": h})
