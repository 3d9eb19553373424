"""Near-field channel and position estimation on a uniform linear array."""

from .array_model import (ArrayConfig, ChannelParams, FarField, ReceivedSignal, SourcePosition,
                          channel_exact, channel_quadratic, params_from_position,
                          position_from_params, rayleigh_distance, synthesize_received)
from .crlb import CrlbReport, crlb_closed_form, crlb_numeric_fim
from .jac_estimators import Estimate, GdConfig, IsfConfig, jac_estimate
from .music import MusicConfig, estimate_p2_music
from .spatial_autocorr import AutocorrSpectrum, autocorr_spectrum, model_autocorr

__version__ = "0.1.0"
