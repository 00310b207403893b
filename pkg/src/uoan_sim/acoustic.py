"""Omnidirectional acoustic channel: Thorp absorption, ambient noise, capacity.

Standard empirical models (all frequencies in kHz):

    absorption  a(f) = 0.11 f^2/(1+f^2) + 44 f^2/(4100+f^2)
                     + 2.75e-4 f^2 + 0.003                      [dB/km]
    path loss   PL(d) = 10 k log10(d) + (d/1000) a(f)           [dB re 1 m]
    noise       power sum of turbulence, shipping (factor s),
                wind-driven waves (speed w) and thermal components

Narrowband SNR is evaluated at the carrier; links are symmetric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError, DomainError
from .optical import q_function


@dataclass(frozen=True)
class AcousticParams:
    source_level: float = 135.0  # dB re uPa @ 1 m
    frequency: float = 20.0  # kHz
    spreading_exponent: float = 1.5
    bandwidth: float = 5e3  # Hz
    shipping_factor: float = 0.5
    wind_speed: float = 5.0  # m/s
    fec_ber_threshold: float = 1e-3

    def __post_init__(self):
        if self.frequency <= 0:
            raise ConfigurationError("acoustic.frequency must be positive")
        if not (1.0 <= self.spreading_exponent <= 2.0):
            raise ConfigurationError("acoustic.spreading_exponent must lie in [1, 2]")
        if self.bandwidth <= 0:
            raise ConfigurationError("acoustic.bandwidth must be positive")
        if not (0.0 <= self.shipping_factor <= 1.0):
            raise ConfigurationError("acoustic.shipping_factor must lie in [0, 1]")
        if self.wind_speed < 0:
            raise ConfigurationError("acoustic.wind_speed must be >= 0")
        if not (0.0 < self.fec_ber_threshold < 0.5):
            raise ConfigurationError("acoustic.fec_ber_threshold must lie in (0, 0.5)")


def thorp_absorption(f: float) -> float:
    """Thorp absorption coefficient in dB/km for f in kHz."""
    if f <= 0:
        raise DomainError("frequency must be positive")
    f2 = f * f
    return 0.11 * f2 / (1.0 + f2) + 44.0 * f2 / (4100.0 + f2) + 2.75e-4 * f2 + 0.003


def path_loss(d: float, params: AcousticParams) -> float:
    """Spreading plus absorption loss in dB relative to 1 m."""
    if d < 1.0:
        raise DomainError(f"distance below the 1 m reference, got {d}")
    return 10.0 * params.spreading_exponent * math.log10(d) + (d / 1000.0) * thorp_absorption(
        params.frequency
    )


def noise_psd(f: float, params: AcousticParams) -> float:
    """Ambient noise power spectral density in dB re uPa^2/Hz at f kHz.

    Power sum of the four standard components; shipping is weighted by the
    activity factor s and the wave component by wind speed w.
    """
    if f <= 0:
        raise DomainError("frequency must be positive")
    s, w = params.shipping_factor, params.wind_speed
    log_f = math.log10(f)
    turbulence = 17.0 - 30.0 * log_f
    shipping = 40.0 + 20.0 * (s - 0.5) + 26.0 * log_f - 60.0 * math.log10(f + 0.03)
    waves = 50.0 + 7.5 * math.sqrt(w) + 20.0 * log_f - 40.0 * math.log10(f + 0.4)
    thermal = -15.0 + 20.0 * log_f
    total = sum(10.0 ** (x / 10.0) for x in (turbulence, shipping, waves, thermal))
    return 10.0 * math.log10(total)


def snr_db(d: float, params: AcousticParams) -> float:
    """Narrowband SNR in dB at distance d under the given parameters."""
    noise = noise_psd(params.frequency, params) + 10.0 * math.log10(params.bandwidth)
    return params.source_level - path_loss(d, params) - noise


def ber(d: float, params: AcousticParams) -> float:
    """Coherent-detection bit error rate Q(sqrt(SNR)) at distance d."""
    snr_lin = 10.0 ** (snr_db(d, params) / 10.0)
    return q_function(math.sqrt(snr_lin))


def max_detectable_range(params: AcousticParams) -> float:
    """Largest distance at which the BER stays within the FEC threshold."""
    if ber(1.0, params) > params.fec_ber_threshold:
        return 0.0
    lo, hi = 1.0, 1e7
    if ber(hi, params) <= params.fec_ber_threshold:
        return hi
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if ber(mid, params) <= params.fec_ber_threshold:
            lo = mid
        else:
            hi = mid
    return lo


def capacity(d: float, params: AcousticParams) -> float:
    """Shannon capacity in bps, gated to 0 when BER exceeds the FEC threshold."""
    snr_lin = 10.0 ** (snr_db(d, params) / 10.0)
    if q_function(math.sqrt(snr_lin)) > params.fec_ber_threshold:
        return 0.0
    return params.bandwidth * math.log2(1.0 + snr_lin)
