"""Beer-Lambert optical link budget, OOK bit error rate, Shannon capacity.

Received power over a directed in-beam link:

    P_r = P_t * eta_t * eta_r * exp(-c d)
          * sum_over_fov_faces A_r cos(gamma) / (2 pi d^2 (1 - cos(theta_div)))

where c is the water extinction coefficient, gamma the per-face incidence
angle and theta_div the transmit divergence half-angle. The sum implements
reception diversity: photocurrents of all faces that see the transmitter
add incoherently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError, DomainError
from .geometry import FaceSet, LinkGeometry

#: Blue-green extinction coefficients (1/m), standard literature values.
EXTINCTION_PRESETS = {
    "pure_sea": 0.056,
    "clear_ocean": 0.151,
    "coastal": 0.305,
    "harbor": 2.17,
}


@dataclass(frozen=True)
class WaterType:
    name: str
    extinction_c: float  # 1/m

    def __post_init__(self):
        if self.extinction_c <= 0:
            raise ConfigurationError(f"extinction coefficient must be positive, got {self.extinction_c}")

    @classmethod
    def preset(cls, name: str) -> "WaterType":
        try:
            return cls(name, EXTINCTION_PRESETS[name])
        except KeyError:
            raise ConfigurationError(
                f"unknown water type {name!r}; expected one of {sorted(EXTINCTION_PRESETS)}"
            ) from None


@dataclass(frozen=True)
class OpticalParams:
    """Transceiver and receiver-noise constants for the optical budget."""

    tx_power: float = 0.2  # W
    tx_efficiency: float = 0.9
    rx_efficiency: float = 0.9
    rx_aperture_area: float = 0.005  # m^2
    responsivity: float = 0.5  # A/W
    noise_variance: float = 1e-21  # A^2
    bandwidth: float = 1e6  # Hz
    fec_ber_threshold: float = 1e-3

    def __post_init__(self):
        for name in (
            "tx_power",
            "tx_efficiency",
            "rx_efficiency",
            "rx_aperture_area",
            "responsivity",
            "noise_variance",
            "bandwidth",
        ):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"optical.{name} must be positive")
        for name in ("tx_efficiency", "rx_efficiency"):
            if getattr(self, name) > 1:
                raise ConfigurationError(f"optical.{name} must be <= 1")
        if not (0.0 < self.fec_ber_threshold < 0.5):
            raise ConfigurationError("optical.fec_ber_threshold must lie in (0, 0.5)")


def q_function(x: float) -> float:
    """Gaussian tail probability Q(x) = P(N(0,1) > x)."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def transmittance(distance: float, water: WaterType) -> float:
    """Beer-Lambert transmittance exp(-c d)."""
    if distance < 0:
        raise DomainError("distance must be non-negative")
    return math.exp(-water.extinction_c * distance)


def link_gain(geom: LinkGeometry, faces: FaceSet, params: OpticalParams) -> float:
    """Distance-independent prefactor G with P_r = G exp(-c d) / d^2.

    Collects transmit power, efficiencies, concentrator gain and the
    receive-aperture diversity sum; zero when the link is out of beam.
    """
    if not geom.in_beam:
        return 0.0
    cos_sum = sum(math.cos(inc) for _, inc in geom.rx_faces_in_fov)
    solid = 2.0 * math.pi * (1.0 - math.cos(faces.divergence_half_angle))
    return (
        params.tx_power
        * params.tx_efficiency
        * params.rx_efficiency
        * params.rx_aperture_area
        * cos_sum
        / solid
    )


def received_power(
    geom: LinkGeometry, faces: FaceSet, params: OpticalParams, water: WaterType
) -> float:
    """Received optical power in watts for a directed link; 0 out of beam."""
    if geom.distance <= 0:
        raise DomainError("received_power needs a positive link distance")
    g = link_gain(geom, faces, params)
    if g == 0.0:
        return 0.0
    return g * transmittance(geom.distance, water) / geom.distance**2


def ber(pr: float, params: OpticalParams) -> float:
    """OOK intensity-detection bit error rate Q(R P_r / sigma); 0.5 at P_r = 0."""
    if pr < 0:
        raise DomainError("received power must be non-negative")
    return q_function(params.responsivity * pr / math.sqrt(params.noise_variance))


def capacity(pr: float, params: OpticalParams) -> float:
    """Shannon capacity in bps, gated to 0 when BER exceeds the FEC threshold."""
    if ber(pr, params) > params.fec_ber_threshold:
        return 0.0
    snr = (params.responsivity * pr) ** 2 / params.noise_variance
    return params.bandwidth * math.log2(1.0 + snr)
