"""
Link Model

Physical-layer constants of the primary/secondary network and the closed-form
Rayleigh block-fading success probabilities of both links.
"""

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class SystemParams:
    """All scalar model constants.

    Defaults are the common simulation parameters (1 s slots, 0.1 s sensing,
    1 kHz, 1e-6 W/Hz, 1000-bit packets, 1 mJ energy packets, sigma_ssd = 1,
    sigma_ppd = 0.5) plus P_p = 10 mW, which puts mu_p near 0.819.
    """

    slot_duration_s: float = 1.0
    sensing_duration_s: float = 0.1
    bandwidth_hz: float = 1e3
    noise_psd_w_per_hz: float = 1e-6
    packet_bits: float = 1e3
    primary_power_w: float = 1e-2
    primary_arrival_rate: float = 0.4
    energy_arrival_rate: float = 1.0
    energy_per_packet_j: float = 1e-3
    energy_capacity: int = 4
    gain_ppd: float = 0.5
    gain_ssd: float = 1.0
    eq7_literal: bool = True

    def __post_init__(self):
        errors = self.validation_errors()
        if errors:
            raise ValidationError(errors)

    def validation_errors(self):
        """Return a list of human-readable problems (empty when valid)."""
        errors = []
        positive = [
            'slot_duration_s', 'sensing_duration_s', 'bandwidth_hz',
            'noise_psd_w_per_hz', 'packet_bits', 'primary_power_w',
            'energy_per_packet_j', 'gain_ppd', 'gain_ssd',
        ]
        for name in positive:
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value) or value <= 0:
                errors.append(f"{name}: expected a finite number > 0, got {value!r}")

        if not errors and self.sensing_duration_s >= self.slot_duration_s:
            errors.append(
                f"sensing_duration_s ({self.sensing_duration_s}) must be strictly less "
                f"than slot_duration_s ({self.slot_duration_s})"
            )

        lam_p = self.primary_arrival_rate
        if not isinstance(lam_p, (int, float)) or isinstance(lam_p, bool) or not 0.0 <= lam_p <= 1.0:
            errors.append(f"primary_arrival_rate: expected a number in [0, 1], got {lam_p!r}")

        lam_e = self.energy_arrival_rate
        if not isinstance(lam_e, (int, float)) or isinstance(lam_e, bool) or not math.isfinite(lam_e) or lam_e < 0:
            errors.append(f"energy_arrival_rate: expected a finite number >= 0, got {lam_e!r}")

        cap = self.energy_capacity
        if isinstance(cap, bool) or not isinstance(cap, (int, np.integer)) or cap < 0:
            errors.append(f"energy_capacity: expected an integer >= 0, got {cap!r}")

        if not isinstance(self.eq7_literal, bool):
            errors.append(f"eq7_literal: expected true or false, got {self.eq7_literal!r}")
        return errors

    def replace(self, **changes):
        """Return a validated copy with some fields changed."""
        return dataclasses.replace(self, **changes)

    @property
    def primary_rate(self):
        """Target primary spectral efficiency R_p = beta / (T W), bits/s/Hz."""
        return self.packet_bits / (self.slot_duration_s * self.bandwidth_hz)

    @property
    def secondary_rate(self):
        """Target secondary spectral efficiency R_s = beta / ((T - tau) W), bits/s/Hz."""
        return self.packet_bits / ((self.slot_duration_s - self.sensing_duration_s) * self.bandwidth_hz)

    @property
    def transmit_duration_s(self):
        return self.slot_duration_s - self.sensing_duration_s

    @property
    def eq7_mode(self):
        return 'literal' if self.eq7_literal else 'bandwidth'

    @classmethod
    def field_names(cls):
        return [f.name for f in dataclasses.fields(cls)]

    def to_dict(self):
        return dataclasses.asdict(self)


def primary_gain_threshold(params):
    """Channel gain below which the p -> pd link is in outage.

    Outage means R_p > log2(1 + P_p h / (N0 W)), i.e. h < N0 W (2^R_p - 1) / P_p.
    """
    noise_power = params.noise_psd_w_per_hz * params.bandwidth_hz
    return noise_power * math.expm1(params.primary_rate * math.log(2.0)) / params.primary_power_w


def primary_success_prob(params):
    """Primary service rate mu_p: probability the p -> pd link is not in outage.

    With an exponential gain of mean sigma_ppd this is
    exp(-N0 W (2^R_p - 1) / (P_p sigma_ppd)).
    """
    return math.exp(-primary_gain_threshold(params) / params.gain_ppd)


def secondary_success_prob(params, j):
    """Probability that a secondary packet sent with j energy packets is decoded.

    Energy j*e is spread over the T - tau transmit period. The literal mode uses
    N0 alone as the noise term; the bandwidth mode uses N0 W like the primary
    link. Spending nothing (j = 0) never delivers a packet.

    Args:
        params (SystemParams): model constants
        j (int): energy packets spent, >= 0

    Returns:
        float: success probability in [0, 1)
    """
    if isinstance(j, bool) or not isinstance(j, (int, np.integer)) or j < 0:
        raise ValidationError(f"energy packets spent must be an integer >= 0, got {j!r}")
    if j == 0:
        return 0.0

    noise = params.noise_psd_w_per_hz
    if not params.eq7_literal:
        noise *= params.bandwidth_hz
    snr_gap = math.expm1(params.secondary_rate * math.log(2.0))
    energy = j * params.energy_per_packet_j
    return math.exp(-noise * params.transmit_duration_s * snr_gap / (energy * params.gain_ssd))


def success_table(params):
    """Vector of secondary success probabilities for j = 0..E_max."""
    return np.array([secondary_success_prob(params, j) for j in range(params.energy_capacity + 1)])
