"""Propagation, receiver noise, and the sensing front-end.

The channel is a flat log-distance power gain; frequency selectivity is not
modelled because everything downstream consumes received power only.
Transmitted signals are zero-mean Gaussian processes, so each squared sample
of the received waveform is (P_r + noise_power) times a chi-square(1) draw,
and the aggregated sensing energy is a scaled chi-square with one degree of
freedom per sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

PRIMARY_USER = 0  # reserved source id of the licensed transmitter


@dataclass(frozen=True)
class Position:
    """Planar coordinates in metres."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("position coordinates must be finite")

    def distance_to(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Propagation:
    """Flat path-loss channel plus receiver thermal noise.

    Attributes:
        ref_power_gain: power gain at the reference distance (dimensionless).
        ref_distance: reference distance in metres; distances below it are
            clamped to it, which removes the near-field singularity.
        path_loss_exponent: power decay exponent, >= 2.
        shadowing_sigma_db: log-normal shadowing standard deviation in dB;
            0 disables shadowing so analytic oracles stay exact.
        noise_power: receiver noise power in watts, > 0.
    """

    ref_power_gain: float = 1.0
    ref_distance: float = 1.0
    path_loss_exponent: float = 3.0
    shadowing_sigma_db: float = 0.0
    noise_power: float = 1e-9

    def __post_init__(self):
        if self.ref_distance <= 0:
            raise ValueError("ref_distance must be positive")
        if self.noise_power <= 0:
            raise ValueError("noise_power must be positive")
        if self.path_loss_exponent < 2:
            raise ValueError("path_loss_exponent must be >= 2")
        if self.shadowing_sigma_db < 0:
            raise ValueError("shadowing_sigma_db must be >= 0")


@dataclass(frozen=True)
class SourceSpec:
    """An active transmitter: the primary user or one attacker.

    ``source_id`` 0 is the primary user; ids >= 1 index attackers. At most
    one source is active on a channel in any sensing period.
    """

    position: Position
    tx_power: float
    source_id: int = PRIMARY_USER

    def __post_init__(self):
        if self.tx_power < 0:
            raise ValueError("tx_power must be >= 0")
        if self.source_id < 0:
            raise ValueError("source_id must be >= 0")


@dataclass(frozen=True)
class EnergyVector:
    """Squared samples e[n] of one sensing period and their sum."""

    samples: np.ndarray
    aggregate: float

    def __post_init__(self):
        if len(self.samples) < 1:
            raise ValueError("energy vector needs at least one sample")
        if np.any(self.samples < 0):
            raise ValueError("energy samples must be non-negative")
        total = float(np.sum(self.samples))
        if abs(self.aggregate - total) > 1e-12 * max(total, 1e-300):
            raise ValueError("aggregate does not match the sample sum")

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "EnergyVector":
        samples = np.asarray(samples, dtype=float)
        return cls(samples=samples, aggregate=float(np.sum(samples)))

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    @property
    def sample_mean(self) -> float:
        return self.aggregate / len(self.samples)


def received_power(
    prop: Propagation,
    tx_power: float,
    distance: float,
    shadow_draw: Optional[float] = None,
) -> float:
    """Received power of a transmission over the flat path-loss channel.

    Args:
        prop: channel parameters.
        tx_power: transmit power in watts, >= 0.
        distance: transmitter-receiver separation in metres, >= 0; values
            below ``prop.ref_distance`` are clamped to it.
        shadow_draw: optional standard-normal draw; applied as a log-normal
            shadowing factor when ``prop.shadowing_sigma_db > 0``. Without it
            the result is deterministic.

    Returns:
        Received power in watts.
    """
    if distance < 0:
        raise ValueError("distance must be >= 0")
    if tx_power < 0:
        raise ValueError("tx_power must be >= 0")
    d = max(distance, prop.ref_distance)
    power = tx_power * prop.ref_power_gain * (prop.ref_distance / d) ** prop.path_loss_exponent
    if shadow_draw is not None and prop.shadowing_sigma_db > 0:
        power *= 10.0 ** (prop.shadowing_sigma_db * shadow_draw / 10.0)
    return power


def source_received_power(
    prop: Propagation,
    source: Optional[SourceSpec],
    receiver: Position,
    shadow_draw: Optional[float] = None,
) -> float:
    """Received power from an optional source; 0 when nothing transmits."""
    if source is None:
        return 0.0
    distance = source.position.distance_to(receiver)
    return received_power(prop, source.tx_power, distance, shadow_draw)


def draw_energy_vector(
    prop: Propagation,
    source: Optional[SourceSpec],
    receiver: Position,
    n_samples: int,
    rng: np.random.Generator,
) -> EnergyVector:
    """Sample one sensing period: square of i.i.d. Gaussian receiver samples.

    Each sample has variance P_r + noise_power, with P_r = 0 when no source
    is present. When shadowing is enabled a single shadow draw is shared by
    the whole sensing period. Deterministic given the generator state.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    shadow = None
    if source is not None and prop.shadowing_sigma_db > 0:
        shadow = float(rng.standard_normal())
    p_r = source_received_power(prop, source, receiver, shadow)
    scale = p_r + prop.noise_power
    samples = scale * rng.standard_normal(n_samples) ** 2
    return EnergyVector.from_samples(samples)


def energy_stats(
    prop: Propagation,
    source: Optional[SourceSpec],
    receiver: Position,
    n_samples: int,
) -> Tuple[float, float]:
    """Gaussian (CLT) moments of the aggregated energy under one hypothesis.

    Returns:
        (mean, variance) = (N_s * (P_r + noise), 2 * N_s * (P_r + noise)^2),
        with P_r the deterministic (shadow-free) received power.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    p_r = source_received_power(prop, source, receiver)
    per_sample = p_r + prop.noise_power
    return n_samples * per_sample, 2.0 * n_samples * per_sample**2
