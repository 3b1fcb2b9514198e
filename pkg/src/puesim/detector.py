"""Three-threshold fast energy detection.

A conventional energy detector uses a single threshold to decide signal
presence. Distinguishing an emulated primary signal additionally needs a
band [gamma1, gamma2] around the expected primary energy: aggregates below
gamma0 mean no signal, aggregates inside the band look like the primary
user, and everything else is flagged as an attack.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from scipy.stats import norm


class OrderingViolation(ValueError):
    """Calibration produced thresholds that violate gamma0 < gamma1 < gamma2."""


@dataclass(frozen=True)
class Thresholds:
    """Detector thresholds, strictly ordered gamma0 < gamma1 < gamma2."""

    gamma0: float
    gamma1: float
    gamma2: float

    def __post_init__(self):
        if not (self.gamma0 < self.gamma1 < self.gamma2):
            raise OrderingViolation(
                f"thresholds must satisfy gamma0 < gamma1 < gamma2, "
                f"got ({self.gamma0}, {self.gamma1}, {self.gamma2})"
            )


class LocalDecision(Enum):
    """Outcome of one local sensing period."""

    NO_SIGNAL = "no_signal"
    PUE_ATTACK = "pue_attack"
    CANDIDATE_PRIMARY = "candidate_primary"


@dataclass(frozen=True)
class GaussianStats:
    """Gaussian approximation of the aggregated energy under one hypothesis."""

    mean: float
    variance: float

    def __post_init__(self):
        if self.variance <= 0:
            raise ValueError("variance must be positive")

    @property
    def std(self) -> float:
        return self.variance**0.5


def classify_energy(energy: float, thr: Thresholds) -> LocalDecision:
    """Classify an aggregated energy against the three thresholds.

    The partition is total: E <= gamma0 is no signal, gamma1 <= E <= gamma2
    is a primary candidate, and the remaining two intervals (gamma0, gamma1)
    and (gamma2, inf) are flagged as an attack. Boundary points are assigned
    so the three preimages cover [0, inf) without gaps.
    """
    if energy < 0:
        raise ValueError("energy must be >= 0")
    if energy <= thr.gamma0:
        return LocalDecision.NO_SIGNAL
    if energy < thr.gamma1 or energy > thr.gamma2:
        return LocalDecision.PUE_ATTACK
    return LocalDecision.CANDIDATE_PRIMARY


def calibrate_thresholds(
    h0: GaussianStats,
    h1: GaussianStats,
    alpha0: float = 0.05,
    pf_target: float = 1e-3,
) -> Thresholds:
    """Set thresholds from the no-signal and primary-signal energy statistics.

    gamma0 is the Neyman-Pearson point on H0 at level alpha0. The primary
    band edges split the false-alarm budget equally between the two tails of
    the H1 Gaussian: gamma1 and gamma2 are its pf_target/2 and
    1 - pf_target/2 quantiles.

    Raises:
        OrderingViolation: if gamma0 >= gamma1, i.e. the separation between
            H0 and H1 is too small for the requested operating point; raise
            the sample count or relax alpha0/pf_target.
    """
    if not 0 < alpha0 < 1:
        raise ValueError("alpha0 must be in (0, 1)")
    if not 0 < pf_target < 1:
        raise ValueError("pf_target must be in (0, 1)")
    gamma0 = h0.mean + norm.isf(alpha0) * h0.std
    gamma1 = h1.mean + norm.ppf(pf_target / 2.0) * h1.std
    gamma2 = h1.mean + norm.ppf(1.0 - pf_target / 2.0) * h1.std
    if gamma0 >= gamma1:
        raise OrderingViolation(
            f"gamma0 ({gamma0:.6g}) >= gamma1 ({gamma1:.6g}): H0/H1 separation "
            "too small for the requested operating point"
        )
    return Thresholds(gamma0, gamma1, gamma2)


def attack_flag_probability(dist: GaussianStats, thr: Thresholds) -> float:
    """Probability that classify_energy flags an attack under a Gaussian law.

    Evaluated with the attack-hypothesis statistics this is the detection
    probability; with the primary-signal statistics it is the false-alarm
    probability.
    """
    z = lambda g: (g - dist.mean) / dist.std
    p = norm.cdf(z(thr.gamma1)) - norm.cdf(z(thr.gamma0)) + 1.0 - norm.cdf(z(thr.gamma2))
    return float(min(max(p, 0.0), 1.0))
