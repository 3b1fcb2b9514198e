"""Fingerprint-based location verification.

Each secondary user keeps a local database with one fingerprint per known
source location (id 0 is the primary user). A fingerprint stores the
expected per-sample energy at this receiver for a source at that location,
which parameterizes the scaled chi-square(1) density of each energy sample.
Location estimation is Bayesian: maximize prior times likelihood over the
stored locations.

Persistence format (one record per line, space-separated key=value pairs):

    id=0 per_sample_power=1.01e-07 observation_count=5 prior=0.25

Lines starting with '#' are comments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .detector import LocalDecision
from .radio import EnergyVector

# Relative floor applied to each sample before evaluating the chi-square(1)
# density, which is singular at zero.
SAMPLE_FLOOR = 1e-12


class EmptyDatabase(ValueError):
    """Location estimation was asked to run against a database with no entries."""


@dataclass(frozen=True)
class FingerprintEntry:
    """Energy statistics of one source location as seen by one receiver.

    ``per_sample_power`` is the estimated total per-sample energy scale
    (received power plus noise power) for a source at this location.
    """

    location_id: int
    per_sample_power: float
    observation_count: int = 0

    def __post_init__(self):
        if self.location_id < 0:
            raise ValueError("location_id must be >= 0")
        if self.per_sample_power <= 0:
            raise ValueError("per_sample_power must be positive")
        if self.observation_count < 0:
            raise ValueError("observation_count must be >= 0")


@dataclass
class LocalDatabase:
    """Per-SU fingerprints for location ids 0..M plus their priors."""

    entries: List[FingerprintEntry]
    priors: np.ndarray

    def __post_init__(self):
        self.priors = np.asarray(self.priors, dtype=float)
        self.validate()

    def validate(self):
        if len(self.entries) != len(self.priors):
            raise ValueError("one prior per entry required")
        for m, entry in enumerate(self.entries):
            if entry.location_id != m:
                raise ValueError("entries must cover location ids 0..M with no gaps")
        if self.entries:
            if np.any(self.priors < 0):
                raise ValueError("priors must be non-negative")
            if abs(float(np.sum(self.priors)) - 1.0) > 1e-12:
                raise ValueError("priors must sum to 1")

    @property
    def n_locations(self) -> int:
        return len(self.entries)

    @classmethod
    def with_uniform_priors(cls, powers: Sequence[float]) -> "LocalDatabase":
        """Build a database from per-location powers with uniform priors."""
        entries = [
            FingerprintEntry(location_id=m, per_sample_power=p)
            for m, p in enumerate(powers)
        ]
        priors = np.full(len(entries), 1.0 / len(entries)) if entries else np.zeros(0)
        return cls(entries=entries, priors=priors)


@dataclass(frozen=True)
class LocalReport:
    """One SU's contribution to an epoch of global fusion."""

    su_id: str
    decision: LocalDecision
    energy: EnergyVector
    estimate: Optional[int] = None

    def __post_init__(self):
        has_estimate = self.estimate is not None
        if has_estimate != (self.decision is LocalDecision.CANDIDATE_PRIMARY):
            raise ValueError("estimate present iff decision is CANDIDATE_PRIMARY")


def log_score(e: EnergyVector, entry: FingerprintEntry, prior: float) -> float:
    """Log of prior times the likelihood of the energy vector under one entry.

    Each sample follows the scaled chi-square(1) density
    f(e) = exp(-e / (2 s)) / sqrt(2 pi s e) with s = per_sample_power;
    samples are floored at SAMPLE_FLOOR * s to avoid the singularity at 0.
    A monotone transform of prior * likelihood, so argmax-compatible.
    """
    if prior <= 0:
        raise ValueError("prior must be positive")
    s = entry.per_sample_power
    samples = np.maximum(e.samples, SAMPLE_FLOOR * s)
    loglik = float(
        -np.sum(samples) / (2.0 * s)
        - 0.5 * np.sum(np.log(2.0 * math.pi * s * samples))
    )
    return math.log(prior) + loglik


def estimate_location(e: EnergyVector, db: LocalDatabase) -> int:
    """Most probable source location id for an energy vector.

    Ties are broken toward the smallest location id so the estimate is
    deterministic.

    Raises:
        EmptyDatabase: if the database holds no fingerprints.
    """
    if not db.entries:
        raise EmptyDatabase("local database has no fingerprint entries")
    best_id = 0
    best_score = -math.inf
    for entry, prior in zip(db.entries, db.priors):
        score = log_score(e, entry, float(prior))
        if score > best_score:
            best_score = score
            best_id = entry.location_id
    return best_id


def update_fingerprint(
    entry: FingerprintEntry, e: EnergyVector, learning_rate: float = 0.1
) -> FingerprintEntry:
    """Blend the stored per-sample power toward the vector's sample mean.

    An exponentially weighted moving average: rate 1 replaces the stored
    value with the sample mean, and a vector whose mean equals the stored
    value is a fixed point.
    """
    if not 0 < learning_rate <= 1:
        raise ValueError("learning_rate must be in (0, 1]")
    new_power = (1.0 - learning_rate) * entry.per_sample_power + learning_rate * e.sample_mean
    return FingerprintEntry(
        location_id=entry.location_id,
        per_sample_power=new_power,
        observation_count=entry.observation_count + 1,
    )


def save_local_database(db: LocalDatabase, path) -> None:
    """Write a database in the documented key-value text format."""
    lines = ["# local fingerprint database: one record per location id"]
    for entry, prior in zip(db.entries, db.priors):
        lines.append(
            f"id={entry.location_id} per_sample_power={entry.per_sample_power!r} "
            f"observation_count={entry.observation_count} prior={float(prior)!r}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_record(line: str, lineno: int) -> dict:
    fields = {}
    for token in line.split():
        key, sep, value = token.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: malformed token {token!r}")
        fields[key] = value
    return fields


def load_local_database(path) -> LocalDatabase:
    """Read a database written by :func:`save_local_database`."""
    entries = []
    priors = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = _parse_record(line, lineno)
            entries.append(
                FingerprintEntry(
                    location_id=int(fields["id"]),
                    per_sample_power=float(fields["per_sample_power"]),
                    observation_count=int(fields["observation_count"]),
                )
            )
            priors.append(float(fields["prior"]))
    return LocalDatabase(entries=entries, priors=np.asarray(priors))
