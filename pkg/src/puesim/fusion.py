"""Fusion center at the cognitive base station.

Collects per-SU local reports, merges unanimous location estimates into a
global decision, maintains the global fingerprint database (the master copy
of every SU's local database), registers newly discovered attacker
locations, and emits per-SU database update messages.

The global database persists in the same key-value text format as the local
databases, with an extra ``su_id`` field per fingerprint record and
``profile`` records for tracked attackers. The decision log exports to CSV
with columns (time, decision, location_id).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .detector import LocalDecision, Thresholds, classify_energy
from .radio import EnergyVector, Position
from .verifier import (
    FingerprintEntry,
    LocalDatabase,
    LocalReport,
    estimate_location,
    update_fingerprint,
)


class NoReports(ValueError):
    """Fusion was invoked with an empty report sequence."""


class DecisionKind(Enum):
    TRUE_PU = "true_pu"
    KNOWN_ATTACKER = "known_attacker"
    NEW_ATTACKER = "new_attacker"


@dataclass(frozen=True)
class GlobalDecision:
    """Outcome of fusing one epoch of local reports."""

    kind: DecisionKind
    location_id: int

    def __post_init__(self):
        if self.kind is DecisionKind.TRUE_PU and self.location_id != 0:
            raise ValueError("a true-PU decision carries location id 0")
        if self.kind is not DecisionKind.TRUE_PU and self.location_id < 1:
            raise ValueError("attacker decisions carry a location id >= 1")


def fuse(reports: Sequence[LocalReport], n_known_attackers: int) -> GlobalDecision:
    """Merge unanimous location estimates into a global decision.

    All estimates 0 means the source is the true primary user; all equal to
    some known attacker id means that attacker; any disagreement means an
    attacker at a previously unseen location, which gets the next free id.

    Raises:
        NoReports: on an empty report sequence.
        ValueError: if any report lacks an estimate.
    """
    if not reports:
        raise NoReports("fusion needs at least one report")
    estimates = []
    for report in reports:
        if report.estimate is None:
            raise ValueError("fusion requires reports that carry estimates")
        estimates.append(report.estimate)
    first = estimates[0]
    if all(est == first for est in estimates):
        if first == 0:
            return GlobalDecision(DecisionKind.TRUE_PU, 0)
        return GlobalDecision(DecisionKind.KNOWN_ATTACKER, first)
    return GlobalDecision(DecisionKind.NEW_ATTACKER, n_known_attackers + 1)


def verify_pipeline(
    e: EnergyVector,
    thr: Thresholds,
    local_db: LocalDatabase,
    su_id: str = "su0",
) -> LocalReport:
    """Run one SU's detection chain on a sensing period.

    The aggregated energy goes to the fast detector first; a no-signal or
    attack verdict terminates the procedure. Only primary candidates are
    passed to the location verifier, whose estimate is attached.
    """
    decision = classify_energy(e.aggregate, thr)
    if decision is not LocalDecision.CANDIDATE_PRIMARY:
        return LocalReport(su_id=su_id, decision=decision, energy=e)
    estimate = estimate_location(e, local_db)
    return LocalReport(su_id=su_id, decision=decision, energy=e, estimate=estimate)


@dataclass
class AttackerProfile:
    """Bookkeeping for one tracked attacker location."""

    first_seen: float
    attack_count: int = 0


@dataclass(frozen=True)
class DatabaseDelta:
    """One fingerprint replacement destined for one SU's local database."""

    su_id: str
    location_id: int
    entry: FingerprintEntry


@dataclass(frozen=True)
class BroadcastUpdate:
    """Message set sent to the SUs after a global decision."""

    deltas: Tuple[DatabaseDelta, ...]
    priors: np.ndarray
    recalibrate: bool
    registered_id: Optional[int] = None


@dataclass
class GlobalDatabase:
    """Master fingerprints per (SU, location), priors, and attacker profiles."""

    su_ids: List[str]
    fingerprints: Dict[Tuple[str, int], FingerprintEntry]
    priors: np.ndarray
    attacker_profiles: Dict[int, AttackerProfile] = field(default_factory=dict)
    decision_log: List[Tuple[float, GlobalDecision]] = field(default_factory=list)

    def __post_init__(self):
        self.priors = np.asarray(self.priors, dtype=float)
        self.validate()

    @property
    def n_attackers(self) -> int:
        """Number of known attacker locations M (ids 1..M)."""
        return len(self.priors) - 1

    def validate(self):
        if not self.su_ids:
            raise ValueError("global database needs at least one SU")
        if len(self.priors) < 1:
            raise ValueError("global database needs at least the PU location")
        for su in self.su_ids:
            for m in range(len(self.priors)):
                if (su, m) not in self.fingerprints:
                    raise ValueError(f"missing fingerprint for ({su}, {m})")
        if np.any(self.priors < 0) or abs(float(np.sum(self.priors)) - 1.0) > 1e-12:
            raise ValueError("priors must be a distribution")

    @classmethod
    def bootstrap(cls, pu_powers: Dict[str, float]) -> "GlobalDatabase":
        """Start a database holding only the primary-user fingerprint."""
        su_ids = list(pu_powers)
        fingerprints = {
            (su, 0): FingerprintEntry(location_id=0, per_sample_power=power)
            for su, power in pu_powers.items()
        }
        return cls(su_ids=su_ids, fingerprints=fingerprints, priors=np.ones(1))

    def local_view(self, su_id: str) -> LocalDatabase:
        """Materialize one SU's local database from the master copy."""
        entries = [self.fingerprints[(su_id, m)] for m in range(len(self.priors))]
        return LocalDatabase(entries=entries, priors=self.priors.copy())


class FusionCenter:
    """Single logical writer over the global database."""

    def __init__(self, db: GlobalDatabase, learning_rate: float = 0.1):
        self.db = db
        self.learning_rate = learning_rate
        # Laplace-smoothed decision counts drive the prior updates.
        self._decision_counts = np.zeros(len(db.priors))

    def fuse(self, reports: Sequence[LocalReport], time: float = 0.0) -> GlobalDecision:
        """Apply the fusion rule and append the outcome to the decision log."""
        decision = fuse(reports, self.db.n_attackers)
        self.db.decision_log.append((time, decision))
        return decision

    def register_attacker(
        self, reports: Sequence[LocalReport], time: float = 0.0
    ) -> int:
        """Add a fingerprint row for a newly discovered attacker location.

        Reporting SUs initialize the new entry from their observed sample
        mean; SUs without a report fall back to the mean of their existing
        attacker entries (or their PU entry when none exist yet). Priors are
        reset to uniform over the enlarged location set.
        """
        db = self.db
        new_id = db.n_attackers + 1
        reported = {r.su_id: r for r in reports}
        for su in db.su_ids:
            if su in reported:
                power = reported[su].energy.sample_mean
            elif db.n_attackers >= 1:
                power = float(
                    np.mean(
                        [
                            db.fingerprints[(su, m)].per_sample_power
                            for m in range(1, db.n_attackers + 1)
                        ]
                    )
                )
            else:
                power = db.fingerprints[(su, 0)].per_sample_power
            db.fingerprints[(su, new_id)] = FingerprintEntry(
                location_id=new_id, per_sample_power=power, observation_count=1
            )
        db.priors = np.full(new_id + 1, 1.0 / (new_id + 1))
        db.attacker_profiles[new_id] = AttackerProfile(first_seen=time, attack_count=0)
        self._decision_counts = np.append(self._decision_counts, 0.0)
        db.validate()
        return new_id

    def broadcast_update(
        self,
        decision: GlobalDecision,
        reports: Sequence[LocalReport],
        time: float = 0.0,
    ) -> BroadcastUpdate:
        """Update the master database and build the per-SU delta messages.

        Fingerprints of the decided location are EWMA-updated from each
        reporting SU's energy vector; a new-attacker decision instead carries
        the registration payload for every SU. Attack decisions additionally
        instruct the SUs to recalibrate their detector thresholds.
        """
        db = self.db
        registered_id = None
        deltas: List[DatabaseDelta] = []
        if decision.kind is DecisionKind.NEW_ATTACKER:
            registered_id = self.register_attacker(reports, time=time)
            target = registered_id
            deltas = [
                DatabaseDelta(su, target, db.fingerprints[(su, target)])
                for su in db.su_ids
            ]
        else:
            target = decision.location_id
            for report in reports:
                key = (report.su_id, target)
                updated = update_fingerprint(
                    db.fingerprints[key], report.energy, self.learning_rate
                )
                db.fingerprints[key] = updated
                deltas.append(DatabaseDelta(report.su_id, target, updated))
        if decision.kind is not DecisionKind.TRUE_PU:
            db.attacker_profiles[target].attack_count += 1
        self._decision_counts[target] += 1.0
        priors = (1.0 + self._decision_counts) / float(
            np.sum(1.0 + self._decision_counts)
        )
        db.priors = priors
        return BroadcastUpdate(
            deltas=tuple(deltas),
            priors=priors.copy(),
            recalibrate=decision.kind is not DecisionKind.TRUE_PU,
            registered_id=registered_id,
        )


def apply_update(local_db: LocalDatabase, su_id: str, update: BroadcastUpdate) -> None:
    """Apply a broadcast message to one SU's local database in place."""
    for delta in update.deltas:
        if delta.su_id != su_id:
            continue
        if delta.location_id < len(local_db.entries):
            local_db.entries[delta.location_id] = delta.entry
        elif delta.location_id == len(local_db.entries):
            local_db.entries.append(delta.entry)
        else:
            raise ValueError("delta would leave a gap in the location ids")
    local_db.priors = np.asarray(update.priors, dtype=float).copy()
    local_db.validate()


@dataclass(frozen=True)
class IncumbentDatabase:
    """Static stand-in for the regulatory incumbent-database interface."""

    pu_location: Position
    channels: Tuple[int, ...]

    def query(self) -> dict:
        return {"pu_location": self.pu_location, "channels": list(self.channels)}


def export_decision_log_csv(db: GlobalDatabase, path) -> None:
    """Write the decision log as CSV rows (time, decision, location_id)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "decision", "location_id"])
        for time, decision in db.decision_log:
            writer.writerow([repr(time), decision.kind.value, decision.location_id])


def save_global_database(db: GlobalDatabase, path) -> None:
    """Persist fingerprints, priors, and attacker profiles as key-value text."""
    lines = ["# global fingerprint database: one record per (su_id, location id)"]
    for su in db.su_ids:
        for m in range(len(db.priors)):
            entry = db.fingerprints[(su, m)]
            lines.append(
                f"su_id={su} id={m} per_sample_power={entry.per_sample_power!r} "
                f"observation_count={entry.observation_count} prior={float(db.priors[m])!r}"
            )
    for m in sorted(db.attacker_profiles):
        profile = db.attacker_profiles[m]
        lines.append(
            f"profile id={m} first_seen={profile.first_seen!r} "
            f"attack_count={profile.attack_count}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_global_database(path) -> GlobalDatabase:
    """Read a database written by :func:`save_global_database`."""
    su_ids: List[str] = []
    fingerprints: Dict[Tuple[str, int], FingerprintEntry] = {}
    priors: Dict[int, float] = {}
    profiles: Dict[int, AttackerProfile] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("profile "):
                fields = dict(tok.split("=", 1) for tok in line.split()[1:])
                profiles[int(fields["id"])] = AttackerProfile(
                    first_seen=float(fields["first_seen"]),
                    attack_count=int(fields["attack_count"]),
                )
                continue
            fields = dict(tok.split("=", 1) for tok in line.split())
            su = fields["su_id"]
            m = int(fields["id"])
            if su not in su_ids:
                su_ids.append(su)
            fingerprints[(su, m)] = FingerprintEntry(
                location_id=m,
                per_sample_power=float(fields["per_sample_power"]),
                observation_count=int(fields["observation_count"]),
            )
            priors[m] = float(fields["prior"])
    prior_vec = np.array([priors[m] for m in range(len(priors))])
    return GlobalDatabase(
        su_ids=su_ids,
        fingerprints=fingerprints,
        priors=prior_vec,
        attacker_profiles=profiles,
    )
