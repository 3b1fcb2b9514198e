"""Discrete-event simulator of a one-cell cognitive-radio network.

Channels are shared by primary users (absolute priority), secondary-user
calls, one common control channel (CCC), and attackers whose undetected
attacks seize channels. Admission of secondary traffic goes through a
guard-channel rule that favors spectrum-handoff requests over new calls.
Detection of attacks is either an abstract Bernoulli operating point or the
full sensing pipeline (propagation, three-threshold detection, location
verification, fusion) executed at every attack onset.

Scenario files are plain text, one ``section.key = value`` per line with
``#`` comments; see :func:`parse_scenario` for the key set. Metrics export
to CSV with one row per replication plus an aggregate row.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import fusion as fusion_mod
from .detector import (
    GaussianStats,
    LocalDecision,
    Thresholds,
    calibrate_thresholds,
)
from .fusion import (
    DecisionKind,
    FusionCenter,
    GlobalDatabase,
    GlobalDecision,
    apply_update,
    verify_pipeline,
)
from .radio import (
    Position,
    Propagation,
    SourceSpec,
    draw_energy_vector,
    energy_stats,
    received_power,
)


class ConfigError(ValueError):
    """A scenario configuration violates an invariant or names unknown keys."""


# ---------------------------------------------------------------------------
# scenario types
# ---------------------------------------------------------------------------

class AttackerStrategy(Enum):
    SELFISH = "selfish"      # steals idle channels only
    MALICIOUS = "malicious"  # also attacks SU-held channels and the CCC


class PowerMode(Enum):
    FIXED = "fixed"
    ADAPTIVE = "adaptive"    # mimics the PU's received power at the centroid


@dataclass(frozen=True)
class AttackerConfig:
    position: Position
    strategy: AttackerStrategy = AttackerStrategy.SELFISH
    power_mode: PowerMode = PowerMode.FIXED
    tx_power: float = 0.01
    arrival_rate: float = 0.1
    departure_rate: float = 0.2

    def __post_init__(self):
        if self.arrival_rate < 0:
            raise ConfigError("attacker arrival_rate must be >= 0")
        if self.departure_rate <= 0:
            raise ConfigError("attacker departure_rate must be positive")
        if self.tx_power < 0:
            raise ConfigError("attacker tx_power must be >= 0")


@dataclass(frozen=True)
class AbstractDetection:
    """Detection abstracted to an operating point.

    Only ``p_d`` has a behavioral effect here (per-attack Bernoulli);
    ``p_f`` documents the operating point since false alarms on the true PU
    carry no channel-level consequence in this model.
    """

    p_d: float
    p_f: float = 0.0

    def __post_init__(self):
        if not 0 <= self.p_d <= 1 or not 0 <= self.p_f <= 1:
            raise ConfigError("p_d and p_f must be probabilities")


@dataclass(frozen=True)
class FullDetection:
    """Run the whole sensing pipeline at each attack onset."""

    propagation: Propagation
    pu_position: Position
    pu_tx_power: float
    n_samples: int = 100
    alpha0: float = 0.05
    pf_target: float = 1e-3
    seed_attacker_fingerprints: bool = True
    learning_rate: float = 0.1


DetectionMode = Union[AbstractDetection, FullDetection]


@dataclass(frozen=True)
class Scenario:
    n_channels: int
    pu_arrival_rate: float
    pu_departure_rate: float
    su_arrival_rate: float
    su_departure_rate: float
    attackers: Tuple[AttackerConfig, ...]
    guard_count: int
    detection: DetectionMode
    n_sus: int
    field_radius: float
    horizon: float
    seed: int

    def __post_init__(self):
        if self.n_channels < 1:
            raise ConfigError("n_channels must be >= 1")
        if not 0 <= self.guard_count < self.n_channels:
            raise ConfigError("guard_count must satisfy 0 <= g < n_channels")
        if min(self.pu_arrival_rate, self.su_arrival_rate) < 0:
            raise ConfigError("arrival rates must be >= 0")
        if min(self.pu_departure_rate, self.su_departure_rate) <= 0:
            raise ConfigError("departure rates must be positive")
        if self.horizon <= 0:
            raise ConfigError("horizon must be positive")
        if self.field_radius <= 0:
            raise ConfigError("field_radius must be positive")
        if isinstance(self.detection, FullDetection) and self.n_sus < 1:
            raise ConfigError("full detection mode requires at least one SU")


@dataclass(frozen=True)
class Metrics:
    new_call_arrivals: int
    new_calls_admitted: int
    new_calls_blocked: int
    handoff_requests: int
    handoffs_admitted: int
    handoffs_dropped: int
    new_call_blocking_rate: float
    handoff_dropping_rate: float
    outage_episodes: int
    mean_recovery_time: Optional[float]
    outage_fraction: float
    attacks_launched: int
    attacks_detected: int
    attacks_succeeded: int
    bandwidth_waste: float


# ---------------------------------------------------------------------------
# admission control and attack resolution primitives
# ---------------------------------------------------------------------------

class RequestKind(Enum):
    NEW_CALL = "new_call"
    HANDOFF = "handoff"


def admit_request(kind: RequestKind, idle_count: int, guard_count: int) -> bool:
    """Guard-channel admission rule.

    Handoffs are admitted whenever any channel is idle; new calls only when
    the idle count strictly exceeds the reservation.
    """
    if idle_count < 0:
        raise ValueError("idle_count must be >= 0")
    if kind is RequestKind.HANDOFF:
        return idle_count >= 1
    return idle_count > guard_count


class ChannelKind(Enum):
    IDLE = "idle"
    PU = "pu"
    SU = "su"
    CCC = "ccc"
    EU = "eu"


class AttackOutcome(Enum):
    DETECTED = "detected"
    SUCCEEDED = "succeeded"
    ABORTED = "aborted"


def select_attack_target(
    strategy: AttackerStrategy, kinds: Sequence[ChannelKind], u: float
) -> Optional[int]:
    """Pick the attacked channel from one uniform draw; None when no target.

    Selfish attackers aim only at idle channels; malicious ones also at
    SU-held channels and the CCC.
    """
    if strategy is AttackerStrategy.SELFISH:
        eligible = [c for c, k in enumerate(kinds) if k is ChannelKind.IDLE]
    else:
        eligible = [
            c
            for c, k in enumerate(kinds)
            if k in (ChannelKind.IDLE, ChannelKind.SU, ChannelKind.CCC)
        ]
    if not eligible:
        return None
    return eligible[min(int(u * len(eligible)), len(eligible) - 1)]


# ---------------------------------------------------------------------------
# full detection pipeline
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EpochOutcome:
    """Result of running the sensing pipeline once against one source."""

    detected: bool
    flagged_by_energy: bool
    unnoticed: bool
    decision: Optional[GlobalDecision]


class DetectionSystem:
    """Per-SU sensing chains plus the fusion center, wired together.

    Thresholds are calibrated per SU from its own no-signal and primary
    statistics. Local databases are materialized from the global master and
    kept in sync through broadcast updates; attack decisions trigger a
    threshold recalibration from the refreshed primary fingerprint.
    """

    def __init__(
        self,
        propagation: Propagation,
        pu: SourceSpec,
        su_positions: Sequence[Position],
        n_samples: int,
        alpha0: float = 0.05,
        pf_target: float = 1e-3,
        attacker_sources: Sequence[SourceSpec] = (),
        learning_rate: float = 0.1,
    ):
        if not su_positions:
            raise ConfigError("detection system needs at least one SU")
        self.propagation = propagation
        self.pu = pu
        self.su_positions = list(su_positions)
        self.n_samples = n_samples
        self.alpha0 = alpha0
        self.pf_target = pf_target
        self.su_ids = [f"su{i}" for i in range(len(su_positions))]

        noise = propagation.noise_power
        pu_powers = {}
        for su_id, pos in zip(self.su_ids, self.su_positions):
            pu_powers[su_id] = (
                received_power(propagation, pu.tx_power, pu.position.distance_to(pos))
                + noise
            )
        db = GlobalDatabase.bootstrap(pu_powers)
        for source in attacker_sources:
            for su_id, pos in zip(self.su_ids, self.su_positions):
                power = (
                    received_power(
                        propagation, source.tx_power, source.position.distance_to(pos)
                    )
                    + noise
                )
                db.fingerprints[(su_id, source.source_id)] = (
                    fusion_mod.FingerprintEntry(
                        location_id=source.source_id,
                        per_sample_power=power,
                        observation_count=1,
                    )
                )
            db.priors = np.full(
                source.source_id + 1, 1.0 / (source.source_id + 1)
            )
            db.attacker_profiles[source.source_id] = fusion_mod.AttackerProfile(
                first_seen=0.0
            )
        db.validate()
        self.center = FusionCenter(db, learning_rate=learning_rate)
        self.local_dbs = {su: db.local_view(su) for su in self.su_ids}
        self.thresholds: Dict[str, Thresholds] = {}
        for su_id, pos in zip(self.su_ids, self.su_positions):
            self.thresholds[su_id] = self._calibrate(su_id, pos)

    def _calibrate(self, su_id: str, pos: Position) -> Thresholds:
        noise = self.propagation.noise_power
        h0 = GaussianStats(
            self.n_samples * noise, 2.0 * self.n_samples * noise**2
        )
        pu_power = self.local_dbs[su_id].entries[0].per_sample_power
        h1 = GaussianStats(
            self.n_samples * pu_power, 2.0 * self.n_samples * pu_power**2
        )
        return calibrate_thresholds(h0, h1, self.alpha0, self.pf_target)

    def sense(
        self,
        source: Optional[SourceSpec],
        rng: np.random.Generator,
        time: float = 0.0,
    ) -> EpochOutcome:
        """Run one sensing epoch of every SU against an optional source.

        A local attack flag from any SU terminates the epoch as detected.
        Otherwise the primary candidates are fused; a non-PU fusion verdict
        counts as detected and triggers database updates and recalibration.
        When no SU notices a signal at all the epoch is unnoticed.
        """
        reports = []
        for su_id, pos in zip(self.su_ids, self.su_positions):
            e = draw_energy_vector(
                self.propagation, source, pos, self.n_samples, rng
            )
            reports.append(
                verify_pipeline(e, self.thresholds[su_id], self.local_dbs[su_id], su_id)
            )
        if any(r.decision is LocalDecision.PUE_ATTACK for r in reports):
            return EpochOutcome(
                detected=True, flagged_by_energy=True, unnoticed=False, decision=None
            )
        candidates = [
            r for r in reports if r.decision is LocalDecision.CANDIDATE_PRIMARY
        ]
        if not candidates:
            return EpochOutcome(
                detected=False, flagged_by_energy=False, unnoticed=True, decision=None
            )
        decision = self.center.fuse(candidates, time=time)
        update = self.center.broadcast_update(decision, candidates, time=time)
        for su_id in self.su_ids:
            apply_update(self.local_dbs[su_id], su_id, update)
        if update.recalibrate:
            for su_id, pos in zip(self.su_ids, self.su_positions):
                self.thresholds[su_id] = self._calibrate(su_id, pos)
        return EpochOutcome(
            detected=decision.kind is not DecisionKind.TRUE_PU,
            flagged_by_energy=False,
            unnoticed=False,
            decision=decision,
        )


def adaptive_tx_power(
    propagation: Propagation,
    pu: SourceSpec,
    attacker_position: Position,
    centroid: Position = Position(0.0, 0.0),
) -> float:
    """Transmit power that copies the PU's received power at the centroid."""
    target = received_power(
        propagation, pu.tx_power, pu.position.distance_to(centroid)
    )
    d = max(attacker_position.distance_to(centroid), propagation.ref_distance)
    gain = propagation.ref_power_gain * (propagation.ref_distance / d) ** (
        propagation.path_loss_exponent
    )
    return target / gain


def build_full_detection_system(
    scenario: Scenario, rng_setup: Optional[np.random.Generator] = None
) -> Tuple[DetectionSystem, List[SourceSpec]]:
    """Instantiate the sensing pipeline the engine uses in full mode.

    SU positions are drawn uniformly over the deployment disk from the setup
    stream; attacker transmit powers resolve their power mode (adaptive
    attackers emulate the PU's received power at the field centroid).
    Without an explicit stream the scenario's own setup stream is derived,
    reproducing exactly the system a simulation run would build.
    """
    det = scenario.detection
    if not isinstance(det, FullDetection):
        raise ConfigError("scenario does not use full detection mode")
    if rng_setup is None:
        rng_setup = np.random.default_rng(
            np.random.SeedSequence(scenario.seed).spawn(7)[6]
        )
    pu = SourceSpec(position=det.pu_position, tx_power=det.pu_tx_power, source_id=0)
    positions = []
    for _ in range(scenario.n_sus):
        # uniform over the disk of the deployment field
        r = scenario.field_radius * math.sqrt(rng_setup.random())
        theta = 2.0 * math.pi * rng_setup.random()
        positions.append(Position(r * math.cos(theta), r * math.sin(theta)))
    sources = []
    for idx, attacker in enumerate(scenario.attackers, start=1):
        if attacker.power_mode is PowerMode.ADAPTIVE:
            tx = adaptive_tx_power(det.propagation, pu, attacker.position)
        else:
            tx = attacker.tx_power
        sources.append(
            SourceSpec(position=attacker.position, tx_power=tx, source_id=idx)
        )
    system = DetectionSystem(
        propagation=det.propagation,
        pu=pu,
        su_positions=positions,
        n_samples=det.n_samples,
        alpha0=det.alpha0,
        pf_target=det.pf_target,
        attacker_sources=sources if det.seed_attacker_fingerprints else (),
        learning_rate=det.learning_rate,
    )
    return system, sources


# ---------------------------------------------------------------------------
# event-driven engine
# ---------------------------------------------------------------------------

_PU_ARRIVAL, _PU_DEPART, _SU_ARRIVAL, _SU_DEPART, _ATTACK, _EU_DEPART = range(6)


class _Engine:
    def __init__(self, scenario: Scenario, check_invariants: bool = False):
        self.sc = scenario
        self.check_invariants = check_invariants
        streams = np.random.SeedSequence(scenario.seed).spawn(7)
        (
            self.rng_pu,
            self.rng_su,
            self.rng_attack,
            self.rng_detect,
            self.rng_ccc,
            self.rng_handoff,
            self.rng_setup,
        ) = (np.random.default_rng(s) for s in streams)

        n = scenario.n_channels
        self.kind = [ChannelKind.IDLE] * n
        self.token = [0] * n
        self.eu_start = [0.0] * n
        # channel 0 starts as the CCC
        self.kind[0] = ChannelKind.CCC
        self.in_outage = False
        self.outage_start = 0.0
        self.outage_total = 0.0
        self.recovery_times: List[float] = []

        self.now = 0.0
        self.queue: List[tuple] = []
        self.seq = 0
        self.service_counter = 0

        # counters
        self.new_call_arrivals = 0
        self.new_calls_admitted = 0
        self.new_calls_blocked = 0
        self.handoff_requests = 0
        self.handoffs_admitted = 0
        self.handoffs_dropped = 0
        self.outage_episodes = 0
        self.attacks_launched = 0
        self.attacks_detected = 0
        self.attacks_succeeded = 0
        self.bandwidth_waste = 0.0

        self.detection_system: Optional[DetectionSystem] = None
        self.attacker_sources: List[Optional[SourceSpec]] = []
        if isinstance(scenario.detection, FullDetection):
            self._setup_full_detection(scenario.detection)

        if scenario.pu_arrival_rate > 0:
            self._push(self.rng_pu.exponential(1.0 / scenario.pu_arrival_rate),
                       _PU_ARRIVAL, None)
        if scenario.su_arrival_rate > 0:
            self._push(self.rng_su.exponential(1.0 / scenario.su_arrival_rate),
                       _SU_ARRIVAL, None)
        for idx, attacker in enumerate(scenario.attackers):
            if attacker.arrival_rate > 0:
                self._push(
                    self.rng_attack.exponential(1.0 / attacker.arrival_rate),
                    _ATTACK, idx,
                )

    def _setup_full_detection(self, det: FullDetection):
        system, sources = build_full_detection_system(self.sc, self.rng_setup)
        self.detection_system = system
        self.attacker_sources = sources

    # -- queue helpers ------------------------------------------------------

    def _push(self, delay: float, kind: int, data):
        self.seq += 1
        heapq.heappush(self.queue, (self.now + delay, self.seq, kind, data))

    def _idle_count(self) -> int:
        return sum(1 for k in self.kind if k is ChannelKind.IDLE)

    def _first_idle(self) -> int:
        return self.kind.index(ChannelKind.IDLE)

    def _channels_of(self, kind: ChannelKind) -> List[int]:
        return [c for c, k in enumerate(self.kind) if k is kind]

    # -- occupancy transitions ----------------------------------------------

    def _vacate_eu(self, channel: int):
        self.bandwidth_waste += self.now - self.eu_start[channel]
        self.kind[channel] = ChannelKind.IDLE
        self.token[channel] += 1

    def _occupy(self, channel: int, kind: ChannelKind) -> int:
        self.kind[channel] = kind
        self.token[channel] += 1
        return self.token[channel]

    def _end_outage(self, freed_channel: int):
        self.kind[freed_channel] = ChannelKind.CCC
        self.token[freed_channel] += 1
        self.recovery_times.append(self.now - self.outage_start)
        self.outage_total += self.now - self.outage_start
        self.in_outage = False

    # -- event handlers -----------------------------------------------------

    def _handle_pu_arrival(self):
        sc = self.sc
        self._push(self.rng_pu.exponential(1.0 / sc.pu_arrival_rate), _PU_ARRIVAL, None)
        dwell = self.rng_pu.exponential(1.0 / sc.pu_departure_rate)
        u = self.rng_pu.random()
        # priority order: idle, attacker-held, SU-held, CCC
        for target_kind in (ChannelKind.IDLE, ChannelKind.EU, ChannelKind.SU,
                            ChannelKind.CCC):
            candidates = self._channels_of(target_kind)
            if candidates:
                break
        else:
            return  # every channel PU-held: the arrival is lost
        channel = candidates[min(int(u * len(candidates)), len(candidates) - 1)]
        displaced = self.kind[channel]
        if displaced is ChannelKind.EU:
            self._vacate_eu(channel)
        token = self._occupy(channel, ChannelKind.PU)
        self._push(dwell, _PU_DEPART, (channel, token))
        if displaced is ChannelKind.SU:
            self._handoff_request()
        elif displaced is ChannelKind.CCC:
            self._maintain_ccc()

    def _handle_pu_departure(self, channel: int, token: int):
        if self.token[channel] != token or self.kind[channel] is not ChannelKind.PU:
            return
        self.kind[channel] = ChannelKind.IDLE
        self.token[channel] += 1
        if self.in_outage:
            self._end_outage(channel)

    def _handle_su_arrival(self):
        sc = self.sc
        self._push(self.rng_su.exponential(1.0 / sc.su_arrival_rate), _SU_ARRIVAL, None)
        dwell = self.rng_su.exponential(1.0 / sc.su_departure_rate)
        self.new_call_arrivals += 1
        if admit_request(RequestKind.NEW_CALL, self._idle_count(), sc.guard_count):
            self.new_calls_admitted += 1
            channel = self._first_idle()
            token = self._occupy(channel, ChannelKind.SU)
            self._push(dwell, _SU_DEPART, (channel, token))
        else:
            self.new_calls_blocked += 1

    def _handle_su_departure(self, channel: int, token: int):
        if self.token[channel] != token or self.kind[channel] is not ChannelKind.SU:
            return
        self.kind[channel] = ChannelKind.IDLE
        self.token[channel] += 1

    def _handle_attack(self, attacker_idx: int):
        sc = self.sc
        attacker = sc.attackers[attacker_idx]
        self._push(self.rng_attack.exponential(1.0 / attacker.arrival_rate),
                   _ATTACK, attacker_idx)
        dwell = self.rng_attack.exponential(1.0 / attacker.departure_rate)
        target_u = self.rng_attack.random()
        self.attacks_launched += 1
        channel = select_attack_target(attacker.strategy, self.kind, target_u)
        if isinstance(sc.detection, AbstractDetection):
            detected = self.rng_detect.random() < sc.detection.p_d
            if channel is None:
                return  # aborted: nothing to seize
        else:
            if channel is None:
                return
            outcome = self.detection_system.sense(
                self.attacker_sources[attacker_idx], self.rng_detect, time=self.now
            )
            if outcome.unnoticed:
                return  # no SU reacted, the emulation had no effect
            detected = outcome.detected
        if detected:
            self.attacks_detected += 1
            return
        self.attacks_succeeded += 1
        displaced = self.kind[channel]
        self.eu_start[channel] = self.now
        token = self._occupy(channel, ChannelKind.EU)
        self._push(dwell, _EU_DEPART, (channel, token))
        if displaced is ChannelKind.SU:
            self._handoff_request()
        elif displaced is ChannelKind.CCC:
            self._maintain_ccc()

    def _handle_eu_departure(self, channel: int, token: int):
        if self.token[channel] != token or self.kind[channel] is not ChannelKind.EU:
            return
        self._vacate_eu(channel)
        if self.in_outage:
            self._end_outage(channel)

    def _maintain_ccc(self):
        """Relocate the CCC after its channel was taken by a PU or attacker."""
        idle = self._channels_of(ChannelKind.IDLE)
        if idle:
            self._occupy(idle[0], ChannelKind.CCC)
            return
        su_held = self._channels_of(ChannelKind.SU)
        if su_held:
            u = self.rng_ccc.random()
            victim = su_held[min(int(u * len(su_held)), len(su_held) - 1)]
            self._occupy(victim, ChannelKind.CCC)
            self._handoff_request()
            return
        self.in_outage = True
        self.outage_start = self.now
        self.outage_episodes += 1

    def _handoff_request(self):
        """A displaced SU service asks for a new channel or is dropped."""
        self.handoff_requests += 1
        if admit_request(RequestKind.HANDOFF, self._idle_count(), self.sc.guard_count):
            self.handoffs_admitted += 1
            channel = self._first_idle()
            token = self._occupy(channel, ChannelKind.SU)
            dwell = self.rng_handoff.exponential(1.0 / self.sc.su_departure_rate)
            self._push(dwell, _SU_DEPART, (channel, token))
        else:
            self.handoffs_dropped += 1

    # -- main loop ----------------------------------------------------------

    def _assert_invariants(self):
        counts = {k: 0 for k in ChannelKind}
        for k in self.kind:
            counts[k] += 1
        assert sum(counts.values()) == self.sc.n_channels
        if self.in_outage:
            assert counts[ChannelKind.CCC] == 0
            assert counts[ChannelKind.PU] + counts[ChannelKind.EU] == self.sc.n_channels
        else:
            assert counts[ChannelKind.CCC] == 1

    def run(self) -> Metrics:
        sc = self.sc
        handlers = {
            _PU_ARRIVAL: lambda data: self._handle_pu_arrival(),
            _PU_DEPART: lambda data: self._handle_pu_departure(*data),
            _SU_ARRIVAL: lambda data: self._handle_su_arrival(),
            _SU_DEPART: lambda data: self._handle_su_departure(*data),
            _ATTACK: lambda data: self._handle_attack(data),
            _EU_DEPART: lambda data: self._handle_eu_departure(*data),
        }
        while self.queue:
            t, _, kind, data = self.queue[0]
            if t > sc.horizon:
                break
            heapq.heappop(self.queue)
            self.now = t
            handlers[kind](data)
            if self.check_invariants:
                self._assert_invariants()

        self.now = sc.horizon
        if self.in_outage:
            self.outage_total += sc.horizon - self.outage_start
        for channel, k in enumerate(self.kind):
            if k is ChannelKind.EU:
                self.bandwidth_waste += sc.horizon - self.eu_start[channel]

        blocking = (
            self.new_calls_blocked / self.new_call_arrivals
            if self.new_call_arrivals
            else 0.0
        )
        dropping = (
            self.handoffs_dropped / self.handoff_requests
            if self.handoff_requests
            else 0.0
        )
        return Metrics(
            new_call_arrivals=self.new_call_arrivals,
            new_calls_admitted=self.new_calls_admitted,
            new_calls_blocked=self.new_calls_blocked,
            handoff_requests=self.handoff_requests,
            handoffs_admitted=self.handoffs_admitted,
            handoffs_dropped=self.handoffs_dropped,
            new_call_blocking_rate=blocking,
            handoff_dropping_rate=dropping,
            outage_episodes=self.outage_episodes,
            mean_recovery_time=(
                float(np.mean(self.recovery_times)) if self.recovery_times else None
            ),
            outage_fraction=self.outage_total / sc.horizon,
            attacks_launched=self.attacks_launched,
            attacks_detected=self.attacks_detected,
            attacks_succeeded=self.attacks_succeeded,
            bandwidth_waste=self.bandwidth_waste,
        )


def run(scenario: Scenario, check_invariants: bool = False) -> Metrics:
    """Simulate one replication of a scenario. Deterministic given its seed."""
    return _Engine(scenario, check_invariants=check_invariants).run()


def replication_seed(master_seed: int, index: int) -> int:
    """Derived per-replication seed; stable across platforms."""
    return int(np.random.SeedSequence((master_seed, index)).generate_state(1)[0])


def run_replications(scenario: Scenario, n_replications: int) -> List[Metrics]:
    """Run independent replications with seeds derived from the scenario seed."""
    results = []
    for k in range(n_replications):
        results.append(run(replace(scenario, seed=replication_seed(scenario.seed, k))))
    return results


# ---------------------------------------------------------------------------
# scenario files and metrics export
# ---------------------------------------------------------------------------

_SCALAR_KEYS = {
    "sim.n_channels": ("n_channels", int),
    "sim.guard_count": ("guard_count", int),
    "sim.horizon": ("horizon", float),
    "sim.seed": ("seed", int),
    "pu.arrival_rate": ("pu_arrival_rate", float),
    "pu.departure_rate": ("pu_departure_rate", float),
    "su.arrival_rate": ("su_arrival_rate", float),
    "su.departure_rate": ("su_departure_rate", float),
    "su.count": ("n_sus", int),
    "field.radius": ("field_radius", float),
}

_DETECTION_KEYS = {
    "detection.mode",
    "detection.p_d",
    "detection.p_f",
    "detection.n_samples",
    "detection.alpha0",
    "detection.pf_target",
    "detection.seed_fingerprints",
    "detection.learning_rate",
}

_RADIO_KEYS = {
    "radio.ref_power_gain",
    "radio.ref_distance",
    "radio.path_loss_exponent",
    "radio.shadowing_sigma_db",
    "radio.noise_power",
    "pu.x",
    "pu.y",
    "pu.tx_power",
}

_ATTACKER_FIELDS = {
    "x", "y", "strategy", "power_mode", "tx_power", "arrival_rate", "departure_rate",
}


def parse_scenario(text: str, source_name: str = "<config>") -> Scenario:
    """Parse the plain-text ``section.key = value`` scenario format.

    Unknown keys and malformed lines raise :class:`ConfigError` naming the
    offending key and line number.
    """
    scalars = {}
    detection: Dict[str, str] = {}
    radio: Dict[str, str] = {}
    attackers: Dict[int, Dict[str, str]] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep or not key or not value:
            raise ConfigError(f"{source_name}:{lineno}: expected 'key = value'")
        if key in _SCALAR_KEYS:
            field_name, cast = _SCALAR_KEYS[key]
            try:
                scalars[field_name] = cast(value)
            except ValueError as exc:
                raise ConfigError(f"{source_name}:{lineno}: bad value for {key}: {exc}")
        elif key in _DETECTION_KEYS:
            detection[key.split(".", 1)[1]] = value
        elif key in _RADIO_KEYS:
            radio[key] = value
        elif key.startswith("attacker."):
            parts = key.split(".")
            if len(parts) != 3 or parts[2] not in _ATTACKER_FIELDS:
                raise ConfigError(f"{source_name}:{lineno}: unknown key '{key}'")
            try:
                idx = int(parts[1])
            except ValueError:
                raise ConfigError(f"{source_name}:{lineno}: unknown key '{key}'")
            attackers.setdefault(idx, {})[parts[2]] = value
        else:
            raise ConfigError(f"{source_name}:{lineno}: unknown key '{key}'")

    required = {"n_channels", "horizon", "seed"}
    missing = required - scalars.keys()
    if missing:
        raise ConfigError(f"{source_name}: missing required keys: {sorted(missing)}")

    attacker_configs = []
    for idx in sorted(attackers):
        raw_fields = attackers[idx]
        try:
            attacker_configs.append(
                AttackerConfig(
                    position=Position(float(raw_fields["x"]), float(raw_fields["y"])),
                    strategy=AttackerStrategy(raw_fields.get("strategy", "selfish")),
                    power_mode=PowerMode(raw_fields.get("power_mode", "fixed")),
                    tx_power=float(raw_fields.get("tx_power", 0.01)),
                    arrival_rate=float(raw_fields.get("arrival_rate", 0.1)),
                    departure_rate=float(raw_fields.get("departure_rate", 0.2)),
                )
            )
        except KeyError as exc:
            raise ConfigError(f"{source_name}: attacker.{idx} is missing {exc}")

    mode = detection.get("mode", "abstract")
    if mode == "abstract":
        det: DetectionMode = AbstractDetection(
            p_d=float(detection.get("p_d", 0.9)),
            p_f=float(detection.get("p_f", 0.0)),
        )
    elif mode == "full":
        prop = Propagation(
            ref_power_gain=float(radio.get("radio.ref_power_gain", 1.0)),
            ref_distance=float(radio.get("radio.ref_distance", 1.0)),
            path_loss_exponent=float(radio.get("radio.path_loss_exponent", 3.0)),
            shadowing_sigma_db=float(radio.get("radio.shadowing_sigma_db", 0.0)),
            noise_power=float(radio.get("radio.noise_power", 1e-9)),
        )
        det = FullDetection(
            propagation=prop,
            pu_position=Position(
                float(radio.get("pu.x", 0.0)), float(radio.get("pu.y", 0.0))
            ),
            pu_tx_power=float(radio.get("pu.tx_power", 0.1)),
            n_samples=int(detection.get("n_samples", 100)),
            alpha0=float(detection.get("alpha0", 0.05)),
            pf_target=float(detection.get("pf_target", 1e-3)),
            seed_attacker_fingerprints=(
                detection.get("seed_fingerprints", "true").lower() == "true"
            ),
            learning_rate=float(detection.get("learning_rate", 0.1)),
        )
    else:
        raise ConfigError(f"{source_name}: unknown detection.mode '{mode}'")

    return Scenario(
        n_channels=scalars["n_channels"],
        pu_arrival_rate=scalars.get("pu_arrival_rate", 0.0),
        pu_departure_rate=scalars.get("pu_departure_rate", 1.0),
        su_arrival_rate=scalars.get("su_arrival_rate", 0.0),
        su_departure_rate=scalars.get("su_departure_rate", 1.0),
        attackers=tuple(attacker_configs),
        guard_count=scalars.get("guard_count", 0),
        detection=det,
        n_sus=scalars.get("n_sus", 1),
        field_radius=scalars.get("field_radius", 1000.0),
        horizon=scalars["horizon"],
        seed=scalars["seed"],
    )


def load_scenario_file(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read(), source_name=str(path))


_METRIC_FIELDS = [
    "new_call_arrivals",
    "new_calls_admitted",
    "new_calls_blocked",
    "handoff_requests",
    "handoffs_admitted",
    "handoffs_dropped",
    "new_call_blocking_rate",
    "handoff_dropping_rate",
    "outage_episodes",
    "mean_recovery_time",
    "outage_fraction",
    "attacks_launched",
    "attacks_detected",
    "attacks_succeeded",
    "bandwidth_waste",
]


def write_metrics_csv(metrics: Sequence[Metrics], path) -> None:
    """One row per replication plus an aggregate (mean) row."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["replication"] + _METRIC_FIELDS)
        for idx, m in enumerate(metrics):
            writer.writerow([idx] + [_format_cell(getattr(m, f)) for f in _METRIC_FIELDS])
        writer.writerow(["aggregate"] + [
            _format_cell(_aggregate(metrics, f)) for f in _METRIC_FIELDS
        ])


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _aggregate(metrics: Sequence[Metrics], field_name: str):
    values = [getattr(m, field_name) for m in metrics]
    values = [v for v in values if v is not None]
    if not values:
        return None
    return float(np.mean(values))
