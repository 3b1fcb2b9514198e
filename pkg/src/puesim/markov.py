"""Continuous-time Markov model of channel saturation and outage.

State (i, j) counts channels held by primary users and by undetected
attackers; i + j = N means every channel is unavailable to the control
channel, i.e. outage. Primary arrivals preempt an attacker when the system
is saturated, attacks succeed only against free channels and only with the
configured miss probability, and departures are per-holder exponential.

The analytic side solves the stationary distribution directly; a Gillespie
event simulation of the same chain serves as an independent cross-check.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np


class SingularSystem(RuntimeError):
    """The stationary linear solve failed (chain not irreducible enough)."""


class NoOutageFlux(RuntimeError):
    """The outage set is unreachable so no recovery time is defined."""


@dataclass(frozen=True)
class CtmcParams:
    """Aggregate traffic rates of the occupancy chain.

    Arrival rates may be zero (e.g. an attack-free baseline); departure
    rates must be positive. ``p_miss`` thins the attack arrivals to the
    undetected fraction that actually seizes a channel.
    """

    n_channels: int
    lambda_pu: float
    mu_pu: float
    lambda_eu: float
    mu_eu: float
    p_miss: float = 1.0

    def __post_init__(self):
        if self.n_channels < 1:
            raise ValueError("n_channels must be >= 1")
        if self.lambda_pu < 0 or self.lambda_eu < 0:
            raise ValueError("arrival rates must be >= 0")
        if self.mu_pu <= 0 or self.mu_eu <= 0:
            raise ValueError("departure rates must be positive")
        if not 0 <= self.p_miss <= 1:
            raise ValueError("p_miss must be in [0, 1]")

    @property
    def attack_rate(self) -> float:
        """Effective rate of channel-seizing (undetected) attacks."""
        return self.lambda_eu * self.p_miss


@dataclass
class CtmcModel:
    """Enumerated state space with generator and, once solved, steady state."""

    params: CtmcParams
    states: List[Tuple[int, int]]
    index: Dict[Tuple[int, int], int]
    generator: np.ndarray
    steady_state_pi: Optional[np.ndarray] = field(default=None)

    @property
    def n_states(self) -> int:
        return len(self.states)


def build_generator(params: CtmcParams) -> CtmcModel:
    """Enumerate states (i, j) with i + j <= N and fill the rate matrix.

    Transitions from (i, j):
      * primary arrival, rate lambda_pu: to (i+1, j) below saturation, or
        (i+1, j-1) at saturation while attackers hold channels (preemption);
      * undetected attack, rate lambda_eu * p_miss: to (i, j+1) below
        saturation;
      * departures: i * mu_pu to (i-1, j) and j * mu_eu to (i, j-1).
    """
    n = params.n_channels
    states = [(i, j) for i in range(n + 1) for j in range(n + 1 - i)]
    index = {s: k for k, s in enumerate(states)}
    q = np.zeros((len(states), len(states)))
    attack = params.attack_rate
    for (i, j), k in index.items():
        if i + j < n:
            q[k, index[(i + 1, j)]] += params.lambda_pu
            if attack > 0:
                q[k, index[(i, j + 1)]] += attack
        elif j > 0:
            q[k, index[(i + 1, j - 1)]] += params.lambda_pu
        if i > 0:
            q[k, index[(i - 1, j)]] += i * params.mu_pu
        if j > 0:
            q[k, index[(i, j - 1)]] += j * params.mu_eu
    np.fill_diagonal(q, q.diagonal() - q.sum(axis=1))
    return CtmcModel(params=params, states=states, index=index, generator=q)


def steady_state(model: CtmcModel) -> np.ndarray:
    """Solve pi Q = 0 with sum(pi) = 1 by a direct linear solve."""
    n = model.n_states
    a = model.generator.T.copy()
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    if np.any(pi < -1e-12) or abs(float(np.sum(pi)) - 1.0) > 1e-9:
        raise SingularSystem("solution is not a probability distribution")
    residual = float(np.max(np.abs(pi @ model.generator)))
    if residual > 1e-9:
        raise SingularSystem(f"stationarity residual {residual:g} too large")
    model.steady_state_pi = pi
    return pi


def _require_pi(model: CtmcModel) -> np.ndarray:
    if model.steady_state_pi is None:
        return steady_state(model)
    return model.steady_state_pi


def outage_probability(model: CtmcModel) -> float:
    """Stationary probability that every channel is held by a PU or attacker."""
    pi = _require_pi(model)
    n = model.params.n_channels
    total = sum(
        float(pi[k]) for (i, j), k in model.index.items() if i + j == n
    )
    return max(total, 0.0)


def recovery_time(model: CtmcModel, params: Optional[CtmcParams] = None) -> float:
    """Mean time an outage lasts before a departure frees a channel.

    The outage entry distribution is the steady-state probability flux into
    each boundary state (i, N-i): primary arrivals from (i-1, N-i) and
    undetected attacks from (i, N-i-1). Any departure ends the outage, so
    the exit time from (i, N-i) is 1 / (i mu_pu + (N-i) mu_eu).

    Raises:
        NoOutageFlux: when no transition can enter the outage set.
    """
    p = params or model.params
    pi = _require_pi(model)
    n = p.n_channels
    attack = p.attack_rate
    weight_sum = 0.0
    weighted_time = 0.0
    for i in range(n + 1):
        j = n - i
        weight = 0.0
        if i >= 1:
            weight += float(pi[model.index[(i - 1, j)]]) * p.lambda_pu
        if j >= 1:
            weight += float(pi[model.index[(i, j - 1)]]) * attack
        if weight <= 0.0:
            continue
        weight_sum += weight
        weighted_time += weight / (i * p.mu_pu + j * p.mu_eu)
    if weight_sum <= 0.0:
        raise NoOutageFlux("the outage set is unreachable under these rates")
    return weighted_time / weight_sum


@dataclass(frozen=True)
class SimulatedOutage:
    """Gillespie estimates of the outage metrics (and optional occupancy)."""

    outage_probability: float
    mean_recovery_time: Optional[float]
    n_episodes: int
    state_occupancy: Optional[Dict[Tuple[int, int], float]] = None


def simulate_ctmc(
    params: CtmcParams,
    horizon: float,
    seed: int,
    track_occupancy: bool = False,
) -> SimulatedOutage:
    """Exact event simulation of the occupancy chain from the empty state.

    Reports the time-weighted outage fraction and the mean completed outage
    episode length over the horizon; with ``track_occupancy`` also the
    time-weighted fraction per state. Deterministic given the seed.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    rng = np.random.default_rng(seed)
    n = params.n_channels
    attack = params.attack_rate
    lam_pu, mu_pu, mu_eu = params.lambda_pu, params.mu_pu, params.mu_eu

    t = 0.0
    i = j = 0
    outage_time = 0.0
    episode_start: Optional[float] = None
    episodes: List[float] = []
    occupancy: Dict[Tuple[int, int], float] = {}

    while True:
        saturated = i + j == n
        r_pu_arrival = lam_pu if (not saturated or j > 0) and i < n else 0.0
        r_attack = attack if not saturated else 0.0
        r_pu_dep = i * mu_pu
        r_eu_dep = j * mu_eu
        total = r_pu_arrival + r_attack + r_pu_dep + r_eu_dep
        if total == 0.0:
            break
        dt = rng.exponential(1.0 / total)
        held = min(t + dt, horizon) - t
        if saturated:
            outage_time += held
        if track_occupancy:
            occupancy[(i, j)] = occupancy.get((i, j), 0.0) + held
        t += dt
        if t >= horizon:
            break
        u = rng.random() * total
        if u < r_pu_arrival:
            if saturated:
                i, j = i + 1, j - 1
            else:
                i += 1
        elif u < r_pu_arrival + r_attack:
            j += 1
        elif u < r_pu_arrival + r_attack + r_pu_dep:
            i -= 1
        else:
            j -= 1
        now_saturated = i + j == n
        if now_saturated and not saturated:
            episode_start = t
        elif saturated and not now_saturated and episode_start is not None:
            episodes.append(t - episode_start)
            episode_start = None

    if track_occupancy and t < horizon:
        # chain got stuck (no enabled transitions): credit the rest
        occupancy[(i, j)] = occupancy.get((i, j), 0.0) + horizon - t
    mean_recovery = float(np.mean(episodes)) if episodes else None
    return SimulatedOutage(
        outage_probability=outage_time / horizon,
        mean_recovery_time=mean_recovery,
        n_episodes=len(episodes),
        state_occupancy=(
            {s: v / horizon for s, v in occupancy.items()} if track_occupancy else None
        ),
    )


def sweep_attack_rate(
    base: CtmcParams, lambda_eus: Sequence[float]
) -> List[Tuple[float, float, float, float]]:
    """Analytic (lambda_eu, mu_eu, outage_prob, recovery_time) rows."""
    rows = []
    for lam in lambda_eus:
        params = CtmcParams(
            n_channels=base.n_channels,
            lambda_pu=base.lambda_pu,
            mu_pu=base.mu_pu,
            lambda_eu=lam,
            mu_eu=base.mu_eu,
            p_miss=base.p_miss,
        )
        model = build_generator(params)
        steady_state(model)
        rows.append(
            (lam, base.mu_eu, outage_probability(model), recovery_time(model))
        )
    return rows


def write_sweep_csv(rows: Sequence[Tuple[float, float, float, float]], path) -> None:
    """Write sweep rows with the documented column header."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda_eu", "mu_eu", "outage_prob", "recovery_time"])
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])
