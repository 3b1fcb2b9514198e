"""Pinned experiment calibrations.

Every preset fixes all physically unstated parameters (traffic rates,
powers, geometry, seeds) so that its outputs are reproducible from the
manifest alone. Calibration constants live here, never inside module logic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from scipy.stats import chi2

from .detector import Thresholds
from .markov import CtmcParams
from .netsim import (
    AbstractDetection,
    AttackerConfig,
    AttackerStrategy,
    PowerMode,
    Scenario,
)
from .radio import Position, Propagation, SourceSpec, received_power

# ---------------------------------------------------------------------------
# outage/recovery sweep (attack strength vs outage metrics)
# ---------------------------------------------------------------------------
# Six channels as in the scenario band; primary load 0.5 Erlang keeps the
# attack-free outage probability near 1e-5. mu_pu > mu_eu makes the outage
# exit slow down as attacks intensify, so the recovery time grows with the
# attack rate. Time unit: milliseconds (rates are per ms).

FIG3_VERSION = "fig3-v1"
FIG3_N_CHANNELS = 6
FIG3_LAMBDA_PU = 0.06
FIG3_MU_PU = 0.12
FIG3_MU_EU = 0.1
FIG3_P_MISS = 1.0
FIG3_LAMBDA_EU_GRID = (0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5)
FIG3_SIM_HORIZON = 2e5
FIG3_SEED = 20260


def fig3_params(lambda_eu: float) -> CtmcParams:
    return CtmcParams(
        n_channels=FIG3_N_CHANNELS,
        lambda_pu=FIG3_LAMBDA_PU,
        mu_pu=FIG3_MU_PU,
        lambda_eu=lambda_eu,
        mu_eu=FIG3_MU_EU,
        p_miss=FIG3_P_MISS,
    )


def fig3_calibration() -> Dict[str, object]:
    return {
        "n_channels": FIG3_N_CHANNELS,
        "lambda_pu": FIG3_LAMBDA_PU,
        "mu_pu": FIG3_MU_PU,
        "mu_eu": FIG3_MU_EU,
        "p_miss": FIG3_P_MISS,
        "lambda_eu_grid": list(FIG3_LAMBDA_EU_GRID),
        "sim_horizon": FIG3_SIM_HORIZON,
        "time_unit": "ms",
    }


# ---------------------------------------------------------------------------
# detection probability vs false-alarm budget
# ---------------------------------------------------------------------------
# Geometry: primary transmitter at the field center, attackers on the +x
# axis at 100/200/300 m, the reference SU on the opposite side of the field
# boundary at (-1000, 0). Exponent 2 with a strong primary (20 dB per-sample
# SNR at the SU) keeps the primary band wide enough for the low-rate
# operating points.
#
# Threshold calibration: the sensing model makes the aggregated energy an
# exactly scaled chi-square, and at N_s = 12 the Gaussian-quantile mapping
# is infeasible for small false-alarm budgets (its lower band edge falls
# below the no-signal threshold). This preset therefore pins thresholds via
# exact chi-square quantiles: gamma0 at 1 - alpha0 under the no-signal law,
# gamma1/gamma2 at pf/2 and 1 - pf/2 under the primary law. The reported
# detection probability is exact under the same law.

FIG5_VERSION = "fig5-v1"
FIG5_NOISE_POWER = 1e-9
FIG5_PATH_LOSS_EXPONENT = 2.0
FIG5_REF_DISTANCE = 1.0
FIG5_REF_GAIN = 1.0
FIG5_PU_TX_POWER = 0.1
FIG5_ATTACKER_TX_POWER = 0.010944  # 7.6 * noise * (1200 m)^2: per-sample SNR 7.6 at the SU
FIG5_SU_POSITION = Position(-1000.0, 0.0)
FIG5_ATTACKER_DISTANCES = (100.0, 200.0, 300.0)
FIG5_ALPHA0 = 0.05
FIG5_N_SAMPLES_GRID = (12, 24)
FIG5_PF_GRID = (1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1)
FIG5_SEED = 20261


def fig5_propagation() -> Propagation:
    return Propagation(
        ref_power_gain=FIG5_REF_GAIN,
        ref_distance=FIG5_REF_DISTANCE,
        path_loss_exponent=FIG5_PATH_LOSS_EXPONENT,
        shadowing_sigma_db=0.0,
        noise_power=FIG5_NOISE_POWER,
    )


def fig5_pu() -> SourceSpec:
    return SourceSpec(position=Position(0.0, 0.0), tx_power=FIG5_PU_TX_POWER)


def fig5_attackers() -> List[SourceSpec]:
    return [
        SourceSpec(
            position=Position(d, 0.0),
            tx_power=FIG5_ATTACKER_TX_POWER,
            source_id=idx,
        )
        for idx, d in enumerate(FIG5_ATTACKER_DISTANCES, start=1)
    ]


def fig5_per_sample_power(source: SourceSpec) -> float:
    """Received power plus noise at the reference SU, per sample."""
    prop = fig5_propagation()
    distance = source.position.distance_to(FIG5_SU_POSITION)
    return received_power(prop, source.tx_power, distance) + FIG5_NOISE_POWER


def fig5_thresholds(n_samples: int, pf_target: float) -> Thresholds:
    """Exact chi-square threshold calibration at the reference SU."""
    noise = FIG5_NOISE_POWER
    pu_power = fig5_per_sample_power(fig5_pu())
    gamma0 = noise * chi2.ppf(1.0 - FIG5_ALPHA0, n_samples)
    gamma1 = pu_power * chi2.ppf(pf_target / 2.0, n_samples)
    gamma2 = pu_power * chi2.ppf(1.0 - pf_target / 2.0, n_samples)
    return Thresholds(gamma0, gamma1, gamma2)


def fig5_detection_probability(
    location_id: int, n_samples: int, pf_target: float
) -> float:
    """Exact attack-flag probability for one attacker location.

    The aggregated energy of a source with per-sample power c is
    c * chi-square(N_s), so the flag probability has a closed form.
    """
    thr = fig5_thresholds(n_samples, pf_target)
    c = fig5_per_sample_power(fig5_attackers()[location_id - 1])
    return float(
        chi2.cdf(thr.gamma1 / c, n_samples)
        - chi2.cdf(thr.gamma0 / c, n_samples)
        + 1.0
        - chi2.cdf(thr.gamma2 / c, n_samples)
    )


def fig5_rows() -> List[Tuple[float, int, int, float]]:
    """(pf_target, attacker_location_id, n_samples, detection_probability)."""
    rows = []
    for pf in FIG5_PF_GRID:
        for loc in (1, 2, 3):
            for n in FIG5_N_SAMPLES_GRID:
                rows.append((pf, loc, n, fig5_detection_probability(loc, n, pf)))
    return rows


def fig5_calibration() -> Dict[str, object]:
    return {
        "noise_power": FIG5_NOISE_POWER,
        "path_loss_exponent": FIG5_PATH_LOSS_EXPONENT,
        "ref_distance": FIG5_REF_DISTANCE,
        "ref_power_gain": FIG5_REF_GAIN,
        "pu_tx_power": FIG5_PU_TX_POWER,
        "attacker_tx_power": FIG5_ATTACKER_TX_POWER,
        "su_position": [FIG5_SU_POSITION.x, FIG5_SU_POSITION.y],
        "attacker_distances_m": list(FIG5_ATTACKER_DISTANCES),
        "alpha0": FIG5_ALPHA0,
        "n_samples_grid": list(FIG5_N_SAMPLES_GRID),
        "pf_grid": list(FIG5_PF_GRID),
        "threshold_scheme": "exact chi-square quantiles",
    }


# ---------------------------------------------------------------------------
# guard-channel defense (dropping/blocking vs attack strength)
# ---------------------------------------------------------------------------
# Secondary traffic churns fast relative to the channel-seizing attack rate,
# which is what makes one reserved channel absorb almost all displacement
# bursts; calibrated so the guarded dropping rate sits more than an order of
# magnitude below the unguarded one at the reference attack point.

FIG6_VERSION = "fig6-v1"
FIG6_N_CHANNELS = 6
FIG6_PU_ARRIVAL = 0.05
FIG6_PU_DEPARTURE = 0.2
FIG6_SU_ARRIVAL = 4.0
FIG6_SU_DEPARTURE = 2.0
FIG6_MU_EU = 0.5
FIG6_P_D = 0.9
FIG6_P_F = 1e-3
FIG6_LAMBDA_EU_GRID = (0.2, 0.4, 0.6, 0.8)
FIG6_GUARD_GRID = (0, 1, 2)
FIG6_HORIZON = 3e4
FIG6_REPLICATIONS = 24
FIG6_SEED = 2026
FIG6_ATTACKER_POSITION = Position(150.0, 0.0)


def fig6_scenario(lambda_eu: float, guard_count: int, seed: int) -> Scenario:
    return Scenario(
        n_channels=FIG6_N_CHANNELS,
        pu_arrival_rate=FIG6_PU_ARRIVAL,
        pu_departure_rate=FIG6_PU_DEPARTURE,
        su_arrival_rate=FIG6_SU_ARRIVAL,
        su_departure_rate=FIG6_SU_DEPARTURE,
        attackers=(
            AttackerConfig(
                position=FIG6_ATTACKER_POSITION,
                strategy=AttackerStrategy.MALICIOUS,
                power_mode=PowerMode.FIXED,
                tx_power=0.01,
                arrival_rate=lambda_eu,
                departure_rate=FIG6_MU_EU,
            ),
        ),
        guard_count=guard_count,
        detection=AbstractDetection(p_d=FIG6_P_D, p_f=FIG6_P_F),
        n_sus=3,
        field_radius=1000.0,
        horizon=FIG6_HORIZON,
        seed=seed,
    )


def fig6_calibration() -> Dict[str, object]:
    return {
        "n_channels": FIG6_N_CHANNELS,
        "pu_arrival_rate": FIG6_PU_ARRIVAL,
        "pu_departure_rate": FIG6_PU_DEPARTURE,
        "su_arrival_rate": FIG6_SU_ARRIVAL,
        "su_departure_rate": FIG6_SU_DEPARTURE,
        "mu_eu": FIG6_MU_EU,
        "p_d": FIG6_P_D,
        "p_f": FIG6_P_F,
        "lambda_eu_grid": list(FIG6_LAMBDA_EU_GRID),
        "guard_grid": list(FIG6_GUARD_GRID),
        "horizon": FIG6_HORIZON,
        "replications": FIG6_REPLICATIONS,
        "attacker_strategy": "malicious",
    }
