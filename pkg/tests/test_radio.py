"""Tests for propagation and the sensing front-end."""

import math

import numpy as np
import pytest

from puesim.radio import (
    EnergyVector,
    Position,
    Propagation,
    SourceSpec,
    draw_energy_vector,
    energy_stats,
    received_power,
)


def make_prop(**kwargs):
    defaults = dict(
        ref_power_gain=1.0,
        ref_distance=1.0,
        path_loss_exponent=3.0,
        shadowing_sigma_db=0.0,
        noise_power=1e-9,
    )
    defaults.update(kwargs)
    return Propagation(**defaults)


class TestTypes:
    def test_position_distance(self):
        assert Position(0, 0).distance_to(Position(3, 4)) == 5.0

    def test_position_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            Position(math.nan, 0.0)
        with pytest.raises(ValueError):
            Position(0.0, math.inf)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(ref_distance=0.0),
            dict(ref_distance=-1.0),
            dict(noise_power=0.0),
            dict(path_loss_exponent=1.5),
            dict(shadowing_sigma_db=-1.0),
        ],
    )
    def test_propagation_invariants(self, kwargs):
        with pytest.raises(ValueError):
            make_prop(**kwargs)

    def test_source_invariants(self):
        with pytest.raises(ValueError):
            SourceSpec(position=Position(0, 0), tx_power=-1.0)
        with pytest.raises(ValueError):
            SourceSpec(position=Position(0, 0), tx_power=1.0, source_id=-1)

    def test_energy_vector_invariants(self):
        with pytest.raises(ValueError):
            EnergyVector.from_samples(np.array([1.0, -0.5]))
        with pytest.raises(ValueError):
            EnergyVector.from_samples(np.array([]))
        with pytest.raises(ValueError):
            EnergyVector(samples=np.array([1.0, 2.0]), aggregate=2.5)

    def test_energy_vector_aggregate_consistency(self):
        rng = np.random.default_rng(0)
        e = EnergyVector.from_samples(rng.random(1000))
        assert e.aggregate == pytest.approx(float(np.sum(e.samples)), rel=1e-12)
        assert e.sample_mean == pytest.approx(e.aggregate / 1000)


class TestReceivedPower:
    def test_zero_tx_power(self):
        prop = make_prop()
        assert received_power(prop, 0.0, 123.0) == 0.0

    def test_reference_point(self):
        prop = make_prop()
        assert received_power(prop, 2.5, prop.ref_distance) == pytest.approx(2.5)

    def test_power_law_hand_evaluated(self):
        # 1 W, exponent 3, 100 m, unit gain and reference: 100^-3 = 1e-6 W
        prop = make_prop(path_loss_exponent=3.0)
        assert received_power(prop, 1.0, 100.0) == pytest.approx(1e-6, rel=1e-12)

    def test_near_field_clamp(self):
        prop = make_prop(ref_distance=2.0)
        assert received_power(prop, 1.0, 0.0) == received_power(prop, 1.0, 2.0)

    def test_monotone_in_distance(self):
        prop = make_prop(path_loss_exponent=2.7)
        distances = np.linspace(0.0, 5000.0, 200)
        powers = [received_power(prop, 1.0, d) for d in distances]
        assert all(a >= b for a, b in zip(powers, powers[1:]))

    def test_shadowing_factor(self):
        prop = make_prop(shadowing_sigma_db=8.0)
        base = received_power(prop, 1.0, 50.0)
        shadowed = received_power(prop, 1.0, 50.0, shadow_draw=1.0)
        assert shadowed == pytest.approx(base * 10 ** 0.8)
        # draw ignored when shadowing disabled
        assert received_power(make_prop(), 1.0, 50.0, shadow_draw=1.0) == pytest.approx(
            received_power(make_prop(), 1.0, 50.0)
        )


class TestDrawEnergyVector:
    def test_noiseless_h0_all_zero(self):
        prop = make_prop(noise_power=1e-300)
        e = draw_energy_vector(prop, None, Position(0, 0), 64, np.random.default_rng(1))
        assert np.all(e.samples <= 1e-290)

    def test_deterministic_given_seed(self):
        prop = make_prop()
        src = SourceSpec(position=Position(10, 0), tx_power=1.0)
        a = draw_energy_vector(prop, src, Position(0, 0), 128, np.random.default_rng(7))
        b = draw_energy_vector(prop, src, Position(0, 0), 128, np.random.default_rng(7))
        assert np.array_equal(a.samples, b.samples)
        assert a.aggregate == b.aggregate

    def test_law_of_large_numbers_h0(self):
        # sample mean of e[n] converges to the noise power
        sigma2 = 2.5e-9
        prop = make_prop(noise_power=sigma2)
        e = draw_energy_vector(
            prop, None, Position(0, 0), 10**6, np.random.default_rng(42)
        )
        assert e.sample_mean == pytest.approx(sigma2, rel=0.01)

    def test_non_negative_across_seeds_and_sources(self):
        prop = make_prop(shadowing_sigma_db=6.0)
        rng = np.random.default_rng(3)
        for seed in range(20):
            src = (
                None
                if seed % 3 == 0
                else SourceSpec(
                    position=Position(float(rng.uniform(-500, 500)), 0.0),
                    tx_power=float(rng.uniform(0, 2)),
                )
            )
            e = draw_energy_vector(
                prop, src, Position(5, 5), 50, np.random.default_rng(seed)
            )
            assert np.all(e.samples >= 0)

    def test_requires_positive_samples(self):
        with pytest.raises(ValueError):
            draw_energy_vector(make_prop(), None, Position(0, 0), 0,
                               np.random.default_rng(0))


class TestEnergyStats:
    def test_h0_direct_substitution(self):
        prop = make_prop(noise_power=1.0)
        mean, var = energy_stats(prop, None, Position(0, 0), 12)
        assert mean == pytest.approx(12.0)
        assert var == pytest.approx(24.0)

    def test_zero_db_snr_direct_substitution(self):
        # source at the reference distance with tx power equal to the noise
        prop = make_prop(noise_power=1e-9)
        src = SourceSpec(position=Position(1.0, 0.0), tx_power=1e-9)
        mean, var = energy_stats(prop, src, Position(0, 0), 12)
        assert mean == pytest.approx(24e-9)
        assert var == pytest.approx(96e-18)

    def test_monte_carlo_oracle_matches_stats(self):
        # empirical mean/variance of 1e5 aggregated draws within 2%
        prop = make_prop(noise_power=1.0)
        src = SourceSpec(position=Position(10.0, 0.0), tx_power=500.0)
        mean, var = energy_stats(prop, src, Position(0, 0), 12)
        rng = np.random.default_rng(2024)
        p_r = 500.0 * (1.0 / 10.0) ** 3
        draws = (p_r + 1.0) * rng.standard_normal((100_000, 12)) ** 2
        aggregates = draws.sum(axis=1)
        assert float(np.mean(aggregates)) == pytest.approx(mean, rel=0.02)
        assert float(np.var(aggregates)) == pytest.approx(var, rel=0.02)

    def test_monte_carlo_against_draw_energy_vector(self):
        # 1e5 aggregated draws through the sampling path itself, 2% match
        prop = make_prop(noise_power=1.0)
        rng = np.random.default_rng(11)
        mean, var = energy_stats(prop, None, Position(0, 0), 8)
        aggs = np.array(
            [
                draw_energy_vector(prop, None, Position(0, 0), 8, rng).aggregate
                for _ in range(100_000)
            ]
        )
        assert float(np.mean(aggs)) == pytest.approx(mean, rel=0.02)
        assert float(np.var(aggs)) == pytest.approx(var, rel=0.02)

    def test_mean_increasing_in_received_power_and_samples(self):
        prop = make_prop(noise_power=1e-9)
        receiver = Position(0, 0)
        means = []
        for tx in (0.0, 0.5, 1.0, 2.0):
            src = SourceSpec(position=Position(100.0, 0.0), tx_power=tx)
            means.append(energy_stats(prop, src, receiver, 16)[0])
        assert all(a < b for a, b in zip(means, means[1:]))
        src = SourceSpec(position=Position(100.0, 0.0), tx_power=1.0)
        by_n = [energy_stats(prop, src, receiver, n)[0] for n in (1, 4, 16, 64)]
        assert all(a < b for a, b in zip(by_n, by_n[1:]))
