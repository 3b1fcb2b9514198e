"""Tests for the experiment runner."""

import csv
import json
import math

import pytest

from puesim import cli, presets

SCENARIO = """
sim.n_channels = 6
sim.guard_count = 1
sim.horizon = 500
sim.seed = 11
pu.arrival_rate = 0.05
pu.departure_rate = 0.2
su.arrival_rate = 1.0
su.departure_rate = 0.5
detection.mode = abstract
detection.p_d = 0.9
attacker.1.x = 150
attacker.1.y = 0
attacker.1.strategy = malicious
attacker.1.arrival_rate = 0.4
attacker.1.departure_rate = 0.5
"""


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def read_all_bytes(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


class TestFig5Experiment:
    def test_csv_columns_and_locations(self, tmp_path):
        manifest_path = cli.run_experiment("fig5", tmp_path / "out")
        rows = read_csv(tmp_path / "out" / "fig5_detection.csv")
        assert rows[0] == [
            "pf_target",
            "attacker_location_id",
            "n_samples",
            "detection_probability",
        ]
        locations = {int(r[1]) for r in rows[1:]}
        assert locations == {1, 2, 3}
        manifest = json.loads(manifest_path.read_text())
        assert manifest["calibration"]["attacker_distances_m"] == [100.0, 200.0, 300.0]

    def test_cells_are_finite_probabilities(self, tmp_path):
        cli.run_experiment("fig5", tmp_path / "out")
        rows = read_csv(tmp_path / "out" / "fig5_detection.csv")
        for row in rows[1:]:
            pf, loc, n, pd = float(row[0]), int(row[1]), int(row[2]), float(row[3])
            assert 0.0 < pf < 1.0
            assert loc in (1, 2, 3)
            assert n in (12, 24)
            assert math.isfinite(pd)
            assert 0.0 <= pd <= 1.0


class TestFig3Experiment:
    def test_attack_free_row_outage_below_1e4(self, tmp_path):
        cli.run_experiment("fig3", tmp_path / "out")
        rows = read_csv(tmp_path / "out" / "fig3_analytic.csv")
        assert rows[0] == ["lambda_eu", "mu_eu", "outage_prob", "recovery_time"]
        first = rows[1]
        assert float(first[0]) == 0.0
        assert float(first[2]) < 1e-4

    def test_cells_finite_and_nonnegative(self, tmp_path):
        cli.run_experiment("fig3", tmp_path / "out")
        for name in ("fig3_analytic.csv", "fig3_simulated.csv"):
            rows = read_csv(tmp_path / "out" / name)
            for row in rows[1:]:
                for cell in row:
                    if cell == "":
                        continue
                    value = float(cell)
                    assert math.isfinite(value)
                    assert value >= 0.0


@pytest.fixture(scope="module")
def fig6_small(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig6")
    cli.run_experiment("fig6", out, replications=1)
    return out


class TestFig6Experiment:
    def test_one_csv_per_guard_series(self, fig6_small):
        for g in presets.FIG6_GUARD_GRID:
            assert (fig6_small / f"fig6_guard{g}.csv").exists()

    def test_cells_are_valid(self, fig6_small):
        for g in presets.FIG6_GUARD_GRID:
            rows = read_csv(fig6_small / f"fig6_guard{g}.csv")
            assert rows[0][:4] == [
                "lambda_eu",
                "replication",
                "handoff_dropping_rate",
                "new_call_blocking_rate",
            ]
            lambdas = set()
            for row in rows[1:]:
                lambdas.add(float(row[0]))
                assert 0.0 <= float(row[2]) <= 1.0
                assert 0.0 <= float(row[3]) <= 1.0
                for cell in row[4:]:
                    assert float(cell) >= 0
            assert lambdas == set(presets.FIG6_LAMBDA_EU_GRID)
            # one aggregate row per lambda point
            aggregates = [row for row in rows[1:] if row[1] == "aggregate"]
            assert len(aggregates) == len(presets.FIG6_LAMBDA_EU_GRID)


class TestCustomExperiment:
    def test_runs_scenario_file(self, tmp_path):
        config = tmp_path / "scenario.cfg"
        config.write_text(SCENARIO)
        out = tmp_path / "out"
        rc = cli.main(["custom", str(config), "--out", str(out), "--replications", "2"])
        assert rc == 0
        rows = read_csv(out / "metrics.csv")
        assert rows[0][0] == "replication"
        assert len(rows) == 4  # header, 2 replications, aggregate

    def test_invalid_key_diagnostic(self, tmp_path, capsys):
        config = tmp_path / "scenario.cfg"
        config.write_text("sim.n_channels = 6\nsim.horizon = 10\nsim.seed = 1\nnot.a_key = 2\n")
        rc = cli.main(["custom", str(config), "--out", str(tmp_path / "out")])
        assert rc == 2
        err = capsys.readouterr().err
        assert "not.a_key" in err
        assert ":4" in err

    def test_partial_outputs_removed_on_error(self, tmp_path):
        missing = tmp_path / "nope.cfg"
        rc = cli.main(["custom", str(missing), "--out", str(tmp_path / "out")])
        assert rc == 2
        out = tmp_path / "out"
        assert not (out / "metrics.csv").exists()
        assert not (out / "manifest.json").exists()


class TestDeterminism:
    def test_fig3_and_fig5_byte_identical(self, tmp_path):
        for preset in ("fig3", "fig5"):
            a = tmp_path / f"{preset}_a"
            b = tmp_path / f"{preset}_b"
            cli.run_experiment(preset, a, seed=5)
            cli.run_experiment(preset, b, seed=5)
            assert read_all_bytes(a) == read_all_bytes(b)

    def test_custom_byte_identical(self, tmp_path):
        config = tmp_path / "scenario.cfg"
        config.write_text(SCENARIO)
        a = tmp_path / "a"
        b = tmp_path / "b"
        cli.run_experiment("custom", a, config_path=str(config), replications=2)
        cli.run_experiment("custom", b, config_path=str(config), replications=2)
        assert read_all_bytes(a) == read_all_bytes(b)

    def test_seed_changes_simulated_outputs(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        cli.run_experiment("fig3", a, seed=1)
        cli.run_experiment("fig3", b, seed=2)
        assert (a / "fig3_simulated.csv").read_bytes() != (
            b / "fig3_simulated.csv"
        ).read_bytes()
        # the analytic series does not depend on the seed
        assert (a / "fig3_analytic.csv").read_bytes() == (
            b / "fig3_analytic.csv"
        ).read_bytes()


class TestManifest:
    def test_manifest_reruns_identically(self, tmp_path):
        first = tmp_path / "first"
        manifest_path = cli.run_experiment("fig3", first, seed=9)
        second = tmp_path / "second"
        cli.rerun_from_manifest(manifest_path, second)
        assert read_all_bytes(first) == read_all_bytes(second)

    def test_manifest_records_calibration(self, tmp_path):
        manifest_path = cli.run_experiment("fig3", tmp_path / "out", seed=9)
        manifest = json.loads(manifest_path.read_text())
        assert manifest["experiment"] == "fig3"
        assert manifest["preset_version"] == presets.FIG3_VERSION
        assert manifest["seed"] == 9
        assert manifest["calibration"]["lambda_pu"] == presets.FIG3_LAMBDA_PU
        assert manifest["outputs"] == ["fig3_analytic.csv", "fig3_simulated.csv"]


class TestPlotScripts:
    def test_emitted_with_flag(self, tmp_path):
        out = tmp_path / "out"
        cli.run_experiment("fig5", out, emit_plots=True)
        script = (out / "fig5.gp").read_text()
        assert "fig5_detection.csv" in script
        assert "plot" in script

    def test_fig3_script_has_two_panels(self, tmp_path):
        out = tmp_path / "out"
        cli.run_experiment("fig3", out, emit_plots=True)
        script = (out / "fig3.gp").read_text()
        assert "multiplot layout 2,1" in script
        assert script.count("plot '") == 2

    def test_default_style_applied(self, tmp_path):
        out = tmp_path / "out"
        cli.run_experiment("fig5", out)
        path = cli.emit_plot_script(out, "fig5", style=None)
        assert "fig5.png" in path.read_text()

    def test_missing_csv_names_file(self, tmp_path):
        out = tmp_path / "out"
        cli.run_experiment("fig3", out)
        (out / "fig3_simulated.csv").unlink()
        with pytest.raises(FileNotFoundError) as err:
            cli.emit_plot_script(out, "fig3")
        assert "fig3_simulated.csv" in str(err.value)
