"""Experiment runner.

Subcommands reproduce the preset experiments or run a custom scenario file:

    puesim fig3 --out results/           # outage/recovery sweep
    puesim fig5 --out results/           # detection probability sweep
    puesim fig6 --out results/           # guard-channel dropping comparison
    puesim custom scenario.cfg --out results/

Each run writes one CSV per figure series plus ``manifest.json`` recording
the preset version, seeds, and calibration constants; the manifest alone is
enough to reproduce every number. ``--emit-plots`` additionally writes
self-contained gnuplot scripts next to the CSVs.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__, markov, netsim, presets
from .netsim import ConfigError

_PRESET_NAMES = ("fig3", "fig5", "fig6")


def _point_seed(master_seed: int, *indices: int) -> int:
    return int(np.random.SeedSequence((master_seed, *indices)).generate_state(1)[0])


def _fmt(value: float) -> str:
    return repr(float(value))


# ---------------------------------------------------------------------------
# preset runners: each returns (outputs, manifest fields)
# ---------------------------------------------------------------------------

def _run_fig3(out_dir: Path, seed: int) -> Dict[str, object]:
    analytic_rows = markov.sweep_attack_rate(
        presets.fig3_params(0.0), presets.FIG3_LAMBDA_EU_GRID
    )
    analytic_path = out_dir / "fig3_analytic.csv"
    markov.write_sweep_csv(analytic_rows, analytic_path)

    sim_path = out_dir / "fig3_simulated.csv"
    with open(sim_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["lambda_eu", "mu_eu", "outage_prob", "recovery_time", "n_episodes"]
        )
        for idx, lam in enumerate(presets.FIG3_LAMBDA_EU_GRID):
            result = markov.simulate_ctmc(
                presets.fig3_params(lam),
                horizon=presets.FIG3_SIM_HORIZON,
                seed=_point_seed(seed, idx),
            )
            writer.writerow(
                [
                    _fmt(lam),
                    _fmt(presets.FIG3_MU_EU),
                    _fmt(result.outage_probability),
                    "" if result.mean_recovery_time is None
                    else _fmt(result.mean_recovery_time),
                    result.n_episodes,
                ]
            )
    return {
        "preset_version": presets.FIG3_VERSION,
        "calibration": presets.fig3_calibration(),
        "outputs": [analytic_path.name, sim_path.name],
    }


def _run_fig5(out_dir: Path, seed: int) -> Dict[str, object]:
    path = out_dir / "fig5_detection.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["pf_target", "attacker_location_id", "n_samples", "detection_probability"]
        )
        for pf, loc, n, pd in presets.fig5_rows():
            writer.writerow([_fmt(pf), loc, n, _fmt(pd)])
    return {
        "preset_version": presets.FIG5_VERSION,
        "calibration": presets.fig5_calibration(),
        "outputs": [path.name],
    }


_FIG6_COLUMNS = [
    "lambda_eu",
    "replication",
    "handoff_dropping_rate",
    "new_call_blocking_rate",
    "handoff_requests",
    "handoffs_dropped",
    "new_call_arrivals",
    "new_calls_blocked",
]


def _run_fig6(out_dir: Path, seed: int, replications: int) -> Dict[str, object]:
    outputs = []
    for guard in presets.FIG6_GUARD_GRID:
        path = out_dir / f"fig6_guard{guard}.csv"
        outputs.append(path.name)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(_FIG6_COLUMNS)
            for lam_idx, lam in enumerate(presets.FIG6_LAMBDA_EU_GRID):
                # seeds shared across guard values: common random numbers
                scenario = presets.fig6_scenario(
                    lam, guard, seed=_point_seed(seed, lam_idx)
                )
                results = netsim.run_replications(scenario, replications)
                for rep, m in enumerate(results):
                    writer.writerow(
                        [
                            _fmt(lam),
                            rep,
                            _fmt(m.handoff_dropping_rate),
                            _fmt(m.new_call_blocking_rate),
                            m.handoff_requests,
                            m.handoffs_dropped,
                            m.new_call_arrivals,
                            m.new_calls_blocked,
                        ]
                    )
                writer.writerow(
                    [
                        _fmt(lam),
                        "aggregate",
                        _fmt(np.mean([m.handoff_dropping_rate for m in results])),
                        _fmt(np.mean([m.new_call_blocking_rate for m in results])),
                        sum(m.handoff_requests for m in results),
                        sum(m.handoffs_dropped for m in results),
                        sum(m.new_call_arrivals for m in results),
                        sum(m.new_calls_blocked for m in results),
                    ]
                )
    return {
        "preset_version": presets.FIG6_VERSION,
        "calibration": presets.fig6_calibration(),
        "outputs": outputs,
    }


def _run_custom(
    config_path: Path, out_dir: Path, seed: Optional[int], replications: int
) -> Dict[str, object]:
    scenario = netsim.load_scenario_file(config_path)
    if seed is not None:
        scenario = replace(scenario, seed=seed)
    results = netsim.run_replications(scenario, replications)
    path = out_dir / "metrics.csv"
    netsim.write_metrics_csv(results, path)
    return {
        "preset_version": "custom",
        "calibration": {"scenario_file": str(config_path), "seed": scenario.seed},
        "outputs": [path.name],
    }


# ---------------------------------------------------------------------------
# plot scripts
# ---------------------------------------------------------------------------

_GNUPLOT_COMMON = """\
set datafile separator ","
set terminal pngcairo size 900,{height}
set output '{output}'
set key left top
set grid
"""


def _fig3_script(style: Dict[str, str]) -> str:
    head = _GNUPLOT_COMMON.format(height=900, output=style.get("output", "fig3.png"))
    return head + """\
set multiplot layout 2,1
set logscale y
set xlabel 'attack arrival rate'
set ylabel 'outage probability'
plot 'fig3_analytic.csv' every ::1 using 1:($3 > 0 ? $3 : 1/0) with lines title 'analytic', \\
     'fig3_simulated.csv' every ::1 using 1:($3 > 0 ? $3 : 1/0) with points title 'simulated'
unset logscale y
set ylabel 'recovery time'
plot 'fig3_analytic.csv' every ::1 using 1:4 with lines title 'analytic', \\
     'fig3_simulated.csv' every ::1 using 1:4 with points title 'simulated'
unset multiplot
"""


def _fig5_script(style: Dict[str, str]) -> str:
    head = _GNUPLOT_COMMON.format(height=600, output=style.get("output", "fig5.png"))
    lines = [
        head,
        "set logscale x\n",
        "set xlabel 'false alarm probability target'\n",
        "set ylabel 'attack detection probability'\n",
    ]
    plots = []
    for n in (12, 24):
        for loc in (1, 2, 3):
            plots.append(
                f"'fig5_detection.csv' every ::1 "
                f"using ($2 == {loc} && $3 == {n} ? $1 : 1/0):4 "
                f"with linespoints title 'L{loc}, Ns={n}'"
            )
    lines.append("plot " + ", \\\n     ".join(plots) + "\n")
    return "".join(lines)


def _fig6_script(style: Dict[str, str], guard_grid: Sequence[int]) -> str:
    head = _GNUPLOT_COMMON.format(height=600, output=style.get("output", "fig6.png"))
    lines = [
        head,
        "set logscale y\n",
        "set xlabel 'attack arrival rate'\n",
        "set ylabel 'handoff dropping rate'\n",
    ]
    plots = [
        f"'fig6_guard{g}.csv' every ::1 "
        f"using (strcol(2) eq 'aggregate' ? $1 : 1/0):($3 > 0 ? $3 : 1/0) "
        f"with linespoints title 'g={g}'"
        for g in guard_grid
    ]
    lines.append("plot " + ", \\\n     ".join(plots) + "\n")
    return "".join(lines)


def emit_plot_script(
    out_dir: Path, preset: str, style: Optional[Dict[str, str]] = None
) -> Path:
    """Write a self-contained gnuplot script for one preset's CSV set.

    Raises:
        FileNotFoundError: naming the first missing CSV.
    """
    style = style or {}
    out_dir = Path(out_dir)
    required = {
        "fig3": ["fig3_analytic.csv", "fig3_simulated.csv"],
        "fig5": ["fig5_detection.csv"],
        "fig6": [f"fig6_guard{g}.csv" for g in presets.FIG6_GUARD_GRID],
    }[preset]
    for name in required:
        if not (out_dir / name).exists():
            raise FileNotFoundError(f"missing CSV for {preset} plot: {name}")
    if preset == "fig3":
        text = _fig3_script(style)
    elif preset == "fig5":
        text = _fig5_script(style)
    else:
        text = _fig6_script(style, presets.FIG6_GUARD_GRID)
    path = out_dir / f"{preset}.gp"
    path.write_text(text, encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------

_DEFAULT_SEEDS = {
    "fig3": presets.FIG3_SEED,
    "fig5": presets.FIG5_SEED,
    "fig6": presets.FIG6_SEED,
}


def run_experiment(
    experiment: str,
    out_dir,
    seed: Optional[int] = None,
    replications: Optional[int] = None,
    emit_plots: bool = False,
    config_path: Optional[str] = None,
) -> Path:
    """Run a preset or custom experiment and write CSVs plus a manifest.

    Returns the manifest path. On failure all partial outputs are removed
    and the exception propagates.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    try:
        if experiment == "fig3":
            used_seed = seed if seed is not None else _DEFAULT_SEEDS["fig3"]
            info = _run_fig3(out_dir, used_seed)
            used_replications = None
        elif experiment == "fig5":
            used_seed = seed if seed is not None else _DEFAULT_SEEDS["fig5"]
            info = _run_fig5(out_dir, used_seed)
            used_replications = None
        elif experiment == "fig6":
            used_seed = seed if seed is not None else _DEFAULT_SEEDS["fig6"]
            used_replications = (
                replications if replications is not None else presets.FIG6_REPLICATIONS
            )
            info = _run_fig6(out_dir, used_seed, used_replications)
        elif experiment == "custom":
            if config_path is None:
                raise ConfigError("custom experiments need a scenario file path")
            used_seed = seed
            used_replications = replications if replications is not None else 1
            info = _run_custom(Path(config_path), out_dir, seed, used_replications)
        else:
            raise ConfigError(f"unknown experiment '{experiment}'")
        written = [out_dir / name for name in info["outputs"]]

        if emit_plots and experiment in _PRESET_NAMES:
            written.append(emit_plot_script(out_dir, experiment))

        manifest = {
            "tool_version": __version__,
            "experiment": experiment,
            "preset_version": info["preset_version"],
            "seed": used_seed,
            "replications": used_replications,
            "calibration": info["calibration"],
            "outputs": info["outputs"],
        }
        manifest_path = out_dir / "manifest.json"
        manifest_path.write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        return manifest_path
    except Exception:
        for path in written:
            try:
                path.unlink()
            except OSError:
                pass
        raise


def rerun_from_manifest(manifest_path, out_dir) -> Path:
    """Reproduce an experiment from its manifest alone."""
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    config_path = None
    if manifest["experiment"] == "custom":
        config_path = manifest["calibration"]["scenario_file"]
    return run_experiment(
        manifest["experiment"],
        out_dir,
        seed=manifest["seed"],
        replications=manifest["replications"],
        config_path=config_path,
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="puesim", description="cognitive-radio PUE attack experiment runner"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _PRESET_NAMES:
        p = sub.add_parser(name, help=f"run the {name} preset")
        _common_flags(p)
    p = sub.add_parser("custom", help="run a scenario configuration file")
    p.add_argument("config", help="path to a section.key = value scenario file")
    _common_flags(p)
    return parser


def _common_flags(p: argparse.ArgumentParser):
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--seed", type=int, default=None, help="master seed override")
    p.add_argument(
        "--replications", type=int, default=None, help="replication count override"
    )
    p.add_argument(
        "--emit-plots", action="store_true", help="also write gnuplot scripts"
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        manifest = run_experiment(
            args.command,
            args.out,
            seed=args.seed,
            replications=args.replications,
            emit_plots=args.emit_plots,
            config_path=getattr(args, "config", None),
        )
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {manifest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
