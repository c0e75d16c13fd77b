"""Command-line front end: fit a model on CSV data, run named experiments.

Every run writes a manifest.json recording the fully resolved configuration;
`rerun` re-executes a manifest and reproduces the output CSVs byte for byte,
regardless of the worker count.

Exit codes: 0 ok, 1 usage error, 2 data error, 3 numerical divergence.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .network import (
    Architecture,
    InitBounds,
    init_weights,
    predict_truncated_batch,
    truncation_bound,
)
from .protocols import EXPERIMENT_NAMES, build_experiment
from .risk import Dataset
from .simulation import (
    _network_predictor,
    l2_error,
    run_experiment,
    write_curve_csv,
    write_replication_csv,
    write_summary_csv,
)
from .training import (
    DivergenceError,
    ScheduleConfig,
    adaptive_fit,
    gd_run,
    write_trace_csv,
)

MANIFEST_FORMAT = "parnet-manifest"
MODEL_FORMAT = "parnet-model"


class DataError(Exception):
    """Input data could not be parsed or does not match the model."""


def read_dataset(path: Path) -> Dataset:
    """Parse a CSV with header x1..xd,y into a dataset."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise DataError(f"{path}: need a header row and at least one data row")
    header = rows[0]
    if len(header) < 2 or header[-1] != "y":
        raise DataError(
            f"{path}: header must name feature columns followed by 'y', got {header}"
        )
    dim = len(header) - 1
    xs, ys = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != dim + 1:
            raise DataError(f"{path}:{lineno}: expected {dim + 1} fields, got {len(row)}")
        try:
            values = [float(field) for field in row]
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
        xs.append(values[:-1])
        ys.append(values[-1])
    try:
        return Dataset(np.array(xs), np.array(ys))
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


def _json_dump(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_manifest(out_dir: Path, command: str, config: dict, outputs: list[str]) -> None:
    _json_dump(
        out_dir / "manifest.json",
        {
            "format": MANIFEST_FORMAT,
            "version": 1,
            "command": command,
            "config": config,
            "outputs": sorted(outputs),
            "versions": {
                "parnet": __version__,
                "numpy": np.__version__,
                "python": "%d.%d.%d" % sys.version_info[:3],
            },
        },
    )


def _schedule_from(cfg: dict) -> ScheduleConfig:
    return ScheduleConfig(
        t_min=cfg["tmin"],
        c8=cfg["c8"],
        c9=cfg["c9"],
        practical_cap=cfg["practical_cap"],
    )


def execute_fit(cfg: dict, out_dir: Path) -> int:
    data = read_dataset(Path(cfg["input"]))
    arch = Architecture(cfg["k"], cfg["depth"], cfg["width"], data.dim)
    bounds = InitBounds(cfg["a_bound"], cfg["b_bound"])
    rng = np.random.default_rng(np.random.SeedSequence(cfg["seed"]))
    beta = truncation_bound(data.n, cfg["c12"])

    if cfg["fixed_steps"] is None:
        outcome = adaptive_fit(arch, bounds, data, _schedule_from(cfg), rng)
    else:
        w0 = init_weights(arch, bounds, rng)
        step_size = cfg["step_size"] or 1.0 / cfg["fixed_steps"]
        outcome = gd_run(w0, data, step_size, cfg["fixed_steps"])

    metadata = {
        "n": data.n,
        "dim": data.dim,
        "seed": cfg["seed"],
        "mode": "adaptive" if cfg["fixed_steps"] is None else "fixed",
        "steps": outcome.steps,
        "step_size": outcome.step_size,
        "doubling_index": outcome.doubling_index,
        "stop_reason": outcome.stop_reason,
        "final_risk": float(outcome.trace.risks[-1]),
    }
    if cfg["eval_synthetic_l2"]:
        if data.dim != 1:
            raise DataError("--eval-synthetic-l2 requires univariate data")
        metadata["synthetic_l2_error"] = l2_error(
            _network_predictor(outcome.weights, beta)
        )

    out_dir.mkdir(parents=True, exist_ok=True)
    _json_dump(
        out_dir / "model.json",
        {
            "format": MODEL_FORMAT,
            "version": 1,
            "architecture": {
                "blocks": arch.blocks,
                "depth": arch.depth,
                "width": arch.width,
                "dim": arch.dim,
            },
            "truncation": beta,
            "metadata": metadata,
            "weights": outcome.weights.values.tolist(),
        },
    )
    preds = predict_truncated_batch(outcome.weights, data.xs, beta)
    header = [f"x{j + 1}" for j in range(data.dim)] + ["y", "prediction"]
    rows = [
        tuple(map(float, x)) + (float(y), float(p))
        for x, y, p in zip(data.xs, data.ys, preds)
    ]
    from .csvio import write_csv

    write_csv(out_dir / "predictions.csv", header, rows)
    write_trace_csv(outcome, out_dir / "trace.csv")
    write_manifest(out_dir, "fit", cfg, ["model.json", "predictions.csv", "trace.csv"])
    return 0


def execute_experiment(cfg: dict, out_dir: Path, jobs: int) -> int:
    cells = build_experiment(
        cfg["name"],
        blocks=cfg["blocks"] or None,
        widths=cfg["widths"] or None,
        fc_steps=cfg["fc_steps"] or None,
        n=cfg["n"],
        schedule=_schedule_from(cfg),
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    summaries = []
    outputs = []
    for cell in cells:
        summary = run_experiment(cell, cfg["reps"], cfg["seed"], jobs=jobs)
        summaries.append(summary)
        for rep, curve in sorted(summary.curves.items()):
            name = f"curve_{summary.label}_rep{rep}.csv"
            write_curve_csv(out_dir / name, curve)
            outputs.append(name)
    write_replication_csv(out_dir / "replications.csv", summaries)
    write_summary_csv(out_dir / "summary.csv", summaries)
    outputs += ["replications.csv", "summary.csv"]
    write_manifest(out_dir, "experiment", cfg, outputs)
    diverged = sum(r.diverged for s in summaries for r in s.records)
    if diverged:
        click.echo(f"warning: {diverged} replication(s) diverged", err=True)
        return 3
    return 0


@click.group()
@click.version_option(__version__, prog_name="parnet")
def cli():
    """Parallel-block network regression and its simulation study."""


schedule_options = [
    click.option("--tmin", default=50, show_default=True, type=click.IntRange(min=1)),
    click.option("--c8", default=9.0, show_default=True, type=float),
    click.option("--c9", default=10.0, show_default=True, type=float),
    click.option(
        "--practical-cap",
        default=100_000,
        show_default=True,
        type=click.IntRange(min=1),
        help="Hard cap on gradient descent steps per schedule round.",
    ),
]


def add_options(options):
    def wrap(func):
        for option in reversed(options):
            func = option(func)
        return func

    return wrap


@cli.command()
@click.option("--input", "input_", required=True, type=click.Path(exists=True, path_type=Path), help="CSV with header x1..xd,y.")
@click.option("--out-dir", required=True, type=click.Path(path_type=Path))
@click.option("--seed", default=1, show_default=True, type=int)
@click.option("--k", default=800, show_default=True, type=click.IntRange(min=1), help="Number of parallel blocks.")
@click.option("--depth", default=4, show_default=True, type=click.IntRange(min=2))
@click.option("--width", default=8, show_default=True, type=click.IntRange(min=1))
@click.option("--a-bound", default=1000.0, show_default=True, type=float, help="Uniform bound for input-level weights.")
@click.option("--b-bound", default=20.0, show_default=True, type=float, help="Uniform bound for inner weights.")
@click.option("--adaptive", "adaptive", is_flag=True, default=False, help="Choose stepsize and step count adaptively (default unless --fixed-steps).")
@click.option("--fixed-steps", type=click.IntRange(min=1), default=None, help="Run exactly this many steps instead of the adaptive schedule.")
@click.option("--step-size", type=float, default=None, help="Stepsize for --fixed-steps (default 1/steps).")
@click.option("--c12", default=10.0, show_default=True, type=float, help="Truncation scale: predictions clamp to ±c12*ln(n).")
@click.option("--eval-synthetic-l2", is_flag=True, default=False, help="Report the exact error against the built-in synthetic model.")
@add_options(schedule_options)
def fit(input_, out_dir, seed, k, depth, width, a_bound, b_bound, adaptive, fixed_steps, step_size, c12, eval_synthetic_l2, tmin, c8, c9, practical_cap):
    """Fit the parallel-block estimator to a CSV dataset."""
    if adaptive and fixed_steps is not None:
        raise click.UsageError("--adaptive and --fixed-steps are mutually exclusive")
    if step_size is not None and fixed_steps is None:
        raise click.UsageError("--step-size requires --fixed-steps")
    cfg = {
        "input": str(Path(input_).resolve()),
        "seed": seed,
        "k": k,
        "depth": depth,
        "width": width,
        "a_bound": a_bound,
        "b_bound": b_bound,
        "fixed_steps": fixed_steps,
        "step_size": step_size,
        "c12": c12,
        "eval_synthetic_l2": eval_synthetic_l2,
        "tmin": tmin,
        "c8": c8,
        "c9": c9,
        "practical_cap": practical_cap,
    }
    return execute_fit(cfg, Path(out_dir))


@cli.command()
@click.argument("name", type=click.Choice(EXPERIMENT_NAMES))
@click.option("--out-dir", required=True, type=click.Path(path_type=Path))
@click.option("--seed", default=1, show_default=True, type=int)
@click.option("--reps", default=25, show_default=True, type=click.IntRange(min=1))
@click.option("--jobs", default=1, show_default=True, type=click.IntRange(min=1), help="Worker processes; does not affect results.")
@click.option("--k", "blocks", multiple=True, type=click.IntRange(min=1), help="Override the block-count grid (repeatable).")
@click.option("--fc-width", "widths", multiple=True, type=click.IntRange(min=1), help="Override baseline width grid (repeatable).")
@click.option("--fc-steps", "fc_steps", multiple=True, type=click.IntRange(min=1), help="Override baseline step grid (repeatable).")
@click.option("--n", default=100, show_default=True, type=click.IntRange(min=2), help="Sample size per replication.")
@add_options(schedule_options)
def experiment(name, out_dir, seed, reps, jobs, blocks, widths, fc_steps, n, tmin, c8, c9, practical_cap):
    """Run a named experiment and emit per-replication, summary and curve CSVs."""
    cfg = {
        "name": name,
        "seed": seed,
        "reps": reps,
        "blocks": list(blocks),
        "widths": list(widths),
        "fc_steps": list(fc_steps),
        "n": n,
        "tmin": tmin,
        "c8": c8,
        "c9": c9,
        "practical_cap": practical_cap,
    }
    return execute_experiment(cfg, Path(out_dir), jobs)


@cli.command()
@click.argument("manifest", type=click.Path(exists=True, path_type=Path))
@click.option("--out-dir", required=True, type=click.Path(path_type=Path))
@click.option("--jobs", default=1, show_default=True, type=click.IntRange(min=1))
def rerun(manifest, out_dir, jobs):
    """Re-execute a recorded manifest; outputs are reproduced byte-identically."""
    try:
        doc = json.loads(Path(manifest).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot load manifest: {exc}") from exc
    if doc.get("format") != MANIFEST_FORMAT:
        raise DataError(f"{manifest} is not a run manifest")
    command = doc.get("command")
    if command == "experiment":
        return execute_experiment(doc["config"], Path(out_dir), jobs)
    if command == "fit":
        return execute_fit(doc["config"], Path(out_dir))
    raise DataError(f"manifest has unknown command {command!r}")


def main(argv=None) -> int:
    try:
        result = cli.main(args=argv, standalone_mode=False)
        return int(result) if isinstance(result, int) else 0
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        return 1
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    except DivergenceError as exc:
        click.echo(f"numerical divergence: {exc}", err=True)
        return 3
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
