"""Univariate synthetic benchmark and the replication harness.

The data model: covariates follow a standard normal restricted to [-1, 1],
the regression function is continuous and piecewise smooth with kinks at
-0.5, 0 and 0.5, and the noise is Gaussian with x-dependent scale. The
exact L2 error of a predictor against the known regression function is
computed by piecewise Gauss-Legendre quadrature weighted with the
covariate density; a Monte Carlo estimator of the same integral serves as
an independent cross-check.

`run_experiment` repeats (generate data, fit, evaluate) over independent
seed substreams and reports the median and interquartile range of the
replication errors. Replications may run in parallel worker processes;
results are merged by replication index, so the output depends only on
(cell, replications, seed).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Union

import numpy as np
from scipy.special import erf

from .baseline import AdamConfig, BaselineResult, InitScheme, train_baseline
from .csvio import write_csv
from .network import (
    Architecture,
    InitBounds,
    forward_batch,
    init_weights,
    truncation_bound,
)
from .risk import Dataset
from .selection import SelectionResult, SplitSpec, split_select
from .training import (
    STOP_CONDITIONS_MET,
    DivergenceError,
    ScheduleConfig,
    ScheduleOutcome,
    adaptive_fit,
    check_conditions,
    gd_run,
)

PIECE_BREAKS = (-1.0, -0.5, 0.0, 0.5, 1.0)

# Mass of the standard normal on [-1, 1]: 2*Phi(1) - 1.
COVARIATE_MASS = float(erf(1.0 / math.sqrt(2.0)))


def true_regression(x):
    """The known piecewise regression function on [-1, 1].

    Four smooth pieces joined continuously: a rising parabola, a falling
    line, a downward bump peaking at x = 0.2, and a rising line.
    """
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < -1.0) or np.any(x > 1.0):
        raise ValueError("regression function is defined on [-1, 1] only")
    conditions = [
        x < -0.5,
        (x >= -0.5) & (x < 0.0),
        (x >= 0.0) & (x < 0.5),
        x >= 0.5,
    ]
    pieces = [
        (x + 2.0) ** 2 / 2.0,
        -x / 2.0 + 0.875,
        -5.0 * (x - 0.2) ** 2 + 1.075,
        x + 0.125,
    ]
    return np.select(conditions, pieces)


def noise_scale(x):
    """Standard deviation of the noise at covariate value x."""
    x = np.asarray(x, dtype=np.float64)
    return 0.2 - 0.1 * np.cos(2.0 * math.pi * x)


def sample_covariates(rng: np.random.Generator, size: int) -> np.ndarray:
    """Standard normal draws restricted to [-1, 1], by rejection."""
    out = np.empty(size)
    filled = 0
    while filled < size:
        batch = rng.standard_normal(max(64, int((size - filled) / 0.6) + 16))
        kept = batch[np.abs(batch) <= 1.0]
        take = min(kept.size, size - filled)
        out[filled : filled + take] = kept[:take]
        filled += take
    return out


def covariate_cdf(x) -> np.ndarray:
    """CDF of the restricted covariate law (for distributional checks)."""
    x = np.asarray(x, dtype=np.float64)
    phi = 0.5 * (1.0 + erf(x / math.sqrt(2.0)))
    phi_lo = 0.5 * (1.0 + erf(-1.0 / math.sqrt(2.0)))
    return np.clip((phi - phi_lo) / COVARIATE_MASS, 0.0, 1.0)


def generate_dataset(
    n: int,
    rng: np.random.Generator,
    noise_scale_fn: Callable[[np.ndarray], np.ndarray] = noise_scale,
) -> Dataset:
    """n i.i.d. pairs from the synthetic model; noise scale is overridable."""
    if n < 1:
        raise ValueError("sample size must be positive")
    xs = sample_covariates(rng, n)
    noise = rng.standard_normal(n)
    ys = true_regression(xs) + np.asarray(noise_scale_fn(xs)) * noise
    return Dataset(xs[:, None], ys)


@lru_cache(maxsize=8)
def _piece_rules(nodes: int):
    base_x, base_w = np.polynomial.legendre.leggauss(nodes)
    rules = []
    for lo, hi in zip(PIECE_BREAKS[:-1], PIECE_BREAKS[1:]):
        x = 0.5 * (hi - lo) * base_x + 0.5 * (hi + lo)
        w = 0.5 * (hi - lo) * base_w
        density = np.exp(-0.5 * x**2) / math.sqrt(2.0 * math.pi) / COVARIATE_MASS
        rules.append((x, w * density))
    return tuple(rules)


def _eval_predictor(predictor, x: np.ndarray) -> np.ndarray:
    values = np.asarray(predictor(x), dtype=np.float64)
    if values.shape != x.shape:
        raise ValueError("predictor must map an array of points to same-shape values")
    if not np.all(np.isfinite(values)):
        raise ValueError("predictor returned non-finite values")
    return values


def l2_error(predictor: Callable[[np.ndarray], np.ndarray], nodes: int = 64) -> float:
    """Density-weighted squared distance of a predictor from the truth.

    Gauss-Legendre quadrature applied separately on each smoothness piece of
    the regression function; `nodes` is the per-piece node count.
    """
    if nodes < 1:
        raise ValueError("node count must be positive")
    total = 0.0
    for x, w in _piece_rules(nodes):
        diff = _eval_predictor(predictor, x) - true_regression(x)
        total += float(w @ diff**2)
    return total


def mc_l2_error(
    predictor: Callable[[np.ndarray], np.ndarray],
    rng: np.random.Generator,
    draws: int = 10**6,
    chunk: int = 50_000,
) -> tuple[float, float]:
    """Monte Carlo estimate of the same error integral, with standard error.

    Evaluates the predictor in chunks so wide networks stay within memory.
    """
    x = sample_covariates(rng, draws)
    total = 0.0
    total_sq = 0.0
    for start in range(0, draws, chunk):
        sq = (
            _eval_predictor(predictor, x[start : start + chunk])
            - true_regression(x[start : start + chunk])
        ) ** 2
        total += float(np.sum(sq))
        total_sq += float(np.sum(sq**2))
    mean = total / draws
    variance = max(total_sq / draws - mean**2, 0.0)
    return mean, float(math.sqrt(variance / draws))


def summarize(errors) -> tuple[float, float]:
    """Median and interquartile range, by linear order-statistic interpolation."""
    errors = np.asarray(errors, dtype=np.float64)
    if errors.size == 0:
        raise ValueError("no errors to summarize")
    q1, q3 = np.percentile(errors, [25.0, 75.0])
    return float(np.median(errors)), float(q3 - q1)


# ---------------------------------------------------------------------------
# Replication harness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FixedScheduleCell:
    """Fixed stepsize and step count, bounds given."""

    label: str
    n: int
    blocks: int
    depth: int
    width: int
    bounds: InitBounds
    steps: int
    step_size: float
    truncation_scale: float = 10.0


@dataclass(frozen=True)
class AdaptiveCell:
    """Stepsize and step count chosen by the doubling schedule."""

    label: str
    n: int
    blocks: int
    depth: int
    width: int
    bounds: InitBounds
    schedule: ScheduleConfig = ScheduleConfig()
    truncation_scale: float = 10.0


@dataclass(frozen=True)
class SplitSelectCell:
    """Initialization bounds chosen by sample splitting, schedule adaptive."""

    label: str
    n: int
    n_train: int
    n_test: int
    blocks: int
    depth: int
    width: int
    grid: tuple[InitBounds, ...]
    schedule: ScheduleConfig = ScheduleConfig()
    truncation_scale: float = 10.0


@dataclass(frozen=True)
class BaselineCell:
    """Fully connected ADAM baseline with (width, steps) chosen by splitting."""

    label: str
    n: int
    n_train: int
    n_test: int
    hidden_layers: int
    widths: tuple[int, ...]
    steps_grid: tuple[int, ...]
    scheme: InitScheme
    adam: AdamConfig = AdamConfig()
    truncation_scale: float = 10.0


ExperimentCell = Union[FixedScheduleCell, AdaptiveCell, SplitSelectCell, BaselineCell]


@dataclass(frozen=True)
class RepRecord:
    """Outcome of one replication; fields not applying to a method are None."""

    rep: int
    l2_error: Optional[float]
    diverged: bool = False
    steps: Optional[int] = None
    step_size: Optional[float] = None
    doubling_index: Optional[int] = None
    stop_reason: Optional[str] = None
    input_bound: Optional[float] = None
    inner_bound: Optional[float] = None
    fc_width: Optional[int] = None
    fc_steps: Optional[int] = None
    conditions_reverified: Optional[bool] = None


@dataclass(frozen=True)
class ExperimentSummary:
    label: str
    errors: np.ndarray  # per-replication errors, diverged replications excluded
    median: float
    iqr: float
    records: tuple[RepRecord, ...]
    curves: dict[int, np.ndarray]

    @classmethod
    def from_records(cls, label, records, curves) -> "ExperimentSummary":
        errors = np.array(
            [r.l2_error for r in records if not r.diverged], dtype=np.float64
        )
        median, iqr = summarize(errors) if errors.size else (math.nan, math.nan)
        return cls(label, errors, median, iqr, tuple(records), dict(curves))


def _rep_rng(seed: int, rep: int, role: int) -> np.random.Generator:
    # role 0: data, role 1: fit. Data streams are shared across cells so
    # different methods see matched samples for the same (seed, rep).
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rep, role)))


def _network_predictor(weights, beta):
    def predict(points: np.ndarray) -> np.ndarray:
        xs = np.asarray(points, dtype=np.float64)[:, None]
        return np.clip(forward_batch(weights, xs), -beta, beta)

    return predict


def prediction_curve(predictor, points: int = 1001) -> np.ndarray:
    """Columns (x, truth, prediction) on a uniform grid over [-1, 1]."""
    x = np.linspace(-1.0, 1.0, points)
    return np.column_stack([x, true_regression(x), _eval_predictor(predictor, x)])


def _reverify(outcome: ScheduleOutcome, n: int, schedule: ScheduleConfig) -> Optional[bool]:
    """Re-evaluate the stopping conditions on the stored trace."""
    if outcome.stop_reason != STOP_CONDITIONS_MET:
        return None
    return all(
        check_conditions(outcome.trace, outcome.step_size, outcome.steps, n, schedule.c9)
    )


def _fit_replication(cell: ExperimentCell, data: Dataset, fit_rng):
    """Fit one replication; returns (predictor, detail fields)."""
    if isinstance(cell, FixedScheduleCell):
        arch = Architecture(cell.blocks, cell.depth, cell.width, 1)
        w0 = init_weights(arch, cell.bounds, fit_rng)
        outcome = gd_run(w0, data, cell.step_size, cell.steps)
        beta = truncation_bound(cell.n, cell.truncation_scale)
        return _network_predictor(outcome.weights, beta), dict(
            steps=outcome.steps,
            step_size=outcome.step_size,
            input_bound=cell.bounds.input_bound,
            inner_bound=cell.bounds.inner_bound,
        )
    if isinstance(cell, AdaptiveCell):
        arch = Architecture(cell.blocks, cell.depth, cell.width, 1)
        outcome = adaptive_fit(arch, cell.bounds, data, cell.schedule, fit_rng)
        beta = truncation_bound(cell.n, cell.truncation_scale)
        return _network_predictor(outcome.weights, beta), dict(
            steps=outcome.steps,
            step_size=outcome.step_size,
            doubling_index=outcome.doubling_index,
            stop_reason=outcome.stop_reason,
            input_bound=cell.bounds.input_bound,
            inner_bound=cell.bounds.inner_bound,
            conditions_reverified=_reverify(outcome, data.n, cell.schedule),
        )
    if isinstance(cell, SplitSelectCell):
        arch = Architecture(cell.blocks, cell.depth, cell.width, 1)
        spec = SplitSpec(cell.n_train, cell.n_test, cell.grid)
        result: SelectionResult = split_select(
            arch, data, spec, cell.schedule, fit_rng, cell.truncation_scale
        )
        beta = truncation_bound(cell.n_train, cell.truncation_scale)
        return _network_predictor(result.outcome.weights, beta), dict(
            steps=result.outcome.steps,
            step_size=result.outcome.step_size,
            doubling_index=result.outcome.doubling_index,
            stop_reason=result.outcome.stop_reason,
            input_bound=result.bounds.input_bound,
            inner_bound=result.bounds.inner_bound,
            conditions_reverified=_reverify(result.outcome, cell.n_train, cell.schedule),
        )
    if isinstance(cell, BaselineCell):
        result: BaselineResult = train_baseline(
            cell.hidden_layers,
            cell.scheme,
            data,
            cell.widths,
            cell.steps_grid,
            cell.n_train,
            cell.n_test,
            cell.adam,
            fit_rng,
            cell.truncation_scale,
        )
        return result.predictor(), dict(fc_width=result.width, fc_steps=result.steps)
    raise TypeError(f"unknown cell type {type(cell).__name__}")


def _replicate(args) -> tuple[RepRecord, Optional[np.ndarray]]:
    cell, rep, seed, want_curve = args
    data = generate_dataset(cell.n, _rep_rng(seed, rep, 0))
    try:
        predictor, details = _fit_replication(cell, data, _rep_rng(seed, rep, 1))
    except DivergenceError:
        return RepRecord(rep=rep, l2_error=None, diverged=True), None
    error = l2_error(predictor)
    curve = prediction_curve(predictor) if want_curve else None
    return RepRecord(rep=rep, l2_error=error, **details), curve


def run_experiment(
    cell: ExperimentCell,
    reps: int,
    seed: int,
    jobs: int = 1,
    curve_reps: tuple[int, ...] = (0,),
) -> ExperimentSummary:
    """Independent replications of one configuration cell.

    Pure function of (cell, reps, seed): each replication draws its data and
    fit randomness from substreams keyed by (seed, replication index), so the
    result is identical at any `jobs` setting.
    """
    if reps < 1:
        raise ValueError("need at least one replication")
    tasks = [(cell, rep, seed, rep in curve_reps) for rep in range(reps)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_replicate, tasks))
    else:
        results = [_replicate(task) for task in tasks]
    records = [record for record, _ in results]
    curves = {
        record.rep: curve for (record, curve) in results if curve is not None
    }
    return ExperimentSummary.from_records(cell.label, records, curves)


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

REPLICATION_COLUMNS = (
    "cell",
    "replication",
    "l2_error",
    "diverged",
    "steps",
    "step_size",
    "doubling_index",
    "stop_reason",
    "input_bound",
    "inner_bound",
    "fc_width",
    "fc_steps",
    "conditions_reverified",
)


def write_replication_csv(path, summaries) -> None:
    rows = []
    for summary in summaries:
        for r in summary.records:
            rows.append(
                (
                    summary.label,
                    r.rep,
                    r.l2_error,
                    int(r.diverged),
                    r.steps,
                    r.step_size,
                    r.doubling_index,
                    r.stop_reason,
                    r.input_bound,
                    r.inner_bound,
                    r.fc_width,
                    r.fc_steps,
                    None if r.conditions_reverified is None else int(r.conditions_reverified),
                )
            )
    write_csv(path, REPLICATION_COLUMNS, rows)


def write_summary_csv(path, summaries) -> None:
    rows = [
        (
            s.label,
            s.median,
            s.iqr,
            len(s.records),
            sum(r.diverged for r in s.records),
        )
        for s in summaries
    ]
    write_csv(path, ("cell", "median_l2_error", "iqr", "replications", "diverged"), rows)


def write_curve_csv(path, curve: np.ndarray) -> None:
    write_csv(path, ("x", "truth", "prediction"), map(tuple, curve.tolist()))
