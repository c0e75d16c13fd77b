"""Data-driven choice of the initialization bounds by sample splitting.

Fits one adaptive model per candidate bounds pair on the first n_train
points, scores each on the held-out remainder, and keeps the first
candidate (in grid order) with the smallest holdout risk. The returned
model is the one fitted on the training part; there is no refit on the
full sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import (
    Architecture,
    InitBounds,
    predict_truncated_batch,
    truncation_bound,
)
from .risk import Dataset
from .training import ScheduleConfig, ScheduleOutcome, adaptive_fit


@dataclass(frozen=True)
class SplitSpec:
    """Train/test split sizes and the candidate bounds grid."""

    n_train: int
    n_test: int
    grid: tuple[InitBounds, ...]

    def __post_init__(self):
        if self.n_train < 1 or self.n_test < 1:
            raise ValueError("split sizes must be positive")
        if len(self.grid) == 0:
            raise ValueError("candidate grid must not be empty")
        object.__setattr__(self, "grid", tuple(self.grid))


@dataclass(frozen=True)
class SelectionResult:
    bounds: InitBounds
    outcome: ScheduleOutcome
    holdout_risks: np.ndarray
    chosen_index: int
    outcomes: tuple[ScheduleOutcome, ...] = ()


def split_select(
    arch: Architecture,
    data: Dataset,
    spec: SplitSpec,
    cfg: ScheduleConfig,
    rng: np.random.Generator,
    truncation_scale: float = 10.0,
) -> SelectionResult:
    """Pick initialization bounds by holdout risk of the truncated predictor.

    Each grid cell fits on its own substream of `rng`, so the result does
    not depend on evaluation order.
    """
    if data.n < spec.n_train + spec.n_test:
        raise ValueError(
            f"need at least {spec.n_train + spec.n_test} points, got {data.n}"
        )
    train = data.head(spec.n_train)
    test = Dataset(
        data.xs[spec.n_train : spec.n_train + spec.n_test],
        data.ys[spec.n_train : spec.n_train + spec.n_test],
    )
    beta = truncation_bound(spec.n_train, truncation_scale)

    streams = rng.spawn(len(spec.grid))
    outcomes = []
    risks = np.empty(len(spec.grid))
    for idx, (bounds, stream) in enumerate(zip(spec.grid, streams)):
        outcome = adaptive_fit(arch, bounds, train, cfg, stream)
        preds = predict_truncated_batch(outcome.weights, test.xs, beta)
        risks[idx] = float(np.mean((test.ys - preds) ** 2))
        outcomes.append(outcome)

    best = int(np.argmin(risks))  # ties resolve to the first grid entry
    return SelectionResult(spec.grid[best], outcomes[best], risks, best, tuple(outcomes))
