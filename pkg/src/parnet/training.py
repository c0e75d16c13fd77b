"""Gradient descent with a data-driven choice of stepsize and step count.

The adaptive schedule tries step budgets 50, 100, 200, ... (doubling), with
stepsize 1/budget and fresh random starting weights per round, until the run
satisfies three stopping conditions at once:

  C1: the trajectory-averaged gradient energy (1/t) * sum_s lam*||grad_s||^2
      stays within c9/n;
  C2: the final risk does not exceed the trajectory-averaged risk by more
      than c9/n;
  C3: the squared distance from the starting weights never exceeds
      c9*ln(n)/n.

A round is cut short as soon as C1 or C3 has become impossible to satisfy.
If the budget reaches n times the per-round step cap without success, the
last run is returned as a fallback.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .csvio import write_csv
from .network import Architecture, InitBounds, WeightVector, init_weights
from .risk import Dataset, value_and_gradient

STOP_CONDITIONS_MET = "conditions_met"
STOP_FALLBACK_CAP = "fallback_cap"


class DivergenceError(RuntimeError):
    """Gradient descent produced a non-finite risk, gradient, or weight."""


@dataclass(frozen=True)
class ScheduleConfig:
    """Constants of the adaptive stepsize/step-count schedule."""

    t_min: int = 50
    c8: float = 9.0
    c9: float = 10.0
    practical_cap: int = 100_000

    def __post_init__(self):
        if self.t_min < 1:
            raise ValueError("t_min must be at least 1")
        if self.c9 <= 0:
            raise ValueError("c9 must be positive")
        if self.practical_cap < 1:
            raise ValueError("practical_cap must be at least 1")

    def step_cap(self, n: int, blocks: int) -> int:
        """Per-round cap on the number of steps actually executed.

        The theoretical cap ceil(ln(n)^c8 * blocks^3) is astronomically large
        for realistic n, so it is clamped to practical_cap.
        """
        theoretical = math.ceil(math.log(n) ** self.c8 * blocks**3)
        return max(1, min(theoretical, self.practical_cap))

    def budget_cap(self, n: int, blocks: int) -> int:
        """Budget level at which the doubling gives up (fallback)."""
        return n * self.step_cap(n, blocks)


@dataclass(frozen=True)
class Trace:
    """Per-step diagnostics; entry s describes the weights after s steps."""

    risks: np.ndarray
    grad_norms_sq: np.ndarray
    dists: np.ndarray

    @property
    def steps(self) -> int:
        return len(self.risks) - 1


@dataclass(frozen=True)
class Attempt:
    """One doubling round: its trace plus why the inner loop stopped."""

    index: Optional[int]
    step_size: float
    budget: int
    target: int
    trace: Trace
    guard: Optional[str]  # None, "energy", or "distance"


@dataclass(frozen=True)
class ScheduleOutcome:
    weights: WeightVector
    step_size: float
    steps: int
    doubling_index: Optional[int]
    stop_reason: str
    trace: Trace
    attempts: tuple[Attempt, ...] = ()


def _descend(
    w0: WeightVector,
    data: Dataset,
    step_size: float,
    max_steps: int,
    energy_budget: Optional[float] = None,
    dist_sq_bound: Optional[float] = None,
):
    """Run at most max_steps GD steps from w0, recording the trace.

    energy_budget aborts once the running sum of step_size*||grad||^2 exceeds
    it; dist_sq_bound aborts once ||w - w0||^2 does. Either abort means the
    corresponding stopping condition can no longer be satisfied this round.
    Returns (final weights, trace, guard) with guard in {None, "energy",
    "distance"}.
    """
    start = w0.values
    values = start
    # Overflow in a diverging run is reported via DivergenceError, not warnings.
    with np.errstate(over="ignore", invalid="ignore"):
        risk, grad = value_and_gradient(w0, data)
    if not math.isfinite(risk) or not np.all(np.isfinite(grad)):
        raise DivergenceError("non-finite risk or gradient at the starting weights")

    risks = [risk]
    grad_sq = [float(grad @ grad)]
    dists = [0.0]
    energy = 0.0
    guard = None
    for t in range(1, max_steps + 1):
        energy += step_size * grad_sq[-1]
        values = values - step_size * grad
        if not np.all(np.isfinite(values)):
            raise DivergenceError(f"non-finite weights after step {t}")
        w = WeightVector(w0.arch, values)
        with np.errstate(over="ignore", invalid="ignore"):
            risk, grad = value_and_gradient(w, data)
        if not math.isfinite(risk) or not np.all(np.isfinite(grad)):
            raise DivergenceError(f"non-finite risk or gradient after step {t}")
        risks.append(risk)
        grad_sq.append(float(grad @ grad))
        dists.append(float(np.linalg.norm(values - start)))
        if energy_budget is not None and energy > energy_budget:
            guard = "energy"
            break
        if dist_sq_bound is not None and dists[-1] ** 2 > dist_sq_bound:
            guard = "distance"
            break
    trace = Trace(np.array(risks), np.array(grad_sq), np.array(dists))
    return WeightVector(w0.arch, values), trace, guard


def gd_run(
    w0: WeightVector, data: Dataset, step_size: float, steps: int
) -> ScheduleOutcome:
    """Plain fixed-schedule gradient descent (no condition checking)."""
    if step_size <= 0:
        raise ValueError("step size must be positive")
    if steps < 1:
        raise ValueError("steps must be at least 1")
    weights, trace, _ = _descend(w0, data, step_size, steps)
    attempt = Attempt(None, step_size, steps, steps, trace, None)
    return ScheduleOutcome(
        weights=weights,
        step_size=step_size,
        steps=steps,
        doubling_index=None,
        stop_reason=STOP_FALLBACK_CAP,
        trace=trace,
        attempts=(attempt,),
    )


def check_conditions(
    trace: Trace, step_size: float, steps: int, n: int, c9: float
) -> tuple[bool, bool, bool]:
    """Evaluate the three stopping conditions on a recorded trace."""
    if steps < 1:
        raise ValueError("conditions are undefined for zero steps")
    if trace.steps < steps:
        raise ValueError(f"trace has only {trace.steps} steps, need {steps}")
    tolerance = c9 / n
    c1 = step_size * float(np.sum(trace.grad_norms_sq[:steps])) / steps <= tolerance
    c2 = float(trace.risks[steps]) <= float(np.mean(trace.risks[:steps])) + tolerance
    c3 = float(np.max(trace.dists[1 : steps + 1])) ** 2 <= c9 * math.log(n) / n
    return c1, c2, c3


def adaptive_fit(
    arch: Architecture,
    bounds: InitBounds,
    data: Dataset,
    cfg: ScheduleConfig,
    rng: np.random.Generator,
) -> ScheduleOutcome:
    """Choose stepsize and step count by doubling until C1-C3 hold.

    Each round re-initializes the weights from a fresh substream of `rng`,
    so the whole procedure is deterministic given (seed, data, config).
    """
    if cfg.c8 <= 2 * arch.depth:
        raise ValueError(
            f"c8 must exceed twice the depth ({2 * arch.depth}), got {cfg.c8}"
        )
    n = data.n
    cap1 = cfg.step_cap(n, arch.blocks)
    cap2 = cfg.budget_cap(n, arch.blocks)
    tolerance = cfg.c9 / n
    dist_sq_bound = cfg.c9 * math.log(n) / n

    attempts: list[Attempt] = []
    i = 0
    while True:
        budget = 2**i * cfg.t_min
        step_size = 1.0 / budget
        target = min(budget, cap1)
        w0 = init_weights(arch, bounds, rng.spawn(1)[0])
        weights, trace, guard = _descend(
            w0,
            data,
            step_size,
            target,
            energy_budget=tolerance * budget,
            dist_sq_bound=dist_sq_bound,
        )
        attempts.append(Attempt(i, step_size, budget, target, trace, guard))
        achieved = trace.steps
        if all(check_conditions(trace, step_size, achieved, n, cfg.c9)):
            stop = STOP_CONDITIONS_MET
        elif budget >= cap2:
            stop = STOP_FALLBACK_CAP
        else:
            i += 1
            continue
        return ScheduleOutcome(
            weights=weights,
            step_size=step_size,
            steps=achieved,
            doubling_index=i,
            stop_reason=stop,
            trace=trace,
            attempts=tuple(attempts),
        )


def write_trace_csv(outcome: ScheduleOutcome, path) -> None:
    """Dump all rounds of a fit, one row per recorded step."""
    rows = []
    for attempt in outcome.attempts:
        trace = attempt.trace
        for s in range(trace.steps + 1):
            rows.append(
                (
                    attempt.index,
                    s,
                    float(trace.risks[s]),
                    float(trace.grad_norms_sq[s]),
                    float(trace.dists[s]),
                )
            )
    write_csv(path, ("i", "t", "risk", "grad_norm_sq", "dist_from_init"), rows)
