"""Named experiment protocols for the univariate simulation study.

Each protocol is a list of configuration cells consumed by
`simulation.run_experiment`. Block counts and baseline grids can be
overridden for smoke tests; the defaults reproduce the study's tables:

  table1       fixed schedule (steps = blocks/2) over a range of block counts
  table2       fixed schedule at 800 blocks over a grid of init bounds
  table3       adaptive schedule over a range of block counts
  table4       adaptive schedule with bounds chosen by sample splitting
  table5-nnfc  fully connected ADAM baselines with 2/4/6 hidden layers
  figure1      initializer comparison for a fully connected ADAM net
"""

from __future__ import annotations

from typing import Optional, Sequence

from .baseline import (
    AdamConfig,
    BoundedUniformInit,
    GlorotNormalInit,
    GlorotUniformInit,
    HeNormalInit,
    HeUniformInit,
)
from .network import InitBounds
from .simulation import (
    AdaptiveCell,
    BaselineCell,
    ExperimentCell,
    FixedScheduleCell,
    SplitSelectCell,
)
from .training import ScheduleConfig

EXPERIMENT_NAMES = ("table1", "table2", "table3", "table4", "table5-nnfc", "figure1")

DEFAULT_BLOCKS = (100, 200, 400, 800, 1600)
ADAPTIVE_BLOCKS = (100, 200, 400, 800)
DEFAULT_BOUNDS = InitBounds(1000.0, 20.0)
BASELINE_WIDTHS = (10, 25, 50, 100, 200)
BASELINE_STEPS = (500, 1000, 2000)
FIGURE1_WIDTH = 20
FIGURE1_STEPS = 2000

SPLIT_GRID = tuple(
    InitBounds(a, b) for a in (10.0, 100.0, 1000.0) for b in (20.0, 200.0, 2000.0)
)


def _fixed_cell(label: str, blocks: int, bounds: InitBounds, n: int) -> FixedScheduleCell:
    steps = max(1, blocks // 2)
    return FixedScheduleCell(
        label=label,
        n=n,
        blocks=blocks,
        depth=4,
        width=8,
        bounds=bounds,
        steps=steps,
        step_size=1.0 / steps,
    )


def table1_cells(blocks: Sequence[int] = DEFAULT_BLOCKS, n: int = 100):
    return [_fixed_cell(f"table1_K{k}", k, DEFAULT_BOUNDS, n) for k in blocks]


def table2_cells(blocks: Sequence[int] = (800,), n: int = 100):
    cells = []
    for k in blocks:
        for a in (10.0, 100.0, 1000.0):
            for b in (2.0, 20.0, 200.0, 2000.0):
                label = f"table2_K{k}_A{a:g}_B{b:g}"
                cells.append(_fixed_cell(label, k, InitBounds(a, b), n))
    return cells


def table3_cells(
    blocks: Sequence[int] = DEFAULT_BLOCKS,
    n: int = 100,
    schedule: ScheduleConfig = ScheduleConfig(),
):
    return [
        AdaptiveCell(
            label=f"table3_K{k}",
            n=n,
            blocks=k,
            depth=4,
            width=8,
            bounds=DEFAULT_BOUNDS,
            schedule=schedule,
        )
        for k in blocks
    ]


def table4_cells(
    blocks: Sequence[int] = ADAPTIVE_BLOCKS,
    n: int = 100,
    schedule: ScheduleConfig = ScheduleConfig(),
):
    return [
        SplitSelectCell(
            label=f"table4_K{k}",
            n=n,
            n_train=80,
            n_test=20,
            blocks=k,
            depth=4,
            width=8,
            grid=SPLIT_GRID,
            schedule=schedule,
        )
        for k in blocks
    ]


def table5_cells(
    widths: Sequence[int] = BASELINE_WIDTHS,
    steps_grid: Sequence[int] = BASELINE_STEPS,
    n: int = 100,
    adam: AdamConfig = AdamConfig(),
):
    return [
        BaselineCell(
            label=f"table5_nnfc{layers}",
            n=n,
            n_train=80,
            n_test=20,
            hidden_layers=layers,
            widths=tuple(widths),
            steps_grid=tuple(steps_grid),
            scheme=BoundedUniformInit(1000.0, 20.0),
            adam=adam,
        )
        for layers in (2, 4, 6)
    ]


FIGURE1_SCHEMES = (
    ("bounded_uniform", BoundedUniformInit(1000.0, 20.0)),
    ("glorot_uniform", GlorotUniformInit()),
    ("glorot_normal", GlorotNormalInit()),
    ("he_uniform", HeUniformInit()),
    ("he_normal", HeNormalInit()),
)


def figure1_cells(
    width: int = FIGURE1_WIDTH,
    steps: int = FIGURE1_STEPS,
    n: int = 100,
    adam: AdamConfig = AdamConfig(),
):
    """One fully connected cell per initializer, fixed width and step count."""
    return [
        BaselineCell(
            label=f"figure1_{name}",
            n=n,
            n_train=80,
            n_test=20,
            hidden_layers=4,
            widths=(width,),
            steps_grid=(steps,),
            scheme=scheme,
            adam=adam,
        )
        for name, scheme in FIGURE1_SCHEMES
    ]


def build_experiment(
    name: str,
    blocks: Optional[Sequence[int]] = None,
    widths: Optional[Sequence[int]] = None,
    fc_steps: Optional[Sequence[int]] = None,
    n: int = 100,
    schedule: ScheduleConfig = ScheduleConfig(),
) -> list[ExperimentCell]:
    """Cells for a named experiment, with optional grid overrides."""
    if name == "table1":
        return table1_cells(blocks or DEFAULT_BLOCKS, n)
    if name == "table2":
        return table2_cells(blocks or (800,), n)
    if name == "table3":
        return table3_cells(blocks or DEFAULT_BLOCKS, n, schedule)
    if name == "table4":
        return table4_cells(blocks or ADAPTIVE_BLOCKS, n, schedule)
    if name == "table5-nnfc":
        if blocks is not None:
            raise ValueError("table5-nnfc has no block-count grid; use --fc-width")
        return table5_cells(widths or BASELINE_WIDTHS, fc_steps or BASELINE_STEPS, n)
    if name == "figure1":
        if blocks is not None:
            raise ValueError("figure1 has no block-count grid; use --fc-width")
        width = FIGURE1_WIDTH if not widths else int(widths[0])
        steps = FIGURE1_STEPS if not fc_steps else int(fc_steps[0])
        return figure1_cells(width, steps, n)
    raise KeyError(f"unknown experiment {name!r}; choose from {EXPERIMENT_NAMES}")
