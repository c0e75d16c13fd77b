"""Fully connected logistic-squasher baseline trained with ADAM.

A plain feedforward net (no parallel-block structure): hidden layers of
configurable widths, logistic activations, linear output without bias.
Width and step count are chosen by sample splitting, mirroring how the
main estimator selects its initialization bounds. Several standard weight
initializers are provided next to the bounded-uniform/zero-output scheme
used by the main estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from .network import squash, truncation_bound
from .risk import Dataset
from .training import DivergenceError


@dataclass(frozen=True)
class FcArchitecture:
    """Fully connected net: hidden-layer widths and input dimension."""

    widths: tuple[int, ...]
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if len(self.widths) == 0 or any(w < 1 for w in self.widths):
            raise ValueError("widths must be a non-empty tuple of positive integers")
        if self.dim < 1:
            raise ValueError("input dimension must be positive")

    @property
    def hidden_layers(self) -> int:
        return len(self.widths)

    @property
    def level_shapes(self) -> list[tuple[int, int]]:
        """(rows, cols) of each weight level; bias column included."""
        fan_ins = (self.dim,) + self.widths[:-1]
        return [(out, fan + 1) for out, fan in zip(self.widths, fan_ins)]

    def param_count(self) -> int:
        return sum(r * c for r, c in self.level_shapes) + self.widths[-1]


def fc_unflatten(arch: FcArchitecture, flat: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Split a flat vector into per-level matrices plus the output weights."""
    levels = []
    offset = 0
    for rows, cols in arch.level_shapes:
        levels.append(flat[offset : offset + rows * cols].reshape(rows, cols))
        offset += rows * cols
    output = flat[offset : offset + arch.widths[-1]]
    return levels, output


@dataclass(frozen=True)
class BoundedUniformInit:
    """Uniform input/inner weights on given intervals, zero output layer."""

    input_bound: float
    inner_bound: float

    def __post_init__(self):
        if self.input_bound < 0 or self.inner_bound < 0:
            raise ValueError("initialization bounds must be nonnegative")


@dataclass(frozen=True)
class GlorotUniformInit:
    pass


@dataclass(frozen=True)
class GlorotNormalInit:
    pass


@dataclass(frozen=True)
class HeUniformInit:
    pass


@dataclass(frozen=True)
class HeNormalInit:
    pass


InitScheme = Union[
    BoundedUniformInit, GlorotUniformInit, GlorotNormalInit, HeUniformInit, HeNormalInit
]


def _fan_scaled_draw(scheme: InitScheme, rng, fan_in: int, fan_out: int, size):
    if isinstance(scheme, GlorotUniformInit):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=size)
    if isinstance(scheme, GlorotNormalInit):
        return rng.normal(0.0, math.sqrt(2.0 / (fan_in + fan_out)), size=size)
    if isinstance(scheme, HeUniformInit):
        limit = math.sqrt(6.0 / fan_in)
        return rng.uniform(-limit, limit, size=size)
    if isinstance(scheme, HeNormalInit):
        return rng.normal(0.0, math.sqrt(2.0 / fan_in), size=size)
    raise TypeError(f"unknown initialization scheme {scheme!r}")


def init_fc_weights(
    arch: FcArchitecture, scheme: InitScheme, rng: np.random.Generator
) -> np.ndarray:
    """Starting weights for the given scheme, as one flat vector.

    The bounded-uniform scheme draws biases like ordinary weights; the
    fan-scaled schemes set biases to zero and also draw the output layer.
    """
    flat = np.zeros(arch.param_count())
    levels, output = fc_unflatten(arch, flat)
    if isinstance(scheme, BoundedUniformInit):
        levels[0][:] = rng.uniform(-scheme.input_bound, scheme.input_bound, levels[0].shape)
        for level in levels[1:]:
            level[:] = rng.uniform(-scheme.inner_bound, scheme.inner_bound, level.shape)
        # output stays zero
    else:
        fan_ins = (arch.dim,) + arch.widths[:-1]
        fan_outs = arch.widths[1:] + (1,)
        for level, fan_in, fan_out in zip(levels, fan_ins, fan_outs):
            level[:, 1:] = _fan_scaled_draw(scheme, rng, fan_in, fan_out, level[:, 1:].shape)
        output[:] = _fan_scaled_draw(scheme, rng, arch.widths[-1], 1, output.shape)
    return flat


def fc_forward_batch(arch: FcArchitecture, flat: np.ndarray, xs: np.ndarray) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[1] != arch.dim:
        raise ValueError(f"inputs must have shape (n, {arch.dim}), got {xs.shape}")
    levels, output = fc_unflatten(arch, flat)
    a = xs
    for level in levels:
        z = a @ level[:, 1:].T + level[:, 0]
        a = squash(z, out=z)
    return a @ output


def fc_value_and_gradient(
    arch: FcArchitecture, flat: np.ndarray, data: Dataset
) -> tuple[float, np.ndarray]:
    """Empirical risk of the fully connected net and its exact gradient."""
    if data.dim != arch.dim:
        raise ValueError("dataset dimension does not match network dimension")
    levels, output = fc_unflatten(arch, flat)
    acts = []
    a = data.xs
    for level in levels:
        z = a @ level[:, 1:].T + level[:, 0]
        a = squash(z, out=z)
        acts.append(a)

    resid = a @ output - data.ys
    risk = float(np.mean(resid**2))
    scale = (2.0 / data.n) * resid  # (n,)

    grad = np.zeros_like(flat)
    g_levels, g_output = fc_unflatten(arch, grad)
    g_output[:] = acts[-1].T @ scale
    delta = (scale[:, None] * output[None, :]) * acts[-1] * (1.0 - acts[-1])
    for s in range(arch.hidden_layers - 1, 0, -1):
        g_levels[s][:, 0] = delta.sum(axis=0)
        g_levels[s][:, 1:] = delta.T @ acts[s - 1]
        delta = (delta @ levels[s][:, 1:]) * acts[s - 1] * (1.0 - acts[s - 1])
    g_levels[0][:, 0] = delta.sum(axis=0)
    g_levels[0][:, 1:] = delta.T @ data.xs
    return risk, grad


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0 or self.eps <= 0:
            raise ValueError("learning rate and eps must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")


@dataclass
class AdamState:
    step: int
    m: np.ndarray
    v: np.ndarray

    @classmethod
    def zeros(cls, size: int) -> "AdamState":
        return cls(0, np.zeros(size), np.zeros(size))


def adam_step(
    weights: np.ndarray, grad: np.ndarray, state: AdamState, cfg: AdamConfig
) -> tuple[np.ndarray, AdamState]:
    """One ADAM update with bias correction; returns new weights and state."""
    if grad.shape != weights.shape or state.m.shape != weights.shape:
        raise ValueError("gradient/state shapes do not match the weights")
    step = state.step + 1
    m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad
    v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad * grad
    m_hat = m / (1.0 - cfg.beta1**step)
    v_hat = v / (1.0 - cfg.beta2**step)
    new_weights = weights - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps)
    return new_weights, AdamState(step, m, v)


@dataclass(frozen=True)
class BaselineResult:
    arch: FcArchitecture
    weights: np.ndarray
    width: int
    steps: int
    truncation: float
    holdout_risks: dict[tuple[int, int], float]

    def predictor(self) -> Callable[[np.ndarray], np.ndarray]:
        """Truncated prediction on a 1-D array of points (univariate nets)."""

        def predict(points: np.ndarray) -> np.ndarray:
            xs = np.asarray(points, dtype=np.float64)
            if xs.ndim == 1:
                xs = xs[:, None]
            return np.clip(fc_forward_batch(self.arch, self.weights, xs), -self.truncation, self.truncation)

        return predict


def train_baseline(
    hidden_layers: int,
    scheme: InitScheme,
    data: Dataset,
    widths: tuple[int, ...],
    steps_grid: tuple[int, ...],
    n_train: int,
    n_test: int,
    adam: AdamConfig,
    rng: np.random.Generator,
    truncation_scale: float = 10.0,
) -> BaselineResult:
    """Grid search over (width, steps) by sample splitting.

    For each width one ADAM run is performed and snapshots are taken at every
    step count in the grid; that is equivalent to training each (width, steps)
    cell separately because the trajectories share their prefix. Cells that
    diverge are flagged with infinite holdout risk.
    """
    if data.n < n_train + n_test:
        raise ValueError(f"need at least {n_train + n_test} points, got {data.n}")
    if not widths or not steps_grid:
        raise ValueError("width and step grids must be non-empty")
    train = data.head(n_train)
    test = Dataset(data.xs[n_train : n_train + n_test], data.ys[n_train : n_train + n_test])
    beta = truncation_bound(n_train, truncation_scale)

    checkpoints = set(steps_grid)
    streams = rng.spawn(len(widths))
    holdout: dict[tuple[int, int], float] = {}
    snapshots: dict[tuple[int, int], np.ndarray] = {}
    for width, stream in zip(widths, streams):
        arch = FcArchitecture((width,) * hidden_layers, data.dim)
        flat = init_fc_weights(arch, scheme, stream)
        state = AdamState.zeros(flat.size)
        diverged_at = None
        for t in range(1, max(steps_grid) + 1):
            with np.errstate(over="ignore", invalid="ignore"):
                _, grad = fc_value_and_gradient(arch, flat, train)
            if not np.all(np.isfinite(grad)):
                diverged_at = t
                break
            flat, state = adam_step(flat, grad, state, adam)
            if not np.all(np.isfinite(flat)):
                diverged_at = t
                break
            if t in checkpoints:
                snapshots[(width, t)] = flat.copy()
        for steps in steps_grid:
            if diverged_at is not None and steps >= diverged_at:
                holdout[(width, steps)] = math.inf
                continue
            snap = snapshots[(width, steps)]
            preds = np.clip(fc_forward_batch(arch, snap, test.xs), -beta, beta)
            holdout[(width, steps)] = float(np.mean((test.ys - preds) ** 2))

    best_cell = None
    best_risk = math.inf
    for width in widths:  # declared order; strict improvement keeps first tie
        for steps in steps_grid:
            if holdout[(width, steps)] < best_risk:
                best_risk = holdout[(width, steps)]
                best_cell = (width, steps)
    if best_cell is None:
        raise DivergenceError("every (width, steps) cell diverged")
    width, steps = best_cell
    return BaselineResult(
        arch=FcArchitecture((width,) * hidden_layers, data.dim),
        weights=snapshots[(width, steps)],
        width=width,
        steps=steps,
        truncation=beta,
        holdout_risks=holdout,
    )
