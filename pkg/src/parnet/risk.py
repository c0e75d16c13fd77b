"""Empirical squared-error risk and its exact gradient via backpropagation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import (
    Architecture,
    BlockWeights,
    WeightVector,
    augment_ones,
    flatten,
    forward_activations,
    unflatten,
)


@dataclass(frozen=True)
class Dataset:
    """Regression sample: xs has shape (n, dim), ys has shape (n,)."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=np.float64)
        ys = np.asarray(self.ys, dtype=np.float64)
        if xs.ndim == 1:
            xs = xs[:, None]
        if xs.ndim != 2:
            raise ValueError(f"xs must be 2-dimensional, got shape {xs.shape}")
        if ys.shape != (xs.shape[0],):
            raise ValueError(
                f"ys must have shape ({xs.shape[0]},), got {np.shape(ys)}"
            )
        if xs.shape[0] < 1:
            raise ValueError("dataset must contain at least one point")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValueError("dataset contains non-finite entries")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def n(self) -> int:
        return self.xs.shape[0]

    @property
    def dim(self) -> int:
        return self.xs.shape[1]

    def head(self, k: int) -> "Dataset":
        return Dataset(self.xs[:k], self.ys[:k])

    def tail(self, k: int) -> "Dataset":
        return Dataset(self.xs[self.n - k :], self.ys[self.n - k :])


def _check_dims(arch: Architecture, data: Dataset) -> None:
    if data.dim != arch.dim:
        raise ValueError(
            f"dataset dimension {data.dim} does not match network dimension {arch.dim}"
        )


def empirical_risk(w: WeightVector, data: Dataset) -> float:
    """Mean squared residual of the network on the sample."""
    _check_dims(w.arch, data)
    _, _, output = forward_activations(w.arch, unflatten(w.arch, w.values), data.xs)
    return float(np.mean((output - data.ys) ** 2))


def value_and_gradient(w: WeightVector, data: Dataset) -> tuple[float, np.ndarray]:
    """Empirical risk together with its full gradient, in one fused pass.

    Reverse-mode accumulation with sigma'(z) = a * (1 - a) computed from the
    cached activations; sequential over nothing -- the whole sample is one
    vectorized batch, so the reduction order is fixed and deterministic.
    """
    arch = w.arch
    _check_dims(arch, data)
    parts = unflatten(arch, w.values)
    hidden, top, output = forward_activations(arch, parts, data.xs)

    resid = output - data.ys
    risk = float(np.mean(resid**2))
    scale = (2.0 / data.n) * resid  # (n,)

    # hidden[l] carries a leading ones column, so delta^T @ hidden[l] yields
    # the bias gradient and the weight gradients in one matmul.
    g_outer = top @ scale  # (K,)
    delta_top = (scale * parts.outer[:, None]) * top * (1.0 - top)  # (K, n)
    g_top = np.matmul(delta_top[:, None, :], hidden[-1])[:, 0, :]

    # Sensitivity of the pre-activations of layer depth-1.
    act = hidden[-1][..., 1:]
    delta = delta_top[:, :, None] * parts.top[:, None, 1:] * act * (1.0 - act)

    g_inner = np.empty_like(parts.inner)
    for m in range(arch.depth - 3, -1, -1):
        g_inner[m] = np.matmul(delta.swapaxes(1, 2), hidden[m])
        act = hidden[m][..., 1:]
        weights = np.ascontiguousarray(parts.inner[m][:, :, 1:])
        delta = np.matmul(delta, weights) * act * (1.0 - act)

    g_input = np.matmul(delta.swapaxes(1, 2), augment_ones(data.xs))

    grad = flatten(arch, BlockWeights(g_input, g_inner, g_top, g_outer))
    return risk, grad


def gradient(w: WeightVector, data: Dataset) -> np.ndarray:
    """Exact gradient of the empirical risk, flat, length param_count."""
    return value_and_gradient(w, data)[1]


def fd_gradient(w: WeightVector, data: Dataset, h: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient, the independent slow oracle."""
    if h <= 0:
        raise ValueError("step size h must be positive")
    base = w.values
    grad = np.empty_like(base)
    for j in range(base.size):
        bumped = base.copy()
        bumped[j] = base[j] + h
        up = empirical_risk(w.replace_values(bumped), data)
        bumped[j] = base[j] - h
        down = empirical_risk(w.replace_values(bumped), data)
        grad[j] = (up - down) / (2.0 * h)
    return grad
