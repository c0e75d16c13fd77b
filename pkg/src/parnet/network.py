"""Parallel-block logistic network: weight layout, initialization, forward pass.

The model is a linear combination of `blocks` independent fully connected
sub-networks ("blocks"). Each block has `depth` layers: layers 1..depth-1
hold `width` neurons, layer `depth` holds a single neuron whose output is
scaled by the block's outer weight. All neurons use the logistic activation
1 / (1 + exp(-z)).

All weights live in one flat float64 vector. Per-block segment order:
input level (width x (dim+1), bias first), inner levels 1..depth-2
(width x (width+1) each), top level (width+1), outer scalar. Blocks are
concatenated in order. `flat_index` exposes the structured-to-flat bijection.

Note: the recursion below gives every layer `width` neurons in general, but
the parameter budget fixes the top layer of each block to a single neuron;
that convention is used throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit


@dataclass(frozen=True)
class Architecture:
    """Shape of the parallel-block network."""

    blocks: int
    depth: int
    width: int
    dim: int

    def __post_init__(self):
        for name in ("blocks", "depth", "width", "dim"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.depth < 2:
            raise ValueError(f"depth must be >= 2, got {self.depth}")

    @property
    def block_size(self) -> int:
        """Number of weights in a single block."""
        r, d = self.width, self.dim
        return 1 + (r + 1) + (self.depth - 2) * r * (r + 1) + r * (d + 1)


def param_count(arch: Architecture) -> int:
    """Total number of trainable weights."""
    return arch.blocks * arch.block_size


@dataclass(frozen=True)
class InitBounds:
    """Half-widths of the uniform initialization intervals.

    `input_bound` applies to the input level, `inner_bound` to every level
    between the hidden layers (including the top neuron of each block).
    Outer weights always start at zero.
    """

    input_bound: float
    inner_bound: float

    def __post_init__(self):
        if self.input_bound < 0 or self.inner_bound < 0:
            raise ValueError("initialization bounds must be nonnegative")


@dataclass(frozen=True)
class WeightVector:
    """All weights of a network as one flat vector."""

    arch: Architecture
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        expected = param_count(self.arch)
        if values.shape != (expected,):
            raise ValueError(
                f"weight vector must have shape ({expected},), got {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("weight vector contains non-finite entries")
        object.__setattr__(self, "values", values)

    def replace_values(self, values: np.ndarray) -> "WeightVector":
        return WeightVector(self.arch, values)


# Offsets of the per-block segments, in flat layout order.


def _segment_offsets(arch: Architecture) -> tuple[int, int, int, int]:
    """(input end, inner end, top end, block size) offsets within a block."""
    r, d = arch.width, arch.dim
    input_end = r * (d + 1)
    inner_end = input_end + (arch.depth - 2) * r * (r + 1)
    top_end = inner_end + (r + 1)
    return input_end, inner_end, top_end, arch.block_size


def flat_index(arch: Architecture, block: int, level: int, i: int, j: int) -> int:
    """Flat position of structured weight (block, level, i, j).

    `block` and `i` are 1-based as in the structured indexing convention;
    `j` = 0 addresses the bias. Valid ranges: level 0 has i in 1..width,
    j in 0..dim; levels 1..depth-2 have i in 1..width, j in 0..width;
    level depth-1 has i = 1, j in 0..width; level depth (outer) has i = j = 1.
    """
    r, d, L = arch.width, arch.dim, arch.depth
    if not 1 <= block <= arch.blocks:
        raise IndexError(f"block {block} out of range 1..{arch.blocks}")
    input_end, inner_end, top_end, size = _segment_offsets(arch)
    base = (block - 1) * size
    if level == 0:
        if not (1 <= i <= r and 0 <= j <= d):
            raise IndexError(f"bad input-level index (i={i}, j={j})")
        return base + (i - 1) * (d + 1) + j
    if 1 <= level <= L - 2:
        if not (1 <= i <= r and 0 <= j <= r):
            raise IndexError(f"bad inner-level index (i={i}, j={j})")
        return base + input_end + (level - 1) * r * (r + 1) + (i - 1) * (r + 1) + j
    if level == L - 1:
        if not (i == 1 and 0 <= j <= r):
            raise IndexError(f"bad top-level index (i={i}, j={j})")
        return base + inner_end + j
    if level == L:
        if not (i == 1 and j == 1):
            raise IndexError(f"bad outer-level index (i={i}, j={j})")
        return base + top_end
    raise IndexError(f"level {level} out of range 0..{L}")


@dataclass(frozen=True)
class BlockWeights:
    """Structured per-level views of a flat weight vector.

    input:  (blocks, width, dim+1), column 0 is the bias
    inner:  (depth-2, blocks, width, width+1), column 0 is the bias
    top:    (blocks, width+1), entry 0 is the bias
    outer:  (blocks,)
    """

    input: np.ndarray
    inner: np.ndarray
    top: np.ndarray
    outer: np.ndarray


def unflatten(arch: Architecture, flat: np.ndarray) -> BlockWeights:
    r, d, K = arch.width, arch.dim, arch.blocks
    input_end, inner_end, top_end, size = _segment_offsets(arch)
    per_block = np.asarray(flat).reshape(K, size)
    inner = per_block[:, input_end:inner_end].reshape(K, arch.depth - 2, r, r + 1)
    return BlockWeights(
        input=per_block[:, :input_end].reshape(K, r, d + 1),
        inner=np.ascontiguousarray(inner.swapaxes(0, 1)),
        top=per_block[:, inner_end:top_end],
        outer=per_block[:, top_end],
    )


def flatten(arch: Architecture, parts: BlockWeights) -> np.ndarray:
    K, size = arch.blocks, arch.block_size
    input_end, inner_end, top_end, _ = _segment_offsets(arch)
    flat = np.empty((K, size), dtype=np.float64)
    flat[:, :input_end] = parts.input.reshape(K, input_end)
    flat[:, input_end:inner_end] = parts.inner.swapaxes(0, 1).reshape(
        K, inner_end - input_end
    )
    flat[:, inner_end:top_end] = parts.top
    flat[:, top_end] = parts.outer
    return flat.reshape(K * size)


def init_weights(
    arch: Architecture, bounds: InitBounds, rng: np.random.Generator
) -> WeightVector:
    """Random starting weights: uniform input/inner levels, zero outer weights."""
    r, d, K = arch.width, arch.dim, arch.blocks
    a, b = bounds.input_bound, bounds.inner_bound
    parts = BlockWeights(
        input=rng.uniform(-a, a, size=(K, r, d + 1)),
        inner=rng.uniform(-b, b, size=(arch.depth - 2, K, r, r + 1)),
        top=rng.uniform(-b, b, size=(K, r + 1)),
        outer=np.zeros(K),
    )
    return WeightVector(arch, flatten(arch, parts))


def augment_ones(values: np.ndarray) -> np.ndarray:
    """Prepend a ones entry along the last axis (bias input)."""
    out = np.empty(values.shape[:-1] + (values.shape[-1] + 1,))
    out[..., 0] = 1.0
    out[..., 1:] = values
    return out


# Beyond |z| = 40 the sigmoid equals 1.0 / 4.2e-18 to double precision, and
# exp() on huge arguments takes the slow subnormal path; clamp first.
_SQUASH_CLIP = 40.0


def squash(z: np.ndarray, out: np.ndarray) -> np.ndarray:
    """Logistic function 1/(1+exp(-z)), written into `out`; clobbers z."""
    np.clip(z, -_SQUASH_CLIP, _SQUASH_CLIP, out=z)
    return expit(z, out=out)


def forward_activations(
    arch: Architecture, parts: BlockWeights, xs: np.ndarray
) -> tuple[list[np.ndarray], np.ndarray, np.ndarray]:
    """All layer activations for a batch of inputs, in bias-augmented form.

    Returns (hidden, top, output): hidden[l] has shape (blocks, n, width+1)
    for layers 1..depth-1 with a constant 1 in position 0, top has shape
    (blocks, n), output has shape (n,). The augmented layout makes each
    layer transition a single contiguous batched matmul.
    """
    x_aug = augment_ones(xs)
    # (n, d+1) @ (K, d+1, r) -> (K, n, r)
    z = np.matmul(x_aug, np.ascontiguousarray(parts.input.swapaxes(1, 2)))
    hidden = []
    for level in (*parts.inner,):
        act = np.empty(z.shape[:-1] + (z.shape[-1] + 1,))
        act[..., 0] = 1.0
        squash(z, out=act[..., 1:])
        hidden.append(act)
        z = np.matmul(act, np.ascontiguousarray(level.swapaxes(1, 2)))
    act = np.empty(z.shape[:-1] + (z.shape[-1] + 1,))
    act[..., 0] = 1.0
    squash(z, out=act[..., 1:])
    hidden.append(act)
    z_top = np.matmul(act, parts.top[:, :, None])[:, :, 0]
    top = squash(z_top, out=z_top)
    output = parts.outer @ top
    return hidden, top, output


def _check_batch(arch: Architecture, xs: np.ndarray) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[1] != arch.dim:
        raise ValueError(f"inputs must have shape (n, {arch.dim}), got {xs.shape}")
    return xs


def forward_batch(w: WeightVector, xs: np.ndarray) -> np.ndarray:
    """Network outputs for a batch of inputs of shape (n, dim)."""
    xs = _check_batch(w.arch, xs)
    _, _, output = forward_activations(w.arch, unflatten(w.arch, w.values), xs)
    return output


def forward(w: WeightVector, x: np.ndarray) -> float:
    """Network output for a single input point."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape != (w.arch.dim,):
        raise ValueError(f"input must have dimension {w.arch.dim}, got {x.shape}")
    return float(forward_batch(w, x[None, :])[0])


def truncation_bound(n: int, scale: float = 10.0) -> float:
    """Output clamp used by the final estimate: scale * ln(sample size)."""
    if n < 1:
        raise ValueError("sample size must be positive")
    return scale * math.log(n)


def predict_truncated_batch(
    w: WeightVector, xs: np.ndarray, beta: float
) -> np.ndarray:
    """Batch predictions clamped to [-beta, beta]."""
    if beta <= 0:
        raise ValueError("truncation level must be positive")
    return np.clip(forward_batch(w, xs), -beta, beta)


def predict_truncated(w: WeightVector, x: np.ndarray, beta: float) -> float:
    """Prediction at a single point, clamped to [-beta, beta]."""
    if beta <= 0:
        raise ValueError("truncation level must be positive")
    return float(np.clip(forward(w, x), -beta, beta))
