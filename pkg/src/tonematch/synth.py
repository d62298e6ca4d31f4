"""Synthetic training data: perturb a natural image by running the filter
stack in reverse order with Gaussian-sampled arguments, then composite the
perturbed foreground back onto the natural background.

The resulting per-stage chain doubles as stage-wise supervision: a forward
pipeline run that matches stage i of the chain has undone filters 1..i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .filters import (
    FilterPipeline,
    _raw_apply,
    apply_filter,
    composite_output,
    validate_image,
    validate_mask,
)

DEFAULT_CLIP_THRESHOLD = 0.05

_MAX_REDRAWS = 10_000


@dataclass
class CompositeSample:
    """One supervised sample: natural ground truth, perturbed composite, and
    the reverse-generation chain stage_targets[0..k] (stage k is the natural)."""

    natural: np.ndarray
    mask: np.ndarray
    composite: np.ndarray
    stage_targets: list
    xi: np.ndarray
    clipped_fraction: float = 0.0


def sample_args(priors, seed: int) -> np.ndarray:
    """Draw one argument per prior from N(mean, stddev^2), redrawing any value
    that lands outside [-1, 1]. Deterministic for a fixed seed."""
    rng = np.random.default_rng(seed)
    out = np.empty(len(priors))
    for i, prior in enumerate(priors):
        for _ in range(_MAX_REDRAWS):
            value = rng.normal(prior.mean, prior.stddev)
            if -1.0 <= value <= 1.0:
                break
        else:
            raise RuntimeError("rejection sampling failed to land in [-1, 1]")
        out[i] = value
    return out


def generate_composite(natural: np.ndarray, mask: np.ndarray,
                       pipeline: FilterPipeline, xi: np.ndarray) -> CompositeSample:
    """Build the reverse chain I_k = natural, I_{i-1} = F_i(I_i, xi_i) and
    blend the fully perturbed I_0 foreground onto the natural background."""
    validate_image(natural)
    validate_mask(mask, natural)
    xi = np.asarray(xi, dtype=np.float64)
    k = len(pipeline)
    if xi.shape != (k,):
        raise ValueError(f"expected {k} arguments, got shape {xi.shape}")

    chain = [None] * (k + 1)
    chain[k] = natural
    ever_clamped = np.zeros(natural.shape, dtype=bool)
    for i in range(k, 0, -1):
        kind = pipeline.filters[i - 1]
        arg = float(xi[i - 1])
        raw = _raw_apply(chain[i], kind, arg)
        ever_clamped |= (raw < 0.0) | (raw > 1.0)
        chain[i - 1] = apply_filter(chain[i], kind, arg)

    weight = float(np.sum(mask, dtype=np.float64))
    if weight <= 0.0:
        raise ValueError("mask has no foreground")
    clipped = float(np.sum(mask * np.sum(ever_clamped, axis=-1)) / (3.0 * weight))

    composite = composite_output(natural, chain[0], mask)
    return CompositeSample(natural=natural, mask=mask, composite=composite,
                           stage_targets=chain, xi=xi, clipped_fraction=clipped)


def clipping_guard(sample: CompositeSample,
                   threshold: float = DEFAULT_CLIP_THRESHOLD) -> bool:
    """Accept the sample unless more than `threshold` of its foreground
    components were clamped while generating the chain."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold {threshold} outside [0, 1]")
    return sample.clipped_fraction <= threshold
