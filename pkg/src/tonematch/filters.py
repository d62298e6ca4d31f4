"""Parametric color filters, pipeline execution, and reverse-mode gradients.

All filters are pointwise maps on RGB rasters with values in [0, 1], driven
by a single scalar argument in [-1, 1]. Every filter is the identity at
argument 0 and hard-clamps its output to [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

# Rec.601 luma weights.
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

# Per-channel shift of the temperature filter at full argument.
TEMPERATURE_GAIN = 0.25

_LN2 = math.log(2.0)


class FilterKind(Enum):
    BRIGHTNESS = "brightness"
    CONTRAST = "contrast"
    SATURATION = "saturation"
    TEMPERATURE = "temperature"
    HIGHLIGHT = "highlight"
    SHADOW = "shadow"


DEFAULT_FILTER_ORDER = (
    FilterKind.BRIGHTNESS,
    FilterKind.CONTRAST,
    FilterKind.SATURATION,
    FilterKind.TEMPERATURE,
    FilterKind.HIGHLIGHT,
    FilterKind.SHADOW,
)


@dataclass
class ArgPrior:
    """Gaussian prior (mean, stddev) over one filter's argument."""

    mean: float = 0.0
    stddev: float = 0.2

    def __post_init__(self):
        if not -1.0 <= self.mean <= 1.0:
            raise ValueError(f"prior mean {self.mean} outside [-1, 1]")
        if not 0.0 < self.stddev <= 1.0:
            raise ValueError(f"prior stddev {self.stddev} outside (0, 1]")


@dataclass
class FilterPipeline:
    """Ordered filter stack with per-filter argument priors."""

    filters: tuple[FilterKind, ...]
    priors: tuple[ArgPrior, ...] = ()

    def __post_init__(self):
        self.filters = tuple(self.filters)
        if not self.priors:
            self.priors = tuple(ArgPrior() for _ in self.filters)
        self.priors = tuple(self.priors)
        k = len(self.filters)
        if not 1 <= k <= 8:
            raise ValueError(f"pipeline length {k} outside [1, 8]")
        if len(set(self.filters)) != k:
            raise ValueError("duplicate filter kinds in pipeline")
        if len(self.priors) != k:
            raise ValueError("need exactly one prior per filter")

    def __len__(self):
        return len(self.filters)


def default_pipeline() -> FilterPipeline:
    return FilterPipeline(DEFAULT_FILTER_ORDER)


@dataclass
class StageTrace:
    """Per-stage images of one pipeline run: stages[0] is the input,
    stages[i] the output of filter i. len(stages) == k + 1."""

    stages: list
    args: np.ndarray = field(default=None)


# ---------------------------------------------------------------------------
# validation


def validate_image(image: np.ndarray) -> np.ndarray:
    if not isinstance(image, np.ndarray) or image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) array, got shape {getattr(image, 'shape', None)}")
    return image


def validate_mask(mask: np.ndarray, image: np.ndarray | None = None) -> np.ndarray:
    if not isinstance(mask, np.ndarray) or mask.ndim != 2:
        raise ValueError(f"expected an (H, W) mask, got shape {getattr(mask, 'shape', None)}")
    if image is not None and mask.shape != image.shape[:2]:
        raise ValueError(f"mask shape {mask.shape} does not match image {image.shape[:2]}")
    return mask


def _check_arg(arg: float) -> float:
    arg = float(arg)
    if not -1.0 <= arg <= 1.0 or not math.isfinite(arg):
        raise ValueError(f"filter argument {arg} outside [-1, 1]")
    return arg


# ---------------------------------------------------------------------------
# pointwise formulas


def luminance(rgb: np.ndarray) -> np.ndarray:
    """Rec.601 luminance. Accepts a single RGB triple or an (H, W, 3) raster."""
    rgb = np.asarray(rgb)
    return rgb @ LUMA_WEIGHTS.astype(rgb.dtype, copy=False)


def _raw_apply(image, kind, arg):
    """Filter output before clamping."""
    if kind is FilterKind.BRIGHTNESS:
        return image * (2.0 ** arg)
    if kind is FilterKind.CONTRAST:
        return 0.5 + (image - 0.5) * (1.0 + arg)
    if kind is FilterKind.SATURATION:
        lum = luminance(image)[..., None]
        return lum + (image - lum) * (1.0 + arg)
    if kind is FilterKind.TEMPERATURE:
        out = image.copy()
        out[..., 0] += TEMPERATURE_GAIN * arg
        out[..., 2] -= TEMPERATURE_GAIN * arg
        return out
    if kind is FilterKind.HIGHLIGHT:
        return image + arg * luminance(image)[..., None]
    if kind is FilterKind.SHADOW:
        return image + arg * (1.0 - luminance(image))[..., None]
    raise ValueError(f"unknown filter kind {kind!r}")


def _unclamped(image, kind, arg):
    """Boolean raster marking components whose raw output stays inside [0, 1]."""
    raw = _raw_apply(image, kind, arg)
    return (raw >= 0.0) & (raw <= 1.0)


def apply_filter(image: np.ndarray, kind: FilterKind, arg: float) -> np.ndarray:
    """Apply one filter and clamp to [0, 1]. Argument 0 is a bit-exact identity."""
    validate_image(image)
    arg = _check_arg(arg)
    if arg == 0.0:
        return image.copy()
    out = _raw_apply(image, kind, arg)
    np.clip(out, 0.0, 1.0, out=out)
    return out


def _apply_inplace(buf, kind, arg, *, clamp=True):
    """Filter `buf` in place; single-buffer fast path for full-resolution frames."""
    if arg == 0.0:
        return buf
    if kind is FilterKind.BRIGHTNESS:
        buf *= 2.0 ** arg
    elif kind is FilterKind.CONTRAST:
        buf -= 0.5
        buf *= 1.0 + arg
        buf += 0.5
    elif kind is FilterKind.SATURATION:
        shift = luminance(buf)
        shift *= arg
        buf *= 1.0 + arg
        buf -= shift[..., None]
    elif kind is FilterKind.TEMPERATURE:
        buf[..., 0] += TEMPERATURE_GAIN * arg
        buf[..., 2] -= TEMPERATURE_GAIN * arg
    elif kind is FilterKind.HIGHLIGHT:
        shift = luminance(buf)
        shift *= arg
        buf += shift[..., None]
    elif kind is FilterKind.SHADOW:
        shift = luminance(buf)
        shift -= 1.0
        shift *= -arg
        buf += shift[..., None]
    else:
        raise ValueError(f"unknown filter kind {kind!r}")
    if clamp:
        np.clip(buf, 0.0, 1.0, out=buf)
    return buf


# ---------------------------------------------------------------------------
# derivatives


def _raw_arg_grad(image, kind, arg):
    """d(raw output)/d(arg), ignoring the clamp."""
    if kind is FilterKind.BRIGHTNESS:
        return _LN2 * (2.0 ** arg) * image
    if kind is FilterKind.CONTRAST:
        return image - 0.5
    if kind is FilterKind.SATURATION:
        return image - luminance(image)[..., None]
    if kind is FilterKind.TEMPERATURE:
        grad = np.zeros_like(image)
        grad[..., 0] = TEMPERATURE_GAIN
        grad[..., 2] = -TEMPERATURE_GAIN
        return grad
    if kind is FilterKind.HIGHLIGHT:
        return np.repeat(luminance(image)[..., None], 3, axis=-1)
    if kind is FilterKind.SHADOW:
        return np.repeat((1.0 - luminance(image))[..., None], 3, axis=-1)
    raise ValueError(f"unknown filter kind {kind!r}")


def filter_arg_grad(image: np.ndarray, kind: FilterKind, arg: float) -> np.ndarray:
    """Per-component d(output)/d(arg); zero wherever the output was clamped."""
    validate_image(image)
    arg = _check_arg(arg)
    grad = _raw_arg_grad(image, kind, arg)
    grad[~_unclamped(image, kind, arg)] = 0.0
    return grad


def _jvp_masked(image, kind, arg, up):
    """upstream^T * d(raw output)/d(input); `up` must already be clamp-masked."""
    if kind is FilterKind.BRIGHTNESS:
        return up * (2.0 ** arg)
    if kind is FilterKind.CONTRAST:
        return up * (1.0 + arg)
    if kind is FilterKind.TEMPERATURE:
        return up.copy()
    w = LUMA_WEIGHTS.astype(image.dtype, copy=False)
    channel_sum = up.sum(axis=-1)[..., None]
    if kind is FilterKind.SATURATION:
        return (1.0 + arg) * up - arg * channel_sum * w
    if kind is FilterKind.HIGHLIGHT:
        return up + arg * channel_sum * w
    if kind is FilterKind.SHADOW:
        return up - arg * channel_sum * w
    raise ValueError(f"unknown filter kind {kind!r}")


def filter_input_jvp(image: np.ndarray, kind: FilterKind, arg: float,
                     upstream: np.ndarray) -> np.ndarray:
    """Pull a gradient w.r.t. the filter output back to the filter input.

    Components clamped by the forward pass propagate nothing.
    """
    validate_image(image)
    arg = _check_arg(arg)
    if upstream.shape != image.shape:
        raise ValueError(f"upstream shape {upstream.shape} does not match image {image.shape}")
    up = np.where(_unclamped(image, kind, arg), upstream, 0.0)
    return _jvp_masked(image, kind, arg, up)


# ---------------------------------------------------------------------------
# pipeline


def apply_pipeline(image: np.ndarray, pipeline: FilterPipeline,
                   args: np.ndarray) -> StageTrace:
    """Run the full filter stack, keeping every intermediate stage."""
    validate_image(image)
    args = np.asarray(args, dtype=np.float64)
    if args.shape != (len(pipeline),):
        raise ValueError(f"expected {len(pipeline)} arguments, got shape {args.shape}")
    stages = [image]
    for kind, arg in zip(pipeline.filters, args):
        stages.append(apply_filter(stages[-1], kind, float(arg)))
    return StageTrace(stages=stages, args=args)


def apply_pipeline_final(image: np.ndarray, pipeline: FilterPipeline,
                         args: np.ndarray) -> np.ndarray:
    """Final pipeline output only, computed in a single reused buffer."""
    validate_image(image)
    args = np.asarray(args, dtype=np.float64)
    if args.shape != (len(pipeline),):
        raise ValueError(f"expected {len(pipeline)} arguments, got shape {args.shape}")
    out = image.copy()
    for kind, arg in zip(pipeline.filters, args):
        _apply_inplace(out, kind, _check_arg(arg))
    return out


def composite_output(original: np.ndarray, harmonized: np.ndarray,
                     mask: np.ndarray) -> np.ndarray:
    """Blend the harmonized foreground over the untouched background.

    Pixels with mask 0 come out bit-identical to `original`.
    """
    validate_image(original)
    validate_image(harmonized)
    validate_mask(mask, original)
    if harmonized.shape != original.shape:
        raise ValueError(f"image shapes differ: {original.shape} vs {harmonized.shape}")
    # Difference form: exact where mask == 0 and wherever harmonized == original.
    return original + mask[..., None] * (harmonized - original)


def pipeline_arg_gradients(trace: StageTrace, pipeline: FilterPipeline,
                           upstreams: list) -> np.ndarray:
    """Reverse-mode d(loss)/d(arg_i) from per-stage upstream gradients.

    `upstreams[i]` is the loss gradient w.r.t. trace.stages[i] (None for
    stages that do not enter the loss). The trace must come from
    apply_pipeline with the same pipeline.
    """
    k = len(pipeline)
    if len(trace.stages) != k + 1:
        raise ValueError(f"trace has {len(trace.stages)} stages, pipeline needs {k + 1}")
    if trace.args is None or len(trace.args) != k:
        raise ValueError("trace is missing its argument vector")
    shape = trace.stages[0].shape
    for stage in trace.stages:
        if stage.shape != shape:
            raise ValueError("trace stages disagree in shape")
    if len(upstreams) != k + 1:
        raise ValueError(f"expected {k + 1} upstream gradients, got {len(upstreams)}")

    grads = np.zeros(k)
    # Gradient w.r.t. the current stage output, accumulated back to front.
    acc = None if upstreams[k] is None else np.asarray(upstreams[k])
    for i in range(k, 0, -1):
        kind = pipeline.filters[i - 1]
        arg = float(trace.args[i - 1])
        inp = trace.stages[i - 1]
        if acc is None:
            acc = upstreams[i - 1]
            continue
        masked = np.where(_unclamped(inp, kind, arg), acc, 0.0)
        grads[i - 1] = float(np.sum(masked * _raw_arg_grad(inp, kind, arg)))
        acc = _jvp_masked(inp, kind, arg, masked)
        if upstreams[i - 1] is not None:
            acc = acc + upstreams[i - 1]
    return grads
