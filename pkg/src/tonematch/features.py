"""Handcrafted image-level features for argument regression.

Per region (foreground weighted by the mask, background by its complement):
3 channel means, 3 channel stddevs, and a 16-bin luminance histogram.
Foreground block first, 44 values total.
"""

from __future__ import annotations

import numpy as np

from .filters import luminance, validate_image, validate_mask

HISTOGRAM_BINS = 16
FEATURE_DIM = 2 * (3 + 3 + HISTOGRAM_BINS)

# Inputs larger than this get bilinearly downsampled before feature extraction.
FEATURE_RESOLUTION = 256


def _region_stats(image, lum, weights):
    total = float(np.sum(weights, dtype=np.float64))
    means = np.tensordot(weights, image, axes=([0, 1], [0, 1])) / total
    second = np.tensordot(weights, image * image, axes=([0, 1], [0, 1])) / total
    stds = np.sqrt(np.maximum(second - means * means, 0.0))
    bins = np.minimum((lum * HISTOGRAM_BINS).astype(np.int64), HISTOGRAM_BINS - 1)
    hist = np.bincount(bins.ravel(), weights=weights.ravel(), minlength=HISTOGRAM_BINS)
    return np.concatenate([means, stds, hist / total])


def extract_features(composite: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Statistics of the masked foreground and its complement background.

    A mask covering the whole frame is allowed; the background block then
    falls back to the foreground statistics. An empty mask is an error.
    """
    validate_image(composite)
    validate_mask(mask, composite)
    image = np.asarray(composite, dtype=np.float64)
    fg_w = np.asarray(mask, dtype=np.float64)
    if float(np.sum(fg_w)) <= 0.0:
        raise ValueError("mask has no foreground")
    lum = np.clip(luminance(image), 0.0, 1.0)
    fg = _region_stats(image, lum, fg_w)
    bg_w = 1.0 - fg_w
    bg = fg if float(np.sum(bg_w)) <= 0.0 else _region_stats(image, lum, bg_w)
    return np.concatenate([fg, bg])


def resize_bilinear(image: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resize with half-pixel centers. Works for (H, W) and (H, W, 3)."""
    image = np.asarray(image, dtype=np.float64)
    src_h, src_w = image.shape[:2]
    if (src_h, src_w) == (height, width):
        return image.copy()
    ys = (np.arange(height) + 0.5) * (src_h / height) - 0.5
    xs = (np.arange(width) + 0.5) * (src_w / width) - 0.5
    y0 = np.clip(np.floor(ys).astype(np.int64), 0, src_h - 1)
    x0 = np.clip(np.floor(xs).astype(np.int64), 0, src_w - 1)
    y1 = np.minimum(y0 + 1, src_h - 1)
    x1 = np.minimum(x0 + 1, src_w - 1)
    wy = np.clip(ys - y0, 0.0, 1.0)
    wx = np.clip(xs - x0, 0.0, 1.0)
    if image.ndim == 3:
        wy = wy[:, None, None]
        wx = wx[None, :, None]
    else:
        wy = wy[:, None]
        wx = wx[None, :]
    top = image[y0][:, x0] * (1.0 - wx) + image[y0][:, x1] * wx
    bottom = image[y1][:, x0] * (1.0 - wx) + image[y1][:, x1] * wx
    return top * (1.0 - wy) + bottom * wy


def features_for_prediction(composite: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Features at a bounded working resolution: frames larger than
    FEATURE_RESOLUTION on either side are downsampled first, never upsampled."""
    h, w = composite.shape[:2]
    if h > FEATURE_RESOLUTION or w > FEATURE_RESOLUTION:
        small = resize_bilinear(composite, FEATURE_RESOLUTION, FEATURE_RESOLUTION)
        np.clip(small, 0.0, 1.0, out=small)
        small_mask = resize_bilinear(mask, FEATURE_RESOLUTION, FEATURE_RESOLUTION)
        np.clip(small_mask, 0.0, 1.0, out=small_mask)
        return extract_features(small, small_mask)
    return extract_features(composite, mask)
