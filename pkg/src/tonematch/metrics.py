"""Evaluation metrics on the 0-255 scale: MSE, foreground MSE, PSNR."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .filters import validate_image, validate_mask

# PSNR is capped here instead of diverging for (near-)identical images.
PSNR_CAP = 99.0
_PSNR_CAP_MSE = 255.0 ** 2 * 10.0 ** (-PSNR_CAP / 10.0)


@dataclass
class EvalRecord:
    mse: float
    fmse: float
    psnr: float
    name: str = ""


def mse(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared difference over all components, on the 0-255 scale."""
    validate_image(a)
    validate_image(b)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    diff = 255.0 * (np.asarray(a, dtype=np.float64) - b)
    return float(np.mean(diff * diff))


def fmse(a: np.ndarray, b: np.ndarray, mask: np.ndarray) -> float:
    """MSE restricted to the foreground: mask-weighted, normalized by 3*sum(mask)."""
    validate_image(a)
    validate_image(b)
    validate_mask(mask, a)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    weight = float(np.sum(mask, dtype=np.float64))
    if weight <= 0.0:
        raise ValueError("mask has no foreground")
    diff = 255.0 * (np.asarray(a, dtype=np.float64) - b)
    per_pixel = np.sum(diff * diff, axis=-1)
    return float(np.sum(mask * per_pixel) / (3.0 * weight))


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB, capped at 99 dB."""
    err = mse(a, b)
    if err < _PSNR_CAP_MSE:
        return PSNR_CAP
    return 10.0 * math.log10(255.0 ** 2 / err)


def evaluate_pair(output: np.ndarray, target: np.ndarray, mask: np.ndarray,
                  name: str = "") -> EvalRecord:
    return EvalRecord(mse=mse(output, target), fmse=fmse(output, target, mask),
                      psnr=psnr(output, target), name=name)


def aggregate(records: list) -> EvalRecord:
    """Arithmetic mean of each metric over the records."""
    if not records:
        raise ValueError("nothing to aggregate")
    return EvalRecord(
        mse=float(np.mean([r.mse for r in records])),
        fmse=float(np.mean([r.fmse for r in records])),
        psnr=float(np.mean([r.psnr for r in records])),
        name="mean",
    )
