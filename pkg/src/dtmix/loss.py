"""Weighted soft cross-entropy kernel with inverse-frequency class weights.

Reference numeric kernel: double precision throughout, probabilities
clamped to [1e-12, 1] before the logarithm, and an analytic gradient
with respect to logits for training-stack integration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ClassCountMismatch, ZeroCount
from .mixer import SoftLabel

PROB_EPS = 1e-12


@dataclass(frozen=True)
class ClassWeights:
    """Positive per-class loss weights."""

    w: np.ndarray  # float64, length C
    convention: str = "N/(C*n_i)"

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64).reshape(-1)
        if w.size == 0:
            raise ValueError("need at least one class weight")
        if not np.isfinite(w).all() or (w <= 0).any():
            raise ValueError(f"class weights must be positive and finite: {w}")
        w = w.view()
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def num_classes(self) -> int:
        return self.w.size


def inverse_frequency_weights(counts) -> ClassWeights:
    """w_i = N / (C * n_i) with N the total count; mean weight is about 1."""
    arr = np.asarray(counts)
    if arr.size == 0:
        raise ValueError("need at least one class count")
    if (arr == 0).any():
        raise ZeroCount(f"class counts must all be >= 1, got {list(arr)}")
    if (arr < 0).any() or not np.issubdtype(arr.dtype, np.integer):
        raise ValueError(f"class counts must be positive integers, got {list(arr)}")
    n = float(arr.sum())
    c = arr.size
    return ClassWeights(n / (c * arr.astype(np.float64)))


def softmax(z) -> np.ndarray:
    """Max-subtracted exponential normalisation; overflow-safe."""
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if z.size == 0 or not np.isfinite(z).all():
        raise ValueError("softmax needs a non-empty finite vector")
    e = np.exp(z - z.max())
    return e / e.sum()


def _check_lengths(a: int, b: int, what: str) -> None:
    if a != b:
        raise ClassCountMismatch(f"{what}: {a} vs {b} classes")


def soft_cross_entropy(y_hat, y: SoftLabel, w: ClassWeights) -> float:
    """L = -(1/sum w) * sum_i w_i * y_i * log(y_hat_i), y_hat clamped below."""
    y_hat = np.asarray(y_hat, dtype=np.float64).reshape(-1)
    _check_lengths(y_hat.size, y.num_classes, "prediction vs label")
    _check_lengths(w.num_classes, y.num_classes, "weights vs label")
    if (y_hat < -1e-12).any() or (y_hat > 1.0 + 1e-12).any():
        raise ValueError(f"predicted probabilities outside [0, 1]: {y_hat}")
    clamped = np.clip(y_hat, PROB_EPS, 1.0)
    return float(-(w.w * y.probs * np.log(clamped)).sum() / w.w.sum())


def soft_ce_grad_logits(z, y: SoftLabel, w: ClassWeights) -> np.ndarray:
    """Gradient of soft_cross_entropy(softmax(z), y, w) with respect to z.

    Closed form: (p_k * sum_i w_i y_i - w_k y_k) / sum_i w_i.
    """
    p = softmax(z)
    _check_lengths(p.size, y.num_classes, "logits vs label")
    _check_lengths(w.num_classes, y.num_classes, "weights vs label")
    wy = w.w * y.probs
    return (p * wy.sum() - wy) / w.w.sum()
