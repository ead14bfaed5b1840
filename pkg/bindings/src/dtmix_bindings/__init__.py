"""In-process bindings: dtmix kernels on raw contiguous numpy arrays.

Volumes cross the boundary as C-contiguous float32 arrays of shape
(nz, ny, nx) — the zero-copy 3D view of the x-fastest flat layout — and
are read in place; outputs are freshly allocated and owned by the caller.
Wrong dtypes or non-contiguous inputs are rejected rather than silently
converted, so no hidden copies can mask performance. Domain errors
propagate as the dtmix exception classes (ordinary Python exceptions)
with their original message text.

The heavy kernels release the GIL (numba nogil + numpy), so concurrent
calls from multiple threads are safe and actually parallel.
"""

from __future__ import annotations

import numpy as np

from dtmix import RECORD_FORMAT_VERSION, __version__ as _core_version
from dtmix import (
    ClassWeights,
    MixConfig,
    SoftLabel,
    Thresholds,
    Volume,
    foreground_mask,
    mix_pair,
)
from dtmix.edt import edt
from dtmix.io import mix_record_to_dict
from dtmix.loss import soft_ce_grad_logits, soft_cross_entropy

__version__ = _core_version
# exactly what `dtmix --version` prints
VERSION_STRING = f"dtmix {_core_version} (mix-record format v{RECORD_FORMAT_VERSION})"

__all__ = [
    "__version__",
    "VERSION_STRING",
    "bind_edt",
    "bind_mix_pair",
    "bind_soft_ce",
    "bind_soft_ce_grad",
]


def _require(arr, dtype, ndim, name):
    if not isinstance(arr, np.ndarray):
        raise TypeError(f"{name}: expected a numpy ndarray, got {type(arr).__name__}")
    if arr.dtype != np.dtype(dtype):
        raise TypeError(
            f"{name}: expected dtype {np.dtype(dtype).name}, got {arr.dtype.name} "
            "(inputs are not converted implicitly)"
        )
    if arr.ndim != ndim:
        raise TypeError(f"{name}: expected {ndim}-D array, got {arr.ndim}-D")
    if not arr.flags.c_contiguous:
        raise TypeError(f"{name}: array must be C-contiguous (no implicit copy)")
    return arr


def _as_volume(arr: np.ndarray, spacing, name: str) -> Volume:
    """Zero-copy Volume over a (nz, ny, nx) float32 array."""
    _require(arr, np.float32, 3, name)
    nz, ny, nx = arr.shape
    vol = Volume((nx, ny, nz), tuple(float(s) for s in spacing),
                 arr.reshape(-1), id=name)
    assert np.shares_memory(vol.data, arr), "ingestion must not copy"
    return vol


def _as_label(arr: np.ndarray, name: str) -> SoftLabel:
    _require(arr, np.float64, 1, name)
    return SoftLabel(arr)


def bind_edt(view: np.ndarray, bg_threshold: float = 0.0,
             spacing=(1.0, 1.0, 1.0)) -> np.ndarray:
    """Distance transform of a (nz, ny, nx) float32 volume.

    Returns a newly allocated float32 array of the same shape, elementwise
    equal to the core transform (and to the CLI `edt` output on the same
    data).
    """
    vol = _as_volume(view, spacing, "view")
    field = edt(foreground_mask(vol, bg_threshold), vol.spacing)
    return field.values.astype(np.float32).reshape(view.shape)


def bind_mix_pair(
    xa: np.ndarray,
    ya: np.ndarray,
    xb: np.ndarray,
    yb: np.ndarray,
    spacing=(1.0, 1.0, 1.0),
    t1: float | None = None,
    t2: float | None = None,
    **config,
):
    """Full mixing pipeline on in-memory arrays.

    ``xa``/``xb`` are (nz, ny, nx) float32 volumes, ``ya``/``yb`` length-C
    float64 probability vectors; ``config`` takes the MixConfig fields
    (residual_policy, count_domain, min_fraction, bg_threshold, q1, q2).
    Explicit ``t1``/``t2`` skip threshold selection, as in the CLI.
    Returns (mixed image array, soft label array, record mapping).
    """
    if xa.shape != xb.shape:
        # mirror the core pair validation message for unwrapped arrays
        from dtmix import ShapeMismatch

        raise ShapeMismatch(f"volume dims differ: {xa.shape} vs {xb.shape}")
    vol_a = _as_volume(xa, spacing, "xa")
    vol_b = _as_volume(xb, spacing, "xb")
    cfg = MixConfig(**config)
    thresholds = None
    if (t1 is None) != (t2 is None):
        raise ValueError("t1 and t2 must be given together")
    if t1 is not None:
        thresholds = Thresholds(t1, t2, cfg.q1, cfg.q2, cfg.min_fraction)
    sample = mix_pair(
        vol_a, _as_label(ya, "ya"), vol_b, _as_label(yb, "yb"),
        cfg, thresholds=thresholds,
    )
    image = np.array(sample.image.data, dtype=np.float32).reshape(xa.shape)
    label = np.array(sample.label.probs, dtype=np.float64)
    return image, label, mix_record_to_dict(sample.record)


def bind_soft_ce(y_hat: np.ndarray, y: np.ndarray, w: np.ndarray) -> float:
    """Weighted soft cross-entropy on raw float64 vectors."""
    _require(y_hat, np.float64, 1, "y_hat")
    _require(w, np.float64, 1, "w")
    return soft_cross_entropy(y_hat, _as_label(y, "y"), ClassWeights(w))


def bind_soft_ce_grad(z: np.ndarray, y: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Analytic logit gradient; bitwise-identical to the core kernel."""
    _require(z, np.float64, 1, "z")
    _require(w, np.float64, 1, "w")
    return soft_ce_grad_logits(z, _as_label(y, "y"), ClassWeights(w))
