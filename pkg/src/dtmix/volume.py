"""Dense voxel-grid types plus foreground extraction and pair validation.

All grids use the same x-fastest linear layout: voxel (i, j, k) lives at
flat index ``i + nx * (j + ny * k)``, matching NIfTI-1 on-disk order. A
flat array reshaped to ``(nz, ny, nx)`` in C order therefore indexes as
``[k, j, i]`` with zero copies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidVolume, ShapeMismatch, SpacingMismatch

# Relative tolerance for per-axis spacing agreement between mixable pairs.
SPACING_RTOL = 1e-4


class VoxelIndex(NamedTuple):
    i: int
    j: int
    k: int

    def flat(self, dims: tuple[int, int, int]) -> int:
        nx, ny, nz = dims
        if not (0 <= self.i < nx and 0 <= self.j < ny and 0 <= self.k < nz):
            raise IndexError(f"voxel {self} out of bounds for dims {dims}")
        return self.i + nx * (self.j + ny * self.k)


@dataclass(frozen=True)
class Volume:
    """Dense 3D scalar grid with physical voxel spacing in millimetres."""

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    data: np.ndarray  # float32, flat, x-fastest
    id: str = ""
    orient: tuple | None = None  # opaque NIfTI orientation fields, kept verbatim

    def __post_init__(self):
        nx, ny, nz = self.dims
        if nx <= 0 or ny <= 0 or nz <= 0:
            raise InvalidVolume(f"non-positive dims {self.dims}")
        # spacing lives in a float32 header field on disk; quantizing here
        # makes write-then-read reproduce it exactly
        spacing = tuple(float(np.float32(s)) for s in self.spacing)
        object.__setattr__(self, "spacing", spacing)
        for s in spacing:
            if not (np.isfinite(s) and s > 0):
                raise InvalidVolume(f"spacing must be positive and finite, got {spacing}")
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim != 1:
            data = data.reshape(-1)
        if data.size != nx * ny * nz:
            raise InvalidVolume(
                f"data length {data.size} does not match dims {self.dims} "
                f"({nx * ny * nz} voxels)"
            )
        if not np.isfinite(data).all():
            raise InvalidVolume("volume contains non-finite values")
        data = data.view()  # freeze our view, never the caller's flags
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def nvox(self) -> int:
        return self.data.size

    def as_3d(self) -> np.ndarray:
        """Zero-copy (nz, ny, nx) view indexed as [k, j, i]."""
        nx, ny, nz = self.dims
        return self.data.reshape(nz, ny, nx)


@dataclass(frozen=True)
class BinaryMask:
    """Per-voxel boolean grid in the shared x-fastest layout."""

    dims: tuple[int, int, int]
    bits: np.ndarray  # bool, flat

    def __post_init__(self):
        nx, ny, nz = self.dims
        bits = np.asarray(self.bits, dtype=bool)
        if bits.ndim != 1:
            bits = bits.reshape(-1)
        if bits.size != nx * ny * nz:
            raise InvalidVolume(f"mask length {bits.size} does not match dims {self.dims}")
        bits = bits.view()
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def as_3d(self) -> np.ndarray:
        nx, ny, nz = self.dims
        return self.bits.reshape(nz, ny, nx)


def foreground_mask(v: Volume, bg_threshold: float = 0.0) -> BinaryMask:
    """Voxels with intensity strictly above ``bg_threshold``.

    The complement is the background set; boundary values are background.
    Empty masks are legal here and rejected by consumers that need brain.
    """
    return BinaryMask(v.dims, v.data > np.float32(bg_threshold))


def validate_pair(a: Volume, b: Volume) -> None:
    """Ensure two volumes are voxelwise compatible for mixing.

    Dims must match exactly; spacing within SPACING_RTOL per axis.
    """
    if a.dims != b.dims:
        raise ShapeMismatch(f"volume dims differ: {a.dims} vs {b.dims}")
    for ax, (sa, sb) in enumerate(zip(a.spacing, b.spacing)):
        if abs(sa - sb) > SPACING_RTOL * max(abs(sa), abs(sb)):
            raise SpacingMismatch(
                f"spacing differs on axis {ax}: {a.spacing} vs {b.spacing}"
            )
