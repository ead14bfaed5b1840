"""Distance-band thresholds and the four mutually exclusive region masks.

Thresholds are interior cut points of the pooled foreground distance
distribution, chosen by nearest-rank quantiles and validated against a
minimum per-region size; when the requested quantiles produce undersized
regions, a deterministic grid search over quantile pairs takes over.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .edt import DistanceField
from .errors import DimsMismatch, EmptyForeground, InfeasibleThresholds
from .volume import BinaryMask

# Candidate quantiles examined when the requested pair is infeasible.
GRID_QUANTILES = tuple(k / 10 for k in range(1, 10))


@dataclass(frozen=True)
class Thresholds:
    """Distance cut points (mm) plus the quantiles that produced them."""

    t1: float
    t2: float
    q1: float
    q2: float
    min_fraction: float

    def __post_init__(self):
        if not (0.0 <= self.t1 <= self.t2):
            raise ValueError(f"need 0 <= t1 <= t2, got t1={self.t1}, t2={self.t2}")
        if not (0.0 < self.q1 < self.q2 < 1.0):
            raise ValueError(f"need 0 < q1 < q2 < 1, got q1={self.q1}, q2={self.q2}")
        if not (0.0 < self.min_fraction <= 0.25):
            raise ValueError(
                f"min_fraction must be in (0, 0.25], got {self.min_fraction}"
            )


@dataclass(frozen=True)
class RegionMasks:
    """Exact five-way partition of the grid: four regions plus residual."""

    r1: BinaryMask
    r2: BinaryMask
    r3: BinaryMask
    r4: BinaryMask
    residual: BinaryMask
    counts: tuple[int, int, int, int, int]

    def __post_init__(self):
        masks = (self.r1, self.r2, self.r3, self.r4, self.residual)
        dims = self.r1.dims
        if any(m.dims != dims for m in masks):
            raise DimsMismatch("region masks have inconsistent dims")
        stacked = np.stack([m.bits for m in masks])
        if not (stacked.sum(axis=0) == 1).all():
            raise ValueError("region masks do not partition the grid")
        pops = tuple(int(np.count_nonzero(m.bits)) for m in masks)
        if tuple(self.counts) != pops:
            raise ValueError(f"counts {self.counts} disagree with mask popcounts {pops}")
        object.__setattr__(self, "counts", pops)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.r1.dims


def nearest_rank(q: float, n: int) -> int:
    """1-based nearest-rank index ceil(q*n), snapping away float fuzz.

    A product within a few ulps of an integer is treated as that integer,
    so decimal quantiles like 0.4 * 5 land on rank 2, not 3.
    """
    if n < 1:
        raise ValueError("rank of empty sample")
    prod = q * n
    nearest = round(prod)
    if abs(prod - nearest) <= 4.0 * np.spacing(prod):
        rank = int(nearest)
    else:
        rank = math.ceil(prod)
    return min(max(rank, 1), n)


def _check_same_grid(da: DistanceField, db: DistanceField) -> None:
    if da.dims != db.dims:
        raise DimsMismatch(f"distance field dims differ: {da.dims} vs {db.dims}")
    if not np.allclose(da.spacing, db.spacing, rtol=1e-4, atol=0.0):
        raise DimsMismatch(
            f"distance field spacing differs: {da.spacing} vs {db.spacing}"
        )


def build_region_masks(da: DistanceField, db: DistanceField, t: Thresholds) -> RegionMasks:
    """Evaluate the four band-membership rules in order; rest is residual.

    Membership per voxel, each rule masked by everything matched earlier:
    region 1: d_a <= t1; region 2: t1 < d_b <= t2; region 3: t1 < d_a <= t2;
    region 4: d_b > t2. The residual provably equals d_a > t2 and d_b <= t1.
    """
    _check_same_grid(da, db)
    va, vb = da.values, db.values
    r1 = va <= t.t1
    r2 = (vb > t.t1) & (vb <= t.t2) & ~r1
    r3 = (va > t.t1) & (va <= t.t2) & ~r1 & ~r2
    r4 = (vb > t.t2) & ~r1 & ~r2 & ~r3
    residual = ~(r1 | r2 | r3 | r4)
    dims = da.dims
    counts = tuple(int(np.count_nonzero(m)) for m in (r1, r2, r3, r4, residual))
    return RegionMasks(
        BinaryMask(dims, r1),
        BinaryMask(dims, r2),
        BinaryMask(dims, r3),
        BinaryMask(dims, r4),
        BinaryMask(dims, residual),
        counts,
    )


def select_thresholds(
    da: DistanceField,
    db: DistanceField,
    fg_a: BinaryMask,
    fg_b: BinaryMask,
    min_fraction: float = 0.10,
    q1: float = 1.0 / 3.0,
    q2: float = 2.0 / 3.0,
) -> Thresholds:
    """Pick (t1, t2) so every region keeps at least ``min_fraction`` of the brain.

    Pools the foreground distances of both fields, cuts at nearest-rank
    quantiles (q1, q2), and accepts if each of the four regions holds at
    least ``min_fraction * |fg_a ∪ fg_b|`` voxels. Otherwise a grid search
    over quantile pairs maximises the smallest region fraction (ties go to
    the smaller q1, then smaller q2) and must itself reach the floor.
    """
    _check_same_grid(da, db)
    if fg_a.dims != da.dims or fg_b.dims != db.dims:
        raise DimsMismatch("foreground mask dims differ from distance fields")
    if not (0.0 < min_fraction <= 0.25):
        raise ValueError(
            f"min_fraction must be in (0, 0.25] (four regions cannot each hold "
            f"more than 25%), got {min_fraction}"
        )
    if not (0.0 < q1 < q2 < 1.0):
        raise ValueError(f"need 0 < q1 < q2 < 1, got q1={q1}, q2={q2}")

    union_count = int(np.count_nonzero(fg_a.bits | fg_b.bits))
    if union_count == 0:
        raise EmptyForeground("both foreground masks are empty")
    floor = min_fraction * union_count

    pool = np.sort(
        np.concatenate([da.values[fg_a.bits], db.values[fg_b.bits]])
    )
    n = pool.size

    def thresholds_at(qa: float, qb: float) -> tuple[float, float]:
        return float(pool[nearest_rank(qa, n) - 1]), float(pool[nearest_rank(qb, n) - 1])

    def min_region_count(t1: float, t2: float) -> int:
        t = Thresholds(t1, t2, q1=0.25, q2=0.75, min_fraction=min_fraction)
        masks = build_region_masks(da, db, t)
        return min(masks.counts[:4])

    t1, t2 = thresholds_at(q1, q2)
    if min_region_count(t1, t2) >= floor:
        return Thresholds(t1, t2, q1, q2, min_fraction)

    # requested quantiles failed: deterministic search, best-min-region wins
    cache: dict[tuple[float, float], int] = {}
    best = None  # (min_count, q1, q2, t1, t2)
    for qa in GRID_QUANTILES:
        for qb in GRID_QUANTILES:
            if qa >= qb:
                continue
            ta, tb = thresholds_at(qa, qb)
            key = (ta, tb)
            if key not in cache:
                cache[key] = min_region_count(ta, tb)
            score = cache[key]
            if best is None or score > best[0]:
                best = (score, qa, qb, ta, tb)
    assert best is not None
    if best[0] >= floor:
        return Thresholds(best[3], best[4], best[1], best[2], min_fraction)
    raise InfeasibleThresholds(
        f"no quantile pair gives every region >= {min_fraction:.0%} of the "
        f"{union_count} foreground voxels (best minimum region: {best[0]} voxels)"
    )
