"""Region-wise volume mixing, pixel-count soft labels, and the full pipeline.

The mixed image takes regions 1 and 3 from the first parent and regions 2
and 4 from the second; the soft label is the convex combination of the
parent labels weighted by each parent's share of assigned voxels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .edt import edt
from .errors import ClassCountMismatch, DegenerateMix, DimsMismatch
from .regions import RegionMasks, Thresholds, build_region_masks, select_thresholds
from .volume import BinaryMask, Volume, foreground_mask, validate_pair

RESIDUAL_POLICIES = ("strict", "fill_a")
COUNT_DOMAINS = ("all", "foreground")


@dataclass(frozen=True)
class SoftLabel:
    """Probability vector over the class set."""

    probs: np.ndarray  # float64, length C

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64).reshape(-1)
        if probs.size == 0:
            raise ValueError("soft label needs at least one class")
        if not np.isfinite(probs).all():
            raise ValueError("soft label has non-finite components")
        if (probs < -1e-12).any() or (probs > 1.0 + 1e-12).any():
            raise ValueError(f"soft label components outside [0, 1]: {probs}")
        if abs(float(probs.sum()) - 1.0) > 1e-9:
            raise ValueError(f"soft label sums to {probs.sum()!r}, expected 1")
        if (probs < 0.0).any() or (probs > 1.0).any():
            probs = np.clip(probs, 0.0, 1.0)  # squash float-noise overshoot
        probs = probs.view()
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def num_classes(self) -> int:
        return self.probs.size

    @classmethod
    def one_hot(cls, label: int, num_classes: int) -> "SoftLabel":
        if not (0 <= label < num_classes):
            raise ValueError(f"label {label} outside [0, {num_classes})")
        probs = np.zeros(num_classes, dtype=np.float64)
        probs[label] = 1.0
        return cls(probs)


@dataclass(frozen=True)
class MixConfig:
    """Knobs of the mixing pipeline.

    Defaults keep the strict formulation: residual voxels become zero and
    pixel counts run over the whole grid, background included.
    """

    residual_policy: str = "strict"
    count_domain: str = "all"
    min_fraction: float = 0.10
    bg_threshold: float = 0.0
    q1: float = 1.0 / 3.0
    q2: float = 2.0 / 3.0

    def __post_init__(self):
        if self.residual_policy not in RESIDUAL_POLICIES:
            raise ValueError(
                f"residual_policy must be one of {RESIDUAL_POLICIES}, "
                f"got {self.residual_policy!r}"
            )
        if self.count_domain not in COUNT_DOMAINS:
            raise ValueError(
                f"count_domain must be one of {COUNT_DOMAINS}, got {self.count_domain!r}"
            )
        if not (0.0 < self.min_fraction <= 0.25):
            raise ValueError(f"min_fraction must be in (0, 0.25], got {self.min_fraction}")
        if not (0.0 < self.q1 < self.q2 < 1.0):
            raise ValueError(f"need 0 < q1 < q2 < 1, got q1={self.q1}, q2={self.q2}")


@dataclass(frozen=True)
class MixRecord:
    """Provenance of one augmented sample."""

    id_a: str
    id_b: str
    t1: float
    t2: float
    counts: tuple[int, int, int, int, int]  # regions 1-4 then residual
    p_a: int
    p_b: int
    alpha_a: float
    alpha_b: float
    label: tuple[float, ...]
    config: MixConfig
    seed: int | None = None
    pair_index: int | None = None

    def __post_init__(self):
        if abs(self.alpha_a + self.alpha_b - 1.0) > 1e-12:
            raise ValueError(
                f"alpha_a + alpha_b = {self.alpha_a + self.alpha_b!r}, expected 1"
            )
        if self.config.count_domain == "all":
            if self.p_a != self.counts[0] + self.counts[2]:
                raise ValueError(
                    f"p_a={self.p_a} but |R1|+|R3|={self.counts[0] + self.counts[2]}"
                )
            if self.p_b != self.counts[1] + self.counts[3]:
                raise ValueError(
                    f"p_b={self.p_b} but |R2|+|R4|={self.counts[1] + self.counts[3]}"
                )


@dataclass(frozen=True)
class MixedSample:
    image: Volume
    label: SoftLabel
    record: MixRecord


def mix_images(
    xa: Volume, xb: Volume, m: RegionMasks, residual_policy: str = "strict"
) -> Volume:
    """Compose the mixed volume region by region.

    Regions 1/3 copy the first parent, regions 2/4 the second; residual
    voxels become 0 under ``strict`` and copy the first parent under
    ``fill_a``.
    """
    validate_pair(xa, xb)
    if m.dims != xa.dims:
        raise DimsMismatch(f"mask dims {m.dims} differ from volume dims {xa.dims}")
    if residual_policy not in RESIDUAL_POLICIES:
        raise ValueError(f"unknown residual policy {residual_policy!r}")
    from_a = m.r1.bits | m.r3.bits
    from_b = m.r2.bits | m.r4.bits
    out = np.zeros(xa.nvox, dtype=np.float32)
    out[from_a] = xa.data[from_a]
    out[from_b] = xb.data[from_b]
    if residual_policy == "fill_a":
        out[m.residual.bits] = xa.data[m.residual.bits]
    return Volume(xa.dims, xa.spacing, out, id=f"mix({xa.id},{xb.id})")


def mix_labels(
    ya: SoftLabel,
    yb: SoftLabel,
    m: RegionMasks,
    count_domain: str = "all",
    fg_union: BinaryMask | None = None,
) -> tuple[SoftLabel, int, int, float, float]:
    """Soft label from per-parent voxel counts.

    Counts cover all voxels of regions 1/3 (parent a) and 2/4 (parent b),
    or only foreground-union voxels under ``count_domain="foreground"``.
    Returns (label, p_a, p_b, alpha_a, alpha_b).
    """
    if ya.num_classes != yb.num_classes:
        raise ClassCountMismatch(
            f"labels have {ya.num_classes} vs {yb.num_classes} classes"
        )
    if count_domain not in COUNT_DOMAINS:
        raise ValueError(f"unknown count domain {count_domain!r}")
    if count_domain == "all":
        p_a = m.counts[0] + m.counts[2]
        p_b = m.counts[1] + m.counts[3]
    else:
        if fg_union is None:
            raise ValueError("count_domain='foreground' needs the foreground union mask")
        if fg_union.dims != m.dims:
            raise DimsMismatch("foreground union dims differ from region masks")
        fg = fg_union.bits
        p_a = int(np.count_nonzero((m.r1.bits | m.r3.bits) & fg))
        p_b = int(np.count_nonzero((m.r2.bits | m.r4.bits) & fg))
    total = p_a + p_b
    if total == 0:
        raise DegenerateMix("no voxels assigned to either parent (all residual)")
    alpha_a = p_a / total
    alpha_b = p_b / total
    # exact degeneracies stay exact: one-sided mixes and identical labels
    if p_b == 0 or np.array_equal(ya.probs, yb.probs):
        label = ya
    elif p_a == 0:
        label = yb
    else:
        label = SoftLabel(alpha_a * ya.probs + alpha_b * yb.probs)
    return label, p_a, p_b, alpha_a, alpha_b


def mix_pair(
    xa: Volume,
    ya: SoftLabel,
    xb: Volume,
    yb: SoftLabel,
    cfg: MixConfig = MixConfig(),
    thresholds: Thresholds | None = None,
    seed: int | None = None,
    pair_index: int | None = None,
) -> MixedSample:
    """Full pipeline: foreground, distance transforms, thresholds, masks, mix.

    Both distance transforms use the first parent's spacing (the pair is
    validated to agree within tolerance). Passing explicit ``thresholds``
    skips the quantile selection and its feasibility floor.
    """
    validate_pair(xa, xb)
    fg_a = foreground_mask(xa, cfg.bg_threshold)
    fg_b = foreground_mask(xb, cfg.bg_threshold)
    da = edt(fg_a, xa.spacing)
    db = edt(fg_b, xa.spacing)
    if thresholds is None:
        thresholds = select_thresholds(
            da, db, fg_a, fg_b, cfg.min_fraction, cfg.q1, cfg.q2
        )
    masks = build_region_masks(da, db, thresholds)
    image = mix_images(xa, xb, masks, cfg.residual_policy)
    fg_union = BinaryMask(xa.dims, fg_a.bits | fg_b.bits)
    label, p_a, p_b, alpha_a, alpha_b = mix_labels(
        ya, yb, masks, cfg.count_domain, fg_union
    )
    record = MixRecord(
        id_a=xa.id,
        id_b=xb.id,
        t1=thresholds.t1,
        t2=thresholds.t2,
        counts=masks.counts,
        p_a=p_a,
        p_b=p_b,
        alpha_a=alpha_a,
        alpha_b=alpha_b,
        label=tuple(float(p) for p in label.probs),
        config=cfg,
        seed=seed,
        pair_index=pair_index,
    )
    return MixedSample(image=image, label=label, record=record)
