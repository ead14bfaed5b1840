"""Distance-transform guided mixup augmentation for 3D brain MRI.

Exact Euclidean distance transforms partition paired volumes into
distance-band regions; region-wise composition produces structurally
coherent mixed volumes with pixel-count-proportional soft labels, plus
the weighted soft cross-entropy kernel used to train on them.
"""

__version__ = "1.0.0"
RECORD_FORMAT_VERSION = 1

from .edt import DistanceField, edt, edt_brute, edt_brute_squared, edt_squared
from .errors import (
    BadHeader,
    BadLabel,
    BadMagic,
    ClassCountMismatch,
    DegenerateMix,
    DimsMismatch,
    DtmixError,
    EmptyBackground,
    EmptyForeground,
    EmptyManifest,
    InconsistentRecord,
    InfeasibleThresholds,
    InvalidVolume,
    IoFailure,
    NonFiniteData,
    ShapeMismatch,
    SpacingMismatch,
    TruncatedFile,
    UnsupportedDatatype,
    ZeroCount,
)
from .io import (
    ManifestEntry,
    mix_record_to_dict,
    read_manifest,
    read_nifti,
    write_mix_record,
    write_nifti,
)
from .loss import (
    ClassWeights,
    inverse_frequency_weights,
    soft_ce_grad_logits,
    soft_cross_entropy,
    softmax,
)
from .mixer import (
    MixConfig,
    MixedSample,
    MixRecord,
    SoftLabel,
    mix_images,
    mix_labels,
    mix_pair,
)
from .regions import RegionMasks, Thresholds, build_region_masks, select_thresholds
from .volume import BinaryMask, Volume, VoxelIndex, foreground_mask, validate_pair

__all__ = [
    "__version__",
    "RECORD_FORMAT_VERSION",
    "Volume",
    "BinaryMask",
    "VoxelIndex",
    "foreground_mask",
    "validate_pair",
    "DistanceField",
    "edt",
    "edt_squared",
    "edt_brute",
    "edt_brute_squared",
    "Thresholds",
    "RegionMasks",
    "select_thresholds",
    "build_region_masks",
    "SoftLabel",
    "MixConfig",
    "MixRecord",
    "MixedSample",
    "mix_images",
    "mix_labels",
    "mix_pair",
    "ClassWeights",
    "inverse_frequency_weights",
    "softmax",
    "soft_cross_entropy",
    "soft_ce_grad_logits",
    "ManifestEntry",
    "read_nifti",
    "write_nifti",
    "read_manifest",
    "write_mix_record",
    "mix_record_to_dict",
    "DtmixError",
    "InvalidVolume",
    "ShapeMismatch",
    "SpacingMismatch",
    "DimsMismatch",
    "EmptyBackground",
    "EmptyForeground",
    "InfeasibleThresholds",
    "DegenerateMix",
    "ClassCountMismatch",
    "ZeroCount",
    "BadMagic",
    "UnsupportedDatatype",
    "TruncatedFile",
    "NonFiniteData",
    "BadHeader",
    "BadLabel",
    "EmptyManifest",
    "InconsistentRecord",
    "IoFailure",
]
