"""Bit-exact file ingestion and emission: NIfTI-1 volumes, CSV manifests,
and mix-record JSON sidecars.

Only the NIfTI-1 single-file form is supported; ANALYZE, the two-file
form, and NIfTI-2 are rejected with explicit messages. Writes are always
little-endian float32 with data at byte 352; gzip output is deterministic
(fixed mtime, no embedded name) so identical inputs give identical bytes.
"""

from __future__ import annotations

import csv
import gzip
import json
import math
import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadHeader,
    BadLabel,
    BadMagic,
    EmptyManifest,
    InconsistentRecord,
    NonFiniteData,
    TruncatedFile,
    UnsupportedDatatype,
)
from .mixer import MixRecord
from .volume import Volume

HEADER_SIZE = 348
DATA_OFFSET = 352
_DTYPES = {2: np.uint8, 4: np.int16, 8: np.int32, 16: np.float32, 64: np.float64}
# header slice carrying qform/sform codes and transform floats, kept verbatim
_ORIENT_SPAN = (252, 328)


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: int
    id: str


def volume_stem(path: str) -> str:
    """File name without .gz and .nii/.hdr/.img suffixes."""
    name = os.path.basename(path)
    for ext in (".gz", ".nii", ".hdr", ".img"):
        if name.lower().endswith(ext):
            name = name[: -len(ext)]
    return name


def _read_bytes(path: str) -> bytes:
    if str(path).endswith(".gz"):
        with gzip.open(path, "rb") as fh:
            return fh.read()
    with open(path, "rb") as fh:
        return fh.read()


def _write_bytes(path: str, payload: bytes) -> None:
    if str(path).endswith(".gz"):
        with open(path, "wb") as raw:
            # mtime=0 and an empty name keep the gzip container deterministic
            with gzip.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0) as fh:
                fh.write(payload)
    else:
        with open(path, "wb") as fh:
            fh.write(payload)


def read_nifti(path: str) -> Volume:
    """Parse a NIfTI-1 single-file volume into a float32 Volume.

    Endianness is detected from sizeof_hdr; uint8/int16/int32/float32/
    float64 payloads are accepted and converted to float32, applying
    scl_slope/scl_inter when scl_slope is nonzero. Trailing singleton
    dims are tolerated. Gzip is transparent for paths ending in .gz.
    """
    raw = _read_bytes(path)
    if len(raw) < HEADER_SIZE:
        raise TruncatedFile(f"{path}: {len(raw)} bytes is shorter than a NIfTI-1 header")

    (size_le,) = struct.unpack_from("<i", raw, 0)
    (size_be,) = struct.unpack_from(">i", raw, 0)
    if size_le == HEADER_SIZE:
        bo = "<"
    elif size_be == HEADER_SIZE:
        bo = ">"
    elif HEADER_SIZE + 192 in (size_le, size_be):  # NIfTI-2 sizeof_hdr = 540
        raise BadMagic(f"{path}: NIfTI-2 is not supported, only NIfTI-1 single-file")
    else:
        raise BadHeader(f"{path}: sizeof_hdr is {size_le}, not a NIfTI-1 header")

    magic = raw[344:348]
    if magic == b"ni1\x00":
        raise BadMagic(
            f"{path}: two-file NIfTI-1 (.hdr/.img pair, magic 'ni1') is not supported"
        )
    if magic != b"n+1\x00":
        raise BadMagic(
            f"{path}: magic {magic!r} is not 'n+1' (ANALYZE 7.5 and other "
            "formats are not supported)"
        )

    dim = struct.unpack_from(bo + "8h", raw, 40)
    ndim = dim[0]
    if not (1 <= ndim <= 7):
        raise BadHeader(f"{path}: dim[0]={ndim} outside 1..7")
    if ndim > 3 and any(d not in (0, 1) for d in dim[4 : ndim + 1]):
        raise BadHeader(
            f"{path}: {ndim}-D volume with non-singleton trailing dims {dim[4:ndim + 1]}"
        )
    nx = dim[1] if ndim >= 1 else 1
    ny = dim[2] if ndim >= 2 else 1
    nz = dim[3] if ndim >= 3 else 1
    ny = ny if ny > 0 else 1
    nz = nz if nz > 0 else 1
    if nx < 1:
        raise BadHeader(f"{path}: non-positive x dimension {nx}")

    (datatype,) = struct.unpack_from(bo + "h", raw, 70)
    if datatype not in _DTYPES:
        raise UnsupportedDatatype(
            f"{path}: datatype code {datatype} not in supported set "
            f"{sorted(_DTYPES)} (uint8/int16/int32/float32/float64)"
        )

    pixdim = struct.unpack_from(bo + "8f", raw, 76)
    spacing = tuple(abs(p) if p != 0.0 else 1.0 for p in pixdim[1:4])

    (vox_offset_f,) = struct.unpack_from(bo + "f", raw, 108)
    vox_offset = int(vox_offset_f)
    if vox_offset < HEADER_SIZE:
        raise BadHeader(f"{path}: vox_offset {vox_offset} overlaps the header")
    scl_slope, scl_inter = struct.unpack_from(bo + "2f", raw, 112)

    orient = struct.unpack_from(bo + "2h18f", raw, _ORIENT_SPAN[0])

    count = nx * ny * nz
    dtype = np.dtype(_DTYPES[datatype]).newbyteorder(bo)
    need = count * dtype.itemsize
    if len(raw) < vox_offset + need:
        raise TruncatedFile(
            f"{path}: need {vox_offset + need} bytes for {count} voxels, "
            f"file has {len(raw)}"
        )
    arr = np.frombuffer(raw, dtype=dtype, count=count, offset=vox_offset)
    if scl_slope != 0.0 and not (scl_slope == 1.0 and scl_inter == 0.0):
        data = (arr.astype(np.float64) * scl_slope + scl_inter).astype(np.float32)
    else:
        data = arr.astype(np.float32)
    if not np.isfinite(data).all():
        raise NonFiniteData(f"{path}: volume contains NaN or Inf after load")

    return Volume(
        dims=(int(nx), int(ny), int(nz)),
        spacing=tuple(float(s) for s in spacing),
        data=data,
        id=volume_stem(path),
        orient=tuple(orient),
    )


def write_nifti(path: str, v: Volume) -> None:
    """Emit a little-endian float32 NIfTI-1 single-file volume.

    Round trip through read_nifti reproduces dims and spacing exactly and
    the float32 payload bit for bit. Orientation fields read from a source
    file are re-emitted verbatim.
    """
    nx, ny, nz = v.dims
    hdr = bytearray(HEADER_SIZE)
    struct.pack_into("<i", hdr, 0, HEADER_SIZE)
    struct.pack_into("<c", hdr, 38, b"r")
    struct.pack_into("<8h", hdr, 40, 3, nx, ny, nz, 1, 1, 1, 1)
    struct.pack_into("<2h", hdr, 70, 16, 32)  # float32, 32 bits per voxel
    struct.pack_into("<8f", hdr, 76, 1.0, *v.spacing, 0.0, 0.0, 0.0, 0.0)
    struct.pack_into("<f", hdr, 108, float(DATA_OFFSET))
    struct.pack_into("<2f", hdr, 112, 0.0, 0.0)  # scl_slope 0: no rescale
    struct.pack_into("<b", hdr, 123, 2)  # spatial units: millimetres
    descrip = b"dtmix mixed-volume toolkit"
    struct.pack_into("<80s", hdr, 148, descrip)
    if v.orient is not None:
        struct.pack_into("<2h18f", hdr, _ORIENT_SPAN[0], *v.orient)
    struct.pack_into("<4s", hdr, 344, b"n+1\x00")

    payload = bytes(hdr) + b"\x00\x00\x00\x00" + v.data.astype("<f4").tobytes()
    _write_bytes(path, payload)


def read_manifest(path: str, num_classes: int = 3) -> list[ManifestEntry]:
    """CSV manifest ``path,label[,id]``; relative paths resolve against the
    manifest's own directory; labels must be integers in [0, num_classes)."""
    base = os.path.dirname(os.path.abspath(path))
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise BadHeader(f"{path}: empty file, expected header 'path,label[,id]'")
    header = [c.strip().lower() for c in rows[0]]
    if header not in (["path", "label"], ["path", "label", "id"]):
        raise BadHeader(
            f"{path}: header {rows[0]} is not 'path,label' or 'path,label,id'"
        )
    entries = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) < 2:
            raise BadHeader(f"{path}:{lineno}: row {row} has fewer than 2 fields")
        p = row[0].strip()
        if not p:
            raise BadHeader(f"{path}:{lineno}: empty path")
        try:
            label = int(row[1].strip())
        except ValueError:
            raise BadLabel(f"{path}:{lineno}: label {row[1]!r} is not an integer")
        if not (0 <= label < num_classes):
            raise BadLabel(
                f"{path}:{lineno}: label {label} outside [0, {num_classes})"
            )
        resolved = p if os.path.isabs(p) else os.path.join(base, p)
        entry_id = row[2].strip() if len(row) > 2 and row[2].strip() else volume_stem(p)
        entries.append(ManifestEntry(path=resolved, label=label, id=entry_id))
    if not entries:
        raise EmptyManifest(f"{path}: header only, no entries")
    return entries


def mix_record_to_dict(r: MixRecord) -> dict:
    """MixRecord as the plain mapping used for JSON and the binding layer."""
    return {
        "id_a": r.id_a,
        "id_b": r.id_b,
        "t1": r.t1,
        "t2": r.t2,
        "counts": {
            "r1": r.counts[0],
            "r2": r.counts[1],
            "r3": r.counts[2],
            "r4": r.counts[3],
            "residual": r.counts[4],
        },
        "p_a": r.p_a,
        "p_b": r.p_b,
        "alpha_a": r.alpha_a,
        "alpha_b": r.alpha_b,
        "label": list(r.label),
        "config": {
            "residual_policy": r.config.residual_policy,
            "count_domain": r.config.count_domain,
            "min_fraction": r.config.min_fraction,
            "bg_threshold": r.config.bg_threshold,
            "q1": r.config.q1,
            "q2": r.config.q2,
        },
        "seed": r.seed,
        "pair_index": r.pair_index,
    }


def _validate_record(r: MixRecord) -> None:
    if not math.isfinite(r.alpha_a + r.alpha_b) or abs(r.alpha_a + r.alpha_b - 1.0) > 1e-12:
        raise InconsistentRecord(f"alpha_a + alpha_b = {r.alpha_a + r.alpha_b!r}")
    if r.config.count_domain == "all":
        if r.p_a != r.counts[0] + r.counts[2] or r.p_b != r.counts[1] + r.counts[3]:
            raise InconsistentRecord(
                f"pixel counts p_a={r.p_a}, p_b={r.p_b} disagree with region "
                f"counts {r.counts}"
            )


def record_json_line(r: MixRecord) -> str:
    """One compact JSON line; floats use shortest round-trip form, so
    re-parsing is value-exact."""
    _validate_record(r)
    return json.dumps(mix_record_to_dict(r), separators=(",", ":"))


def write_mix_record(path: str, r: MixRecord, append: bool = False) -> None:
    """Write one record as a JSON object; append mode builds JSON Lines."""
    line = record_json_line(r)
    with open(path, "a" if append else "w", encoding="utf-8") as fh:
        fh.write(line + "\n")
