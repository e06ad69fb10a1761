"""On-disk formats: binary map files, the JSONL dataset manifest, and image I/O.

Map file layout (all little-endian):

    offset  size  field
    0       4     magic, ASCII "RFIR"
    4       1     version, unsigned (currently 1)
    5       1     kind, unsigned: 0 = flow map, 1 = distortion vector map
    6       2     reserved, zero
    8       4     height, unsigned
    12      4     width, unsigned
    16      4     channels, unsigned (always 2)
    20      ...   payload: height*width*channels IEEE-754 binary32 values,
                  row-major, channels interleaved (vx/fx then vy/fy per pixel)

Values are stored at binary32 precision; reading promotes them to float64
exactly, so write -> read -> write reproduces a file byte for byte.

Manifest files hold one JSON object per line with a fixed key order:
id, kind, source, seed, params, transform, image, dvm, flow. ``params`` is
null for distortion-free samples, ``transform`` is non-null only for
deviated samples.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from PIL import Image

from .errors import (
    BadHeaderError,
    BadMagicError,
    BadVersionError,
    KindMismatchError,
    SchemaError,
    TruncatedError,
)
from .geometry import RadialParams
from .labels import DistortionVectorMap, FlowMap, ViewTransform

MAGIC = b"RFIR"
VERSION = 1
KIND_FLOW = 0
KIND_DVM = 1
_HEADER = struct.Struct("<4sBBHIII")

_KIND_NAMES = {KIND_FLOW: "flow", KIND_DVM: "dvm"}
_KIND_CODES = {"flow": KIND_FLOW, "dvm": KIND_DVM}


def map_bytes(m: DistortionVectorMap | FlowMap) -> bytes:
    """Serialize a map to its binary file representation."""
    if isinstance(m, FlowMap):
        kind = KIND_FLOW
    elif isinstance(m, DistortionVectorMap):
        kind = KIND_DVM
    else:
        raise TypeError(f"expected a FlowMap or DistortionVectorMap, got {type(m)}")
    header = _HEADER.pack(MAGIC, VERSION, kind, 0, m.height, m.width, 2)
    payload = np.ascontiguousarray(m.data, dtype="<f4").tobytes()
    return header + payload


def write_map(m: DistortionVectorMap | FlowMap, destination) -> None:
    """Write a map file; the payload is quantized to binary32."""
    Path(destination).write_bytes(map_bytes(m))


def read_map(source, expect_kind: str | None = None):
    """Read a map file back into a typed map.

    Args:
        source: path of the file to read.
        expect_kind: optional "flow" or "dvm"; a file of the other kind
            raises KindMismatchError.
    """
    raw = Path(source).read_bytes()
    return parse_map(raw, expect_kind=expect_kind, name=str(source))


def parse_map(raw: bytes, expect_kind: str | None = None, name: str = "<bytes>"):
    """Decode the binary map representation; inverse of :func:`map_bytes`."""
    if len(raw) < _HEADER.size:
        raise TruncatedError(f"{name}: file shorter than the {_HEADER.size}-byte header")
    magic, version, kind, reserved, height, width, channels = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise BadMagicError(f"{name}: bad magic {magic!r}")
    if version != VERSION:
        raise BadVersionError(f"{name}: unsupported version {version}")
    if kind not in _KIND_NAMES:
        raise BadHeaderError(f"{name}: unknown map kind {kind}")
    if reserved != 0 or channels != 2:
        raise BadHeaderError(
            f"{name}: malformed header (reserved={reserved}, channels={channels})"
        )
    if expect_kind is not None:
        if expect_kind not in _KIND_CODES:
            raise ValueError(f"expect_kind must be 'flow' or 'dvm', got {expect_kind!r}")
        if kind != _KIND_CODES[expect_kind]:
            raise KindMismatchError(
                f"{name}: expected a {expect_kind} map, found {_KIND_NAMES[kind]}"
            )
    expected = height * width * channels * 4
    payload = raw[_HEADER.size :]
    if len(payload) < expected:
        raise TruncatedError(
            f"{name}: payload has {len(payload)} bytes, expected {expected}"
        )
    if len(payload) > expected:
        raise BadHeaderError(f"{name}: {len(payload) - expected} trailing bytes")
    data = (
        np.frombuffer(payload, dtype="<f4")
        .reshape(height, width, channels)
        .astype(np.float64)
    )
    if kind == KIND_FLOW:
        return FlowMap(data)
    return DistortionVectorMap(data)


# --- dataset manifest -------------------------------------------------------

_RECORD_KEYS = ("id", "kind", "source", "seed", "params", "transform", "image", "dvm", "flow")
_KINDS = ("central", "deviated", "distortion_free")


@dataclass(frozen=True)
class SampleRecord:
    """One manifest line: provenance and file paths of a synthesized sample."""

    id: int
    kind: str
    source: str
    seed: int
    params: RadialParams | None
    transform: ViewTransform | None
    image: str
    dvm: str
    flow: str

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise SchemaError(f"unknown sample kind {self.kind!r}")
        if self.kind == "distortion_free":
            if self.params is not None or self.transform is not None:
                raise SchemaError("distortion_free samples carry no params or transform")
        else:
            if self.params is None:
                raise SchemaError(f"{self.kind} samples require params")
            if (self.transform is not None) != (self.kind == "deviated"):
                raise SchemaError("transform must be present iff the sample is deviated")


def encode_record(rec: SampleRecord) -> str:
    """Encode a record as one canonical JSON line (fixed key order, compact)."""
    obj = {
        "id": rec.id,
        "kind": rec.kind,
        "source": rec.source,
        "seed": rec.seed,
        "params": None
        if rec.params is None
        else {"k1": rec.params.k1, "k2": rec.params.k2, "k3": rec.params.k3, "k4": rec.params.k4},
        "transform": None
        if rec.transform is None
        else {
            "crop_x": rec.transform.crop_x,
            "crop_y": rec.transform.crop_y,
            "crop_side": rec.transform.crop_side,
            "out_side": rec.transform.out_side,
        },
        "image": rec.image,
        "dvm": rec.dvm,
        "flow": rec.flow,
    }
    return json.dumps(obj, separators=(",", ":"))


def decode_record(line: str, lineno: int | None = None) -> SampleRecord:
    """Parse one manifest line; raises SchemaError with the line number on failure."""
    where = f"line {lineno}: " if lineno is not None else ""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{where}invalid JSON: {e}") from e
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}record must be a JSON object")
    if tuple(obj.keys()) != _RECORD_KEYS:
        raise SchemaError(
            f"{where}record keys must be {list(_RECORD_KEYS)}, got {list(obj.keys())}"
        )
    params = obj["params"]
    if params is not None:
        if not isinstance(params, dict) or tuple(params.keys()) != ("k1", "k2", "k3", "k4"):
            raise SchemaError(f"{where}params must hold k1..k4")
        params = RadialParams(**params)
    transform = obj["transform"]
    if transform is not None:
        keys = ("crop_x", "crop_y", "crop_side", "out_side")
        if not isinstance(transform, dict) or tuple(transform.keys()) != keys:
            raise SchemaError(f"{where}transform must hold {list(keys)}")
        transform = ViewTransform(**transform)
    try:
        return SampleRecord(
            id=obj["id"],
            kind=obj["kind"],
            source=obj["source"],
            seed=obj["seed"],
            params=params,
            transform=transform,
            image=obj["image"],
            dvm=obj["dvm"],
            flow=obj["flow"],
        )
    except SchemaError as e:
        raise SchemaError(f"{where}{e}") from e


def write_manifest(records: Iterable[SampleRecord], destination) -> None:
    lines = [encode_record(r) for r in records]
    Path(destination).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def read_manifest(source) -> list[SampleRecord]:
    records = []
    with open(source, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            records.append(decode_record(line, lineno=lineno))
    return records


# --- image files ------------------------------------------------------------


def load_image(path) -> np.ndarray:
    """Load an image file as an (H, W, 3) uint8 RGB array."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def save_image(img: np.ndarray, path) -> None:
    """Save an (H, W, 3) uint8 RGB array as a lossless PNG."""
    img = np.asarray(img)
    if img.dtype != np.uint8 or img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected a (H, W, 3) uint8 image, got {img.dtype} {img.shape}")
    Image.fromarray(img, mode="RGB").save(path, format="PNG")


def source_paths(spec: str | Path | Sequence[str | Path]) -> list[Path]:
    """Resolve a directory or an explicit list into a sorted list of image files."""
    if isinstance(spec, (str, Path)):
        p = Path(spec)
        if p.is_dir():
            exts = {".png", ".jpg", ".jpeg", ".bmp"}
            return sorted(q for q in p.iterdir() if q.suffix.lower() in exts)
        return [p]
    return [Path(s) for s in spec]
