"""Frames, image codecs, and the deterministic feature embedding.

The embedding is a fixed handcrafted descriptor: frames are resampled to
96x96, then described by per-cell color histograms (4x4 grid, 4 bins per
RGB channel, 192 dims) concatenated with per-cell gradient-orientation
energy (4x4 grid, 8 unsigned bins, 128 dims), globally L2-normalized.
It is a pure function of the pixel data: identical frames give bit-identical
vectors. Externally computed vectors can be swapped in via
import_embeddings / export_embeddings.
"""

from __future__ import annotations

import hashlib
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadDimensions,
    InconsistentDimension,
    MalformedImage,
    ParseError,
    UnsupportedFormat,
)
from . import kernels

MIN_DIM = 8

EMBED_SIZE = 96
EMBED_GRID = 4
EMBED_COLOR_BINS = 4
EMBED_ORIENT_BINS = 8
EMBED_DIM = EMBED_GRID * EMBED_GRID * (3 * EMBED_COLOR_BINS + EMBED_ORIENT_BINS)
EMBED_EPS = 1e-6

# Identifies the embedding function; stored in projects so a model is never
# silently evaluated on vectors from a different descriptor.
EMBEDDING_CONFIG = (
    f"cellhist{EMBED_COLOR_BINS}-grad{EMBED_ORIENT_BINS}"
    f"-{EMBED_SIZE}x{EMBED_SIZE}-g{EMBED_GRID}-d{EMBED_DIM}"
)

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class Frame:
    """A timestamped row-major RGB8 image."""

    width: int
    height: int
    pixels: bytes
    timestamp_ms: float = 0.0

    def __post_init__(self):
        if self.width < MIN_DIM or self.height < MIN_DIM:
            raise BadDimensions(
                f"frame must be at least {MIN_DIM}x{MIN_DIM}, got "
                f"{self.width}x{self.height}"
            )
        expected = self.width * self.height * 3
        if len(self.pixels) != expected:
            raise MalformedImage(
                f"pixel buffer has {len(self.pixels)} bytes, expected {expected}"
            )

    def as_array(self) -> np.ndarray:
        """Read-only (h, w, 3) uint8 view of the pixel buffer."""
        arr = np.frombuffer(self.pixels, dtype=np.uint8)
        return arr.reshape(self.height, self.width, 3)

    def digest(self) -> str:
        return hashlib.sha256(self.pixels).hexdigest()[:16]


@dataclass(frozen=True)
class Embedding:
    """Unit-L2 feature vector; embed() always yields EMBED_DIM dims but
    imported vectors may carry a different (uniform) dimension."""

    values: np.ndarray
    source_frame_id: str | None = None

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


def frame_from_array(arr: np.ndarray, timestamp_ms: float = 0.0) -> Frame:
    arr = np.ascontiguousarray(arr, dtype=np.uint8)
    h, w, _ = arr.shape
    return Frame(width=w, height=h, pixels=arr.tobytes(), timestamp_ms=timestamp_ms)


def decode_frame(data: bytes, fmt: str, *, width: int = 0, height: int = 0,
                 timestamp_ms: float = 0.0) -> Frame:
    """Decode `png`, `ppm_p6`, or `raw_rgb` bytes into a Frame.

    raw_rgb requires explicit width/height; PPM must be 8-bit (maxval 255).
    """
    if fmt == "raw_rgb":
        if width <= 0 or height <= 0:
            raise BadDimensions("raw_rgb needs explicit positive width/height")
        if len(data) != width * height * 3:
            raise MalformedImage(
                f"raw_rgb payload is {len(data)} bytes, expected {width * height * 3}"
            )
        return Frame(width=width, height=height, pixels=bytes(data),
                     timestamp_ms=timestamp_ms)
    if fmt == "ppm_p6":
        return _decode_ppm(data, timestamp_ms)
    if fmt == "png":
        return _decode_png(data, timestamp_ms)
    raise UnsupportedFormat(f"unknown image format: {fmt!r}")


def _decode_ppm(data: bytes, timestamp_ms: float) -> Frame:
    # header: "P6" ws width ws height ws maxval single-ws raster
    if not data.startswith(b"P6"):
        if data[:2] in (b"P1", b"P2", b"P3", b"P4", b"P5"):
            raise UnsupportedFormat("only binary PPM (P6) is supported")
        raise MalformedImage("not a PPM P6 stream")
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise MalformedImage("truncated PPM header")
        token = data[start:pos]
        if not token.isdigit():
            raise MalformedImage(f"bad PPM header token {token!r}")
        fields.append(int(token))
    pos += 1  # exactly one whitespace byte before the raster
    w, h, maxval = fields
    if maxval != 255:
        raise UnsupportedFormat(f"PPM maxval must be 255, got {maxval}")
    raster = data[pos : pos + w * h * 3]
    if len(raster) != w * h * 3:
        raise MalformedImage(
            f"PPM raster has {len(raster)} bytes, header claims {w * h * 3}"
        )
    return Frame(width=w, height=h, pixels=raster, timestamp_ms=timestamp_ms)


def _decode_png(data: bytes, timestamp_ms: float) -> Frame:
    from PIL import Image, UnidentifiedImageError

    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except UnidentifiedImageError as exc:
        raise MalformedImage(f"not a decodable PNG: {exc}") from exc
    except OSError as exc:
        raise MalformedImage(f"truncated or corrupt PNG: {exc}") from exc
    if img.mode not in ("RGB", "RGBA", "L", "P"):
        raise UnsupportedFormat(f"unsupported PNG mode {img.mode}")
    rgb = img.convert("RGB")  # alpha discarded per contract
    arr = np.asarray(rgb, dtype=np.uint8)
    return frame_from_array(arr, timestamp_ms)


def encode_ppm(frame: Frame) -> bytes:
    header = f"P6\n{frame.width} {frame.height}\n255\n".encode("ascii")
    return header + frame.pixels


def encode_png(frame: Frame) -> bytes:
    from PIL import Image

    img = Image.fromarray(frame.as_array(), mode="RGB")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def resize_bilinear(frame: Frame, w: int, h: int) -> Frame:
    """Bilinear resample with half-pixel sample centers; timestamp preserved."""
    if w < MIN_DIM or h < MIN_DIM:
        raise BadDimensions(f"target size {w}x{h} below minimum {MIN_DIM}")
    if w == frame.width and h == frame.height:
        return frame
    out = kernels.resize_bilinear_rgb(frame.as_array(), w, h)
    return frame_from_array(out, timestamp_ms=frame.timestamp_ms)


def luma(arr: np.ndarray) -> np.ndarray:
    """Rec.601 luma as float64."""
    a = arr.astype(np.float64)
    return LUMA_WEIGHTS[0] * a[:, :, 0] + LUMA_WEIGHTS[1] * a[:, :, 1] + LUMA_WEIGHTS[2] * a[:, :, 2]


def color_histogram_block(arr96: np.ndarray) -> np.ndarray:
    """Per-cell, per-channel normalized color histograms (the first embedding
    block, pre global normalization). Shape (grid*grid, 3, bins)."""
    counts = kernels.color_cell_counts(arr96, EMBED_GRID, EMBED_COLOR_BINS)
    cell_pixels = (EMBED_SIZE // EMBED_GRID) ** 2
    return counts / float(cell_pixels)


def gradient_block(arr96: np.ndarray) -> np.ndarray:
    """Per-cell L2-normalized gradient-orientation energy (the second
    embedding block, pre global normalization). Shape (grid*grid, 8)."""
    sums = kernels.gradient_cell_sums(luma(arr96), EMBED_GRID)
    out = np.empty_like(sums)
    for i in range(sums.shape[0]):
        n = math.sqrt(float(np.dot(sums[i], sums[i])))
        out[i] = sums[i] / max(n, EMBED_EPS)
    return out


def embed(frame: Frame) -> Embedding:
    """Compute the 320-dim unit-norm descriptor for a frame."""
    arr96 = resize_bilinear(frame, EMBED_SIZE, EMBED_SIZE).as_array()
    block_a = color_histogram_block(arr96).ravel()
    block_b = gradient_block(arr96).ravel()
    vec = np.concatenate([block_a, block_b])
    n = math.sqrt(float(np.dot(vec, vec)))
    vec = vec / max(n, EMBED_EPS)
    return Embedding(values=vec, source_frame_id=frame.digest())


def import_embeddings(path) -> dict[str, Embedding]:
    """Read `id,D,v1,...,vD` lines; vectors re-normalized to unit L2.

    D may differ from EMBED_DIM but must be uniform within the file.
    """
    out: dict[str, Embedding] = {}
    expected_dim: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) < 2:
                raise ParseError("expected `id,D,v1,...,vD`", line=lineno)
            sample_id = parts[0]
            try:
                dim = int(parts[1])
            except ValueError:
                raise ParseError(f"bad dimension field {parts[1]!r}", line=lineno)
            if dim <= 0:
                raise ParseError(f"dimension must be positive, got {dim}", line=lineno)
            if expected_dim is None:
                expected_dim = dim
            elif dim != expected_dim:
                raise InconsistentDimension(
                    f"line {lineno}: dimension {dim} != {expected_dim} used earlier"
                )
            if len(parts) - 2 != dim:
                raise ParseError(
                    f"declared {dim} values but found {len(parts) - 2}", line=lineno
                )
            try:
                vec = np.array([float(p) for p in parts[2:]], dtype=np.float64)
            except ValueError as exc:
                raise ParseError(f"bad value: {exc}", line=lineno)
            n = math.sqrt(float(np.dot(vec, vec)))
            vec = vec / max(n, EMBED_EPS)
            out[sample_id] = Embedding(values=vec, source_frame_id=sample_id)
    return out


def export_embeddings(items, path) -> int:
    """Write `id,D,v1,...,vD` lines compatible with import_embeddings."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for sample_id, emb in items:
            vals = ",".join(format(v, ".17g") for v in emb.values)
            fh.write(f"{sample_id},{emb.dim},{vals}\n")
            count += 1
    return count
