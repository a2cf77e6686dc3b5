"""
Image decoding and preprocessing.

Pipeline (order is fixed): decode -> to_gray -> center_crop -> resize_bilinear
-> [1,S,S] float32 tensor with values in [0,1].

Supported containers: PNG (via pypng) and binary PGM (P5) / PPM (P6).
"""

import logging
import re
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import png

from ferex.core.tensor import Tensor
from ferex.errors import ImageDecodeError, ImageFormatError
from ferex.models.schemas import PreprocessConfig

logger = logging.getLogger(__name__)

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"

# BT.601 luma weights
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

# Header of a binary PNM file: magic, width, height, maxval, each separated by
# whitespace and optional '#' comments, followed by exactly one whitespace byte.
_PNM_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n)*(\S+)")


@dataclass(frozen=True)
class RgbImage:
    width: int
    height: int
    pixels: np.ndarray  # uint8 [H, W, 3]

    def __post_init__(self):
        if self.pixels.shape != (self.height, self.width, 3) or self.pixels.dtype != np.uint8:
            raise ValueError(
                f"RgbImage pixels must be uint8 [{self.height},{self.width},3], "
                f"got {self.pixels.dtype} {self.pixels.shape}"
            )


@dataclass(frozen=True)
class GrayImage:
    width: int
    height: int
    pixels: np.ndarray  # float32 [H, W] in [0, 1]

    def __post_init__(self):
        if self.pixels.shape != (self.height, self.width):
            raise ValueError(
                f"GrayImage pixels must be [{self.height},{self.width}], got {self.pixels.shape}"
            )


def _decode_png(data: bytes, name: str) -> RgbImage:
    try:
        width, height, rows, info = png.Reader(bytes=data).asRGBA8()
        flat = [np.asarray(row, dtype=np.uint8) for row in rows]
    except (png.Error, zlib.error, EOFError, ValueError) as e:
        raise ImageDecodeError(name, f"corrupt PNG: {e}")
    if len(flat) != height or any(row.size != width * 4 for row in flat):
        raise ImageDecodeError(name, "truncated PNG pixel data")
    rgba = np.stack(flat).reshape(height, width, 4)
    # alpha is dropped; the headshots are opaque
    return RgbImage(width=width, height=height, pixels=np.ascontiguousarray(rgba[..., :3]))


def _decode_pnm(data: bytes, name: str) -> RgbImage:
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        match = _PNM_TOKEN.match(data, pos)
        if not match:
            raise ImageDecodeError(name, "truncated PNM header")
        tokens.append(match.group(1))
        pos = match.end()
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise ImageDecodeError(name, "malformed PNM header")
    pos += 1

    magic = tokens[0]
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ImageDecodeError(name, f"non-numeric PNM header fields {tokens[1:]}")
    if width < 1 or height < 1 or not 1 <= maxval <= 65535:
        raise ImageDecodeError(name, f"invalid PNM dimensions {width}x{height}, maxval {maxval}")

    channels = 1 if magic == b"P5" else 3
    dtype = np.dtype(np.uint8) if maxval < 256 else np.dtype(">u2")
    expected = width * height * channels * dtype.itemsize
    payload = data[pos : pos + expected]
    if len(payload) != expected:
        raise ImageDecodeError(
            name, f"truncated PNM pixel data: expected {expected} bytes, found {len(payload)}"
        )
    values = np.frombuffer(payload, dtype=dtype).reshape(height, width, channels)
    if maxval != 255:
        values = np.rint(values.astype(np.float64) * 255.0 / maxval)
    values = np.clip(values, 0, 255).astype(np.uint8)
    if channels == 1:
        return rgb_from_gray(values[..., 0])
    return RgbImage(width=width, height=height, pixels=np.ascontiguousarray(values))


def rgb_from_gray(values: np.ndarray) -> RgbImage:
    """Replicate a uint8 [H,W] plane into three channels, as a P5 file decodes."""
    height, width = values.shape
    pixels = np.ascontiguousarray(np.repeat(values.astype(np.uint8)[..., np.newaxis], 3, axis=2))
    return RgbImage(width=width, height=height, pixels=pixels)


def decode(source: str | Path | bytes, name: str | None = None) -> RgbImage:
    """Decode a PNG or binary PGM/PPM file (path or raw bytes) into 8-bit RGB."""
    if isinstance(source, bytes):
        data = source
        name = name or "<bytes>"
    else:
        name = name or str(source)
        try:
            data = Path(source).read_bytes()
        except OSError as e:
            raise ImageDecodeError(name, f"unreadable file: {e.strerror or e}")

    if data.startswith(PNG_SIGNATURE):
        return _decode_png(data, name)
    if data[:2] in (b"P5", b"P6"):
        return _decode_pnm(data, name)
    if data[:2] in (b"P1", b"P2", b"P3", b"P4"):
        raise ImageFormatError(name, "ASCII/bitmap PNM variants are not supported (use P5/P6)")
    raise ImageFormatError(name, "unsupported image format (expected PNG, PGM or PPM)")


def to_gray(img: RgbImage) -> GrayImage:
    """BT.601 luma scaled to [0,1]."""
    rgb = img.pixels.astype(np.float64)
    r, g, b = LUMA_WEIGHTS
    luma = (r * rgb[..., 0] + g * rgb[..., 1] + b * rgb[..., 2]) / 255.0
    pixels = np.clip(luma, 0.0, 1.0).astype(np.float32)
    return GrayImage(width=img.width, height=img.height, pixels=pixels)


def crop_window(width: int, height: int, fraction: float) -> tuple[int, int, int, int]:
    """(left, top, crop_w, crop_h) of the central floor(fraction*W) x floor(fraction*H) window."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"crop fraction must lie in (0, 1], got {fraction}")
    crop_w = max(1, int(np.floor(fraction * width)))
    crop_h = max(1, int(np.floor(fraction * height)))
    # odd remainders favour the top-left
    return (width - crop_w) // 2, (height - crop_h) // 2, crop_w, crop_h


def center_crop(img: GrayImage, fraction: float) -> GrayImage:
    left, top, crop_w, crop_h = crop_window(img.width, img.height, fraction)
    pixels = img.pixels[top : top + crop_h, left : left + crop_w].copy()
    return GrayImage(width=crop_w, height=crop_h, pixels=pixels)


def _sample_axis(in_size: int, out_size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Half-pixel-centre source indices and weights along one axis."""
    scale = in_size / out_size
    src = (np.arange(out_size, dtype=np.float64) + 0.5) * scale - 0.5
    src = np.clip(src, 0.0, in_size - 1)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, in_size - 1)
    return lo, hi, src - lo


def resize_bilinear(img: GrayImage, out_w: int, out_h: int) -> GrayImage:
    if out_w < 1 or out_h < 1:
        raise ValueError(f"output size must be at least 1x1, got {out_w}x{out_h}")
    src = img.pixels.astype(np.float64)
    y0, y1, wy = _sample_axis(img.height, out_h)
    x0, x1, wx = _sample_axis(img.width, out_w)

    rows = src[y0] * (1.0 - wy)[:, None] + src[y1] * wy[:, None]
    out = rows[:, x0] * (1.0 - wx)[None, :] + rows[:, x1] * wx[None, :]
    pixels = np.clip(out, 0.0, 1.0).astype(np.float32)
    return GrayImage(width=out_w, height=out_h, pixels=pixels)


def gray_to_tensor(img: GrayImage) -> Tensor:
    return np.ascontiguousarray(img.pixels, dtype=np.float32)[np.newaxis]


def preprocess_image(img: RgbImage, config: PreprocessConfig) -> Tensor:
    """to_gray -> center_crop -> resize to S x S on an already decoded image."""
    gray = to_gray(img)
    cropped = center_crop(gray, config.crop_fraction)
    size = config.input_size
    return gray_to_tensor(resize_bilinear(cropped, size, size))


def preprocess(source: str | Path | bytes, config: PreprocessConfig) -> Tensor:
    """decode -> to_gray -> center_crop -> resize to S x S; returns [1,S,S] in [0,1]."""
    return preprocess_image(decode(source), config)


def preprocess_many(
    paths: list[Path], config: PreprocessConfig, workers: int = 1
) -> list[Tensor | ImageDecodeError]:
    """
    Preprocess several files, optionally on a thread pool.

    Results follow input order. A file that fails to decode yields its
    ImageDecodeError in place of a tensor so callers can report and continue.
    """

    def _one(path: Path) -> Tensor | ImageDecodeError:
        try:
            return preprocess(path, config)
        except ImageDecodeError as e:
            return e

    if workers <= 1 or len(paths) <= 1:
        return [_one(p) for p in paths]
    logger.debug("[Imaging] Preprocessing %d files on %d workers", len(paths), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_one, paths))


def encode_pgm(pixels: np.ndarray) -> bytes:
    """Binary P5 encoding of a [H,W] image with values in [0,1]."""
    gray = np.clip(np.rint(np.asarray(pixels, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
    height, width = gray.shape
    return b"P5\n%d %d\n255\n" % (width, height) + gray.tobytes()
