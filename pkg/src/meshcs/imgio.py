"""Grayscale image container and bit-exact raster I/O.

The interchange format is binary PGM (P5): trivially parseable and free of
codec dependencies, so saved reconstructions round-trip exactly. PNG is
accepted on input only (8-bit grayscale or RGB); RGB collapses to luma.
"""

from __future__ import annotations

import io
import os

import numpy as np

__all__ = ["GrayImage", "load_image", "save_image", "quantize"]

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class GrayImage:
    """A height x width grid of real intensities in [0, 2**precision_bits - 1].

    Intensities are kept as float64 because solver output is continuous;
    quantization to integer levels happens only when writing to disk.
    Pixel (row i, col j) sits at continuous coordinate (x=j, y=i).
    """

    __slots__ = ("pixels", "precision_bits")

    def __init__(self, pixels, precision_bits: int = 8):
        arr = np.array(pixels, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2D pixel grid, got shape {arr.shape}")
        h, w = arr.shape
        if h < 2 or w < 2:
            raise ValueError(f"image must be at least 2x2, got {w}x{h}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("intensities must be finite")
        peak = float(2**precision_bits - 1)
        lo, hi = float(arr.min()), float(arr.max())
        if lo < 0.0 or hi > peak:
            raise ValueError(f"intensities [{lo}, {hi}] outside [0, {peak}]")
        self.pixels = arr
        self.precision_bits = int(precision_bits)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def peak(self) -> float:
        """Largest representable intensity, 2**p - 1."""
        return float(2**self.precision_bits - 1)

    @property
    def n_pixels(self) -> int:
        return self.pixels.size

    def as_vector(self) -> np.ndarray:
        """Row-major flattening; length width*height."""
        return self.pixels.reshape(-1).copy()

    @classmethod
    def from_vector(cls, vec, width: int, height: int, precision_bits: int = 8) -> "GrayImage":
        vec = np.asarray(vec, dtype=np.float64)
        if vec.size != width * height:
            raise ValueError(f"vector length {vec.size} != {width}x{height}")
        return cls(vec.reshape(height, width), precision_bits)

    def copy(self) -> "GrayImage":
        return GrayImage(self.pixels, self.precision_bits)

    def same_shape(self, other: "GrayImage") -> bool:
        return self.pixels.shape == other.pixels.shape

    def __repr__(self) -> str:
        return f"GrayImage({self.width}x{self.height}, p={self.precision_bits})"


def _round_half_away(arr: np.ndarray) -> np.ndarray:
    # round-half-away-from-zero; intensities are nonnegative so floor(x+0.5)
    # does it (np.round would round halves to even)
    return np.floor(arr + 0.5)


def quantize(img: GrayImage) -> GrayImage:
    """Snap intensities to integer levels exactly as save_image would store them."""
    peak = img.peak
    q = np.clip(_round_half_away(img.pixels), 0.0, peak)
    return GrayImage(q, img.precision_bits)


def _read_pgm(data: bytes) -> GrayImage:
    # tokenizer: whitespace-separated header fields, '#' comments to EOL
    pos = 2  # past "P5"
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PGM header")
        fields.append(data[start:pos])
    pos += 1  # exactly one whitespace byte after maxval
    try:
        width, height, maxval = (int(f) for f in fields)
    except ValueError as exc:
        raise ValueError(f"bad PGM header fields {fields!r}") from exc
    if width < 2 or height < 2:
        raise ValueError(f"unsupported PGM dimensions {width}x{height}")
    if maxval != 255:
        raise ValueError(f"only 8-bit PGM supported, maxval={maxval}")
    body = data[pos : pos + width * height]
    if len(body) != width * height:
        raise ValueError("PGM pixel data truncated")
    arr = np.frombuffer(body, dtype=np.uint8).reshape(height, width)
    return GrayImage(arr.astype(np.float64), precision_bits=8)


def _read_png(path: str) -> GrayImage:
    from PIL import Image

    with Image.open(path) as im:
        if im.mode == "L":
            arr = np.asarray(im, dtype=np.float64)
        elif im.mode == "RGB":
            rgb = np.asarray(im, dtype=np.float64)
            luma = (
                LUMA_WEIGHTS[0] * rgb[:, :, 0]
                + LUMA_WEIGHTS[1] * rgb[:, :, 1]
                + LUMA_WEIGHTS[2] * rgb[:, :, 2]
            )
            arr = _round_half_away(luma)
        else:
            raise ValueError(f"unsupported PNG mode {im.mode!r}; need 8-bit grayscale or RGB")
    if arr.ndim != 2 or arr.shape[0] < 2 or arr.shape[1] < 2:
        raise ValueError(f"unsupported PNG dimensions {arr.shape}")
    return GrayImage(np.clip(arr, 0.0, 255.0), precision_bits=8)


def load_image(path: str | os.PathLike) -> GrayImage:
    """Load a binary PGM (P5) or an 8-bit grayscale/RGB PNG as a GrayImage."""
    path = os.fspath(path)
    with open(path, "rb") as fh:
        head = fh.read(8)
        if head.startswith(b"P5"):
            return _read_pgm(head + fh.read())
    if head.startswith(b"\x89PNG"):
        return _read_png(path)
    raise ValueError(f"unsupported image format in {path!r} (expected PGM P5 or PNG)")


def save_image(img: GrayImage, path: str | os.PathLike) -> None:
    """Write img as binary PGM P5, quantizing with round-half-away-from-zero.

    Loading the file back reproduces img exactly when img holds integers.
    """
    if img.precision_bits != 8:
        raise ValueError("PGM output is 8-bit; got precision_bits="
                         f"{img.precision_bits}")
    q = np.clip(_round_half_away(img.pixels), 0.0, 255.0).astype(np.uint8)
    buf = io.BytesIO()
    buf.write(f"P5\n{img.width} {img.height}\n255\n".encode("ascii"))
    buf.write(q.tobytes(order="C"))
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())
