"""Deterministic test images: public standard images and synthetic phantoms.

The benchmark runs on public images only; generated phantoms stand in for
anything that cannot be redistributed.
"""

from __future__ import annotations

import numpy as np

from .imgio import GrayImage

__all__ = ["cameraman", "affine_ramp", "step_edge", "two_region_phantom", "smooth_blobs"]


def cameraman() -> GrayImage:
    """The standard cameraman test image at 256x256, 8-bit.

    Anti-aliased downsample of the 512x512 scan bundled with scikit-image;
    the filtering suppresses the scan grain so the result matches the noise
    character of the classic 256x256 distribution of this image.
    """
    from skimage import data
    from skimage.transform import resize

    full = data.camera().astype(np.float64)
    arr = resize(full, (256, 256), anti_aliasing=True, preserve_range=True)
    return GrayImage(np.clip(np.floor(arr + 0.5), 0.0, 255.0), precision_bits=8)


def affine_ramp(width: int, height: int, gx: float = 0.5, gy: float = 0.75,
                offset: float = 10.0) -> GrayImage:
    """Globally affine image gx*x + gy*y + offset (must stay inside [0, 255])."""
    x = np.arange(width, dtype=np.float64)
    y = np.arange(height, dtype=np.float64)[:, None]
    return GrayImage(gx * x + gy * y + offset)


def step_edge(size: int = 128, low: float = 40.0, high: float = 200.0,
              column: int | None = None) -> GrayImage:
    """Vertical intensity step: columns < column take low, the rest high."""
    column = size // 2 if column is None else column
    arr = np.full((size, size), low)
    arr[:, column:] = high
    return GrayImage(arr)


def two_region_phantom(size: int = 64, background: float = 50.0,
                       foreground: float = 200.0) -> GrayImage:
    """Piecewise-constant phantom: a centered disk on a flat background."""
    c = (size - 1) / 2.0
    y, x = np.mgrid[0:size, 0:size]
    disk = (x - c) ** 2 + (y - c) ** 2 <= (0.3 * size) ** 2
    arr = np.full((size, size), background)
    arr[disk] = foreground
    return GrayImage(arr)


def smooth_blobs(size: int = 64, seed: int = 0) -> GrayImage:
    """Smooth random field: a few seeded Gaussian bumps, for generic tests."""
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    arr = np.full((size, size), 60.0)
    for _ in range(4):
        cx, cy = rng.uniform(0.2 * size, 0.8 * size, size=2)
        amp = rng.uniform(30.0, 45.0)
        sig = rng.uniform(size / 10.0, size / 5.0)
        arr += amp * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * sig * sig))
    return GrayImage(np.clip(arr, 0.0, 255.0))
