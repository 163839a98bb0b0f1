"""Image quality metrics: PSNR and windowed SSIM with a local map.

PSNR is 20*log10(peak/sqrt(MSE)) with peak = 2**p - 1. SSIM follows the
standard windowed form: local means, variances and covariance under an
11x11 Gaussian window (sigma 1.5), constants C1 = (k1*L)^2, C2 = (k2*L)^2.
Borders use symmetric reflection so the map has full image size and the
scalar score is the plain mean of the map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import convolve1d

from .imgio import GrayImage

__all__ = [
    "SsimParams",
    "SsimResult",
    "mse",
    "psnr",
    "ssim",
    "ssim_map_to_image",
    "PSNR_INF",
    "SSIM_MAP_SCALE",
    "SSIM_MAP_OFFSET",
]

# +inf is the distinguished "images identical" PSNR sentinel, never an overflow
PSNR_INF = math.inf

# affine rescaling used when exporting a [-1, 1] SSIM map as an 8-bit image
SSIM_MAP_SCALE = 127.5
SSIM_MAP_OFFSET = 127.5


@dataclass(frozen=True)
class SsimParams:
    """Window and stabilisation constants for SSIM."""

    window_size: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float | None = None  # None: derive 2**p - 1 from the images

    def __post_init__(self):
        if self.window_size < 3 or self.window_size % 2 == 0:
            raise ValueError("window_size must be odd and >= 3")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("k1 and k2 must be positive")
        if self.dynamic_range is not None and self.dynamic_range <= 0:
            raise ValueError("dynamic_range must be positive")


@dataclass
class SsimResult:
    mean_ssim: float
    map: np.ndarray = field(repr=False)


def _check_pair(a: GrayImage, b: GrayImage) -> None:
    if not a.same_shape(b):
        raise ValueError(
            f"image dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def mse(a: GrayImage, b: GrayImage) -> float:
    """Mean squared pixel difference."""
    _check_pair(a, b)
    d = a.pixels - b.pixels
    return float(np.mean(d * d))


def psnr(a: GrayImage, b: GrayImage) -> float:
    """Peak signal-to-noise ratio in dB; PSNR_INF when the images are equal."""
    _check_pair(a, b)
    if a.precision_bits != b.precision_bits:
        raise ValueError(
            f"precision mismatch: {a.precision_bits} vs {b.precision_bits} bits"
        )
    err = mse(a, b)
    if err == 0.0:
        return PSNR_INF
    return 20.0 * math.log10(a.peak / math.sqrt(err))


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    half = size // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _local_mean(arr: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    # separable Gaussian; 'reflect' is symmetric padding (d c b a | a b c d)
    tmp = convolve1d(arr, kernel, axis=0, mode="reflect")
    return convolve1d(tmp, kernel, axis=1, mode="reflect")


def ssim(a: GrayImage, b: GrayImage, params: SsimParams | None = None) -> SsimResult:
    """Structural similarity between a and b with its full-size local map."""
    _check_pair(a, b)
    p = params or SsimParams()
    if min(a.width, a.height) < p.window_size:
        raise ValueError(
            f"image {a.width}x{a.height} smaller than SSIM window {p.window_size}"
        )
    L = p.dynamic_range if p.dynamic_range is not None else a.peak
    c1 = (p.k1 * L) ** 2
    c2 = (p.k2 * L) ** 2
    kernel = _gaussian_kernel(p.window_size, p.sigma)

    x = a.pixels
    y = b.pixels
    mu_x = _local_mean(x, kernel)
    mu_y = _local_mean(y, kernel)
    var_x = _local_mean(x * x, kernel) - mu_x * mu_x
    var_y = _local_mean(y * y, kernel) - mu_y * mu_y
    cov_xy = _local_mean(x * y, kernel) - mu_x * mu_y

    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov_xy + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    smap = num / den
    # Cauchy-Schwarz bounds the exact value to [-1, 1]; clipping removes the
    # last-ulp cancellation spill without moving interior values
    np.clip(smap, -1.0, 1.0, out=smap)
    return SsimResult(mean_ssim=float(smap.mean()), map=smap)


def ssim_map_to_image(result: SsimResult, precision_bits: int = 8) -> GrayImage:
    """Rescale a [-1, 1] SSIM map affinely onto [0, 255] for export."""
    arr = result.map * SSIM_MAP_SCALE + SSIM_MAP_OFFSET
    return GrayImage(np.clip(arr, 0.0, float(2**precision_bits - 1)), precision_bits)
