"""Orthonormal 2D transforms: unitary Fourier, DCT-II, and multilevel Haar.

All three preserve the l2 norm exactly (up to roundoff), which the
measurement operator relies on: selecting coefficients of an orthonormal
transform gives a sensing matrix with unit Lipschitz constant.
"""

from __future__ import annotations

import numpy as np
from scipy.fft import dctn, idctn

from .imgio import GrayImage

__all__ = [
    "forward2d",
    "inverse2d",
    "transform_forward",
    "transform_inverse",
    "haar_forward",
    "haar_inverse",
    "DOMAINS",
]

DOMAINS = ("fourier", "dct", "haar")

_SQRT2 = np.sqrt(2.0)


def _haar_schedule(h: int, w: int) -> list[tuple[int, int, bool, bool]]:
    # halve each axis while its current block length is even; an odd length
    # stops further levels along that axis
    sched = []
    ch, cw = h, w
    while True:
        do_r = ch >= 2 and ch % 2 == 0
        do_c = cw >= 2 and cw % 2 == 0
        if not (do_r or do_c):
            return sched
        sched.append((ch, cw, do_r, do_c))
        if do_r:
            ch //= 2
        if do_c:
            cw //= 2


def _haar_step_rows(block: np.ndarray) -> np.ndarray:
    s = (block[0::2] + block[1::2]) / _SQRT2
    d = (block[0::2] - block[1::2]) / _SQRT2
    return np.concatenate([s, d], axis=0)


def _haar_unstep_rows(block: np.ndarray) -> np.ndarray:
    half = block.shape[0] // 2
    s, d = block[:half], block[half:]
    out = np.empty_like(block)
    out[0::2] = (s + d) / _SQRT2
    out[1::2] = (s - d) / _SQRT2
    return out


def haar_forward(arr: np.ndarray) -> np.ndarray:
    """Multilevel orthonormal 2D Haar transform, same shape as the input."""
    a = np.array(arr, dtype=np.float64)
    for ch, cw, do_r, do_c in _haar_schedule(*a.shape):
        if do_r:
            a[:ch, :cw] = _haar_step_rows(a[:ch, :cw])
        if do_c:
            a[:ch, :cw] = _haar_step_rows(a[:ch, :cw].T).T
    return a


def haar_inverse(arr: np.ndarray) -> np.ndarray:
    a = np.array(arr, dtype=np.float64)
    for ch, cw, do_r, do_c in reversed(_haar_schedule(*a.shape)):
        if do_c:
            a[:ch, :cw] = _haar_unstep_rows(a[:ch, :cw].T).T
        if do_r:
            a[:ch, :cw] = _haar_unstep_rows(a[:ch, :cw])
    return a


def forward2d(arr: np.ndarray, domain: str) -> np.ndarray:
    """2D orthonormal analysis of a real array; complex for 'fourier'."""
    if domain == "fourier":
        return np.fft.fft2(arr, norm="ortho")
    if domain == "dct":
        return dctn(arr, type=2, norm="ortho")
    if domain == "haar":
        return haar_forward(arr)
    raise ValueError(f"unsupported transform domain {domain!r}")


def inverse2d(coeffs: np.ndarray, domain: str) -> np.ndarray:
    """2D orthonormal synthesis; real part returned for 'fourier'."""
    if domain == "fourier":
        return np.fft.ifft2(coeffs, norm="ortho").real
    if domain == "dct":
        return idctn(coeffs, type=2, norm="ortho")
    if domain == "haar":
        return haar_inverse(np.asarray(coeffs, dtype=np.float64))
    raise ValueError(f"unsupported transform domain {domain!r}")


def transform_forward(img: GrayImage, domain: str) -> np.ndarray:
    """Flattened coefficient vector (length width*height) of the image."""
    return forward2d(img.pixels, domain).reshape(-1)


def transform_inverse(coeffs, dims: tuple[int, int], domain: str,
                      precision_bits: int = 8) -> GrayImage:
    """Invert a flattened coefficient vector back to an image.

    dims is (height, width). Output intensities are clipped to the valid
    range; for coefficients of a real image this moves values by roundoff
    only, keeping inverse(forward(img)) within 1e-10 of img.
    """
    h, w = dims
    coeffs = np.asarray(coeffs)
    if coeffs.size != h * w:
        raise ValueError(f"coefficient count {coeffs.size} != {h}x{w}")
    arr = inverse2d(coeffs.reshape(h, w), domain)
    peak = float(2**precision_bits - 1)
    return GrayImage(np.clip(arr, 0.0, peak), precision_bits)
