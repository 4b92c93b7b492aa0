"""Image preprocessing chain: crop, grayscale, blur, adaptive threshold.

The chain turns a raw camera frame into the 128x128 binary edge image the
classifier consumes.
"""

from __future__ import annotations

import numpy as np

from . import kernels

CROP_SIZE = 128
BLUR_WINDOW = 3
BLUR_SIGMA = 7.0
THRESHOLD_WINDOW = 11
THRESHOLD_C = 2.0
# common OpenCV-style rule for a Gaussian sigma implied by the window size
THRESHOLD_SIGMA = 0.3 * ((THRESHOLD_WINDOW - 1) / 2 - 1) + 0.8

GRAY_WEIGHTS = (0.299, 0.587, 0.114)  # ITU-R 601


class SizeError(Exception):
    pass


def gaussian_weights(window: int, sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian taps; the 2-D kernel is their outer product."""
    d = np.arange(window, dtype=np.float64) - window // 2
    w = np.exp(-(d * d) / (2.0 * sigma * sigma))
    return w / w.sum()


def crop_center(img: np.ndarray, size: int = CROP_SIZE) -> np.ndarray:
    h, w = img.shape[:2]
    if h < size or w < size:
        raise SizeError(f"image {w}x{h} smaller than crop {size}x{size}")
    x0 = (w - size) // 2
    y0 = (h - size) // 2
    return img[y0:y0 + size, x0:x0 + size]


def to_grayscale(rgb: np.ndarray) -> np.ndarray:
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected HxWx3, got {rgb.shape}")
    r, g, b = GRAY_WEIGHTS
    return (r * rgb[:, :, 0] + g * rgb[:, :, 1] + b * rgb[:, :, 2])


def gaussian_blur(img: np.ndarray, window: int = BLUR_WINDOW,
                  sigma: float = BLUR_SIGMA) -> np.ndarray:
    weights = gaussian_weights(window, sigma)
    return kernels.sepfilter(np.ascontiguousarray(img, dtype=np.float64), weights)


def adaptive_threshold(img: np.ndarray, window: int = THRESHOLD_WINDOW,
                       c: float = THRESHOLD_C,
                       sigma: float = THRESHOLD_SIGMA) -> np.ndarray:
    """Binarize against a Gaussian-weighted local mean.

    A pixel is foreground (1) when it sits at least `c` below its local mean,
    i.e. dark transitions count as edges.
    """
    img = np.ascontiguousarray(img, dtype=np.float64)
    local_mean = kernels.sepfilter(img, gaussian_weights(window, sigma))
    return (img <= local_mean - c).astype(np.float64)


def preprocess(raw: np.ndarray) -> np.ndarray:
    """Full chain from a raw frame to the 128x128 {0,1} network input."""
    img = crop_center(raw)
    if img.ndim == 3:
        img = to_grayscale(img)
    return adaptive_threshold(gaussian_blur(img))
