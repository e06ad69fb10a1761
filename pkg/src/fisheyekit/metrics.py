"""PSNR and SSIM with an optional validity mask.

SSIM uses the standard Gaussian-window formulation: an 11x11 window with
sigma 1.5, stabilizers C1 = (K1*range)^2 and C2 = (K2*range)^2 with
K1 = 0.01, K2 = 0.03, variance/covariance without sample-bias correction.
Scores are computed per channel and averaged. Window statistics are taken
only at centers with a full window (at least half a window from the border);
a mask restricts which of those centers are aggregated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .errors import DimensionMismatchError, EmptyMaskError, TooSmallError


@dataclass(frozen=True)
class MetricConfig:
    """Parameters shared by the image metrics."""

    data_range: float = 255.0
    win_size: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03

    def __post_init__(self):
        if self.data_range <= 0:
            raise ValueError(f"data_range must be positive, got {self.data_range}")
        if self.win_size < 3 or self.win_size % 2 == 0:
            raise ValueError(f"win_size must be odd and >= 3, got {self.win_size}")
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError(f"K1 and K2 must be positive, got {self.k1}, {self.k2}")


DEFAULT_CONFIG = MetricConfig()


def _check_pair(a: np.ndarray, b: np.ndarray, mask):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"image shapes differ: {a.shape} vs {b.shape}")
    if a.ndim == 2:
        a = a[..., None]
        b = b[..., None]
    if a.ndim != 3:
        raise DimensionMismatchError(f"expected (H, W[, C]) images, got {a.shape}")
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != a.shape[:2]:
            raise DimensionMismatchError(
                f"mask shape {mask.shape} does not match image {a.shape[:2]}"
            )
    return a.astype(np.float64), b.astype(np.float64), mask


def psnr(a, b, cfg: MetricConfig = DEFAULT_CONFIG, mask=None) -> float:
    """Peak signal-to-noise ratio in decibels; inf when the images are equal.

    With a mask, the mean squared error runs over all channels of the
    selected pixels only.
    """
    a, b, mask = _check_pair(a, b, mask)
    diff = a - b
    sq = diff * diff
    if mask is None:
        mse = sq.mean()
    else:
        if not mask.any():
            raise EmptyMaskError("mask selects no pixels")
        mse = sq[mask].mean()
    if mse == 0:
        return float("inf")
    return float(10.0 * np.log10(cfg.data_range**2 / mse))


def _gaussian_kernel(win_size: int, sigma: float) -> np.ndarray:
    half = (win_size - 1) // 2
    offsets = np.arange(-half, half + 1, dtype=np.float64)
    kernel = np.exp(-(offsets**2) / (2.0 * sigma**2))
    return kernel / kernel.sum()


def _windowed(plane: np.ndarray, kernel: np.ndarray, pad: int) -> np.ndarray:
    # 'constant' padding feeds zeros into the border; cropping by the kernel
    # radius leaves exactly the full-window ("valid") responses.
    out = correlate1d(plane, kernel, axis=0, mode="constant")
    out = correlate1d(out, kernel, axis=1, mode="constant")
    return out[pad:-pad, pad:-pad]


def ssim(a, b, cfg: MetricConfig = DEFAULT_CONFIG, mask=None) -> float:
    """Mean structural similarity over full-window centers, in [-1, 1].

    With a mask, only window centers whose pixel is selected contribute to
    the mean; the mask uses the full image resolution.
    """
    a, b, mask = _check_pair(a, b, mask)
    h, w = a.shape[:2]
    if h < cfg.win_size or w < cfg.win_size:
        raise TooSmallError(
            f"image {h}x{w} is smaller than the {cfg.win_size}x{cfg.win_size} window"
        )
    kernel = _gaussian_kernel(cfg.win_size, cfg.sigma)
    pad = (cfg.win_size - 1) // 2
    c1 = (cfg.k1 * cfg.data_range) ** 2
    c2 = (cfg.k2 * cfg.data_range) ** 2

    center_mask = None
    if mask is not None:
        center_mask = mask[pad:-pad, pad:-pad]
        if not center_mask.any():
            raise EmptyMaskError("mask selects no full-window centers")

    scores = []
    for ch in range(a.shape[2]):
        x = a[..., ch]
        y = b[..., ch]
        mu_x = _windowed(x, kernel, pad)
        mu_y = _windowed(y, kernel, pad)
        var_x = _windowed(x * x, kernel, pad) - mu_x * mu_x
        var_y = _windowed(y * y, kernel, pad) - mu_y * mu_y
        cov = _windowed(x * y, kernel, pad) - mu_x * mu_y
        smap = ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)) / (
            (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
        )
        if center_mask is None:
            scores.append(smap.mean())
        else:
            scores.append(smap[center_mask].mean())
    return float(np.mean(scores))
