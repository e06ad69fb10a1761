"""Bilinear sampling primitives shared by the warping, label, and rectification code."""

from __future__ import annotations

import numpy as np


def bilinear_at(src: np.ndarray, x: np.ndarray, y: np.ndarray):
    """Sample ``src`` at continuous positions with four-neighbor area weights.

    Args:
        src: (H, W) or (H, W, C) float array.
        x, y: broadcast-compatible arrays of sample positions (x = column,
            y = row, pixel centers at integer coordinates).

    Returns:
        (values, valid): interpolated values with the channel axis of ``src``
        appended to the position shape, and a boolean mask that is True where
        the position lies inside the closed box [0, W-1] x [0, H-1]. Values at
        invalid positions are computed from clamped neighbors and should be
        replaced by the caller.

    Positions exactly on the boundary are valid; the weights of the missing
    neighbors there are exactly zero, so clamping does not change the result.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    h, w = src.shape[:2]
    valid = (x >= 0) & (x <= w - 1) & (y >= 0) & (y <= h - 1)

    x0 = np.floor(x)
    y0 = np.floor(y)
    fx = x - x0
    fy = y - y0
    ix0 = np.clip(x0.astype(np.int64), 0, w - 1)
    iy0 = np.clip(y0.astype(np.int64), 0, h - 1)
    ix1 = np.clip(ix0 + 1, 0, w - 1)
    iy1 = np.clip(iy0 + 1, 0, h - 1)

    w00 = (1.0 - fx) * (1.0 - fy)
    w10 = fx * (1.0 - fy)
    w01 = (1.0 - fx) * fy
    w11 = fx * fy
    if src.ndim == 3:
        w00, w10, w01, w11 = (wgt[..., None] for wgt in (w00, w10, w01, w11))

    values = (
        w00 * src[iy0, ix0]
        + w10 * src[iy0, ix1]
        + w01 * src[iy1, ix0]
        + w11 * src[iy1, ix1]
    )
    return values, valid


def to_unit(img: np.ndarray) -> np.ndarray:
    """Promote an 8-bit image to unit-interval float64 scalars."""
    return np.asarray(img, dtype=np.float64) / 255.0


def to_uint8(unit: np.ndarray) -> np.ndarray:
    """Quantize unit-interval scalars back to 8-bit, rounding half away from zero."""
    scaled = np.asarray(unit, dtype=np.float64) * 255.0
    return np.clip(np.floor(scaled + 0.5), 0.0, 255.0).astype(np.uint8)
