"""Image rectification by bilinear sampling through a backward flow map."""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatchError
from .interp import bilinear_at, to_uint8, to_unit
from .labels import FlowMap


def _check_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise DimensionMismatchError(f"image must have shape (H, W, 3), got {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise DimensionMismatchError(f"image must be nonempty, got {img.shape}")
    return img


def bilinear_sample(src: np.ndarray, flow: FlowMap) -> np.ndarray:
    """Sample the distorted image through the flow; out-of-range targets turn black.

    Output pixel (u, v) is the bilinear interpolation of ``src`` at
    (fx(u, v), fy(u, v)) when that point lies inside the closed box
    [0, W-1] x [0, H-1], and exactly (0, 0, 0) otherwise. Interpolation runs
    at float precision on unit-interval values and is quantized back to 8-bit
    with round-half-away-from-zero.
    """
    src = _check_image(src)
    values, valid = bilinear_at(to_unit(src), flow.data[..., 0], flow.data[..., 1])
    values[~valid] = 0.0
    return to_uint8(values)


def valid_mask(flow: FlowMap, src_shape) -> np.ndarray:
    """Boolean (H, W) mask of flow entries that land inside the source frame.

    ``src_shape`` is the (H, W[, C]) shape of the image the flow samples from.
    Evaluation code uses this to exclude the synthetic black border.
    """
    h, w = src_shape[0], src_shape[1]
    x = flow.data[..., 0]
    y = flow.data[..., 1]
    return (x >= 0) & (x <= w - 1) & (y >= 0) & (y <= h - 1)
