"""Supervision labels: distortion vector maps and backward flow maps.

A distortion vector map (DVM) stores, per pixel of a distorted image, a
2-vector whose magnitude is the local distortion ratio r_d/r_c and whose
direction points radially from the optical center toward the pixel. The map
is invariant under cropping and uniform rescaling of the image plane, which
is what makes it usable for images whose optical center is not at the
geometric center.

A flow map stores, per pixel of the rectified image, the absolute source
coordinates in the distorted image; rectification is bilinear sampling of
the distorted image through it.

Orientation convention: DVM vectors point outward (optical center -> pixel).
The distortion-free label produced by :func:`unit_dvm` uses the same
outward orientation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidTransformError
from .geometry import CameraModel, eval_radial, rect_to_dist
from .interp import bilinear_at


def _check_map_data(data: np.ndarray) -> np.ndarray:
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 3 or data.shape[2] != 2:
        raise ValueError(f"map data must have shape (H, W, 2), got {data.shape}")
    if data.shape[0] < 1 or data.shape[1] < 1:
        raise ValueError(f"map must be at least 1x1, got {data.shape}")
    if not np.isfinite(data).all():
        raise ValueError("map data must be finite")
    return data


@dataclass(frozen=True, eq=False)
class DistortionVectorMap:
    """(H, W, 2) grid of distortion vectors; channel 0 is vx, channel 1 is vy."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _check_map_data(self.data))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.data[..., 0], self.data[..., 1])


@dataclass(frozen=True, eq=False)
class FlowMap:
    """(H, W, 2) grid of absolute source coordinates; channel 0 is fx, channel 1 is fy."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _check_map_data(self.data))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def _pixel_grid(height: int, width: int):
    xx, yy = np.meshgrid(
        np.arange(width, dtype=np.float64), np.arange(height, dtype=np.float64)
    )
    return xx, yy


def compute_dvm(cam: CameraModel, height: int, width: int) -> DistortionVectorMap:
    """Distortion vector map of a distorted image generated by ``cam``.

    At every pixel p != center_d the vector has magnitude r_d/r_c and points
    along p - center_d; the exact optical-center pixel (when it falls on a
    pixel center) holds the zero vector.
    """
    cam.validate_for_frame(height, width)
    xx, yy = _pixel_grid(height, width)
    dx = xx - cam.center_d.x
    dy = yy - cam.center_d.y
    r_px = np.hypot(dx, dy)
    at_center = r_px == 0
    r_d = r_px / cam.r_norm
    r_c = eval_radial(cam.params, r_d)
    ratio = r_d / np.where(at_center, 1.0, r_c)
    scale = ratio / np.where(at_center, 1.0, r_px)
    return DistortionVectorMap(np.stack((dx * scale, dy * scale), axis=-1))


def unit_dvm(height: int, width: int) -> DistortionVectorMap:
    """Distortion-free label: unit vectors radial from the geometric center.

    Vectors point outward (center -> pixel), matching the orientation of
    :func:`compute_dvm`; the center pixel (when it exists) is zero.
    """
    xx, yy = _pixel_grid(height, width)
    dx = xx - (width - 1) / 2.0
    dy = yy - (height - 1) / 2.0
    r = np.hypot(dx, dy)
    inv = 1.0 / np.where(r == 0, 1.0, r)
    return DistortionVectorMap(np.stack((dx * inv, dy * inv), axis=-1))


def compute_backward_flow(
    cam: CameraModel, height: int, width: int, *, tol: float = 1e-9
) -> FlowMap:
    """Backward flow: each rectified pixel (u, v) maps to its source in the distorted image."""
    xx, yy = _pixel_grid(height, width)
    positions = np.stack((xx, yy), axis=-1)
    return FlowMap(rect_to_dist(cam, positions, tol=tol))


def identity_flow(height: int, width: int) -> FlowMap:
    """Flow of a distortion-free image: every pixel samples its own coordinates."""
    xx, yy = _pixel_grid(height, width)
    return FlowMap(np.stack((xx, yy), axis=-1))


@dataclass(frozen=True)
class ViewTransform:
    """Square crop plus bilinear resize that turns a central sample into a deviated one.

    Output pixel q samples the source at crop origin + q/scale with
    scale = (out_side - 1) / (crop_side - 1), so the crop's corner pixels map
    exactly onto the output's corner pixels.
    """

    crop_x: int
    crop_y: int
    crop_side: int
    out_side: int

    def __post_init__(self):
        if self.crop_side < 2 or self.out_side < 2:
            raise InvalidTransformError(
                f"crop_side and out_side must be >= 2, got {self.crop_side}, {self.out_side}"
            )
        if self.crop_x < 0 or self.crop_y < 0:
            raise InvalidTransformError(
                f"crop origin must be nonnegative, got ({self.crop_x}, {self.crop_y})"
            )

    @property
    def scale(self) -> float:
        return (self.out_side - 1) / (self.crop_side - 1)

    def validate_for(self, height: int, width: int) -> None:
        if self.crop_x + self.crop_side > width or self.crop_y + self.crop_side > height:
            raise InvalidTransformError(
                f"crop ({self.crop_x}, {self.crop_y}, side {self.crop_side}) "
                f"exceeds frame {width}x{height}"
            )

    def source_positions(self):
        """(out, out) grids of source x and y sample positions."""
        steps = np.arange(self.out_side, dtype=np.float64) / self.scale
        xs = self.crop_x + steps
        ys = self.crop_y + steps
        return np.meshgrid(xs, ys)

    def map_point(self, x: float, y: float) -> tuple[float, float]:
        """Source-frame point -> output-frame point."""
        return ((x - self.crop_x) * self.scale, (y - self.crop_y) * self.scale)


def _resample_map(data: np.ndarray, t: ViewTransform) -> np.ndarray:
    t.validate_for(data.shape[0], data.shape[1])
    px, py = t.source_positions()
    values, valid = bilinear_at(data, px, py)
    assert valid.all(), "crop sample positions must stay inside the source frame"
    return values


def transform_dvm(src: DistortionVectorMap, t: ViewTransform) -> DistortionVectorMap:
    """Crop-and-resize a DVM; vector values are carried over unchanged.

    Both the magnitude ratio and the radial direction are invariant under a
    uniform scale plus translation of the image plane, so only the geometry
    is resampled (bilinearly, per component).
    """
    return DistortionVectorMap(_resample_map(src.data, t))


def transform_flow(src: FlowMap, t: ViewTransform) -> FlowMap:
    """Crop-and-resize a flow map, remapping values into the new frame.

    Flow entries are absolute coordinates of the source image, so on top of
    the geometric resampling each value is shifted by the crop origin and
    multiplied by the resize scale.
    """
    values = _resample_map(src.data, t)
    values[..., 0] = (values[..., 0] - t.crop_x) * t.scale
    values[..., 1] = (values[..., 1] - t.crop_y) * t.scale
    return FlowMap(values)
