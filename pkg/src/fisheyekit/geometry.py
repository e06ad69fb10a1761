"""Radial polynomial distortion model and the point maps between image frames.

The model relates the distance of a pixel from the optical center in the
distorted frame (r_d) to the distance of its counterpart from the optical
center in the rectified frame (r_c) through an odd polynomial with four
coefficients:

    r_c = k1*r_d + k2*r_d^3 + k3*r_d^5 + k4*r_d^7

Radii are dimensionless: pixel distances are divided by ``r_norm`` (by
default half the short side of the frame, so the inscribed-circle edge sits
at r = 1 and the corners of a square frame near r = sqrt(2)).

Coordinate convention: x is the column index increasing rightward, y the row
index increasing downward, pixel centers at integer coordinates. The
geometric center of a 256x256 frame is (127.5, 127.5).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConvergenceError, NoBracketError, NotMonotoneError


class Point2(NamedTuple):
    """Continuous pixel position (x = column, y = row)."""

    x: float
    y: float


@dataclass(frozen=True)
class RadialParams:
    """Coefficients of the odd radial polynomial (r^1, r^3, r^5, r^7 terms)."""

    k1: float
    k2: float = 0.0
    k3: float = 0.0
    k4: float = 0.0

    def __post_init__(self):
        for name in ("k1", "k2", "k3", "k4"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not all(np.isfinite(c) for c in self.coeffs):
            raise ValueError(f"coefficients must be finite, got {self.coeffs}")
        if self.k1 <= 0:
            raise ValueError(f"k1 must be positive, got {self.k1}")

    @property
    def coeffs(self) -> tuple[float, float, float, float]:
        return (self.k1, self.k2, self.k3, self.k4)


def eval_radial(params: RadialParams, r_d):
    """Evaluate r_c = k1*r + k2*r^3 + k3*r^5 + k4*r^7 (Horner form in r^2).

    Accepts a scalar or an ndarray of nonnegative radii; returns the same
    shape.
    """
    k1, k2, k3, k4 = params.coeffs
    r = np.asarray(r_d, dtype=np.float64)
    r2 = r * r
    out = r * (k1 + r2 * (k2 + r2 * (k3 + r2 * k4)))
    return float(out) if out.ndim == 0 else out


def radial_slope(params: RadialParams, r_d):
    """Derivative of the radial profile: k1 + 3*k2*r^2 + 5*k3*r^4 + 7*k4*r^6."""
    k1, k2, k3, k4 = params.coeffs
    r = np.asarray(r_d, dtype=np.float64)
    r2 = r * r
    out = k1 + r2 * (3.0 * k2 + r2 * (5.0 * k3 + r2 * (7.0 * k4)))
    return float(out) if out.ndim == 0 else out


def find_monotone_violation(params: RadialParams, r_max: float, n_probe: int = 1024):
    """Return the first probed radius in [0, r_max] where the slope is <= 0.

    Returns None when the profile is strictly increasing on the whole probe
    grid.
    """
    if r_max <= 0:
        raise ValueError(f"r_max must be positive, got {r_max}")
    if n_probe < 2:
        raise ValueError(f"n_probe must be at least 2, got {n_probe}")
    radii = np.linspace(0.0, r_max, n_probe)
    bad = radial_slope(params, radii) <= 0.0
    if not bad.any():
        return None
    return float(radii[int(np.argmax(bad))])


def validate_monotone(params: RadialParams, r_max: float, n_probe: int = 1024) -> None:
    """Raise NotMonotoneError if the profile is not strictly increasing on [0, r_max]."""
    violation = find_monotone_violation(params, r_max, n_probe)
    if violation is not None:
        raise NotMonotoneError(violation)


def invert_radial(
    params: RadialParams,
    r_c,
    *,
    r_hi: float | None = None,
    tol: float = 1e-9,
    max_iter: int = 64,
    n_probe: int = 1024,
    validate: bool = True,
):
    """Solve eval_radial(params, r_d) = r_c for r_d on the bracket [0, r_hi].

    Uses Newton iterations safeguarded by bisection inside the bracket; the
    result satisfies |eval_radial(r_d) - r_c| <= tol. When ``r_hi`` is None a
    bracket is grown automatically starting from max(r_c)/k1, which is exact
    for profiles with nonnegative coefficients; pass an explicit ``r_hi`` for
    profiles that stop increasing beyond the frame radius.

    Raises:
        NoBracketError: r_c exceeds the profile value at the bracket end.
        NotMonotoneError: the profile is not strictly increasing on the bracket.
        ConvergenceError: the residual tolerance was not reached (not expected
            for a valid bracket).
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    rc = np.asarray(r_c, dtype=np.float64)
    if np.any(rc < 0):
        raise ValueError("r_c must be nonnegative")
    scalar = rc.ndim == 0
    rc_flat = np.atleast_1d(rc).ravel().copy()
    rc_max = float(rc_flat.max()) if rc_flat.size else 0.0

    if r_hi is None:
        hi = max(1.0, rc_max / params.k1)
        grown = False
        for _ in range(64):
            if eval_radial(params, hi) >= rc_max:
                grown = True
                break
            hi *= 2.0
        if not grown:
            raise NoBracketError(
                f"no bracket found for r_c={rc_max:.6g}; profile may not reach it"
            )
    else:
        hi = float(r_hi)
        if rc_max > eval_radial(params, hi):
            raise NoBracketError(
                f"r_c={rc_max:.6g} exceeds profile value at r_hi={hi:.6g}"
            )
    if validate:
        validate_monotone(params, hi, n_probe)

    lo = np.zeros_like(rc_flat)
    hi_arr = np.full_like(rc_flat, hi)
    r = np.clip(rc_flat / params.k1, 0.0, hi)
    g = eval_radial(params, r) - rc_flat
    active = np.abs(g) > tol
    for _ in range(max_iter):
        if not active.any():
            break
        above = active & (g > 0)
        below = active & (g < 0)
        hi_arr[above] = r[above]
        lo[below] = r[below]
        slope = radial_slope(params, r)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = r - g / slope
        ok = active & np.isfinite(newton) & (newton > lo) & (newton < hi_arr)
        midpoint = 0.5 * (lo + hi_arr)
        r = np.where(ok, newton, np.where(active, midpoint, r))
        g = eval_radial(params, r) - rc_flat
        active = np.abs(g) > tol
    if active.any():
        raise ConvergenceError(
            f"inversion residual above tol={tol} after {max_iter} iterations"
        )

    if scalar:
        return float(r[0])
    return r.reshape(rc.shape)


@dataclass(frozen=True)
class CameraModel:
    """Radial distortion camera: polynomial coefficients plus frame geometry.

    ``center_d`` is the optical center in the distorted frame, ``center_c``
    its counterpart in the rectified frame, and ``r_norm`` the pixel length
    that normalizes radial distances before the polynomial is applied.
    """

    params: RadialParams
    center_d: Point2
    center_c: Point2
    r_norm: float

    def __post_init__(self):
        object.__setattr__(self, "center_d", Point2(*map(float, self.center_d)))
        object.__setattr__(self, "center_c", Point2(*map(float, self.center_c)))
        object.__setattr__(self, "r_norm", float(self.r_norm))
        for p in (self.center_d, self.center_c):
            if not (np.isfinite(p.x) and np.isfinite(p.y)):
                raise ValueError(f"optical center must be finite, got {p}")
        if not (np.isfinite(self.r_norm) and self.r_norm > 0):
            raise ValueError(f"r_norm must be positive, got {self.r_norm}")

    @classmethod
    def central(
        cls, params: RadialParams, height: int, width: int, r_norm: float | None = None
    ) -> "CameraModel":
        """Camera with the optical center at the geometric center of the frame."""
        center = Point2((width - 1) / 2.0, (height - 1) / 2.0)
        if r_norm is None:
            r_norm = min(height, width) / 2.0
        return cls(params=params, center_d=center, center_c=center, r_norm=r_norm)

    def corner_radius(self, height: int, width: int) -> float:
        """Largest normalized distance from center_d to a corner of the frame."""
        xs = np.array([0.0, width - 1.0])
        ys = np.array([0.0, height - 1.0])
        dx = np.abs(xs - self.center_d.x).max()
        dy = np.abs(ys - self.center_d.y).max()
        return float(np.hypot(dx, dy) / self.r_norm)

    def validate_for_frame(self, height: int, width: int, n_probe: int = 1024) -> None:
        """Check the profile is strictly increasing out to the frame corners."""
        validate_monotone(self.params, self.corner_radius(height, width), n_probe)


def _as_points(p) -> np.ndarray:
    pts = np.asarray(p, dtype=np.float64)
    if pts.shape[-1] != 2:
        raise ValueError(f"points must have a trailing axis of size 2, got {pts.shape}")
    return pts


def dist_to_rect(cam: CameraModel, p_d):
    """Map points from the distorted frame to the rectified frame.

    Accepts (..., 2) arrays of pixel positions; the ray direction from the
    optical center is preserved and the radius is pushed through the radial
    polynomial. At the optical center the scale ratio tends to k1.
    """
    pts = _as_points(p_d)
    d = pts - np.array(cam.center_d)
    r_px = np.hypot(d[..., 0], d[..., 1])
    r_d = r_px / cam.r_norm
    r_c = eval_radial(cam.params, r_d)
    at_center = r_d == 0
    ratio = np.where(at_center, cam.params.k1, r_c / np.where(at_center, 1.0, r_d))
    return np.array(cam.center_c) + d * np.asarray(ratio)[..., None]


def rect_to_dist(
    cam: CameraModel,
    p_c,
    *,
    tol: float = 1e-9,
    r_hi: float | None = None,
    n_probe: int = 1024,
):
    """Map points from the rectified frame to the distorted frame.

    The inverse of :func:`dist_to_rect`: the normalized rectified radius is
    inverted through the polynomial and the ray from the optical center is
    rescaled. At the optical center the scale ratio tends to 1/k1.
    """
    pts = _as_points(p_c)
    d = pts - np.array(cam.center_c)
    r_px = np.hypot(d[..., 0], d[..., 1])
    r_c = r_px / cam.r_norm
    r_d = invert_radial(cam.params, r_c, tol=tol, r_hi=r_hi, n_probe=n_probe)
    at_center = r_c == 0
    ratio = np.where(
        at_center, 1.0 / cam.params.k1, np.asarray(r_d) / np.where(at_center, 1.0, r_c)
    )
    return np.array(cam.center_d) + d * ratio[..., None]
