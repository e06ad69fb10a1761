"""Synthetic dataset construction: central renders, deviated crops, and mixing.

A dataset is reproducible from (master seed, config, source list) alone.
Every sample draws all of its randomness from a per-sample generator seeded
by ``derive_seed(master_seed, index)``, so results do not depend on worker
count or scheduling; the distortion-free quota is applied exactly by count,
while the deviation decision is an independent per-sample coin flip.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import sqrt
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FisheyeError, InsufficientSourcesError, RejectionExhaustedError
from .geometry import CameraModel, RadialParams, dist_to_rect, find_monotone_violation
from .interp import bilinear_at, to_uint8, to_unit
from .io_formats import SampleRecord, load_image, save_image, write_manifest, write_map
from .labels import (
    DistortionVectorMap,
    FlowMap,
    ViewTransform,
    compute_backward_flow,
    compute_dvm,
    identity_flow,
    transform_dvm,
    transform_flow,
    unit_dvm,
)

# Monotonicity must hold out to the corner of a square frame.
MONOTONE_SPAN = sqrt(2.0)


@dataclass(frozen=True)
class ParamRanges:
    """Closed sampling intervals for the four radial coefficients.

    The defaults produce visible barrel distortion at the frame edge while
    keeping the polynomial easy to invert; they are configurable because no
    canonical ranges exist.
    """

    k1: tuple[float, float] = (0.8, 1.2)
    k2: tuple[float, float] = (0.0, 0.5)
    k3: tuple[float, float] = (0.0, 0.3)
    k4: tuple[float, float] = (0.0, 0.2)
    max_attempts: int = 100

    def __post_init__(self):
        for name in ("k1", "k2", "k3", "k4"):
            lo, hi = getattr(self, name)
            if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
                raise ValueError(f"invalid interval for {name}: ({lo}, {hi})")
        if self.k1[0] <= 0:
            raise ValueError(f"k1 interval must be strictly positive, got {self.k1}")
        if self.max_attempts < 1:
            raise ValueError(f"max_attempts must be >= 1, got {self.max_attempts}")


@dataclass(frozen=True)
class DatasetConfig:
    """Knobs of one dataset build."""

    count: int
    seed: int
    resolution: int = 256
    deviation_prob: float = 0.7
    free_fraction: float = 0.2
    crop_ratio: tuple[float, float] = (0.4, 0.9)
    ranges: ParamRanges = field(default_factory=ParamRanges)

    def __post_init__(self):
        if self.count < 0:
            raise ValueError(f"count must be nonnegative, got {self.count}")
        if self.resolution < 32:
            raise ValueError(f"resolution must be >= 32, got {self.resolution}")
        if not 0.0 <= self.deviation_prob <= 1.0:
            raise ValueError(f"deviation_prob must be in [0, 1], got {self.deviation_prob}")
        if not 0.0 <= self.free_fraction <= 1.0:
            raise ValueError(f"free_fraction must be in [0, 1], got {self.free_fraction}")
        lo, hi = self.crop_ratio
        if not (0.0 < lo <= hi <= 1.0):
            raise ValueError(f"crop_ratio must satisfy 0 < lo <= hi <= 1, got {self.crop_ratio}")


def derive_seed(master_seed: int, token) -> int:
    """Stable per-sample seed: first 8 little-endian bytes of SHA-256("master:token")."""
    digest = hashlib.sha256(f"{master_seed}:{token}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def sample_params(rng: np.random.Generator, ranges: ParamRanges) -> RadialParams:
    """Draw coefficients uniformly per interval, rejecting non-monotone sets.

    Monotonicity is probed on [0, sqrt(2)], the corner radius of a square
    frame, so accepted draws are valid for any camera centered in it.
    """
    for _ in range(ranges.max_attempts):
        params = RadialParams(
            k1=rng.uniform(*ranges.k1),
            k2=rng.uniform(*ranges.k2),
            k3=rng.uniform(*ranges.k3),
            k4=rng.uniform(*ranges.k4),
        )
        if find_monotone_violation(params, MONOTONE_SPAN) is None:
            return params
    raise RejectionExhaustedError(
        f"no monotone draw within {ranges.max_attempts} attempts"
    )


def central_camera(resolution: int, params: RadialParams) -> CameraModel:
    """Camera whose optical center sits at the geometric center of a square frame."""
    return CameraModel.central(params, resolution, resolution)


def resample_image(img: np.ndarray, t: ViewTransform) -> np.ndarray:
    """Crop-and-resize an 8-bit image with bilinear interpolation."""
    t.validate_for(img.shape[0], img.shape[1])
    px, py = t.source_positions()
    values, valid = bilinear_at(to_unit(img), px, py)
    assert valid.all()
    return to_uint8(values)


def prepare_source(img: np.ndarray, resolution: int) -> np.ndarray:
    """Center-crop a source image to a square and resize it to the working frame."""
    h, w = img.shape[:2]
    if h == resolution and w == resolution:
        return img
    side = min(h, w)
    t = ViewTransform(
        crop_x=(w - side) // 2, crop_y=(h - side) // 2, crop_side=side, out_side=resolution
    )
    return resample_image(img, t)


def render_fisheye(src: np.ndarray, cam: CameraModel) -> np.ndarray:
    """Render the distorted image of a distortion-free source by backward warping.

    Each output pixel samples the source at its rectified-frame counterpart;
    positions outside the source yield (0, 0, 0), which produces the
    characteristic dark border.
    """
    h, w = src.shape[:2]
    cam.validate_for_frame(h, w)
    xx, yy = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    positions = dist_to_rect(cam, np.stack((xx, yy), axis=-1))
    values, valid = bilinear_at(to_unit(src), positions[..., 0], positions[..., 1])
    values[~valid] = 0.0
    return to_uint8(values)


def make_deviated(
    central: tuple[np.ndarray, DistortionVectorMap, FlowMap],
    rng: np.random.Generator,
    cfg: DatasetConfig,
) -> tuple[np.ndarray, DistortionVectorMap, FlowMap, ViewTransform]:
    """Turn a central sample into a deviated one by a random square crop.

    The crop side ratio and position are drawn uniformly with the crop kept
    fully inside the frame; image and labels go through the same geometry.
    """
    img, dvm, flow = central
    size = img.shape[0]
    if img.shape[1] != size or (dvm.height, dvm.width) != (size, size) or (
        flow.height,
        flow.width,
    ) != (size, size):
        raise ValueError("central sample parts must share one square frame")
    ratio = rng.uniform(*cfg.crop_ratio)
    side = int(np.clip(round(ratio * size), 2, size))
    max_off = size - side
    crop_x = int(rng.integers(0, max_off + 1))
    crop_y = int(rng.integers(0, max_off + 1))
    t = ViewTransform(crop_x=crop_x, crop_y=crop_y, crop_side=side, out_side=cfg.resolution)
    return (
        resample_image(img, t),
        transform_dvm(dvm, t),
        transform_flow(flow, t),
        t,
    )


def roundtrip_psnr(src: np.ndarray, cam: CameraModel) -> float:
    """Render a fisheye image and rectify it back; PSNR against the source.

    The comparison is restricted to the jointly valid region: pixels whose
    flow target lies inside the distorted frame and whose sampled
    neighborhood was itself rendered from in-bounds source positions.
    """
    from .metrics import psnr
    from .rectify import bilinear_sample, valid_mask

    h, w = src.shape[:2]
    rendered = render_fisheye(src, cam)
    flow = compute_backward_flow(cam, h, w)
    rectified = bilinear_sample(rendered, flow)

    xx, yy = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    forward = dist_to_rect(cam, np.stack((xx, yy), axis=-1))
    render_valid = (
        (forward[..., 0] >= 0)
        & (forward[..., 0] <= w - 1)
        & (forward[..., 1] >= 0)
        & (forward[..., 1] <= h - 1)
    ).astype(np.float64)
    sampled, in_bounds = bilinear_at(render_valid, flow.data[..., 0], flow.data[..., 1])
    joint = valid_mask(flow, src.shape) & in_bounds & (sampled >= 1.0 - 1e-12)
    return psnr(rectified, src, mask=joint)


def free_indices(cfg: DatasetConfig) -> set[int]:
    """Deterministic choice of which sample indices are distortion-free (exact quota)."""
    n_free = int(round(cfg.free_fraction * cfg.count))
    rng = np.random.default_rng(derive_seed(cfg.seed, "kinds"))
    return set(int(i) for i in rng.permutation(cfg.count)[:n_free])


def plan_kinds(cfg: DatasetConfig) -> list[str]:
    """Kind of every sample index, replaying exactly the builders' random draws."""
    frees = free_indices(cfg)
    kinds = []
    for i in range(cfg.count):
        if i in frees:
            kinds.append("distortion_free")
            continue
        rng = np.random.default_rng(derive_seed(cfg.seed, i))
        kinds.append("deviated" if rng.random() < cfg.deviation_prob else "central")
    return kinds


def _build_sample(task) -> SampleRecord:
    index, source, kind, cfg, out_dir = task
    out = Path(out_dir)
    seed = derive_seed(cfg.seed, index)
    rng = np.random.default_rng(seed)
    res = cfg.resolution

    prepared = prepare_source(load_image(source), res)
    transform = None
    params = None
    if kind == "distortion_free":
        img = prepared
        dvm = unit_dvm(res, res)
        flow = identity_flow(res, res)
    else:
        # Draw order is fixed: deviation coin, coefficients, then crop geometry.
        deviated = rng.random() < cfg.deviation_prob
        assert deviated == (kind == "deviated")
        params = sample_params(rng, cfg.ranges)
        cam = central_camera(res, params)
        img = render_fisheye(prepared, cam)
        dvm = compute_dvm(cam, res, res)
        flow = compute_backward_flow(cam, res, res)
        if deviated:
            img, dvm, flow, transform = make_deviated((img, dvm, flow), rng, cfg)

    image_name = f"{index:06d}_image.png"
    dvm_name = f"{index:06d}_dvm.rfm"
    flow_name = f"{index:06d}_flow.rfm"
    save_image(img, out / image_name)
    write_map(dvm, out / dvm_name)
    write_map(flow, out / flow_name)
    return SampleRecord(
        id=index,
        kind=kind,
        source=str(source),
        seed=seed,
        params=params,
        transform=transform,
        image=image_name,
        dvm=dvm_name,
        flow=flow_name,
    )


def build_dataset(
    cfg: DatasetConfig,
    sources: Sequence[str | Path],
    out_dir: str | Path,
    workers: int = 1,
) -> list[SampleRecord]:
    """Emit ``cfg.count`` labeled samples plus a manifest into ``out_dir``.

    Sources are recycled round-robin when there are fewer than ``count``.
    The output is byte-identical for identical (seed, config, sources)
    regardless of ``workers``.
    """
    if not sources:
        raise InsufficientSourcesError("at least one source image is required")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    kinds = plan_kinds(cfg)
    tasks = [
        (i, str(sources[i % len(sources)]), kinds[i], cfg, str(out))
        for i in range(cfg.count)
    ]

    records: list[SampleRecord] = []
    if workers <= 1:
        for task in tasks:
            records.append(_run_task(task))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_run_task, task): task[0] for task in tasks}
            results = {}
            for future, index in futures.items():
                results[index] = future.result()
            records = [results[i] for i in sorted(results)]
    write_manifest(records, out / "manifest.jsonl")
    return records


def _run_task(task) -> SampleRecord:
    try:
        return _build_sample(task)
    except FisheyeError:
        raise
    except Exception as e:
        raise FisheyeError(f"sample {task[0]} ({task[1]}): {e}") from e
