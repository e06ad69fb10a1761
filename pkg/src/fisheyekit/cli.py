"""Command-line entry points for the dataset, label, and evaluation pipeline.

Exit codes: 0 success, 1 usage or configuration error, 2 data error (or every
item of a batch failed), 3 partial failure (some items of a batch failed).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import FisheyeError
from .geometry import CameraModel, Point2, RadialParams
from .io_formats import load_image, read_map, save_image, source_paths, write_map
from .labels import compute_backward_flow, compute_dvm
from .metrics import psnr, ssim
from .rectify import bilinear_sample, valid_mask
from .synthesis import (
    DatasetConfig,
    ParamRanges,
    build_dataset,
    central_camera,
    derive_seed,
    prepare_source,
    roundtrip_psnr,
    sample_params,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PARTIAL = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="fisheyekit", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("synthesize", help="build a labeled synthetic dataset")
    p.add_argument("--config", help="JSON file with defaults for the flags below")
    p.add_argument("--count", type=int, help="number of samples")
    p.add_argument("--seed", type=int, help="master seed (required; no wall-clock default)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--sources", nargs="+", help="source image files or one directory")
    p.add_argument("--deviation-prob", type=float, dest="deviation_prob")
    p.add_argument("--free-frac", type=float, dest="free_frac")
    p.add_argument("--resolution", type=int)
    p.add_argument("--ranges", help="JSON file with coefficient sampling intervals")
    p.add_argument("--workers", type=int)
    p.add_argument("--crop-ratio", nargs=2, type=float, dest="crop_ratio")

    p = sub.add_parser("labels", help="write ground-truth maps for given coefficients")
    p.add_argument("--params", required=True, help="k1,k2,k3,k4")
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--center", help="optical center x,y in the distorted frame")
    p.add_argument("--center-rect", dest="center_rect", help="its rectified-frame counterpart")
    p.add_argument("--r-norm", type=float, dest="r_norm")
    p.add_argument("--out-dvm", dest="out_dvm")
    p.add_argument("--out-flow", dest="out_flow")

    p = sub.add_parser("rectify", help="sample an image through a backward flow map")
    p.add_argument("image")
    p.add_argument("flow")
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="PSNR/SSIM records for image pairs")
    p.add_argument("images", nargs="+", metavar="IMG", help="pairs: pred ref [pred ref ...]")
    p.add_argument("--masked", action="store_true", help="restrict metrics to valid flow targets")
    p.add_argument("--flows", nargs="+", help="one flow file per pair (required with --masked)")

    p = sub.add_parser("roundtrip", help="synthesize+rectify round trip PSNR report")
    p.add_argument("--sources", nargs="+", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--resolution", type=int, default=256)
    p.add_argument("--ranges")

    return parser


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            obj = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise _UsageError(f"cannot read config {path}: {e}") from e
    if not isinstance(obj, dict):
        raise _UsageError(f"config {path} must hold a JSON object")
    return obj


def _parse_ranges(path: str | None) -> ParamRanges:
    if path is None:
        return ParamRanges()
    obj = _load_json(path)
    kwargs = {}
    for key in ("k1", "k2", "k3", "k4"):
        if key in obj:
            lo, hi = obj[key]
            kwargs[key] = (float(lo), float(hi))
    if "max_attempts" in obj:
        kwargs["max_attempts"] = int(obj["max_attempts"])
    return ParamRanges(**kwargs)


def _parse_point(text: str) -> Point2:
    parts = text.split(",")
    if len(parts) != 2:
        raise _UsageError(f"expected x,y got {text!r}")
    return Point2(float(parts[0]), float(parts[1]))


def _resolve_sources(specs) -> list[Path]:
    if len(specs) == 1:
        paths = source_paths(specs[0])
    else:
        paths = source_paths(specs)
    if not paths:
        raise FisheyeError(f"no source images found in {specs}")
    return paths


def cmd_synthesize(args) -> int:
    config = _load_json(args.config) if args.config else {}

    def pick(name, default=None):
        value = getattr(args, name)
        return config.get(name, default) if value is None else value

    count = pick("count")
    seed = pick("seed")
    out = pick("out")
    sources = pick("sources")
    for name, value in (("count", count), ("seed", seed), ("out", out), ("sources", sources)):
        if value is None:
            raise _UsageError(f"--{name} is required (flag or config file)")
    ranges = _parse_ranges(args.ranges) if args.ranges else ParamRanges(
        **{k: tuple(v) if isinstance(v, list) else v for k, v in config.get("ranges", {}).items()}
    )
    crop_ratio = pick("crop_ratio", (0.4, 0.9))
    cfg = DatasetConfig(
        count=int(count),
        seed=int(seed),
        resolution=int(pick("resolution", 256)),
        deviation_prob=float(pick("deviation_prob", 0.7)),
        free_fraction=float(pick("free_frac", 0.2)),
        crop_ratio=(float(crop_ratio[0]), float(crop_ratio[1])),
        ranges=ranges,
    )
    if isinstance(sources, str):
        sources = [sources]
    paths = _resolve_sources(sources)
    records = build_dataset(cfg, paths, out, workers=int(pick("workers", 1)))
    counts = {"central": 0, "deviated": 0, "distortion_free": 0}
    for rec in records:
        counts[rec.kind] += 1
    print(f"central={counts['central']} deviated={counts['deviated']} free={counts['distortion_free']}")
    print(f"manifest={Path(out) / 'manifest.jsonl'}")
    return EXIT_OK


def cmd_labels(args) -> int:
    if args.out_dvm is None and args.out_flow is None:
        raise _UsageError("at least one of --out-dvm/--out-flow is required")
    coeffs = [float(v) for v in args.params.split(",")]
    if len(coeffs) != 4:
        raise _UsageError(f"--params needs four values, got {len(coeffs)}")
    params = RadialParams(*coeffs)
    h, w = args.height, args.width
    center = _parse_point(args.center) if args.center else Point2((w - 1) / 2, (h - 1) / 2)
    center_rect = _parse_point(args.center_rect) if args.center_rect else center
    r_norm = args.r_norm if args.r_norm is not None else min(h, w) / 2
    cam = CameraModel(params=params, center_d=center, center_c=center_rect, r_norm=r_norm)
    if args.out_dvm:
        write_map(compute_dvm(cam, h, w), args.out_dvm)
    if args.out_flow:
        write_map(compute_backward_flow(cam, h, w), args.out_flow)
    return EXIT_OK


def cmd_rectify(args) -> int:
    flow = read_map(args.flow, expect_kind="flow")
    image = load_image(args.image)
    save_image(bilinear_sample(image, flow), args.out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    if len(args.images) % 2 != 0:
        raise _UsageError("evaluate needs an even number of images (pred ref pairs)")
    pairs = [(args.images[i], args.images[i + 1]) for i in range(0, len(args.images), 2)]
    if args.masked:
        if not args.flows or len(args.flows) != len(pairs):
            raise _UsageError("--masked needs exactly one --flows entry per pair")
    ok = 0
    failed = 0
    for idx, (path_a, path_b) in enumerate(pairs):
        try:
            a = load_image(path_a)
            b = load_image(path_b)
            mask = None
            if args.masked:
                flow = read_map(args.flows[idx], expect_kind="flow")
                mask = valid_mask(flow, b.shape)
            record = {
                "a": path_a,
                "b": path_b,
                "psnr": psnr(a, b, mask=mask),
                "ssim": ssim(a, b, mask=mask),
                "masked": bool(args.masked),
            }
            print(json.dumps(record))
            ok += 1
        except (FisheyeError, OSError) as e:
            print(f"error: pair {idx} ({path_a}, {path_b}): {e}", file=sys.stderr)
            failed += 1
    if failed == 0:
        return EXIT_OK
    return EXIT_DATA if ok == 0 else EXIT_PARTIAL


def cmd_roundtrip(args) -> int:
    paths = _resolve_sources(args.sources)
    ranges = _parse_ranges(args.ranges)
    res = args.resolution
    ok = 0
    failed = 0
    values = []
    for i in range(args.count):
        source = paths[i % len(paths)]
        try:
            rng = np.random.default_rng(derive_seed(args.seed, i))
            params = sample_params(rng, ranges)
            prepared = prepare_source(load_image(source), res)
            value = roundtrip_psnr(prepared, central_camera(res, params))
            print(json.dumps({"index": i, "source": str(source), "psnr": value}))
            values.append(value)
            ok += 1
        except (FisheyeError, OSError) as e:
            print(f"error: sample {i} ({source}): {e}", file=sys.stderr)
            failed += 1
    if values:
        print(f"mean_psnr={float(np.mean(values)):.4f}")
    if failed == 0:
        return EXIT_OK
    return EXIT_DATA if ok == 0 else EXIT_PARTIAL


_COMMANDS = {
    "synthesize": cmd_synthesize,
    "labels": cmd_labels,
    "rectify": cmd_rectify,
    "evaluate": cmd_evaluate,
    "roundtrip": cmd_roundtrip,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        return _COMMANDS[args.command](args)
    except _UsageError as e:
        print(f"fisheyekit: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError,) as e:
        print(f"fisheyekit: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (FisheyeError, OSError) as e:
        print(f"fisheyekit: error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
