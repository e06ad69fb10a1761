"""Fisheye distortion toolkit.

Radial polynomial camera model, distortion vector map and backward flow
labels, flow-based rectification, PSNR/SSIM evaluation, and a reproducible
synthetic dataset builder with a batch CLI.
"""

from .errors import (
    BadHeaderError,
    BadMagicError,
    BadVersionError,
    ConvergenceError,
    DimensionMismatchError,
    EmptyMaskError,
    FisheyeError,
    InsufficientSourcesError,
    InvalidTransformError,
    KindMismatchError,
    MapFormatError,
    NoBracketError,
    NotMonotoneError,
    RejectionExhaustedError,
    SchemaError,
    TooSmallError,
    TruncatedError,
)
from .geometry import (
    CameraModel,
    Point2,
    RadialParams,
    dist_to_rect,
    eval_radial,
    find_monotone_violation,
    invert_radial,
    radial_slope,
    rect_to_dist,
    validate_monotone,
)
from .io_formats import (
    SampleRecord,
    decode_record,
    encode_record,
    load_image,
    map_bytes,
    parse_map,
    read_manifest,
    read_map,
    save_image,
    write_manifest,
    write_map,
)
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
from .metrics import MetricConfig, psnr, ssim
from .rectify import bilinear_sample, valid_mask
from .synthesis import (
    DatasetConfig,
    ParamRanges,
    build_dataset,
    central_camera,
    derive_seed,
    free_indices,
    make_deviated,
    plan_kinds,
    prepare_source,
    render_fisheye,
    resample_image,
    roundtrip_psnr,
    sample_params,
)

__version__ = "0.1.0"
