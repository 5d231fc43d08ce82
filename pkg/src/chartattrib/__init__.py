"""Reasoning-guided chart attribution engine.

Given patch-grid embeddings of a chart and an embedding of an answer or
reasoning step, locate the supporting chart regions by exhaustive
sliding-window cosine search, map them to pixel boxes, and evaluate
attributions with mask-based multi-box IOU, agreement statistics, and
feature-attribution image masking.
"""

__version__ = "0.1.0"

from .attribution import (
    GridRegion,
    IntegralGrid,
    PixelBox,
    ScoredRegion,
    WindowConfig,
    attribute_best,
    attribute_topk,
    build_integral,
    cosine,
    grid_to_pixels,
    normalize_grid,
    window_mean,
)
from .dataset import (
    ChartRecord,
    DatasetManifest,
    DatasetStats,
    QAPair,
    ReasoningStep,
    compute_stats,
    load_manifest,
    save_manifest,
)
from .errors import (
    CapacityError,
    ChartAttribError,
    ContractError,
    FormatError,
    ValidationError,
    VerificationError,
)
from .metrics import (
    AgreementTable,
    BinaryMask,
    BoxSet,
    kappa,
    multibox_iou,
    rasterize,
    single_iou,
    sts_cosine,
)
from .raster import load_png, mask_outside, overlay_boxes, save_png
from .tensorio import load_tensor, read_tensor, save_tensor, write_tensor
from .verification import (
    SyntheticSpec,
    brute_force_attribute,
    brute_force_topk,
    exact_multibox_iou,
    gen_synthetic,
)

__all__ = [
    "__version__",
    "AgreementTable", "BinaryMask", "BoxSet", "CapacityError",
    "ChartAttribError", "ChartRecord", "ContractError", "DatasetManifest",
    "DatasetStats", "FormatError", "GridRegion", "IntegralGrid", "PixelBox",
    "QAPair", "ReasoningStep", "ScoredRegion", "SyntheticSpec",
    "ValidationError", "VerificationError", "WindowConfig",
    "attribute_best", "attribute_topk", "brute_force_attribute",
    "brute_force_topk", "build_integral", "compute_stats", "cosine",
    "exact_multibox_iou", "gen_synthetic", "grid_to_pixels", "kappa",
    "load_manifest", "load_png", "load_tensor", "mask_outside",
    "multibox_iou", "normalize_grid", "overlay_boxes", "rasterize",
    "read_tensor", "save_manifest", "save_png", "save_tensor", "single_iou",
    "sts_cosine", "window_mean", "write_tensor",
]
