"""Quantitative evaluation: toy targets, KL estimation, heatmaps, ablations."""

from .ablation import (
    AblationRow,
    ArmSummary,
    DEFAULT_ARMS,
    arm_name,
    run_ablation,
    summarise,
)
from .heatmap import density_heatmap, render_heatmap_svg, triangle_histogram, triangle_raster
from .metrics import (
    DEFAULT_EVAL_SAMPLES,
    DEFAULT_SMOOTHING,
    MetricsRecord,
    class_frequencies,
    empirical_table,
    estimate_kl,
    self_sampling_floor,
    total_variation,
)
from .toy import (
    RANDOM_JOINT,
    SMILEY,
    SMILEY_COMPONENTS,
    SmileyComponent,
    ToyDistribution,
    barycentric_to_triangle,
    decode_cells,
    encode_sequences,
    make_random_joint,
    make_smiley,
    sample_dataset,
    sample_smiley_points,
    triangle_to_barycentric,
)

__all__ = [
    "AblationRow",
    "ArmSummary",
    "DEFAULT_ARMS",
    "DEFAULT_EVAL_SAMPLES",
    "DEFAULT_SMOOTHING",
    "MetricsRecord",
    "RANDOM_JOINT",
    "SMILEY",
    "SMILEY_COMPONENTS",
    "SmileyComponent",
    "ToyDistribution",
    "arm_name",
    "barycentric_to_triangle",
    "class_frequencies",
    "decode_cells",
    "density_heatmap",
    "empirical_table",
    "encode_sequences",
    "estimate_kl",
    "make_random_joint",
    "make_smiley",
    "render_heatmap_svg",
    "run_ablation",
    "sample_dataset",
    "sample_smiley_points",
    "self_sampling_floor",
    "summarise",
    "total_variation",
    "triangle_histogram",
    "triangle_raster",
    "triangle_to_barycentric",
]
