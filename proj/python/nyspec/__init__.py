"""Nystrom-sampled spectral clustering."""

from ._nyspec import (
    DegenerateClustering,
    NyspecError,
    RankDeficientLandmarks,
    clustering_accuracy,
    frobenius_error,
    kmeans,
    landmark_count,
    load_dataset,
    nystrom_fit,
    sample_landmarks,
    similarity,
    spectral_cluster,
    spectrum_switch,
)

SAMPLERS = ("rs", "ks", "ss", "ms3", "cms3", "cms3-tuned")

__all__ = [
    "SAMPLERS",
    "DegenerateClustering",
    "NyspecError",
    "RankDeficientLandmarks",
    "clustering_accuracy",
    "frobenius_error",
    "kmeans",
    "landmark_count",
    "load_dataset",
    "nystrom_fit",
    "sample_landmarks",
    "similarity",
    "spectral_cluster",
    "spectrum_switch",
]
