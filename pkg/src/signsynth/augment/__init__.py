"""Probabilistic augmentation pipeline and synthetic dataset generation."""

from .generate import GenerationResult, GenerationSpec, find_canonicals, generate_dataset
from .pipeline import KINDS, AugmentationStep, Pipeline, apply_pipeline, load_pipeline
from .quality import QualityThresholds, QualityVerdict, quality_filter
from .transforms import (
    apply_background_composite,
    apply_blur,
    apply_elastic,
    apply_geometric,
    apply_histogram_normalize,
    apply_illuminance,
    apply_morphological,
    apply_noise,
    apply_padding,
    apply_specular_highlight,
    apply_structured_shadow,
)

__all__ = [
    "KINDS", "AugmentationStep", "Pipeline", "apply_pipeline", "load_pipeline",
    "GenerationResult", "GenerationSpec", "find_canonicals", "generate_dataset",
    "QualityThresholds", "QualityVerdict", "quality_filter",
    "apply_background_composite", "apply_blur", "apply_elastic", "apply_geometric",
    "apply_histogram_normalize", "apply_illuminance", "apply_morphological", "apply_noise",
    "apply_padding", "apply_specular_highlight", "apply_structured_shadow",
]
