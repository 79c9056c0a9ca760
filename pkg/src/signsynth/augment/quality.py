"""Shallow quality filter applied to every generated sample."""

from dataclasses import dataclass

import numpy as np

from ..imaging import luminance


@dataclass(frozen=True)
class QualityThresholds:
    min_mean: float = 15.0
    max_mean: float = 240.0
    min_std: float = 5.0
    max_fill_fraction: float = 0.6
    fill: tuple = (0, 0, 0)

    @classmethod
    def from_dict(cls, data, fill=None):
        data = dict(data or {})
        if fill is not None and "fill" not in data:
            data["fill"] = fill
        if "fill" in data:
            data["fill"] = tuple(int(v) for v in data["fill"])
        return cls(**data)


@dataclass(frozen=True)
class QualityVerdict:
    accepted: bool
    reason: str | None = None

    def __bool__(self):
        return self.accepted


ACCEPT = QualityVerdict(True)


def quality_filter(r, thresholds=QualityThresholds()):
    """Reject near-black, near-white, flat, or fill-dominated rasters."""
    y = luminance(r)
    mean = float(y.mean())
    if mean < thresholds.min_mean:
        return QualityVerdict(False, "too dark")
    if mean > thresholds.max_mean:
        return QualityVerdict(False, "too bright")
    if float(y.std()) < thresholds.min_std:
        return QualityVerdict(False, "low variance")
    fill = np.asarray(thresholds.fill, dtype=np.uint8)
    fill_fraction = float(np.all(r.pixels == fill, axis=-1).mean())
    if fill_fraction > thresholds.max_fill_fraction:
        return QualityVerdict(False, "fill dominated")
    return ACCEPT
