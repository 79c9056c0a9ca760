"""Synthetic dataset generation from canonical sign images.

Canonical images live in ``canonical_dir/<class>/*.png`` or
``canonical_dir/<class>.png``; their alpha channel (when present) is the sign
mask used by background compositing. Output slot ``n`` of class ``c`` uses
canonical ``n mod len(canonicals[c])`` and the seed
``derive(master_seed, "<dataset>/<class>/<n>")``; rejected attempts retry with
``derive(slot_seed, "retry/<a>")``.
"""

from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ..catalog import DatasetManifest, Sample, write_manifest
from ..errors import ConfigError, InsufficientCanonicals, IoError, RetryExhausted
from ..imaging import load_png, load_png_with_alpha, save_png
from ..imaging import derive_seed
from .pipeline import Pipeline, apply_pipeline
from .quality import QualityThresholds, quality_filter

log = logging.getLogger(__name__)

MAX_RETRIES = 20


@dataclass(frozen=True)
class GenerationSpec:
    canonical_dir: Path
    per_class_count: int
    pipeline: Pipeline = field(default_factory=Pipeline)
    filter: QualityThresholds | None = None
    dataset_id: str = "synth"
    country: str = "XX"
    split: str = "TR"
    classes: tuple | None = None
    background_dir: Path | None = None

    def __post_init__(self):
        if int(self.per_class_count) < 1:
            raise ConfigError(f"per_class_count must be >= 1, got {self.per_class_count}")
        object.__setattr__(self, "canonical_dir", Path(self.canonical_dir))
        if self.filter is None:
            object.__setattr__(self, "filter", QualityThresholds(fill=self.pipeline.fill))


@dataclass
class GenerationResult:
    manifest: DatasetManifest
    manifest_path: Path
    accepted: Counter
    rejected: Counter


def find_canonicals(canonical_dir, classes=None):
    """Map class id -> sorted list of canonical PNG paths."""
    root = Path(canonical_dir)
    if not root.is_dir():
        raise InsufficientCanonicals(f"canonical directory not found: {root}")
    found = {}
    for entry in sorted(root.iterdir()):
        if entry.is_dir():
            pngs = sorted(p for p in entry.iterdir() if p.suffix.lower() == ".png")
            if pngs:
                found.setdefault(entry.name, []).extend(pngs)
        elif entry.suffix.lower() == ".png":
            found.setdefault(entry.stem, []).append(entry)
    if classes is not None:
        missing = sorted(set(classes) - set(found))
        if missing:
            raise InsufficientCanonicals(f"no canonical images for classes {missing} in {root}")
        found = {c: found[c] for c in sorted(classes)}
    if not found:
        raise InsufficientCanonicals(f"no canonical PNG images in {root}")
    return dict(sorted(found.items()))


def load_backgrounds(background_dir):
    if background_dir is None:
        return []
    root = Path(background_dir)
    if not root.is_dir():
        raise ConfigError(f"background directory not found: {root}")
    return [load_png(p) for p in sorted(root.iterdir()) if p.suffix.lower() == ".png"]


def render_slot(canonical, mask, spec, seed, backgrounds=()):
    """Generate one accepted sample for a slot; returns (raster, rejection reasons)."""
    reasons = []
    for attempt in range(MAX_RETRIES + 1):
        s = seed if attempt == 0 else derive_seed(seed, f"retry/{attempt}")
        out = apply_pipeline(canonical, mask, spec.pipeline, s, backgrounds)
        verdict = quality_filter(out, spec.filter)
        if verdict.accepted:
            return out, reasons
        reasons.append(verdict.reason)
    return None, reasons


def generate_dataset(spec, out_dir, threads=1):
    """Write ``per_class_count`` accepted samples per class plus ``manifest.csv``."""
    out_dir = Path(out_dir)
    canon_paths = find_canonicals(spec.canonical_dir, spec.classes)
    canon = {c: [load_png_with_alpha(p) for p in paths] for c, paths in canon_paths.items()}
    backgrounds = load_backgrounds(spec.background_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for c in canon:
            (out_dir / c).mkdir(exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output directory {out_dir}: {exc}") from exc

    n = int(spec.per_class_count)
    slots = [(c, i) for c in canon for i in range(n)]

    def work(slot):
        c, i = slot
        raster, mask = canon[c][i % len(canon[c])]
        seed = derive_seed(spec.pipeline.master_seed, f"{spec.dataset_id}/{c}/{i}")
        out, reasons = render_slot(raster, mask, spec, seed, backgrounds)
        if out is None:
            raise RetryExhausted(c, i, reasons)
        path = out_dir / c / f"{i:05d}.png"
        save_png(out, path)
        return Sample(f"{spec.dataset_id}-{c}-{i:05d}", path.resolve(), c, spec.dataset_id, spec.split), reasons

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, slots))
    else:
        results = [work(s) for s in slots]

    accepted, rejected = Counter(), Counter()
    for sample, reasons in results:
        accepted[sample.class_id] += 1
        rejected[sample.class_id] += len(reasons)
    manifest = DatasetManifest(spec.dataset_id, spec.country, [s for s, _ in results])
    manifest_path = out_dir / "manifest.csv"
    write_manifest(manifest, manifest_path)
    manifest = DatasetManifest(spec.dataset_id, spec.country, manifest.samples, source=manifest_path)
    return GenerationResult(manifest, manifest_path, accepted, rejected)
