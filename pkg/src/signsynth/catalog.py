"""Dataset manifests, class taxonomy and class-intersection comparison sets.

Manifest files are UTF-8 CSV with the header ``sample_id,path,label,split``;
paths are relative to the manifest. Optional leading comment lines
``# dataset: <id>`` and ``# country: <code>`` name the dataset.

Taxonomy files are YAML::

    classes: [speed-50, no-entry, ...]
    scs: [speed-50, ...]          # defaults to all classes
    label_maps:
      gtsrb: {"2": speed-50, "17": no-entry}

A label that is not in the dataset's map is accepted only if it already is a
canonical class id.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import CatalogError, ConfigError, MissingImage, ParseError, UnmappedLabel

SPLITS = ("TR", "TE")
MANIFEST_HEADER = ["sample_id", "path", "label", "split"]

# Reconstruction of a 12-class selected subset: visually similar speed limits
# plus three visually distinct regulatory signs.
DEFAULT_CLASSES = (
    "speed-20", "speed-30", "speed-40", "speed-50", "speed-60", "speed-70",
    "speed-80", "speed-100", "speed-120", "no-entry", "stop", "yield",
)


def normalize_split(split):
    s = str(split).strip().upper()
    if s not in SPLITS:
        raise ValueError(f"split must be TR or TE, got {split!r}")
    return s


@dataclass(frozen=True)
class ClassTaxonomy:
    classes: frozenset
    scs: frozenset
    label_maps: dict = field(default_factory=dict, hash=False, compare=True)

    def __post_init__(self):
        object.__setattr__(self, "classes", frozenset(self.classes))
        object.__setattr__(self, "scs", frozenset(self.scs))
        if not self.classes or any(not isinstance(c, str) or not c for c in self.classes):
            raise ConfigError("taxonomy classes must be non-empty strings")
        extra = self.scs - self.classes
        if extra:
            raise ConfigError(f"SCS contains classes not in the taxonomy: {sorted(extra)}")
        maps = {}
        for ds, mapping in (self.label_maps or {}).items():
            m = {str(k): str(v) for k, v in (mapping or {}).items()}
            bad = sorted(set(m.values()) - self.classes)
            if bad:
                raise ConfigError(f"label map for {ds!r} targets unknown classes {bad}")
            maps[str(ds)] = m
        object.__setattr__(self, "label_maps", maps)

    @classmethod
    def default(cls):
        return cls(DEFAULT_CLASSES, DEFAULT_CLASSES, {})

    def with_scs(self, scs):
        return ClassTaxonomy(self.classes, scs, self.label_maps)

    def map_label(self, dataset_id, label):
        m = self.label_maps.get(dataset_id, {})
        if label in m:
            return m[label]
        if label in self.classes:
            return label
        return None


def load_taxonomy(path):
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read taxonomy {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from exc
    if not isinstance(data, dict) or "classes" not in data:
        raise ConfigError(f"{path}: taxonomy needs a 'classes' list")
    classes = [str(c) for c in data["classes"]]
    if len(set(classes)) != len(classes):
        raise ConfigError(f"{path}: duplicate class ids")
    scs = [str(c) for c in data.get("scs", classes)]
    return ClassTaxonomy(classes, scs, data.get("label_maps") or {})


@dataclass(frozen=True)
class Sample:
    sample_id: str
    path: Path
    class_id: str
    dataset_id: str
    split: str


@dataclass(frozen=True)
class DatasetManifest:
    dataset_id: str
    country: str
    samples: tuple
    source: Path | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))

    @property
    def declared_classes(self):
        return frozenset(s.class_id for s in self.samples)

    def split(self, split):
        split = normalize_split(split)
        return [s for s in self.samples if s.split == split]

    def class_counts(self):
        counts = {}
        for s in self.samples:
            counts[(s.class_id, s.split)] = counts.get((s.class_id, s.split), 0) + 1
        return counts


def _read_comments(lines):
    meta = {}
    body = []
    for line in lines:
        stripped = line.strip()
        if stripped.startswith("#"):
            key, sep, value = stripped[1:].partition(":")
            if sep:
                meta[key.strip().lower()] = value.strip()
            continue
        if stripped:
            body.append(line)
    return meta, body


def ingest_manifest(path, taxonomy, dataset_id=None, country=None, check_images=True):
    """Parse and validate a manifest, mapping local labels onto canonical classes."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read manifest {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8 ({exc})") from exc
    meta, body = _read_comments(text.splitlines())
    dataset_id = dataset_id or meta.get("dataset") or (path.parent.name if path.stem == "manifest" else path.stem)
    country = country or meta.get("country") or "XX"
    if not body:
        raise ParseError(f"{path}: empty manifest")
    reader = csv.reader(io.StringIO("\n".join(body)))
    header = [h.strip() for h in next(reader)]
    if header != MANIFEST_HEADER:
        raise ParseError(f"{path}: header must be {','.join(MANIFEST_HEADER)}, got {','.join(header)}")
    samples, unmapped, missing, seen = [], [], [], set()
    base = path.parent
    for lineno, row in enumerate(reader, start=2):
        if len(row) != 4:
            raise ParseError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
        sid, rel, label, split = (v.strip() for v in row)
        if not sid:
            raise ParseError(f"{path}:{lineno}: empty sample_id")
        if sid in seen:
            raise ParseError(f"{path}:{lineno}: duplicate sample_id {sid!r}")
        seen.add(sid)
        try:
            split = normalize_split(split)
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from None
        cls = taxonomy.map_label(dataset_id, label)
        if cls is None:
            unmapped.append(label)
            continue
        img = (base / rel).resolve()
        if check_images and not img.is_file():
            missing.append(img)
        samples.append(Sample(sid, img, cls, dataset_id, split))
    if not seen:
        raise ParseError(f"{path}: empty manifest")
    if unmapped:
        raise UnmappedLabel(dataset_id, unmapped)
    if missing:
        raise MissingImage(missing)
    return DatasetManifest(dataset_id, country, samples, source=path)


def write_manifest(manifest, path):
    """Write ``manifest`` as CSV; image paths are stored relative to ``path``."""
    path = Path(path)
    base = path.parent.resolve()
    buf = io.StringIO()
    buf.write(f"# dataset: {manifest.dataset_id}\n# country: {manifest.country}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MANIFEST_HEADER)
    for s in manifest.samples:
        p = Path(s.path)
        try:
            rel = p.resolve().relative_to(base).as_posix()
        except ValueError:
            rel = p.as_posix()
        w.writerow([s.sample_id, rel, s.class_id, s.split])
    path.write_text(buf.getvalue(), encoding="utf-8")


class Catalog:
    """Taxonomy plus an ordered collection of ingested datasets."""

    def __init__(self, taxonomy, datasets=()):
        self.taxonomy = taxonomy
        self._datasets = {}
        self._sample_owner = {}
        for d in datasets:
            self.add(d)

    @property
    def scs(self):
        return self.taxonomy.scs

    @property
    def datasets(self):
        return list(self._datasets.values())

    def dataset(self, dataset_id):
        try:
            return self._datasets[dataset_id]
        except KeyError:
            raise CatalogError(f"unknown dataset {dataset_id!r}") from None

    def __contains__(self, dataset_id):
        return dataset_id in self._datasets

    def add(self, manifest):
        existing = self._datasets.get(manifest.dataset_id)
        if existing is not None:
            if existing == manifest:
                return existing
            raise CatalogError(f"dataset {manifest.dataset_id!r} already ingested with different content")
        clash = [s.sample_id for s in manifest.samples if s.sample_id in self._sample_owner]
        if clash:
            raise CatalogError(
                f"dataset {manifest.dataset_id!r}: sample ids already used by another dataset: {clash[:5]}"
            )
        self._datasets[manifest.dataset_id] = manifest
        for s in manifest.samples:
            self._sample_owner[s.sample_id] = manifest.dataset_id
        return manifest

    def ingest(self, path, dataset_id=None, country=None, check_images=True):
        return self.add(ingest_manifest(path, self.taxonomy, dataset_id, country, check_images))

    def samples(self):
        for d in self._datasets.values():
            yield from d.samples

    def coverage(self):
        """(class, dataset, split) -> count, restricted to the SCS."""
        out = {}
        for d in self._datasets.values():
            for (cls, split), n in d.class_counts().items():
                if cls in self.scs:
                    out[(cls, d.dataset_id, split)] = n
        return out


def common_classes(c_i, c_j, scs):
    """Classes shared by both models and the selected subset."""
    return frozenset(c_i) & frozenset(c_j) & frozenset(scs)


def comparison_set_k(c_ij, d_k, split):
    """Samples of one dataset split whose class is in ``c_ij``, sorted by sample id."""
    split = normalize_split(split)
    c_ij = frozenset(c_ij)
    return sorted((s for s in d_k.samples if s.split == split and s.class_id in c_ij), key=lambda s: s.sample_id)


def comparison_set_union(c_ij, datasets, split):
    """Concatenation of the per-dataset comparison sets in catalog order."""
    if isinstance(datasets, Catalog):
        datasets = datasets.datasets
    out = []
    for d in datasets:
        out.extend(comparison_set_k(c_ij, d, split))
    return out
