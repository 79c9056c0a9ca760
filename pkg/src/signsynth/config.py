"""Run configuration: one YAML file drives validate / generate / evaluate.

::

    seed: 7
    split: te                   # tr | te | both
    output: out
    taxonomy: taxonomy.yaml     # optional, built-in 12-class taxonomy otherwise
    scs: [speed-50, stop]       # optional SCS override
    gallery_limit: 20
    generate:
      canonical_dir: canonicals
      background_dir: backgrounds   # optional
      pipeline: pipeline.yaml
      per_class_count: 100
      dataset_id: synth
    datasets:
      - {id: gtsrb, manifest: data/gtsrb/manifest.csv, country: DE}
    models:
      - {id: alexnet-gtsrb, provider: prediction-log, log: preds/gtsrb.csv, train_dataset: gtsrb}
      - {id: ref-synth, provider: reference-classifier, train_dataset: synth}

Relative paths are resolved against the config file's directory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .catalog import ClassTaxonomy, load_taxonomy
from .errors import ConfigError

PROVIDERS = ("prediction-log", "reference-classifier")
SECTIONS = ("datasets", "models", "generate")
_TOP_KEYS = {"seed", "split", "output", "taxonomy", "scs", "generate", "datasets", "models",
             "gallery_limit", "threads", "heatmap"}


@dataclass(frozen=True)
class DatasetDecl:
    dataset_id: str
    manifest: Path
    country: str | None = None


@dataclass(frozen=True)
class ModelDecl:
    model_id: str
    provider: str
    train_dataset: str | None = None
    log: Path | None = None
    model_file: Path | None = None
    classes: tuple | None = None


@dataclass(frozen=True)
class GenerateDecl:
    canonical_dir: Path
    per_class_count: int
    pipeline: Path | None = None
    background_dir: Path | None = None
    dataset_id: str = "synth"
    country: str = "XX"
    split: str = "TR"
    classes: tuple | None = None
    filter: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RunConfig:
    path: Path
    taxonomy: ClassTaxonomy
    datasets: tuple = ()
    models: tuple = ()
    generate: GenerateDecl | None = None
    split: str = "te"
    output: Path | None = None
    seed: int | None = None
    gallery_limit: int | None = 20
    threads: int = 1
    heatmap: dict = field(default_factory=dict)

    @property
    def splits(self):
        return ("TR", "TE") if self.split == "both" else (self.split.upper(),)


def _path(base, value, what, must_exist=True, kind=None):
    if value is None:
        return None
    p = Path(value)
    if not p.is_absolute():
        p = (base / p).resolve()
    if must_exist:
        ok = p.is_dir() if kind == "dir" else p.is_file() if kind == "file" else p.exists()
        if not ok:
            raise ConfigError(f"{what} not found: {p}")
    return p


def parse_split(value):
    s = str(value).strip().lower()
    if s not in ("tr", "te", "both"):
        raise ConfigError(f"split must be tr, te or both, got {value!r}")
    return s


def load_run_config(path, check=SECTIONS):
    """Parse ``path``; referenced files are required to exist for the sections in ``check``."""
    path = Path(path)
    check = frozenset(check)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    base = path.parent.resolve()

    tax_path = _path(base, data.get("taxonomy"), "taxonomy file", kind="file")
    taxonomy = load_taxonomy(tax_path) if tax_path else ClassTaxonomy.default()
    if data.get("scs") is not None:
        taxonomy = taxonomy.with_scs([str(c) for c in data["scs"]])

    datasets = []
    for n, d in enumerate(data.get("datasets") or []):
        if not isinstance(d, dict) or "manifest" not in d:
            raise ConfigError(f"datasets[{n}]: needs a 'manifest' path")
        manifest = _path(base, d["manifest"], f"manifest for datasets[{n}]",
                         must_exist="datasets" in check, kind="file")
        did = str(d.get("id") or (manifest.parent.name if manifest.stem == "manifest" else manifest.stem))
        datasets.append(DatasetDecl(did, manifest, d.get("country")))
    ids = [d.dataset_id for d in datasets]
    if len(set(ids)) != len(ids):
        raise ConfigError("dataset ids must be unique")

    models = []
    for n, m in enumerate(data.get("models") or []):
        if not isinstance(m, dict) or "id" not in m:
            raise ConfigError(f"models[{n}]: needs an 'id'")
        provider = m.get("provider", "prediction-log")
        if provider not in PROVIDERS:
            raise ConfigError(f"model {m['id']!r}: provider must be one of {PROVIDERS}")
        train = m.get("train_dataset")
        if train is not None and train not in ids:
            raise ConfigError(f"model {m['id']!r}: train_dataset {train!r} is not a declared dataset")
        need = "models" in check
        log = _path(base, m.get("log"), f"prediction log for model {m['id']!r}", need, "file")
        model_file = _path(base, m.get("model_file"), f"model file for {m['id']!r}", need, "file")
        if provider == "prediction-log" and log is None:
            raise ConfigError(f"model {m['id']!r}: prediction-log provider needs 'log'")
        if provider == "reference-classifier" and model_file is None and train is None:
            raise ConfigError(f"model {m['id']!r}: reference-classifier needs 'model_file' or 'train_dataset'")
        classes = tuple(str(c) for c in m["classes"]) if m.get("classes") else None
        models.append(ModelDecl(str(m["id"]), provider, train, log, model_file, classes))
    mids = [m.model_id for m in models]
    if len(set(mids)) != len(mids):
        raise ConfigError("model ids must be unique")

    gen = None
    if data.get("generate"):
        g = data["generate"]
        if not isinstance(g, dict) or "canonical_dir" not in g:
            raise ConfigError("generate: needs 'canonical_dir'")
        try:
            count = int(g.get("per_class_count", 100))
        except (TypeError, ValueError):
            raise ConfigError("generate.per_class_count must be an integer") from None
        if count < 1:
            raise ConfigError("generate.per_class_count must be >= 1")
        need = "generate" in check
        gen = GenerateDecl(
            canonical_dir=_path(base, g["canonical_dir"], "canonical directory", need, "dir"),
            per_class_count=count,
            pipeline=_path(base, g.get("pipeline"), "pipeline config", need, "file"),
            background_dir=_path(base, g.get("background_dir"), "background directory", need, "dir"),
            dataset_id=str(g.get("dataset_id", "synth")),
            country=str(g.get("country", "XX")),
            split=str(g.get("split", "TR")).upper(),
            classes=tuple(g["classes"]) if g.get("classes") else None,
            filter=dict(g.get("filter") or {}),
        )

    seed = data.get("seed")
    if seed is not None:
        try:
            seed = int(seed)
        except (TypeError, ValueError):
            raise ConfigError(f"seed must be an integer, got {seed!r}") from None
    limit = data.get("gallery_limit", 20)
    return RunConfig(
        path=path,
        taxonomy=taxonomy,
        datasets=tuple(datasets),
        models=tuple(models),
        generate=gen,
        split=parse_split(data.get("split", "te")),
        output=_path(base, data.get("output"), "output", must_exist=False),
        seed=seed,
        gallery_limit=None if limit is None else int(limit),
        threads=int(data.get("threads", 1)),
        heatmap=dict(data.get("heatmap") or {}),
    )
