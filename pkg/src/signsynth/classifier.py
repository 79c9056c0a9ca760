"""Closed-set classifier interface: prediction logs and a nearest-centroid reference model.

Prediction log format (UTF-8 CSV)::

    # model: gtsrb-alexnet
    sample_id,predicted_label
    gtsrb-000017,speed-50

Reference model file format (text, UTF-8)::

    SIGNSYNTH-REFMODEL 1
    model <model id or ->
    dim 576
    classes <n>
    <class id>\t<576 space-separated float reprs>
    ...

Centroid values round-trip exactly because floats are written with ``repr``.
"""

from __future__ import annotations

import csv
import io
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .augment.transforms import apply_histogram_normalize
from .errors import ClosedSetViolation, EmptyClass, IoError, ParseError, UnknownSample
from .imaging import Raster, load_png, luminance, quantize, resize_bilinear

FEATURE_SIZE = 24
FEATURE_DIM = FEATURE_SIZE * FEATURE_SIZE
REFMODEL_MAGIC = "SIGNSYNTH-REFMODEL 1"


def features(r):
    """24x24 grayscale, histogram-normalized pixels scaled to [0, 1]."""
    small = resize_bilinear(r, FEATURE_SIZE, FEATURE_SIZE)
    gray = quantize(luminance(small))
    g = apply_histogram_normalize(Raster(np.repeat(gray[..., None], 3, axis=-1)))
    return g.pixels[..., 0].astype(np.float64).ravel() / 255.0


@dataclass(frozen=True)
class ReferenceClassifier:
    classes: tuple
    centroids: np.ndarray

    def __post_init__(self):
        cents = np.asarray(self.centroids, dtype=np.float64)
        if cents.shape != (len(self.classes), FEATURE_DIM):
            raise ValueError(f"centroids must have shape ({len(self.classes)}, {FEATURE_DIM})")
        order = np.argsort(np.asarray(self.classes, dtype=object).astype(str), kind="stable")
        object.__setattr__(self, "classes", tuple(self.classes[i] for i in order))
        cents = cents[order].copy()
        cents.flags.writeable = False
        object.__setattr__(self, "centroids", cents)

    def classify_features(self, f):
        d2 = ((self.centroids - f) ** 2).sum(axis=1)
        # argmin returns the first minimum; classes are sorted, so ties go to the smaller id
        return self.classes[int(np.argmin(d2))]

    def classify_raster(self, r):
        return self.classify_features(features(r))


def train_reference(d, split="TR"):
    """Per-class mean feature vector over one split of a dataset manifest."""
    samples = d.split(split) if hasattr(d, "split") else list(d)
    declared = sorted(d.declared_classes) if hasattr(d, "declared_classes") else sorted({s.class_id for s in samples})
    sums = {c: np.zeros(FEATURE_DIM) for c in declared}
    counts = dict.fromkeys(declared, 0)
    for s in samples:
        sums[s.class_id] += features(load_png(s.path))
        counts[s.class_id] += 1
    empty = [c for c in declared if counts[c] == 0]
    if empty or not samples:
        raise EmptyClass(empty or declared)
    return ReferenceClassifier(tuple(declared), np.stack([sums[c] / counts[c] for c in declared]))


def save_reference(clf, path, model_id=None):
    lines = [REFMODEL_MAGIC, f"model {model_id or '-'}", f"dim {FEATURE_DIM}", f"classes {len(clf.classes)}"]
    for c, row in zip(clf.classes, clf.centroids):
        lines.append(c + "\t" + " ".join(repr(float(v)) for v in row))
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_reference(path):
    """Return (model id or None, ReferenceClassifier)."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if not lines or lines[0] != REFMODEL_MAGIC:
        raise ParseError(f"{path}: not a reference model file")
    try:
        model_id = lines[1].split(None, 1)[1]
        dim = int(lines[2].split()[1])
        n = int(lines[3].split()[1])
        if dim != FEATURE_DIM:
            raise ParseError(f"{path}: feature dimension {dim} != {FEATURE_DIM}")
        classes, rows = [], []
        for line in lines[4:4 + n]:
            cls, _, values = line.partition("\t")
            classes.append(cls)
            rows.append([float(v) for v in values.split()])
        clf = ReferenceClassifier(tuple(classes), np.array(rows))
    except (IndexError, ValueError) as exc:
        raise ParseError(f"{path}: malformed reference model ({exc})") from exc
    return (None if model_id == "-" else model_id), clf


def load_prediction_log(path):
    """Return (model id or None, {sample_id: predicted ClassId})."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read prediction log {path}: {exc}") from exc
    model_id = None
    body = []
    for line in text.splitlines():
        s = line.strip()
        if s.startswith("#"):
            key, sep, value = s[1:].partition(":")
            if sep and key.strip().lower() == "model":
                model_id = value.strip()
            continue
        if s:
            body.append(line)
    if not body:
        raise ParseError(f"{path}: empty prediction log")
    reader = csv.reader(io.StringIO("\n".join(body)))
    header = [h.strip() for h in next(reader)]
    if header != ["sample_id", "predicted_label"]:
        raise ParseError(f"{path}: header must be sample_id,predicted_label")
    entries = {}
    for lineno, row in enumerate(reader, start=2):
        if len(row) != 2:
            raise ParseError(f"{path}:{lineno}: expected 2 fields")
        sid, label = row[0].strip(), row[1].strip()
        if sid in entries:
            raise ParseError(f"{path}:{lineno}: duplicate sample_id {sid!r}")
        entries[sid] = label
    return model_id, entries


class Counts(NamedTuple):
    tp: int
    fp: int

    @property
    def precision(self):
        """TP / (TP + FP), or None when nothing was predicted."""
        n = self.tp + self.fp
        return self.tp / n if n else None

    def __add__(self, other):
        return Counts(self.tp + other.tp, self.fp + other.fp)


@dataclass(eq=False)
class Model:
    """A trained closed-set classifier M_i with class set C_i.

    ``provider`` is a mapping ``sample_id -> ClassId`` (prediction log) or a
    ReferenceClassifier. Predictions are memoized per sample id.
    """

    model_id: str
    classes: frozenset
    provider: object
    train_dataset: str | None = None
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        self.classes = frozenset(self.classes)
        if not self.classes:
            raise ClosedSetViolation(f"model {self.model_id!r} has an empty class set")
        if isinstance(self.provider, ReferenceClassifier):
            if set(self.provider.classes) != self.classes:
                raise ClosedSetViolation(f"model {self.model_id!r}: centroid classes differ from class set")
        else:
            self.provider = dict(self.provider)
            outside = sorted(set(self.provider.values()) - self.classes)
            if outside:
                raise ClosedSetViolation(
                    f"model {self.model_id!r}: predictions outside its class set: {outside}"
                )

    @property
    def kind(self):
        return "reference-classifier" if isinstance(self.provider, ReferenceClassifier) else "prediction-log"

    @classmethod
    def from_log(cls, path, classes=None, model_id=None, train_dataset=None):
        logged_id, entries = load_prediction_log(path)
        mid = model_id or logged_id
        if not mid:
            raise ParseError(f"{path}: no '# model: <id>' line and no model id given")
        if classes is None:
            classes = set(entries.values())
        return cls(mid, frozenset(classes), entries, train_dataset)

    def predict(self, sample):
        hit = self._cache.get(sample.sample_id)
        if hit is not None:
            return hit
        pred = classify(self, sample)
        with self._lock:
            self._cache[sample.sample_id] = pred
        return pred


def classify(m, x):
    """Predict the class of ``x`` (a Sample, or a Raster for reference models)."""
    if isinstance(m.provider, ReferenceClassifier):
        r = x if isinstance(x, Raster) else load_png(x.path)
        return m.provider.classify_raster(r)
    if isinstance(x, Raster):
        raise TypeError("prediction-log models classify Samples by id, not rasters")
    try:
        return m.provider[x.sample_id]
    except KeyError:
        raise UnknownSample(m.model_id, x.sample_id) from None


def score_predictions(pairs):
    """Per-class (TP, FP) from (true, predicted) pairs; FP is charged to the predicted class."""
    tp, fp = {}, {}
    for true, pred in pairs:
        if true == pred:
            tp[pred] = tp.get(pred, 0) + 1
        else:
            fp[pred] = fp.get(pred, 0) + 1
    return {c: Counts(tp.get(c, 0), fp.get(c, 0)) for c in sorted(set(tp) | set(fp))}


def infer_and_score(t, m):
    return score_predictions((s.class_id, m.predict(s)) for s in t)
