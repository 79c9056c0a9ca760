"""Fixture builders and brute-force oracles shared by the unit and acceptance tests.

The oracles below work on plain dicts and lists and recompute every metric
straight from its definition (per-dataset precision as the fraction of the
slice classified correctly, explicit loops, no package helpers). They are
deliberately independent of ``signsynth.evaluation``.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from pathlib import Path

from signsynth.catalog import Catalog, ClassTaxonomy, DatasetManifest, Sample
from signsynth.classifier import Model


@dataclass
class Fixture:
    """Raw description: samples are (sample_id, dataset, split, true class)."""

    classes: list
    scs: list
    samples: list
    model_classes: dict  # model id -> list of classes
    predictions: dict  # model id -> {sample_id: class}
    train_dataset: dict  # model id -> dataset id or None

    def catalog(self):
        tax = ClassTaxonomy(self.classes, self.scs)
        by_ds = {}
        for sid, ds, split, cls in self.samples:
            by_ds.setdefault(ds, []).append(Sample(sid, Path(f"/nonexistent/{sid}.png"), cls, ds, split))
        return Catalog(tax, [DatasetManifest(ds, "XX", s) for ds, s in sorted(by_ds.items())])

    def models(self):
        return [Model(m, frozenset(self.model_classes[m]), self.predictions[m], self.train_dataset.get(m))
                for m in sorted(self.model_classes)]

    def datasets(self):
        return sorted({ds for _, ds, _, _ in self.samples})

    def declared(self, ds):
        return {c for _, d, _, c in self.samples if d == ds}


def scripted_fixture():
    """3 datasets, 4 SCS classes (+1 outside), 48 samples, 3 hand-written prediction logs."""
    classes = ["a", "b", "c", "d", "x"]
    scs = ["a", "b", "c", "d"]
    rows = []
    # (dataset, split, class, count)
    layout = [
        ("d1", "TR", "a", 3), ("d1", "TE", "a", 4), ("d1", "TE", "b", 3), ("d1", "TE", "c", 2),
        ("d1", "TR", "x", 2),
        ("d2", "TR", "b", 2), ("d2", "TE", "b", 5), ("d2", "TE", "c", 3), ("d2", "TE", "d", 4),
        ("d3", "TR", "d", 2), ("d3", "TE", "a", 3), ("d3", "TE", "d", 5), ("d3", "TE", "x", 3),
        ("d3", "TR", "c", 3), ("d3", "TE", "c", 4),
    ]
    for ds, split, cls, n in layout:
        for k in range(n):
            rows.append((f"{ds}-{split.lower()}-{cls}{k}", ds, split, cls))
    model_classes = {"m1": ["a", "b", "c", "d"], "m2": ["a", "b", "c", "x"], "m3": ["b", "c", "d"]}
    # m1 is mostly right, confuses a->b on every third sample; m2 maps d->c; m3 maps a->b
    preds = {"m1": {}, "m2": {}, "m3": {}}
    for n, (sid, ds, split, cls) in enumerate(rows):
        preds["m1"][sid] = ("b" if n % 3 == 0 else cls) if cls in "abcd" else "a"
        preds["m2"][sid] = {"d": "c"}.get(cls, cls) if n % 4 else "a"
        preds["m3"][sid] = {"a": "b", "x": "d"}.get(cls, cls) if n % 5 else "c"
    return Fixture(classes, scs, rows, model_classes, preds, {"m1": "d1", "m2": "d2", "m3": "d3"})


def random_fixture(seed, n_datasets=3, n_models=3, n_classes=5, max_per_cell=4):
    rnd = random.Random(seed)
    classes = [f"k{i}" for i in range(n_classes)]
    scs = sorted(rnd.sample(classes, rnd.randint(2, n_classes)))
    rows = []
    for d in range(n_datasets):
        ds = f"ds{d}"
        present = rnd.sample(classes, rnd.randint(1, n_classes))
        for cls in present:
            for split in ("TR", "TE"):
                for k in range(rnd.randint(0, max_per_cell)):
                    rows.append((f"{ds}-{split}-{cls}-{k}", ds, split, cls))
    model_classes, preds, train = {}, {}, {}
    accuracy = [rnd.random() for _ in range(n_models)]
    for m in range(n_models):
        mid = f"m{m}"
        cs = sorted(rnd.sample(classes, rnd.randint(1, n_classes)))
        model_classes[mid] = cs
        preds[mid] = {}
        for sid, _, _, cls in rows:
            if cls in cs and rnd.random() < accuracy[m]:
                preds[mid][sid] = cls
            else:
                preds[mid][sid] = rnd.choice(cs)
        train[mid] = None
    return Fixture(classes, scs, rows, model_classes, preds, train)


# --- oracles ---------------------------------------------------------------------


def oracle_geomean(values):
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    if min(vals) == 0.0:
        return 0.0
    return math.exp(sum(math.log(v) for v in vals) / len(vals))


def oracle_mean(values, kind):
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    return sum(vals) / len(vals) if kind == "arithmetic" else oracle_geomean(vals)


def _slice(fx, ds, split, allowed):
    return [(sid, cls) for sid, d, sp, cls in fx.samples if d == ds and sp == split and cls in allowed]


def oracle_data_table(fx, splits=("TR", "TE")):
    """(model, dataset, split, class) -> (tp, fp)."""
    out = {}
    for m, cs in fx.model_classes.items():
        for ds in fx.datasets():
            allowed = set(cs) & fx.declared(ds) & set(fx.scs)
            for split in splits:
                cells = {c: [0, 0] for c in allowed}
                for sid, cls in _slice(fx, ds, split, allowed):
                    pred = fx.predictions[m][sid]
                    cells.setdefault(pred, [0, 0])
                    cells[pred][0 if pred == cls else 1] += 1
                for c, (tp, fp) in cells.items():
                    out[(m, ds, split, c)] = (tp, fp)
    return out


def oracle_pair(fx, mi, mj, split):
    """(P_i, P_j, {dataset: (acc_i, acc_j)}) with per-dataset precision computed as slice accuracy."""
    allowed = set(fx.model_classes[mi]) & set(fx.model_classes[mj]) & set(fx.scs)
    per = {}
    for ds in fx.datasets():
        t = _slice(fx, ds, split, allowed)
        if not t:
            continue
        acc = []
        for m in (mi, mj):
            right = sum(1 for sid, cls in t if fx.predictions[m][sid] == cls)
            acc.append(right / len(t))
        per[ds] = tuple(acc)
    if not per:
        return None, None, per
    return oracle_geomean([a for a, _ in per.values()]), oracle_geomean([b for _, b in per.values()]), per


def oracle_cell(p_row, p_col):
    if p_row is None or p_col is None:
        return None
    if p_row > p_col or p_row == p_col:
        return p_row
    return -(p_col - p_row)


def oracle_matrix(fx, split):
    ids = sorted(fx.model_classes)
    out = {}
    for i in ids:
        for j in ids:
            pi, pj, _ = oracle_pair(fx, i, j, split)
            out[(i, j)] = oracle_cell(pi, pj)
    return out


def oracle_signs(fx, split, kind):
    g = set(fx.scs)
    for cs in fx.model_classes.values():
        g &= set(cs)
    cells, rows, cols = {}, {}, {}
    for c in sorted(g):
        for m in sorted(fx.model_classes):
            per_ds = []
            for ds in fx.datasets():
                t = _slice(fx, ds, split, g)
                if not t:
                    continue
                tp = sum(1 for sid, cls in t if fx.predictions[m][sid] == c and cls == c)
                fp = sum(1 for sid, cls in t if fx.predictions[m][sid] == c and cls != c)
                per_ds.append(tp / (tp + fp) if tp + fp else None)
            cells[(c, m)] = oracle_mean(per_ds, kind)
    for c in sorted(g):
        rows[c] = oracle_mean([cells[(c, m)] for m in sorted(fx.model_classes)], kind)
    for m in sorted(fx.model_classes):
        cols[m] = oracle_mean([cells[(c, m)] for c in sorted(g)], kind)
    return cells, rows, cols


def oracle_own_domain(fx):
    cells, summary = {}, {}
    for m, cs in fx.model_classes.items():
        ds = fx.train_dataset[m]
        allowed = set(cs) & set(fx.scs)
        t = _slice(fx, ds, "TE", allowed)
        vals = []
        for c in sorted(allowed):
            tp = sum(1 for sid, cls in t if fx.predictions[m][sid] == c and cls == c)
            fp = sum(1 for sid, cls in t if fx.predictions[m][sid] == c and cls != c)
            cells[(m, c)] = tp / (tp + fp) if tp + fp else None
            vals.append(cells[(m, c)])
        summary[m] = oracle_geomean(vals) if allowed else None
    return cells, summary


def close(a, b, tol=1e-12):
    if a is None or b is None:
        return a is None and b is None
    return abs(a - b) <= tol


def tree_bytes(root):
    """{relative path: bytes} for every file under ``root``."""
    root = Path(root)
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}
