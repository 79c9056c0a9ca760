"""Cross-domain model comparison.

Per-dataset precision is micro-aggregated over the compared classes
(sum TP / (sum TP + sum FP)); in closed-set classification this equals the
accuracy on that slice. A pair of models is aggregated with the geometric
mean over the datasets whose slice is non-empty, and the model-vs-model
matrix stores the winner's precision in its row and the signed deficit in
the loser's row.

Undefined precision (nothing predicted / empty slice) is ``None`` everywhere
and never conflated with 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .catalog import SPLITS, common_classes, comparison_set_k, normalize_split
from .classifier import Counts, score_predictions
from .errors import EmptyGlobalIntersection, EvaluationError, MissingTestSplit

ARITHMETIC = "arithmetic"
GEOMETRIC = "geometric"


def arithmetic_mean(values):
    vals = [v for v in values if v is not None]
    return math.fsum(vals) / len(vals) if vals else None


def geometric_mean(values):
    """n-th root of the product of the defined values; 0 if any value is 0."""
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    if any(v == 0.0 for v in vals):
        return 0.0
    return math.prod(vals) ** (1.0 / len(vals))


def mean_of(values, mean):
    if mean == ARITHMETIC:
        return arithmetic_mean(values)
    if mean == GEOMETRIC:
        return geometric_mean(values)
    raise ValueError(f"mean must be 'arithmetic' or 'geometric', got {mean!r}")


def micro(counts):
    total = Counts(0, 0)
    for c in counts.values():
        total = total + c
    return total


def _score(model, samples, observer=None, context=None):
    if observer is not None:
        observer(context, model.model_id, [s.sample_id for s in samples])
    records = [(s.sample_id, s.class_id, model.predict(s)) for s in samples]
    return records, score_predictions((t, p) for _, t, p in records)


def _splits(splits):
    if isinstance(splits, str):
        splits = SPLITS if splits.lower() == "both" else (splits,)
    return tuple(normalize_split(s) for s in splits)


# --- data tables --------------------------------------------------------------------

@dataclass
class DataTable:
    """Per (model, dataset, split, class) TP/FP counts.

    ``blocks[(model, dataset, split)]`` holds the compared class set for that
    block; ``records`` holds (sample_id, true, predicted) for every scored sample.
    """

    cells: dict = field(default_factory=dict)
    blocks: dict = field(default_factory=dict)
    records: dict = field(default_factory=dict)

    def counts(self, model_id, dataset_id, split, class_id):
        return self.cells.get((model_id, dataset_id, split, class_id), Counts(0, 0))

    def precision(self, model_id, dataset_id, split, class_id):
        return self.counts(model_id, dataset_id, split, class_id).precision

    def block_counts(self, model_id, dataset_id, split):
        return micro({k: v for k, v in self.cells.items() if k[:3] == (model_id, dataset_id, split)})

    def block_precision(self, model_id, dataset_id, split):
        return self.block_counts(model_id, dataset_id, split).precision

    @property
    def model_ids(self):
        return sorted({k[0] for k in self.blocks})

    @property
    def dataset_ids(self):
        return sorted({k[1] for k in self.blocks})

    def fp_total(self, model_id, split=None):
        return sum(v.fp for k, v in self.cells.items() if k[0] == model_id and (split is None or k[2] == split))


def generate_data_tables(models, catalog, splits=SPLITS):
    """Score every model on every dataset split, restricted to the pairwise common classes."""
    dt = DataTable()
    for m in models:
        for d in catalog.datasets:
            c_ij = common_classes(m.classes, d.declared_classes, catalog.scs)
            for split in _splits(splits):
                t = comparison_set_k(c_ij, d, split)
                records, counts = _score(m, t)
                key = (m.model_id, d.dataset_id, split)
                dt.blocks[key] = tuple(sorted(c_ij))
                dt.records[key] = tuple(records)
                for cls in sorted(set(c_ij) | set(counts)):
                    dt.cells[key + (cls,)] = counts.get(cls, Counts(0, 0))
    return dt


# --- pairwise precision ----------------------------------------------------------------

@dataclass(frozen=True)
class PairPrecision:
    model_i: str
    model_j: str
    split: str
    classes: frozenset
    per_dataset: dict  # dataset id -> (Counts_i, Counts_j)
    included: tuple
    p_i: float | None
    p_j: float | None

    @property
    def comparable(self):
        return self.p_i is not None

    def dataset_precision(self, dataset_id):
        ci, cj = self.per_dataset[dataset_id]
        return ci.precision, cj.precision

    def pooled(self):
        """Micro precision over the union of all slices (the cardinality-biased variant)."""
        if not self.included:
            return None, None
        ti = Counts(0, 0)
        tj = Counts(0, 0)
        for ci, cj in self.per_dataset.values():
            ti, tj = ti + ci, tj + cj
        return ti.precision, tj.precision


def compute_pair_precision(m_i, m_j, catalog, split, observer=None):
    """Score both models on identical per-dataset slices; geometric-mean aggregate.

    ``observer(context, model_id, sample_ids)`` is called for every scored slice
    with ``context = (model_i, model_j, dataset_id)``.
    """
    split = normalize_split(split)
    c_ij = common_classes(m_i.classes, m_j.classes, catalog.scs)
    per_dataset, included = {}, []
    for d in catalog.datasets:
        t = comparison_set_k(c_ij, d, split)
        if not t:
            continue
        ctx = (m_i.model_id, m_j.model_id, d.dataset_id)
        _, counts_i = _score(m_i, t, observer, ctx)
        _, counts_j = _score(m_j, t, observer, ctx)
        per_dataset[d.dataset_id] = (micro(counts_i), micro(counts_j))
        included.append(d.dataset_id)
    p_i = geometric_mean([per_dataset[k][0].precision for k in included]) if included else None
    p_j = geometric_mean([per_dataset[k][1].precision for k in included]) if included else None
    return PairPrecision(m_i.model_id, m_j.model_id, split, c_ij, per_dataset, tuple(included), p_i, p_j)


def matrix_cell(p_i, p_j):
    """Row model's entry: its precision if it wins or ties, else the (negative) difference."""
    if p_i is None or p_j is None:
        return None
    return p_i if p_i >= p_j else p_i - p_j


@dataclass(frozen=True)
class ModelMatrix:
    model_ids: tuple
    split: str
    cells: dict  # (row, col) -> float | None (None = incomparable)
    pairs: dict = field(default_factory=dict, compare=False)

    def cell(self, i, j):
        return self.cells[(i, j)]


def generate_model_matrix(models, catalog, split, observer=None):
    if len(models) < 2:
        raise EvaluationError("the model matrix needs at least two models")
    ids = [m.model_id for m in models]
    if len(set(ids)) != len(ids):
        raise EvaluationError("model ids must be unique")
    split = normalize_split(split)
    cells, pairs = {}, {}
    for a, m_i in enumerate(models):
        for m_j in models[a:]:
            pp = compute_pair_precision(m_i, m_j, catalog, split, observer)
            pairs[(m_i.model_id, m_j.model_id)] = pp
            cells[(m_i.model_id, m_j.model_id)] = matrix_cell(pp.p_i, pp.p_j)
            cells[(m_j.model_id, m_i.model_id)] = matrix_cell(pp.p_j, pp.p_i)
    return ModelMatrix(tuple(ids), split, cells, pairs)


# --- signs vs model --------------------------------------------------------------------

@dataclass(frozen=True)
class SignsVsModelTable:
    classes: tuple
    model_ids: tuple
    split: str
    mean: str
    cells: dict  # (class, model) -> float | None
    row_marginals: dict  # class -> float | None
    col_marginals: dict  # model -> float | None
    per_dataset: dict = field(default_factory=dict, compare=False)  # (class, model, dataset) -> Counts


def global_common_classes(models, scs):
    out = frozenset(scs)
    for m in models:
        out &= m.classes
    return out


def signs_vs_model(models, catalog, split, mean=GEOMETRIC):
    """Per-class precision of every model on the globally shared classes."""
    split = normalize_split(split)
    mean_of([], mean)  # validates the variant name
    g = global_common_classes(models, catalog.scs)
    if not g:
        raise EmptyGlobalIntersection("no class is shared by every model and the SCS")
    per_dataset = {}
    for m in models:
        for d in catalog.datasets:
            t = comparison_set_k(g, d, split)
            if not t:
                continue
            _, counts = _score(m, t)
            for cls in g:
                per_dataset[(cls, m.model_id, d.dataset_id)] = counts.get(cls, Counts(0, 0))
    classes = tuple(sorted(g))
    ids = tuple(m.model_id for m in models)
    cells = {}
    for cls in classes:
        for mid in ids:
            vals = [per_dataset[(cls, mid, d.dataset_id)].precision
                    for d in catalog.datasets if (cls, mid, d.dataset_id) in per_dataset]
            cells[(cls, mid)] = mean_of(vals, mean)
    rows = {cls: mean_of([cells[(cls, mid)] for mid in ids], mean) for cls in classes}
    cols = {mid: mean_of([cells[(cls, mid)] for cls in classes], mean) for mid in ids}
    return SignsVsModelTable(classes, ids, split, mean, cells, rows, cols, per_dataset)


# --- own domain ----------------------------------------------------------------------

@dataclass(frozen=True)
class OwnDomainTable:
    model_ids: tuple
    classes: tuple
    cells: dict  # (model, class) -> float | None
    summary: dict  # model -> geometric mean of defined per-class precisions
    counts: dict = field(default_factory=dict, compare=False)


def own_domain_table(models, catalog):
    """Each model on its own training dataset's TE split, classes C_i intersected with the SCS."""
    cells, summary, counts = {}, {}, {}
    all_classes = set()
    for m in models:
        if m.train_dataset is None:
            raise MissingTestSplit(f"model {m.model_id!r} has no associated training dataset")
        d = catalog.dataset(m.train_dataset)
        c = frozenset(m.classes) & catalog.scs
        if not c:
            summary[m.model_id] = None
            continue
        te = d.split("TE")
        if not te:
            raise MissingTestSplit(f"dataset {d.dataset_id!r} (model {m.model_id!r}) has no TE samples")
        _, scored = _score(m, comparison_set_k(c, d, "TE"))
        for cls in sorted(c):
            k = scored.get(cls, Counts(0, 0))
            counts[(m.model_id, cls)] = k
            cells[(m.model_id, cls)] = k.precision
        all_classes |= c
        summary[m.model_id] = geometric_mean([cells[(m.model_id, cls)] for cls in sorted(c)])
    ids = tuple(m.model_id for m in models)
    classes = tuple(sorted(all_classes))
    for mid in ids:
        for cls in classes:
            cells.setdefault((mid, cls), None)
    return OwnDomainTable(ids, classes, cells, summary, counts)
