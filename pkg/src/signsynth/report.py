"""Rendering of evaluation tables: CSV/JSON, heatmap PNGs, false-positive galleries.

Every table is first converted to a :class:`Grid` (key columns + value
columns). CSV output has one header row (key names, then value column ids);
floats are written with 6 decimals, integers verbatim, undefined cells as an
empty field. JSON output is one object::

    {"name": ..., "keys": [...], "cols": [...], "rows": [[key, ...], ...],
     "cells": [[value-or-null, ...], ...]}

Rows and columns are ordered lexicographically by id; marginal rows/columns
(id ``marginal``) come last.
"""

from __future__ import annotations

import csv
import io
import json
import shutil
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EvaluationError, IoError
from .evaluation import DataTable, ModelMatrix, OwnDomainTable, SignsVsModelTable
from .imaging import Raster, quantize, save_png

MARGINAL = "marginal"


@dataclass(frozen=True)
class Grid:
    name: str
    keys: tuple  # key column names
    cols: tuple  # value column ids
    rows: tuple  # tuple of key tuples
    cells: tuple  # tuple of value tuples (float | int | None)

    def value(self, row, col):
        if not isinstance(row, tuple):
            row = (row,)
        return self.cells[self.rows.index(row)][self.cols.index(col)]

    def matrix(self):
        """Float array with NaN for undefined cells."""
        return np.array([[np.nan if v is None else float(v) for v in r] for r in self.cells], dtype=np.float64)


def datatable_grid(dt, name="data_table"):
    rows = sorted(dt.cells)
    cells = []
    for k in rows:
        c = dt.cells[k]
        cells.append((c.tp, c.fp, c.precision))
    return Grid(name, ("model", "dataset", "split", "class"), ("tp", "fp", "precision"),
                tuple(rows), tuple(cells))


def block_precision_grid(dt, split, name=None):
    models = dt.model_ids
    datasets = dt.dataset_ids
    cells = tuple(tuple(dt.block_precision(m, d, split) if (m, d, split) in dt.blocks else None
                        for d in datasets) for m in models)
    return Grid(name or f"block_precision_{split.lower()}", ("model",), tuple(datasets),
                tuple((m,) for m in models), cells)


def matrix_grid(mm, name=None):
    ids = sorted(mm.model_ids)
    cells = tuple(tuple(mm.cells[(i, j)] for j in ids) for i in ids)
    return Grid(name or f"model_matrix_{mm.split.lower()}", ("model",), tuple(ids),
                tuple((i,) for i in ids), cells)


def signs_grid(t, name=None, marginals=True):
    classes = sorted(t.classes)
    models = sorted(t.model_ids)
    cols = tuple(models) + ((MARGINAL,) if marginals else ())
    rows = [(c,) for c in classes]
    cells = []
    for c in classes:
        row = [t.cells[(c, m)] for m in models]
        if marginals:
            row.append(t.row_marginals[c])
        cells.append(tuple(row))
    if marginals:
        rows.append((MARGINAL,))
        cells.append(tuple(t.col_marginals[m] for m in models) + (None,))
    return Grid(name or f"signs_vs_model_{t.split.lower()}_{t.mean}", ("class",), cols, tuple(rows), tuple(cells))


def own_domain_grid(t, name="own_domain", summary=True):
    models = sorted(t.model_ids)
    classes = sorted(t.classes)
    rows = [(c,) for c in classes]
    cells = [tuple(t.cells[(m, c)] for m in models) for c in classes]
    if summary:
        rows.append(("geometric_mean",))
        cells.append(tuple(t.summary.get(m) for m in models))
    return Grid(name, ("class",), tuple(models), tuple(rows), tuple(cells))


def as_grid(table):
    if isinstance(table, Grid):
        return table
    if isinstance(table, DataTable):
        return datatable_grid(table)
    if isinstance(table, ModelMatrix):
        return matrix_grid(table)
    if isinstance(table, SignsVsModelTable):
        return signs_grid(table)
    if isinstance(table, OwnDomainTable):
        return own_domain_grid(table)
    raise TypeError(f"cannot render {type(table).__name__}")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.6f}"


def _json_value(v):
    if v is None:
        return None
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return int(v)
    return round(float(v), 6)


def table_bytes(table, fmt):
    g = as_grid(table)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(g.keys) + list(g.cols))
        for key, vals in zip(g.rows, g.cells):
            w.writerow(list(key) + [_fmt(v) for v in vals])
        return buf.getvalue().encode("utf-8")
    if fmt == "json":
        obj = {
            "name": g.name,
            "keys": list(g.keys),
            "cols": list(g.cols),
            "rows": [list(k) for k in g.rows],
            "cells": [[_json_value(v) for v in vals] for vals in g.cells],
        }
        return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8")
    raise ValueError(f"format must be csv or json, got {fmt!r}")


def emit_table(table, fmt, path):
    data = table_bytes(table, fmt)
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _parse_cell(s):
    if s == "":
        return None
    try:
        return int(s)
    except ValueError:
        return float(s)


def parse_table(path):
    """Read a table written by :func:`emit_table` back into a Grid."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        obj = json.loads(text)
        return Grid(obj["name"], tuple(obj["keys"]), tuple(obj["cols"]),
                    tuple(tuple(r) for r in obj["rows"]), tuple(tuple(c) for c in obj["cells"]))
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    known_keys = ("model", "dataset", "split", "class")
    nkeys = 0
    while nkeys < len(header) and header[nkeys] in known_keys:
        nkeys += 1
    nkeys = max(nkeys, 1)
    rows, cells = [], []
    for row in reader:
        rows.append(tuple(row[:nkeys]))
        cells.append(tuple(_parse_cell(v) for v in row[nkeys:]))
    return Grid(path.stem, tuple(header[:nkeys]), tuple(header[nkeys:]), tuple(rows), tuple(cells))


# --- heatmaps -----------------------------------------------------------------------

@dataclass(frozen=True)
class HeatmapSpec:
    axis: str = "column"  # column | row | global
    low: tuple = (139, 0, 0)
    mid: tuple = (255, 220, 0)
    high: tuple = (0, 100, 0)
    cell: int = 24
    undefined: tuple = (160, 160, 160)
    grid_color: tuple = (255, 255, 255)

    def __post_init__(self):
        if self.axis not in ("column", "row", "global"):
            raise ValueError(f"axis must be column, row or global, got {self.axis!r}")
        if self.cell < 8:
            raise ValueError("heatmap cell size must be >= 8 px")
        if len({tuple(self.low), tuple(self.mid), tuple(self.high)}) != 3:
            raise ValueError("heatmap ramp stops must be distinct")


def ramp_color(t, spec):
    """Piecewise-linear 3-stop ramp; t in [0, 1]."""
    low, mid, high = (np.asarray(c, dtype=np.float64) for c in (spec.low, spec.mid, spec.high))
    if t <= 0.5:
        c = low + (mid - low) * (2.0 * t)
    else:
        c = mid + (high - mid) * (2.0 * t - 1.0)
    return tuple(int(v) for v in quantize(c))


def normalize_values(values, axis):
    """Map each axis slice to [0, 1]; constant slices map to 0.5; NaN stays NaN."""
    v = np.asarray(values, dtype=np.float64)
    out = np.full(v.shape, np.nan)

    def norm(sl):
        defined = ~np.isnan(sl)
        if not defined.any():
            return sl
        lo, hi = sl[defined].min(), sl[defined].max()
        if hi - lo <= 0.0:
            return np.where(defined, 0.5, np.nan)
        return (sl - lo) / (hi - lo)

    if axis == "global":
        return norm(v.ravel()).reshape(v.shape)
    if axis == "column":
        for j in range(v.shape[1]):
            out[:, j] = norm(v[:, j])
    else:
        for i in range(v.shape[0]):
            out[i, :] = norm(v[i, :])
    return out


def heatmap_size(n_rows, n_cols, cell):
    """(width, height) of a heatmap: cells plus 1-px gridlines around every cell."""
    return n_cols * cell + n_cols + 1, n_rows * cell + n_rows + 1


def heatmap_raster(table, spec=HeatmapSpec()):
    g = as_grid(table)
    vals = g.matrix()
    if vals.size == 0:
        raise EvaluationError("cannot render an empty table")
    n_rows, n_cols = vals.shape
    t = normalize_values(vals, spec.axis)
    w, h = heatmap_size(n_rows, n_cols, spec.cell)
    img = np.empty((h, w, 3), dtype=np.uint8)
    img[...] = spec.grid_color
    for i in range(n_rows):
        for j in range(n_cols):
            color = spec.undefined if np.isnan(t[i, j]) else ramp_color(float(t[i, j]), spec)
            y0 = 1 + i * (spec.cell + 1)
            x0 = 1 + j * (spec.cell + 1)
            img[y0:y0 + spec.cell, x0:x0 + spec.cell] = color
    return Raster(img)


def render_heatmap(table, spec, path):
    save_png(heatmap_raster(table, spec), path)


# --- false-positive gallery ---------------------------------------------------------------

@dataclass(frozen=True)
class Gallery:
    index_path: Path
    counts: dict  # (true, predicted) -> uncapped count
    exported: tuple  # (sample_id, true, predicted, dataset, split, relative file)


def export_false_positives(datatable, catalog, model_id, out_dir, limit=None, split=None):
    """Copy misclassified samples into ``<true>__as__<predicted>/`` folders plus ``index.csv``.

    Selection inside a folder is by ascending sample id, at most ``limit``.
    """
    if model_id not in datatable.model_ids:
        raise EvaluationError(f"model {model_id!r} is not in the data table")
    paths = {s.sample_id: s.path for s in catalog.samples()}
    groups = {}
    for (mid, dataset_id, sp), recs in sorted(datatable.records.items()):
        if mid != model_id or (split is not None and sp != split):
            continue
        for sid, true, pred in recs:
            if true != pred:
                groups.setdefault((true, pred), []).append((sid, dataset_id, sp))
    out_dir = Path(out_dir)
    exported = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for (true, pred), items in sorted(groups.items()):
            items.sort()
            chosen = items if limit is None else items[:limit]
            folder = out_dir / f"{true}__as__{pred}"
            folder.mkdir(exist_ok=True)
            for sid, dataset_id, sp in chosen:
                src = Path(paths[sid])
                dst = folder / f"{sid}{src.suffix or '.png'}"
                shutil.copyfile(src, dst)
                exported.append((sid, true, pred, dataset_id, sp, dst.relative_to(out_dir).as_posix()))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sample_id", "true", "predicted", "dataset", "split", "file"])
        w.writerows(exported)
        index_path = out_dir / "index.csv"
        index_path.write_text(buf.getvalue(), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write gallery under {out_dir}: {exc}") from exc
    counts = {k: len(v) for k, v in sorted(groups.items())}
    return Gallery(index_path, counts, tuple(exported))
