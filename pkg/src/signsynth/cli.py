"""``signsynth`` command line: validate, generate, evaluate.

Exit codes: 0 ok, 2 config, 3 generation, 4 evaluation, 5 I/O.
Logs go to stderr; stdout carries only results (coverage table, matrix).
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import __version__
from .augment.generate import GenerationSpec, find_canonicals, generate_dataset
from .augment.pipeline import Pipeline, load_pipeline
from .augment.quality import QualityThresholds
from .catalog import Catalog, ingest_manifest
from .classifier import (
    Model,
    load_prediction_log,
    load_reference,
    save_reference,
    train_reference,
)
from .config import load_run_config, parse_split
from .errors import (
    CatalogError,
    ClassifierError,
    ConfigError,
    EvaluationError,
    GenerationError,
    InsufficientCanonicals,
    InvalidParameter,
    IoError,
    SignSynthError,
)
from .evaluation import (
    ARITHMETIC,
    GEOMETRIC,
    generate_data_tables,
    generate_model_matrix,
    own_domain_table,
    signs_vs_model,
)
from .report import (
    HeatmapSpec,
    block_precision_grid,
    emit_table,
    export_false_positives,
    matrix_grid,
    own_domain_grid,
    render_heatmap,
    signs_grid,
)

log = logging.getLogger("signsynth")

EXIT_OK, EXIT_CONFIG, EXIT_GENERATION, EXIT_EVALUATION, EXIT_IO = 0, 2, 3, 4, 5
U64_MAX = 2**64 - 1


def exit_code_for(exc):
    if isinstance(exc, (IoError, OSError)):
        return EXIT_IO
    if isinstance(exc, (ConfigError, CatalogError, InvalidParameter, InsufficientCanonicals)):
        return EXIT_CONFIG
    if isinstance(exc, GenerationError):
        return EXIT_GENERATION
    if isinstance(exc, (EvaluationError, ClassifierError)):
        return EXIT_EVALUATION
    return EXIT_CONFIG


def _u64(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must be in [0, 2^64)")
    return v


def _threads(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("--threads must be >= 1")
    return v


def build_parser():
    parser = argparse.ArgumentParser(prog="signsynth", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("validate", "check manifests, label maps, coverage and pipeline parameters"),
        ("generate", "render a synthetic dataset from canonical images"),
        ("evaluate", "score models and write tables, matrix, heatmaps and galleries"),
    ):
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", required=True, type=Path, help="run configuration (YAML)")
        p.add_argument("--out", type=Path, help="output directory (overrides config 'output')")
        p.add_argument("--seed", type=_u64, help="master seed (overrides config 'seed')")
        p.add_argument("--threads", type=_threads, help="worker threads (output is identical for any value)")
        p.add_argument("--split", type=str.lower, choices=("tr", "te", "both"), help="evaluation split(s)")
        p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return parser


def _settings(args, check):
    cfg = load_run_config(args.config, check=check)
    if args.split is not None:
        cfg = replace(cfg, split=parse_split(args.split))
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.threads is not None:
        cfg = replace(cfg, threads=args.threads)
    if args.out is not None:
        cfg = replace(cfg, output=args.out)
    return cfg


def _out_dir(cfg):
    if cfg.output is None:
        raise ConfigError("no output directory: pass --out or set 'output' in the config")
    try:
        Path(cfg.output).mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output directory {cfg.output}: {exc}") from exc
    return Path(cfg.output)


def _pipeline(decl, seed):
    if decl.pipeline is None:
        return Pipeline(master_seed=seed or 0)
    return load_pipeline(decl.pipeline, master_seed=seed)


def _thresholds(decl, pipeline):
    try:
        return QualityThresholds.from_dict(decl.filter, fill=pipeline.fill)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"generate.filter: {exc}") from exc


# --- generate ------------------------------------------------------------------------

def cmd_generate(cfg):
    decl = cfg.generate
    if decl is None:
        raise ConfigError(f"{cfg.path}: no 'generate' section")
    pipeline = _pipeline(decl, cfg.seed)
    spec = GenerationSpec(
        canonical_dir=decl.canonical_dir,
        per_class_count=decl.per_class_count,
        pipeline=pipeline,
        filter=_thresholds(decl, pipeline),
        dataset_id=decl.dataset_id,
        country=decl.country,
        split=decl.split,
        classes=decl.classes,
        background_dir=decl.background_dir,
    )
    out = _out_dir(cfg) / decl.dataset_id
    log.info("generating %d samples/class into %s (seed %d)", decl.per_class_count, out, pipeline.master_seed)
    result = generate_dataset(spec, out, threads=cfg.threads)
    w = max(len("class"), *(len(c) for c in result.accepted))
    print(f"{'class':<{w}}  accepted  rejected")
    for c in sorted(result.accepted):
        print(f"{c:<{w}}  {result.accepted[c]:>8}  {result.rejected[c]:>8}")
    print(f"manifest: {result.manifest_path}")
    return EXIT_OK


# --- validate ------------------------------------------------------------------------

def _coverage_table(cfg, manifests):
    """Per-class, per-dataset TR/TE counts over the SCS."""
    cols = [(d.dataset_id, sp) for d in manifests for sp in ("TR", "TE")]
    counts = {d.dataset_id: d.class_counts() for d in manifests}
    classes = sorted(cfg.taxonomy.scs)
    head = ["class"] + [f"{d}/{sp}" for d, sp in cols]
    rows = [[c] + [str(counts[d].get((c, sp), 0)) for d, sp in cols] for c in classes]
    widths = [max(len(r[i]) for r in [head] + rows) for i in range(len(head))]
    lines = []
    for r in [head] + rows:
        cells = [r[0].ljust(widths[0])] + [v.rjust(widths[i]) for i, v in enumerate(r) if i]
        lines.append("  ".join(cells))
    return "\n".join(lines)


def cmd_validate(cfg):
    errors, warnings = [], []
    manifests = []
    for decl in cfg.datasets:
        try:
            manifests.append(ingest_manifest(decl.manifest, cfg.taxonomy, decl.dataset_id, decl.country))
        except CatalogError as exc:
            errors.append(f"dataset {decl.dataset_id}: {exc}")
    by_id = {d.dataset_id: d for d in manifests}

    for d in manifests:
        counts = d.class_counts()
        for c in sorted(d.declared_classes & cfg.taxonomy.scs):
            if counts.get((c, "TE"), 0) == 0:
                warnings.append(f"dataset {d.dataset_id}: class {c} has 0 TE samples (excluded from TE slices)")

    for m in cfg.models:
        try:
            if m.provider == "prediction-log":
                _, entries = load_prediction_log(m.log)
                classes = set(m.classes) if m.classes else None
                if classes is None and m.train_dataset in by_id:
                    classes = set(by_id[m.train_dataset].declared_classes)
                if classes is not None:
                    outside = sorted(set(entries.values()) - classes)
                    if outside:
                        errors.append(f"model {m.model_id}: predictions outside its class set: {outside}")
                    needed = [s.sample_id for d in manifests for s in d.samples
                              if s.class_id in classes and s.class_id in cfg.taxonomy.scs]
                    missing = sorted(set(needed) - set(entries))
                    if missing:
                        shown = ", ".join(missing[:5]) + (f" (+{len(missing) - 5} more)" if len(missing) > 5 else "")
                        errors.append(f"model {m.model_id}: no prediction for samples {shown}")
            elif m.model_file is not None:
                load_reference(m.model_file)
            elif m.train_dataset in by_id:
                d = by_id[m.train_dataset]
                empty = sorted(c for c in d.declared_classes if not d.class_counts().get((c, "TR")))
                if empty:
                    errors.append(f"model {m.model_id}: no TR samples in {d.dataset_id} for classes {empty}")
        except SignSynthError as exc:
            errors.append(f"model {m.model_id}: {exc}")

    if cfg.generate is not None:
        decl = cfg.generate
        try:
            pipeline = _pipeline(decl, cfg.seed)
            _thresholds(decl, pipeline)
            find_canonicals(decl.canonical_dir, decl.classes)
        except SignSynthError as exc:
            errors.append(f"generate: {exc}")

    if manifests:
        print(_coverage_table(cfg, manifests))
    for w in warnings:
        print(f"warning: {w}")
    for e in errors:
        print(f"error: {e}")
    print(f"{len(errors)} error(s), {len(warnings)} warning(s)")
    return EXIT_OK if not errors else EXIT_CONFIG


# --- evaluate ------------------------------------------------------------------------

def _build_models(cfg, catalog, out):
    models = []
    for m in cfg.models:
        if m.provider == "prediction-log":
            classes = m.classes
            if classes is None and m.train_dataset is not None:
                classes = catalog.dataset(m.train_dataset).declared_classes
            models.append(Model.from_log(m.log, classes, m.model_id, m.train_dataset))
            continue
        if m.model_file is not None:
            _, clf = load_reference(m.model_file)
        else:
            log.info("training reference model %s on %s/TR", m.model_id, m.train_dataset)
            clf = train_reference(catalog.dataset(m.train_dataset), "TR")
            (out / "models").mkdir(exist_ok=True)
            save_reference(clf, out / "models" / f"{m.model_id}.refmodel", m.model_id)
        models.append(Model(m.model_id, frozenset(clf.classes), clf, m.train_dataset))
    return models


def _prewarm(models, catalog, threads):
    """Fill reference-model prediction caches in parallel; results are per-sample, so order is irrelevant."""
    samples = list(catalog.samples())
    for m in models:
        if m.kind != "reference-classifier":
            continue
        todo = [s for s in samples if s.class_id in m.classes]
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                list(pool.map(m.predict, todo))
        else:
            for s in todo:
                m.predict(s)


def _emit(grid, out, stem, heatmap=None):
    emit_table(grid, "csv", out / f"{stem}.csv")
    emit_table(grid, "json", out / f"{stem}.json")
    if heatmap is not None and grid.rows and grid.cols:
        render_heatmap(grid, heatmap, out / f"{stem}.png")


def format_matrix(mm):
    ids = sorted(mm.model_ids)
    cell = [[("n/a" if mm.cells[(i, j)] is None else f"{mm.cells[(i, j)]:.4f}") for j in ids] for i in ids]
    w0 = max(len(i) for i in ids)
    widths = [max(len(ids[k]), *(len(r[k]) for r in cell)) for k in range(len(ids))]
    lines = [" " * w0 + "  " + "  ".join(i.rjust(w) for i, w in zip(ids, widths))]
    for i, row in zip(ids, cell):
        lines.append(i.ljust(w0) + "  " + "  ".join(v.rjust(w) for v, w in zip(row, widths)))
    return "\n".join(lines)


def cmd_evaluate(cfg):
    if not cfg.datasets:
        raise ConfigError(f"{cfg.path}: no datasets declared")
    if not cfg.models:
        raise ConfigError(f"{cfg.path}: no models declared")
    out = _out_dir(cfg)
    catalog = Catalog(cfg.taxonomy)
    for decl in cfg.datasets:
        catalog.ingest(decl.manifest, decl.dataset_id, decl.country)
    models = _build_models(cfg, catalog, out)
    _prewarm(models, catalog, cfg.threads)
    hm = dict(cfg.heatmap)
    try:
        spec_col = HeatmapSpec(axis="column", **hm)
        spec_row = HeatmapSpec(axis="row", **hm)
        spec_glob = HeatmapSpec(axis="global", **hm)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"heatmap: {exc}") from exc

    splits = cfg.splits
    dt = generate_data_tables(models, catalog, splits)
    emit_table(dt, "csv", out / "data_table.csv")
    emit_table(dt, "json", out / "data_table.json")
    for sp in splits:
        _emit(block_precision_grid(dt, sp), out, f"block_precision_{sp.lower()}", spec_col)

    for sp in splits:
        if len(models) >= 2:
            mm = generate_model_matrix(models, catalog, sp)
            _emit(matrix_grid(mm), out, f"model_matrix_{sp.lower()}", spec_glob)
            print(f"model matrix ({sp})")
            print(format_matrix(mm))
        else:
            log.warning("only one model: skipping the model matrix")
        for mean in (ARITHMETIC, GEOMETRIC):
            try:
                t = signs_vs_model(models, catalog, sp, mean)
            except EvaluationError as exc:
                log.warning("signs-vs-model (%s, %s) skipped: %s", sp, mean, exc)
                continue
            stem = f"signs_vs_model_{sp.lower()}_{mean}"
            _emit(signs_grid(t), out, stem)
            render_heatmap(signs_grid(t, marginals=False), spec_row, out / f"{stem}.png")

    own = []
    for m in models:
        if m.train_dataset is None:
            continue
        if not catalog.dataset(m.train_dataset).split("TE"):
            log.warning("own-domain: %s has no TE split, model %s left out", m.train_dataset, m.model_id)
            continue
        own.append(m)
    if own:
        t = own_domain_table(own, catalog)
        _emit(own_domain_grid(t), out, "own_domain")
        if t.classes:
            render_heatmap(own_domain_grid(t, summary=False), spec_col, out / "own_domain.png")

    for m in models:
        g = export_false_positives(dt, catalog, m.model_id, out / "galleries" / m.model_id, limit=cfg.gallery_limit)
        log.info("gallery %s: %d false positives in %d folders", m.model_id, sum(g.counts.values()), len(g.counts))
    log.info("results written to %s", out)
    return EXIT_OK


COMMANDS = {
    "validate": (cmd_validate, ("datasets", "models", "generate")),
    "generate": (cmd_generate, ("generate",)),
    "evaluate": (cmd_evaluate, ("datasets", "models")),
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    fn, check = COMMANDS[args.command]
    try:
        cfg = _settings(args, check)
        return fn(cfg)
    except SignSynthError as exc:
        code = exit_code_for(exc)
        print(f"signsynth {args.command}: error: {exc}", file=sys.stderr)
        return code
    except OSError as exc:
        print(f"signsynth {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
