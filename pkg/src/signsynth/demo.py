"""Self-contained demo project built from procedurally drawn stand-in signs.

``python -m signsynth.demo DIR [--run]`` writes canonical glyphs, background
pools, pipeline files and run configs under DIR. With ``--run`` it also
generates every dataset and evaluates a plain-trained against an
augmentation-trained reference model on three held-out domains.

Layout::

    DIR/canonicals/<class>.png       RGBA stand-in signs
    DIR/backgrounds/{train,test}/    disjoint background pools
    DIR/pipelines/*.yaml             plain, full and three test-domain pipelines
    DIR/configs/gen_<id>.yaml        one generate config per dataset
    DIR/configs/evaluate.yaml        evaluate config over all datasets
    DIR/data/<id>/                   generated datasets (after --run)
    DIR/results/                     evaluation output (after --run)
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .glyphs import write_backgrounds, write_canonicals

TRAIN_BACKGROUND_SEED = 11
TEST_BACKGROUND_SEED = 99
BACKGROUND_COUNT = 24
PIPELINES = ("plain", "full", "domain_geo", "domain_photo", "domain_mix")
TRAIN_SETS = {"plain": "plain", "full": "full"}
TEST_DOMAINS = {"dom-geo": "domain_geo", "dom-photo": "domain_photo", "dom-mix": "domain_mix"}


def pipeline_text(name):
    """Text of a bundled pipeline file (``plain``, ``full``, ``domain_geo`` ...)."""
    return resources.files("signsynth.data").joinpath(f"{name}_pipeline.yaml" if name in TRAIN_SETS
                                                      else f"{name}.yaml").read_text(encoding="utf-8")


@dataclass(frozen=True)
class DemoProject:
    root: Path
    generate_configs: dict  # dataset id -> config path
    evaluate_config: Path


def _dump(path, obj):
    path.write_text(yaml.safe_dump(obj, sort_keys=False), encoding="utf-8")
    return path


def build_demo(root, per_class=200, test_per_class=40):
    root = Path(root)
    write_canonicals(root / "canonicals")
    write_backgrounds(root / "backgrounds" / "train", TRAIN_BACKGROUND_SEED, BACKGROUND_COUNT)
    write_backgrounds(root / "backgrounds" / "test", TEST_BACKGROUND_SEED, BACKGROUND_COUNT)
    pipes = root / "pipelines"
    pipes.mkdir(parents=True, exist_ok=True)
    for name in PIPELINES:
        (pipes / f"{name}.yaml").write_text(pipeline_text(name), encoding="utf-8")
    configs = root / "configs"
    configs.mkdir(exist_ok=True)

    gen = {}
    plan = [(d, p, per_class, "TR", "train") for d, p in TRAIN_SETS.items()]
    plan += [(d, p, test_per_class, "TE", "test") for d, p in TEST_DOMAINS.items()]
    for dataset_id, pipe, count, split, pool in plan:
        section = {
            "canonical_dir": "../canonicals",
            "pipeline": f"../pipelines/{pipe}.yaml",
            "per_class_count": count,
            "dataset_id": dataset_id,
            "split": split,
        }
        if pipe != "plain":
            section["background_dir"] = f"../backgrounds/{pool}"
        gen[dataset_id] = _dump(configs / f"gen_{dataset_id}.yaml", {"output": "../data", "generate": section})

    evaluate = _dump(configs / "evaluate.yaml", {
        "output": "../results",
        "split": "te",
        "gallery_limit": 10,
        "datasets": [{"id": d, "manifest": f"../data/{d}/manifest.csv"} for d in gen],
        "models": [{"id": f"ref-{d}", "provider": "reference-classifier", "train_dataset": d} for d in TRAIN_SETS],
    })
    return DemoProject(root, gen, evaluate)


def main(argv=None):
    ap = argparse.ArgumentParser(prog="python -m signsynth.demo", description="write a demo project")
    ap.add_argument("root", type=Path)
    ap.add_argument("--per-class", type=int, default=200)
    ap.add_argument("--test-per-class", type=int, default=40)
    ap.add_argument("--run", action="store_true", help="also generate all datasets and evaluate")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)
    project = build_demo(args.root, args.per_class, args.test_per_class)
    print(f"demo project written to {project.root}", file=sys.stderr)
    if not args.run:
        return 0
    from .cli import main as cli_main

    for cfg in project.generate_configs.values():
        code = cli_main(["generate", "--config", str(cfg), "--threads", str(args.threads)])
        if code:
            return code
    return cli_main(["evaluate", "--config", str(project.evaluate_config), "--threads", str(args.threads)])


if __name__ == "__main__":
    sys.exit(main())
