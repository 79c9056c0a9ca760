"""Probabilistic augmentation pipeline.

A pipeline is an ordered list of steps. For every sample, step ``i`` gets its
own stream ``derive(sample_stream, "step{i}:{kind}")``: the first draw decides
whether the step fires, the following draws pick its parameters (uniform over
each configured [min, max] range, parameters in alphabetical order, then
categorical choices), and any randomness inside the transform comes from the
child stream ``"op"``.

Consecutive geometric steps (scale, rotation, shear, perspective) are composed
into one homography and resampled once, in configuration order.

Configuration (YAML)::

    fill: [0, 0, 0]          # color of uncovered pixels after geometric steps
    steps:
      - kind: rotation
        probability: 0.8
        params: {angle: [-15, 15]}
      - kind: morphological
        probability: 0.2
        params: {radius: [1, 2]}
        choices: {op: [erode, dilate]}
      - kind: padding
        probability: 0.3
        params: {pad: [0.0, 0.15]}
        fill: replicate

Ranges for ``perspective.offset``, ``padding.pad`` and
``specular_highlight.sigma`` are fractions of min(width, height).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
import yaml

from ..errors import ConfigError, EmptyBackgroundPool, InvalidParameter, MaskMismatch
from ..imaging import RandomSource, Raster, quantize
from . import transforms as T

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ParamSpec:
    lo: float
    hi: float
    default: tuple
    integer: bool = False
    relative: bool = False


PARAMS: dict[str, dict[str, ParamSpec]] = {
    "scale": {"factor": ParamSpec(0.05, 4.0, (0.8, 1.1))},
    "rotation": {"angle": ParamSpec(-180.0, 180.0, (-15.0, 15.0))},
    "shear": {"x": ParamSpec(-0.9, 0.9, (-0.15, 0.15)), "y": ParamSpec(-0.9, 0.9, (-0.15, 0.15))},
    "perspective": {"offset": ParamSpec(-0.45, 0.45, (-0.08, 0.08), relative=True)},
    "illuminance": {"delta": ParamSpec(-100.0, 100.0, (-50.0, 50.0)), "gain": ParamSpec(0.5, 1.8, (0.7, 1.3))},
    "structured_shadow": {"darken": ParamSpec(0.3, 0.8, (0.4, 0.7)), "softness": ParamSpec(0.0, 8.0, (0.0, 4.0))},
    "elastic": {"alpha": ParamSpec(0.0, 40.0, (0.0, 6.0)), "sigma": ParamSpec(4.0, 10.0, (4.0, 6.0))},
    "morphological": {"radius": ParamSpec(1, 2, (1, 1), integer=True)},
    "noise": {"sigma": ParamSpec(0.0, 25.0, (0.0, 10.0))},
    "specular_highlight": {
        "count": ParamSpec(1, 3, (1, 2), integer=True),
        "sigma": ParamSpec(0.0, 0.25, (0.08, 0.2), relative=True),
        "peak": ParamSpec(40.0, 160.0, (40.0, 120.0)),
    },
    "blur": {"sigma": ParamSpec(0.5, 3.0, (0.5, 1.2))},
    "padding": {"pad": ParamSpec(0.0, 0.3, (0.0, 0.15), relative=True)},
    "background_composite": {"crop": ParamSpec(0.05, 1.0, (0.5, 1.0))},
    "histogram_normalize": {},
}

CHOICES: dict[str, dict[str, tuple]] = {"morphological": {"op": ("erode", "dilate")}}

KINDS = tuple(PARAMS)


def _as_rgb(value, what):
    try:
        rgb = tuple(int(v) for v in value)
    except (TypeError, ValueError):
        raise InvalidParameter(f"{what} must be an RGB triple, got {value!r}") from None
    if len(rgb) != 3 or not all(0 <= v <= 255 for v in rgb):
        raise InvalidParameter(f"{what} must be an RGB triple in [0, 255], got {value!r}")
    return rgb


@dataclass(frozen=True)
class AugmentationStep:
    kind: str
    probability: float
    params: Mapping[str, tuple] = field(default_factory=dict)
    choices: Mapping[str, tuple] = field(default_factory=dict)
    fill: object = "replicate"  # padding only: "replicate" or RGB

    def __post_init__(self):
        if self.kind not in PARAMS:
            raise InvalidParameter(f"unknown augmentation kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        p = float(self.probability)
        if not 0.0 <= p <= 1.0:
            raise InvalidParameter(f"{self.kind}: probability {self.probability} outside [0, 1]")
        object.__setattr__(self, "probability", p)
        specs = PARAMS[self.kind]
        unknown = set(self.params) - set(specs)
        if unknown:
            raise InvalidParameter(f"{self.kind}: unknown parameters {sorted(unknown)}")
        ranges = {}
        for name, spec in specs.items():
            rng = self.params.get(name, spec.default)
            try:
                lo, hi = (float(v) for v in rng)
            except (TypeError, ValueError):
                raise InvalidParameter(f"{self.kind}.{name}: expected [min, max], got {rng!r}") from None
            if not lo <= hi:
                raise InvalidParameter(f"{self.kind}.{name}: min {lo} > max {hi}")
            if lo < spec.lo or hi > spec.hi:
                raise InvalidParameter(f"{self.kind}.{name}: range [{lo}, {hi}] outside legal [{spec.lo}, {spec.hi}]")
            if spec.integer and (lo != int(lo) or hi != int(hi)):
                raise InvalidParameter(f"{self.kind}.{name}: integer range required")
            ranges[name] = (lo, hi)
        object.__setattr__(self, "params", ranges)
        legal = CHOICES.get(self.kind, {})
        unknown = set(self.choices) - set(legal)
        if unknown:
            raise InvalidParameter(f"{self.kind}: unknown choices {sorted(unknown)}")
        chosen = {}
        for name, allowed in legal.items():
            opts = tuple(self.choices.get(name, allowed))
            if not opts or any(o not in allowed for o in opts):
                raise InvalidParameter(f"{self.kind}.{name}: choices must be a non-empty subset of {list(allowed)}")
            chosen[name] = opts
        object.__setattr__(self, "choices", chosen)
        if self.kind == "padding" and self.fill != "replicate":
            object.__setattr__(self, "fill", _as_rgb(self.fill, "padding fill"))

    @property
    def geometric(self):
        return self.kind in T.GEOMETRIC_KINDS

    def draw(self, rng, w, h):
        """Draw concrete parameter values (pixels for relative ranges)."""
        base = min(w, h)
        out = {}
        for name in sorted(self.params):
            spec = PARAMS[self.kind][name]
            lo, hi = self.params[name]
            if self.kind == "perspective":
                vals = lo + (hi - lo) * rng.random(8)
                out[name] = vals.reshape(4, 2) * base
                continue
            if self.kind == "padding":
                lo_px = int(np.ceil(lo * base - 1e-9))
                hi_px = max(lo_px, int(np.floor(hi * base + 1e-9)))
                out["pads"] = T.draw_pads(rng, lo_px, hi_px)
                continue
            if spec.integer:
                v = int(rng.integers(int(lo), int(hi)))
            else:
                v = lo + (hi - lo) * float(rng.random())
            out[name] = v * base if spec.relative else v
        for name in sorted(self.choices):
            opts = self.choices[name]
            out[name] = opts[int(rng.integers(0, len(opts) - 1))]
        return out

    def to_dict(self):
        d = {"kind": self.kind, "probability": self.probability,
             "params": {k: list(v) for k, v in self.params.items()}}
        if self.choices:
            d["choices"] = {k: list(v) for k, v in self.choices.items()}
        if self.kind == "padding":
            d["fill"] = self.fill if self.fill == "replicate" else list(self.fill)
        return d


@dataclass(frozen=True)
class Pipeline:
    steps: tuple = ()
    master_seed: int = 0
    fill: tuple = (0, 0, 0)

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "fill", _as_rgb(self.fill, "pipeline fill"))
        object.__setattr__(self, "master_seed", int(self.master_seed))

    @classmethod
    def from_dict(cls, data, master_seed=None):
        if not isinstance(data, Mapping):
            raise ConfigError("pipeline configuration must be a mapping")
        unknown = set(data) - {"steps", "fill", "seed"}
        if unknown:
            raise ConfigError(f"unknown pipeline keys {sorted(unknown)}")
        raw_steps = data.get("steps") or []
        if not isinstance(raw_steps, list):
            raise ConfigError("pipeline 'steps' must be a list")
        steps = []
        for n, raw in enumerate(raw_steps):
            if not isinstance(raw, Mapping) or "kind" not in raw:
                raise ConfigError(f"step {n}: expected a mapping with 'kind'")
            extra = set(raw) - {"kind", "probability", "params", "choices", "fill"}
            if extra:
                raise ConfigError(f"step {n} ({raw['kind']}): unknown keys {sorted(extra)}")
            try:
                steps.append(AugmentationStep(
                    kind=raw["kind"],
                    probability=raw.get("probability", 1.0),
                    params=raw.get("params") or {},
                    choices=raw.get("choices") or {},
                    fill=raw.get("fill", "replicate"),
                ))
            except InvalidParameter as exc:
                raise ConfigError(f"step {n}: {exc}") from exc
        seed = master_seed if master_seed is not None else data.get("seed", 0)
        try:
            return cls(steps=steps, master_seed=seed, fill=data.get("fill", (0, 0, 0)))
        except (InvalidParameter, TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self):
        return {"seed": self.master_seed, "fill": list(self.fill), "steps": [s.to_dict() for s in self.steps]}


def load_pipeline(path, master_seed=None):
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read pipeline config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from exc
    return Pipeline.from_dict(data or {}, master_seed=master_seed)


_warned_no_mask = False


class _State:
    """Image being augmented plus the alpha mask that follows spatial steps."""

    def __init__(self, raster, mask, fill):
        self.raster = raster
        self.mask = None if mask is None else np.asarray(mask, dtype=np.float64)
        self.fill = fill
        self.pending = np.eye(3)

    def _stack(self):
        arr = self.raster.as_float()
        if self.mask is None:
            return arr
        return np.concatenate([arr, self.mask[..., None]], axis=-1)

    def _unstack(self, arr):
        self.raster = Raster(quantize(arr[..., :3]))
        if self.mask is not None:
            self.mask = np.clip(arr[..., 3], 0.0, 1.0)

    def flush(self):
        if np.array_equal(self.pending, np.eye(3)):
            return
        fill = np.array(self.fill + ((0.0,) if self.mask is not None else ()), dtype=np.float64)
        self._unstack(T.warp_arrays(self._stack(), self.pending, fill))
        self.pending = np.eye(3)

    def spatial(self, fn):
        self._unstack(fn(self._stack()))


def apply_pipeline(r, mask, pipeline, sample_seed, backgrounds=()):
    """Run ``pipeline`` on ``r``; deterministic in (pipeline, sample_seed)."""
    rng = sample_seed if isinstance(sample_seed, RandomSource) else RandomSource(sample_seed)
    if mask is not None and np.shape(mask) != (r.height, r.width):
        raise MaskMismatch(f"mask shape {np.shape(mask)} does not match raster {r.height}x{r.width}")
    st = _State(r, mask, pipeline.fill)
    w, h = r.width, r.height
    for i, step in enumerate(pipeline.steps):
        srng = rng.derive(f"step{i}:{step.kind}")
        if not srng.random() < step.probability:
            continue
        params = step.draw(srng, w, h)
        op_rng = srng.derive("op")
        if step.geometric:
            if step.kind == "perspective":
                params = {"offsets": params["offset"]}
            st.pending = T.geometric_matrix(step.kind, params, w, h) @ st.pending
            continue
        st.flush()
        _apply_step(st, step, params, op_rng, backgrounds)
    st.flush()
    return st.raster


def _apply_step(st, step, p, rng, backgrounds):
    r = st.raster
    kind = step.kind
    if kind == "illuminance":
        st.raster = T.apply_illuminance(r, p["delta"], p["gain"])
    elif kind == "structured_shadow":
        st.raster = T.apply_structured_shadow(r, rng, p["darken"], p["softness"])
    elif kind == "specular_highlight":
        sigma = min(max(2.0, p["sigma"]), max(2.0, 0.25 * min(r.width, r.height)))
        st.raster = T.apply_specular_highlight(r, rng, p["count"], sigma, p["peak"])
    elif kind == "elastic":
        if p["alpha"] > 0.0:
            st.spatial(lambda arr: T.elastic_arrays(arr, rng, p["alpha"], p["sigma"]))
    elif kind == "morphological":
        st.raster = T.apply_morphological(r, p["op"], p["radius"])
    elif kind == "noise":
        st.raster = T.apply_noise(r, rng, p["sigma"])
    elif kind == "blur":
        st.raster = T.apply_blur(r, p["sigma"])
    elif kind == "padding":
        pads = p["pads"]
        if any(pads):
            fill = step.fill
            if fill != "replicate" and st.mask is not None:
                fill = tuple(fill) + (0,)
            st.spatial(lambda arr: T.pad_arrays(arr, pads, fill))
    elif kind == "background_composite":
        if st.mask is None:
            global _warned_no_mask
            if not _warned_no_mask:
                log.warning("background_composite skipped: sample has no alpha mask")
                _warned_no_mask = True
            return
        if not backgrounds:
            raise EmptyBackgroundPool("background_composite step configured but no backgrounds supplied")
        bg = T.random_background_crop(backgrounds, rng, r.width, r.height, (p["crop"], p["crop"]))
        st.raster = T.composite(r, st.mask, bg)
        st.mask = np.ones_like(st.mask)
    elif kind == "histogram_normalize":
        st.raster = T.apply_histogram_normalize(r)
    else:  # pragma: no cover - guarded by AugmentationStep
        raise InvalidParameter(kind)
