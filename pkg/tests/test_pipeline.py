import numpy as np
import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

from signsynth.augment import transforms as T
from signsynth.augment.pipeline import KINDS, PARAMS, AugmentationStep, Pipeline, apply_pipeline, load_pipeline
from signsynth.augment.quality import QualityThresholds, quality_filter
from signsynth.errors import ConfigError, EmptyBackgroundPool, InvalidParameter, MaskMismatch
from signsynth.glyphs import render_glyph
from signsynth.imaging import Raster, RandomSource


def sign(size=32):
    return render_glyph("stop", size)


def every_kind(p=1.0):
    return Pipeline(steps=[AugmentationStep(k, p) for k in KINDS], master_seed=5)


def test_step_validation():
    assert AugmentationStep("noise", 0.5, {"sigma": [1, 2]}).params == {"sigma": (1.0, 2.0)}
    for bad in [
        dict(kind="warp", probability=1.0),
        dict(kind="noise", probability=1.5),
        dict(kind="noise", probability=1.0, params={"sigma": [3, 1]}),
        dict(kind="noise", probability=1.0, params={"sigma": [0, 30]}),
        dict(kind="noise", probability=1.0, params={"mu": [0, 1]}),
        dict(kind="morphological", probability=1.0, params={"radius": [1, 1.5]}),
        dict(kind="morphological", probability=1.0, choices={"op": ["open"]}),
        dict(kind="rotation", probability=1.0, params={"angle": [-200, 0]}),
    ]:
        with pytest.raises(InvalidParameter):
            AugmentationStep(**bad)


def test_every_kind_has_a_legal_default():
    for kind, specs in PARAMS.items():
        step = AugmentationStep(kind, 1.0)
        for name, (lo, hi) in step.params.items():
            assert specs[name].lo <= lo <= hi <= specs[name].hi


def test_probability_zero_is_identity():
    r, mask = sign()
    assert apply_pipeline(r, mask, every_kind(0.0), 123, [Raster.filled(8, 8, (1, 2, 3))]) == r


def test_fixed_zero_rotation_is_identity():
    r, mask = sign()
    p = Pipeline([AugmentationStep("rotation", 1.0, {"angle": [0, 0]})])
    assert apply_pipeline(r, mask, p, 9) == r


@pytest.mark.parametrize("kind,params", [
    ("scale", {"factor": [1, 1]}), ("shear", {"x": [0, 0], "y": [0, 0]}), ("perspective", {"offset": [0, 0]}),
    ("illuminance", {"delta": [0, 0], "gain": [1, 1]}), ("elastic", {"alpha": [0, 0]}),
    ("noise", {"sigma": [0, 0]}), ("padding", {"pad": [0, 0]}),
])
def test_zero_magnitude_steps_are_identity(kind, params):
    r, mask = sign()
    assert apply_pipeline(r, mask, Pipeline([AugmentationStep(kind, 1.0, params)]), 4) == r


def test_determinism_and_seed_sensitivity():
    r, mask = sign()
    bgs = [Raster(np.random.default_rng(1).integers(0, 256, (40, 40, 3), dtype=np.uint8))]
    p = every_kind(1.0)
    a = apply_pipeline(r, mask, p, 77, bgs)
    assert a == apply_pipeline(r, mask, p, 77, bgs)
    assert a != apply_pipeline(r, mask, p, 78, bgs)
    assert a.size == r.size


def test_geometric_run_is_one_resample():
    r, mask = sign()
    p = Pipeline([AugmentationStep("rotation", 1.0, {"angle": [30, 30]}),
                  AugmentationStep("scale", 1.0, {"factor": [0.8, 0.8]})])
    out = apply_pipeline(r, None, p, 1)
    m = T.scale_matrix(0.8, 32, 32) @ T.rotation_matrix(30.0, 32, 32)
    assert out == T.warp_homography(r, m, (0, 0, 0))
    chained = T.apply_geometric(T.apply_geometric(r, "rotation", {"angle": 30.0}), "scale", {"factor": 0.8})
    assert out != chained  # a chain resamples twice


def test_draws_follow_documented_streams():
    """Firing draw, sorted params, then choices; all from derive(sample, 'step{i}:{kind}')."""
    step = AugmentationStep("morphological", 1.0, {"radius": [1, 2]})
    p = Pipeline([step])
    r = Raster(np.random.default_rng(3).integers(0, 256, (16, 16, 3), dtype=np.uint8))
    srng = RandomSource(55).derive("step0:morphological")
    assert srng.random() < 1.0
    radius = int(srng.integers(1, 2))
    op = ("erode", "dilate")[int(srng.integers(0, 1))]
    assert apply_pipeline(r, None, p, 55) == T.apply_morphological(r, op, radius)


def test_background_composite_requires_pool_and_mask(caplog):
    r, mask = sign()
    p = Pipeline([AugmentationStep("background_composite", 1.0)])
    with pytest.raises(EmptyBackgroundPool):
        apply_pipeline(r, mask, p, 1, [])
    assert apply_pipeline(r, None, p, 1, [r]) == r  # no mask: skipped with a warning
    with pytest.raises(MaskMismatch):
        apply_pipeline(r, np.ones((3, 3)), p, 1, [r])


def test_mask_travels_with_geometry():
    r, mask = sign()
    bg = [Raster.filled(32, 32, (0, 0, 255))]
    p = Pipeline([AugmentationStep("scale", 1.0, {"factor": [0.5, 0.5]}),
                  AugmentationStep("background_composite", 1.0, {"crop": [1, 1]})])
    out = apply_pipeline(r, mask, p, 2, bg)
    # the shrunken sign sits in the middle; the border is background, not geometric fill
    assert out.pixels[0, 0].tolist() == [0, 0, 255]
    assert out.pixels[16, 16, 0] > 150  # red stop face


def test_config_round_trip(tmp_path):
    cfg = {
        "seed": 11, "fill": [1, 2, 3],
        "steps": [
            {"kind": "rotation", "probability": 0.7, "params": {"angle": [-10, 10]}},
            {"kind": "morphological", "probability": 0.2, "params": {"radius": [1, 2]}, "choices": {"op": ["erode"]}},
            {"kind": "padding", "probability": 0.3, "params": {"pad": [0, 0.1]}, "fill": [9, 9, 9]},
        ],
    }
    path = tmp_path / "p.yaml"
    path.write_text(yaml.safe_dump(cfg))
    p = load_pipeline(path)
    assert p.master_seed == 11 and p.fill == (1, 2, 3)
    assert Pipeline.from_dict(p.to_dict()) == p
    assert load_pipeline(path, master_seed=3).master_seed == 3


@pytest.mark.parametrize("bad", [
    {"steps": [{"kind": "noise", "probability": 1, "params": {"sigma": [0, 99]}}]},
    {"steps": [{"probability": 1}]},
    {"steps": {"kind": "noise"}},
    {"stepz": []},
    {"steps": [{"kind": "noise", "probabilty": 1}]},
    {"fill": [300, 0, 0]},
])
def test_config_errors(bad):
    with pytest.raises(ConfigError):
        Pipeline.from_dict(bad)


def test_relative_parameters_scale_with_size():
    step = AugmentationStep("padding", 1.0, {"pad": [0.25, 0.25]})
    assert step.draw(RandomSource(1), 40, 80)["pads"] == (10, 10, 10, 10)
    step = AugmentationStep("perspective", 1.0, {"offset": [0.1, 0.1]})
    assert np.allclose(step.draw(RandomSource(1), 50, 30)["offset"], 3.0)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**64 - 1))
def test_pipeline_preserves_canvas(seed):
    r, mask = sign(24)
    out = apply_pipeline(r, mask, every_kind(0.6), seed, [Raster.filled(30, 30, (90, 120, 60))])
    assert out.size == (24, 24)


# --- quality filter --------------------------------------------------------------------------

def test_quality_examples():
    assert quality_filter(Raster.filled(8, 8, (0, 0, 0))).reason == "too dark"
    assert quality_filter(Raster.filled(8, 8, (250, 250, 250))).reason == "too bright"
    assert quality_filter(Raster.filled(8, 8, (128, 128, 128))).reason == "low variance"
    for c in ("stop", "yield", "speed-50", "no-entry"):
        assert quality_filter(render_glyph(c, 32)[0]).accepted


def test_quality_fill_dominated():
    px = np.zeros((10, 10, 3), dtype=np.uint8)
    px[:, :2] = 255
    px[:1, 2:] = (10, 200, 40)  # 72% of pixels equal the fill
    v = quality_filter(Raster(px), QualityThresholds(min_mean=0))
    assert not v.accepted and v.reason == "fill dominated"
