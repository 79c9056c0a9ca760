import importlib
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from signsynth import _kernels_py as ref
from signsynth import kernels

try:
    from signsynth import _kernels as ext
except ImportError:  # pragma: no cover - extension not built
    ext = None

needs_ext = pytest.mark.skipif(ext is None, reason="compiled extension not built")


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "numpy")
    if ext is not None:
        assert kernels.BACKEND == "cython"


def test_env_forces_fallback():
    code = "import signsynth.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, SIGNSYNTH_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def _arrays(seed, h, w, c):
    rng = np.random.default_rng(seed)
    src = rng.uniform(0, 255, size=(h, w, c))
    mx = rng.uniform(-3, w + 2, size=(h, w))
    my = rng.uniform(-3, h + 2, size=(h, w))
    return src, mx, my


@needs_ext
@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), h=st.integers(1, 12), w=st.integers(1, 12), c=st.sampled_from([1, 3, 4]),
       use_fill=st.booleans())
def test_remap_bit_identical(seed, h, w, c, use_fill):
    src, mx, my = _arrays(seed, h, w, c)
    mx[0, 0] = np.nan
    fill = np.arange(c, dtype=np.float64) * 10.0
    a = ref.remap(src, mx, my, fill, use_fill)
    b = ext.remap(src, mx, my, fill, use_fill)
    assert np.array_equal(a, b, equal_nan=True)


@needs_ext
@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), h=st.integers(1, 15), w=st.integers(1, 15), radius=st.integers(0, 9))
def test_blur_bit_identical(seed, h, w, radius):
    src = np.random.default_rng(seed).uniform(0, 255, size=(h, w, 3))
    k = np.random.default_rng(seed + 1).uniform(0.1, 1, size=2 * radius + 1)
    k /= k.sum()
    assert np.array_equal(ref.blur(src, k), ext.blur(src, k))


@needs_ext
@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), h=st.integers(1, 15), w=st.integers(1, 15), radius=st.integers(1, 2),
       dilate=st.booleans())
def test_morph_bit_identical(seed, h, w, radius, dilate):
    src = np.random.default_rng(seed).integers(0, 256, size=(h, w, 3), dtype=np.uint8)
    assert np.array_equal(ref.morph(src, radius, dilate), ext.morph(src, radius, dilate))


@pytest.mark.parametrize("mod", [ref] + ([ext] if ext is not None else []), ids=lambda m: m.BACKEND)
def test_remap_semantics(mod):
    src = np.arange(6, dtype=np.float64).reshape(2, 3, 1)
    # integer coordinates reproduce the source; half-way points average neighbours
    ys, xs = np.mgrid[0:2, 0:3].astype(np.float64)
    assert np.array_equal(mod.remap(src, xs, ys, np.zeros(1), False), src)
    mid = mod.remap(src, np.array([[0.5]]), np.array([[0.5]]), np.zeros(1), False)
    assert mid[0, 0, 0] == pytest.approx((0 + 1 + 3 + 4) / 4)
    # clamp vs fill outside the half-pixel border
    far = np.array([[10.0, -0.5]])
    zero = np.array([[0.0, 0.0]])
    clamped = mod.remap(src, far, zero, np.zeros(1), False)
    assert clamped[0, :, 0].tolist() == [2.0, 0.0]
    filled = mod.remap(src, far, zero, np.array([99.0]), True)
    assert filled[0, :, 0].tolist() == [99.0, 0.0]


@pytest.mark.parametrize("mod", [ref] + ([ext] if ext is not None else []), ids=lambda m: m.BACKEND)
def test_morph_window(mod):
    src = np.full((5, 5, 3), 255, dtype=np.uint8)
    src[2, 2] = 0
    out = mod.morph(src, 1, False)  # erode = min: the black pixel grows
    assert (out[..., 0] == 0).sum() == 9


def test_reload_is_stable():
    importlib.reload(kernels)
    assert kernels.BACKEND in ("cython", "numpy")


def test_benchmark_script_runs(capsys):
    import runpy
    from pathlib import Path

    mod = runpy.run_path(str(Path(__file__).parents[1] / "benchmarks" / "bench_kernels.py"))
    mod["main"](["--sizes", "16", "--repeat", "1"])
    out = capsys.readouterr().out
    assert "remap" in out and "morph" in out
