"""Procedurally drawn stand-in sign images and background textures.

Used to build self-contained demo and test corpora without any licensed
dataset. Glyphs are rendered at 4x supersampling and box-filtered, and carry
an alpha channel marking the sign shape.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .catalog import DEFAULT_CLASSES
from .imaging import Raster, RandomSource, quantize, resize_float, save_png

RED = (200, 16, 32)
WHITE = (250, 250, 250)
BLACK = (20, 20, 20)
SS = 4

_SEGMENTS = {
    "0": "abcdef", "1": "bc", "2": "abdeg", "3": "abcdg", "4": "bcfg",
    "5": "acdfg", "6": "acdefg", "7": "abc", "8": "abcdefg", "9": "abcdfg",
}


def _grid(size):
    n = size * SS
    c = (np.arange(n) + 0.5) / n
    return np.meshgrid(c, c)


def _circle(xs, ys, r):
    return (xs - 0.5) ** 2 + (ys - 0.5) ** 2 <= r * r


def _polygon(xs, ys, verts):
    inside = np.ones(xs.shape, dtype=bool)
    n = len(verts)
    area = sum(verts[i][0] * verts[(i + 1) % n][1] - verts[(i + 1) % n][0] * verts[i][1] for i in range(n))
    sign = 1.0 if area > 0 else -1.0
    for i in range(n):
        (ax, ay), (bx, by) = verts[i], verts[(i + 1) % n]
        inside &= sign * ((bx - ax) * (ys - ay) - (by - ay) * (xs - ax)) >= 0
    return inside


def _rect(xs, ys, x0, y0, x1, y1):
    return (xs >= x0) & (xs <= x1) & (ys >= y0) & (ys <= y1)


def _digit(xs, ys, ch, x0, y0, w, h, t):
    segs = _SEGMENTS[ch]
    m = np.zeros(xs.shape, dtype=bool)
    mid = y0 + h / 2
    boxes = {
        "a": (x0, y0, x0 + w, y0 + t),
        "b": (x0 + w - t, y0, x0 + w, mid),
        "c": (x0 + w - t, mid, x0 + w, y0 + h),
        "d": (x0, y0 + h - t, x0 + w, y0 + h),
        "e": (x0, mid, x0 + t, y0 + h),
        "f": (x0, y0, x0 + t, mid),
        "g": (x0, mid - t / 2, x0 + w, mid + t / 2),
    }
    for s in segs:
        m |= _rect(xs, ys, *boxes[s])
    return m


def _layers(class_id, xs, ys):
    """Ordered (mask, color) layers for one class."""
    if class_id.startswith("speed-"):
        text = class_id.split("-", 1)[1]
        layers = [(_circle(xs, ys, 0.47), RED), (_circle(xs, ys, 0.36), WHITE)]
        n = len(text)
        dw, gap = (0.15, 0.04) if n == 2 else (0.11, 0.03)
        total = n * dw + (n - 1) * gap
        x = 0.5 - total / 2
        digits = np.zeros(xs.shape, dtype=bool)
        for ch in text:
            digits |= _digit(xs, ys, ch, x, 0.33, dw, 0.34, 0.045)
            x += dw + gap
        layers.append((digits, BLACK))
        return layers
    if class_id == "no-entry":
        return [(_circle(xs, ys, 0.47), RED), (_rect(xs, ys, 0.2, 0.42, 0.8, 0.58), WHITE)]
    if class_id == "stop":
        k = np.arange(8)
        ang = np.pi / 8 + k * np.pi / 4
        verts = list(zip(0.5 + 0.48 * np.cos(ang), 0.5 + 0.48 * np.sin(ang)))
        inner = list(zip(0.5 + 0.42 * np.cos(ang), 0.5 + 0.42 * np.sin(ang)))
        letters = np.zeros(xs.shape, dtype=bool)
        for i in range(4):
            x0 = 0.2 + i * 0.155
            letters |= _rect(xs, ys, x0, 0.4, x0 + 0.11, 0.6) & ~_rect(xs, ys, x0 + 0.035, 0.45, x0 + 0.075, 0.55)
        return [(_polygon(xs, ys, verts), WHITE), (_polygon(xs, ys, inner), RED), (letters, WHITE)]
    if class_id == "yield":
        outer = [(0.03, 0.08), (0.97, 0.08), (0.5, 0.92)]
        inner = [(0.18, 0.17), (0.82, 0.17), (0.5, 0.74)]
        return [(_polygon(xs, ys, outer), RED), (_polygon(xs, ys, inner), WHITE)]
    raise KeyError(f"no glyph for class {class_id!r}")


def render_glyph(class_id, size=48):
    """Return (Raster over white, alpha mask in [0, 1]) for a stand-in sign."""
    xs, ys = _grid(size)
    rgb = np.zeros(xs.shape + (3,))
    alpha = np.zeros(xs.shape)
    for mask, color in _layers(class_id, xs, ys):
        rgb[mask] = color
        alpha[mask] = 1.0
    rgb = rgb.reshape(size, SS, size, SS, 3).mean(axis=(1, 3))
    alpha = alpha.reshape(size, SS, size, SS).mean(axis=(1, 3))
    # premultiplied → straight colors, then composite over white for the raster
    straight = np.where(alpha[..., None] > 0, rgb / np.maximum(alpha[..., None], 1e-12), 255.0)
    over_white = straight * alpha[..., None] + 255.0 * (1.0 - alpha[..., None])
    return Raster.from_float(over_white), alpha


def write_canonicals(out_dir, classes=DEFAULT_CLASSES, size=48):
    """Write ``<class>.png`` RGBA glyphs; returns the directory."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for c in classes:
        r, alpha = render_glyph(c, size)
        rgba = np.concatenate([r.pixels, quantize(alpha * 255.0)[..., None]], axis=-1)
        Image.fromarray(rgba, "RGBA").save(out_dir / f"{c}.png", format="PNG")
    return out_dir


def procedural_background(rng, size=64):
    """Smooth random color field with a few stripes, like road-side clutter."""
    coarse = rng.uniform(30.0, 220.0, size=(4, 4, 3))
    field = resize_float(coarse, size, size)
    field += rng.normal(0.0, 12.0, size=field.shape)
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    for _ in range(int(rng.integers(1, 3))):
        theta = rng.uniform(0.0, np.pi)
        period = rng.uniform(6.0, 20.0)
        amp = rng.uniform(15.0, 50.0)
        phase = (xs * np.cos(theta) + ys * np.sin(theta)) * (2 * np.pi / period)
        field += amp * np.sign(np.sin(phase))[..., None]
    return Raster.from_float(field)


def procedural_backgrounds(seed, count, size=64):
    root = RandomSource(seed)
    return [procedural_background(root.derive(f"bg/{i}"), size) for i in range(count)]


def write_backgrounds(out_dir, seed, count, size=64):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, bg in enumerate(procedural_backgrounds(seed, count, size)):
        save_png(bg, out_dir / f"bg_{i:03d}.png")
    return out_dir
