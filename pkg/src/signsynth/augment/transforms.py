"""Individual augmentation transforms.

Every transform maps a Raster to a Raster of the same size. Transforms that
need randomness take a RandomSource and draw from it in a fixed order, so the
output is a pure function of the input, the parameters, and the seed.
Spatial transforms also have ``*_arrays`` variants operating on float
(h, w, c) stacks so the pipeline can move an alpha mask along with the image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..errors import EmptyBackgroundPool, InvalidParameter, MaskMismatch
from ..imaging import Raster, luminance, resize_bilinear, resize_float

GEOMETRIC_KINDS = ("scale", "rotation", "shear", "perspective")


def _check(cond, msg):
    if not cond:
        raise InvalidParameter(msg)


def _in_range(name, value, lo, hi):
    _check(
        value is not None and math.isfinite(value) and lo <= value <= hi,
        f"{name}={value} outside [{lo}, {hi}]",
    )


# --- geometric -------------------------------------------------------------------

def _about_center(m, w, h):
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    to_origin = np.array([[1.0, 0.0, -cx], [0.0, 1.0, -cy], [0.0, 0.0, 1.0]])
    back = np.array([[1.0, 0.0, cx], [0.0, 1.0, cy], [0.0, 0.0, 1.0]])
    return back @ m @ to_origin


def rotation_matrix(angle_deg, w, h):
    """Counter-clockwise (as displayed, y down) rotation about the image center."""
    t = math.radians(angle_deg)
    c, s = math.cos(t), math.sin(t)
    return _about_center(np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]]), w, h)


def scale_matrix(factor, w, h):
    return _about_center(np.diag([factor, factor, 1.0]), w, h)


def shear_matrix(shear_x, shear_y, w, h):
    return _about_center(np.array([[1.0, shear_x, 0.0], [shear_y, 1.0, 0.0], [0.0, 0.0, 1.0]]), w, h)


def corner_points(w, h):
    return np.array([[0.0, 0.0], [w - 1.0, 0.0], [w - 1.0, h - 1.0], [0.0, h - 1.0]])


def homography_from_points(src, dst):
    """Solve the 3x3 homography (h33 = 1) mapping four src points onto dst."""
    a = np.zeros((8, 8))
    b = np.zeros(8)
    for n, ((x, y), (u, v)) in enumerate(zip(src, dst)):
        a[2 * n] = [x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y]
        a[2 * n + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y]
        b[2 * n] = u
        b[2 * n + 1] = v
    try:
        sol = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise InvalidParameter("degenerate perspective corners") from exc
    return np.append(sol, 1.0).reshape(3, 3)


def perspective_matrix(offsets, w, h):
    """Homography moving the four corners (TL, TR, BR, BL) by ``offsets`` pixels."""
    off = np.asarray(offsets, dtype=np.float64).reshape(4, 2)
    if not np.any(off):
        return np.eye(3)
    src = corner_points(w, h)
    return homography_from_points(src, src + off)


def geometric_matrix(kind, params, w, h):
    """Validate ``params`` for ``kind`` and return its forward homography."""
    if kind == "rotation":
        angle = float(params.get("angle", 0.0))
        _in_range("angle", angle, -180.0, 180.0)
        return np.eye(3) if angle == 0.0 else rotation_matrix(angle, w, h)
    if kind == "scale":
        factor = float(params.get("factor", 1.0))
        _check(math.isfinite(factor) and factor > 0.0, f"scale factor must be > 0, got {factor}")
        return np.eye(3) if factor == 1.0 else scale_matrix(factor, w, h)
    if kind == "shear":
        sx, sy = float(params.get("x", 0.0)), float(params.get("y", 0.0))
        _check(math.isfinite(sx) and math.isfinite(sy), "shear factors must be finite")
        _check(abs(sx * sy - 1.0) > 1e-9, "shear factors give a singular transform")
        return np.eye(3) if sx == 0.0 and sy == 0.0 else shear_matrix(sx, sy, w, h)
    if kind == "perspective":
        off = np.asarray(params.get("offsets", np.zeros((4, 2))), dtype=np.float64)
        _check(off.size == 8, "perspective needs 4 corner offsets (x, y)")
        limit = 0.45 * min(w, h)
        _check(
            bool(np.all(np.isfinite(off))) and float(np.max(np.abs(off))) <= limit,
            f"perspective corner offsets must satisfy |offset| <= {limit:g}px",
        )
        return perspective_matrix(off, w, h)
    raise InvalidParameter(f"not a geometric transform: {kind!r}")


def warp_arrays(arr, matrix, fill):
    """Inverse-map a float (h, w, c) stack through forward homography ``matrix``."""
    h, w = arr.shape[:2]
    if np.array_equal(matrix, np.eye(3)):
        return arr
    inv = np.linalg.inv(matrix)
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    den = inv[2, 0] * xs + inv[2, 1] * ys + inv[2, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        mx = (inv[0, 0] * xs + inv[0, 1] * ys + inv[0, 2]) / den
        my = (inv[1, 0] * xs + inv[1, 1] * ys + inv[1, 2]) / den
    behind = den <= 0.0
    mx[behind] = np.nan
    my[behind] = np.nan
    return kernels.remap(arr, mx, my, np.asarray(fill, dtype=np.float64), True)


def warp_homography(r, matrix, fill=(0, 0, 0)):
    if np.array_equal(matrix, np.eye(3)):
        return r
    return Raster.from_float(warp_arrays(r.as_float(), matrix, fill))


def apply_geometric(r, kind, params, fill=(0, 0, 0)):
    """Apply one geometric transform; the canvas size is kept and uncovered pixels get ``fill``."""
    return warp_homography(r, geometric_matrix(kind, params, r.width, r.height), fill)


# --- photometric -------------------------------------------------------------------

def apply_illuminance(r, brightness_delta=0.0, contrast_gain=1.0):
    """v' = gain * (v - 128) + 128 + delta, per channel, clamped."""
    delta = np.broadcast_to(np.asarray(brightness_delta, dtype=np.float64), (3,))
    _check(bool(np.all(np.abs(delta) <= 100.0)), f"brightness delta {brightness_delta} outside [-100, 100]")
    _in_range("contrast_gain", float(contrast_gain), 0.5, 1.8)
    if contrast_gain == 1.0 and not np.any(delta):
        return r
    return Raster.from_float(contrast_gain * (r.as_float() - 128.0) + 128.0 + delta)


@dataclass(frozen=True)
class HalfPlane:
    point: tuple
    normal: tuple

    def signed_distance(self, xs, ys):
        return (xs - self.point[0]) * self.normal[0] + (ys - self.point[1]) * self.normal[1]


@dataclass(frozen=True)
class ConvexPolygon:
    """Convex polygon whose vertex order has positive signed area (see polygon_area)."""

    vertices: tuple

    def signed_distance(self, xs, ys):
        verts = np.asarray(self.vertices, dtype=np.float64)
        inside_d = np.full(xs.shape, np.inf)
        outside_d = np.full(xs.shape, np.inf)
        n = len(verts)
        for i in range(n):
            ax, ay = verts[i]
            bx, by = verts[(i + 1) % n]
            ex, ey = bx - ax, by - ay
            length = math.hypot(ex, ey)
            line = ((ys - ay) * ex - (xs - ax) * ey) / length
            inside_d = np.minimum(inside_d, line)
            t = np.clip(((xs - ax) * ex + (ys - ay) * ey) / (length * length), 0.0, 1.0)
            seg = np.hypot(xs - (ax + t * ex), ys - (ay + t * ey))
            outside_d = np.minimum(outside_d, seg)
        return np.where(inside_d >= 0.0, inside_d, -outside_d)


def convex_hull(points):
    """Andrew's monotone chain; returns vertices with positive signed area."""
    pts = sorted(set(map(tuple, np.asarray(points, dtype=np.float64).tolist())))
    if len(pts) < 3:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def polygon_area(vertices):
    v = np.asarray(vertices, dtype=np.float64)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


SHADOW_POLYGON_ATTEMPTS = 8
SHADOW_MIN_AREA_FRACTION = 0.05


def draw_shadow_shape(rng, w, h):
    """Random convex polygon (3-6 vertices) or half-plane covering part of the frame.

    Degenerate polygons are redrawn up to 8 times before falling back to a
    half-plane.
    """
    if rng.random() < 0.5:
        for _ in range(SHADOW_POLYGON_ATTEMPTS):
            k = int(rng.integers(3, 6))
            xs = rng.uniform(-0.25 * w, 1.25 * w, size=k)
            ys = rng.uniform(-0.25 * h, 1.25 * h, size=k)
            hull = convex_hull(np.column_stack([xs, ys]))
            if len(hull) >= 3 and polygon_area(hull) >= SHADOW_MIN_AREA_FRACTION * w * h:
                return ConvexPolygon(tuple(hull))
    theta = rng.uniform(0.0, 2.0 * math.pi)
    px, py = rng.uniform(0.0, w - 1.0), rng.uniform(0.0, h - 1.0)
    return HalfPlane((float(px), float(py)), (math.cos(theta), math.sin(theta)))


def shadow_weights(shape, w, h, softness_px):
    """Per-pixel shadow coverage in [0, 1]; linear ramp of width ``softness_px`` across the edge."""
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    d = shape.signed_distance(xs, ys)
    if softness_px <= 0.0:
        return (d >= 0.0).astype(np.float64)
    return np.clip(0.5 + d / softness_px, 0.0, 1.0)


def apply_structured_shadow(r, rng, darken, softness_px, shape=None):
    """Multiply pixels under a random polygon/half-plane mask by ``darken``."""
    _in_range("darken", float(darken), 0.3, 0.8)
    _in_range("softness_px", float(softness_px), 0.0, 8.0)
    if shape is None:
        shape = draw_shadow_shape(rng, r.width, r.height)
    wts = shadow_weights(shape, r.width, r.height, softness_px)
    factor = 1.0 - wts * (1.0 - darken)
    return Raster.from_float(r.as_float() * factor[..., None])


def draw_highlight_centers(rng, count, w, h):
    return [(float(rng.uniform(0.0, w - 1.0)), float(rng.uniform(0.0, h - 1.0))) for _ in range(count)]


def add_gaussian_blobs(r, blobs):
    """Add isotropic gaussian blobs ``(cx, cy, sigma, peak)`` to every channel."""
    ys, xs = np.mgrid[0:r.height, 0:r.width].astype(np.float64)
    total = np.zeros((r.height, r.width))
    for cx, cy, sigma, peak in blobs:
        d2 = (xs - cx) ** 2 + (ys - cy) ** 2
        total += peak * np.exp(-d2 / (2.0 * sigma * sigma))
    return Raster.from_float(r.as_float() + total[..., None])


def apply_specular_highlight(r, rng, count, sigma_px, peak):
    """Additive gaussian glare: ``count`` blobs at uniform random centers."""
    count = int(count)
    _check(1 <= count <= 3, f"highlight count {count} outside [1, 3]")
    _in_range("sigma_px", float(sigma_px), 2.0, max(2.0, 0.25 * min(r.width, r.height)))
    _in_range("peak", float(peak), 40.0, 160.0)
    centers = draw_highlight_centers(rng, count, r.width, r.height)
    return add_gaussian_blobs(r, [(cx, cy, sigma_px, peak) for cx, cy in centers])


def gaussian_kernel(sigma):
    radius = int(math.ceil(3.0 * sigma))
    k = np.exp(-(np.arange(-radius, radius + 1, dtype=np.float64) ** 2) / (2.0 * sigma * sigma))
    return k / k.sum()


def blur_arrays(arr, sigma):
    return kernels.blur(arr, gaussian_kernel(sigma))


def apply_blur(r, sigma):
    """Separable gaussian blur, radius ceil(3 sigma), clamp-to-edge."""
    _in_range("sigma", float(sigma), 0.5, 3.0)
    return Raster.from_float(blur_arrays(r.as_float(), sigma))


def apply_noise(r, rng, sigma):
    """Additive per-pixel per-channel gaussian noise."""
    _check(math.isfinite(sigma) and 0.0 <= sigma <= 25.0, f"noise sigma {sigma} outside [0, 25]")
    if sigma == 0.0:
        return r
    noise = rng.normal(0.0, sigma, size=r.pixels.shape)
    return Raster.from_float(r.as_float() + noise)


def apply_morphological(r, op, radius):
    _check(op in ("erode", "dilate"), f"morphological op must be erode or dilate, got {op!r}")
    _check(radius in (1, 2), f"morphological radius must be 1 or 2, got {radius}")
    return Raster(kernels.morph(r.pixels, int(radius), op == "dilate"))


def apply_histogram_normalize(r):
    """Stretch luminance percentiles 1/99 to 0/255 with one affine map for all channels."""
    y = luminance(r)
    lo, hi = np.percentile(y, [1.0, 99.0], method="nearest")
    if hi - lo <= 1e-9:
        return r
    scale = 255.0 / (hi - lo)
    return Raster.from_float((r.as_float() - lo) * scale)


# --- spatial with canvas changes -------------------------------------------------

def elastic_maps(rng, w, h, alpha, sigma):
    """Sampling coordinates for an elastic distortion (smoothed uniform noise fields)."""
    dx = rng.uniform(-1.0, 1.0, size=(h, w))
    dy = rng.uniform(-1.0, 1.0, size=(h, w))
    field = kernels.blur(np.stack([dx, dy], axis=-1), gaussian_kernel(sigma)) * alpha
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    return xs + field[..., 0], ys + field[..., 1]


def elastic_arrays(arr, rng, alpha, sigma):
    h, w = arr.shape[:2]
    if alpha == 0.0:
        return arr
    mx, my = elastic_maps(rng, w, h, alpha, sigma)
    return kernels.remap(arr, mx, my, np.zeros(arr.shape[2]), False)


def apply_elastic(r, rng, alpha, sigma):
    _in_range("alpha", float(alpha), 0.0, 40.0)
    _in_range("sigma", float(sigma), 4.0, 10.0)
    if alpha == 0.0:
        return r
    return Raster.from_float(elastic_arrays(r.as_float(), rng, alpha, sigma))


def draw_pads(rng, pad_min, pad_max):
    """Per-side pads (top, right, bottom, left) in whole pixels."""
    return tuple(int(v) for v in rng.integers(int(pad_min), int(pad_max), size=4))


def pad_arrays(arr, pads, fill):
    """Grow the canvas by ``pads`` then resample back to the original size."""
    top, right, bottom, left = pads
    if not any(pads):
        return arr
    h, w, c = arr.shape
    width = ((top, bottom), (left, right), (0, 0))
    if isinstance(fill, str):
        canvas = np.pad(arr, width, mode="edge")
    else:
        fill = np.asarray(fill, dtype=np.float64)
        canvas = np.empty((h + top + bottom, w + left + right, c))
        canvas[...] = fill
        canvas[top:top + h, left:left + w] = arr
    return resize_float(canvas, w, h)


def pad_and_resize(r, pads, fill="replicate"):
    if not any(pads):
        return r
    return Raster.from_float(pad_arrays(r.as_float(), pads, fill))


def apply_padding(r, rng, pad_min=0, pad_max=0, fill="replicate"):
    """Random per-side padding, then resize back: the content shrinks and shifts in frame."""
    limit = 0.3 * min(r.width, r.height)
    _check(0 <= pad_min <= pad_max <= limit, f"pad range [{pad_min}, {pad_max}] outside [0, {limit:g}]")
    _check(fill == "replicate" or len(fill) == 3, "padding fill must be 'replicate' or an RGB triple")
    return pad_and_resize(r, draw_pads(rng, pad_min, pad_max), fill)


def random_background_crop(backgrounds, rng, w, h, crop=(0.5, 1.0)):
    """Random crop (``crop`` is the fractional side-length range) of a random pool entry, resized to w x h."""
    if isinstance(backgrounds, Raster):
        backgrounds = [backgrounds]
    if not backgrounds:
        raise EmptyBackgroundPool("background pool is empty")
    bg = backgrounds[int(rng.integers(0, len(backgrounds) - 1))]
    s = float(rng.uniform(crop[0], crop[1]))
    cw = min(bg.width, max(1, int(round(s * bg.width))))
    ch = min(bg.height, max(1, int(round(s * bg.height))))
    x0 = int(rng.integers(0, bg.width - cw))
    y0 = int(rng.integers(0, bg.height - ch))
    return resize_bilinear(Raster(bg.pixels[y0:y0 + ch, x0:x0 + cw]), w, h)


def composite(r, mask, background):
    m = np.asarray(mask, dtype=np.float64)[..., None]
    return Raster.from_float(m * r.as_float() + (1.0 - m) * background.as_float())


def apply_background_composite(r, mask, background, rng, crop=(0.5, 1.0)):
    """Replace pixels outside the sign mask by a random background crop; fractional mask blends."""
    m = np.asarray(mask, dtype=np.float64)
    if m.shape != (r.height, r.width):
        raise MaskMismatch(f"mask shape {m.shape} does not match raster {r.height}x{r.width}")
    bg = random_background_crop(background, rng, r.width, r.height, crop)
    return composite(r, m, bg)
