"""Pure numpy implementations of the pixel kernels.

These mirror ``_kernels.pyx`` operation for operation so that both backends
produce bit-identical results. Any change here must be reflected there.
"""

import numpy as np

BACKEND = "numpy"


def remap(src, map_x, map_y, fill, use_fill):
    """Bilinear sampling of ``src`` (h, w, c float64) at (map_x, map_y).

    Coordinates are pixel centers. Samples are clamped to the edge; with
    ``use_fill`` any coordinate outside [-0.5, size - 0.5] takes ``fill``.
    """
    h, w, c = src.shape
    x = np.asarray(map_x, dtype=np.float64)
    y = np.asarray(map_y, dtype=np.float64)
    finite = np.isfinite(x) & np.isfinite(y)
    x = np.where(finite, x, 0.0)
    y = np.where(finite, y, 0.0)
    xc = np.minimum(np.maximum(x, 0.0), w - 1.0)
    yc = np.minimum(np.maximum(y, 0.0), h - 1.0)
    x0f = np.floor(xc)
    y0f = np.floor(yc)
    fx = (xc - x0f)[..., None]
    fy = (yc - y0f)[..., None]
    gx = 1.0 - fx
    gy = 1.0 - fy
    x0 = x0f.astype(np.intp)
    y0 = y0f.astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    top = src[y0, x0] * gx + src[y0, x1] * fx
    bot = src[y1, x0] * gx + src[y1, x1] * fx
    out = top * gy + bot * fy
    if use_fill:
        outside = ~finite | (x < -0.5) | (x > w - 0.5) | (y < -0.5) | (y > h - 0.5)
        out[outside] = np.asarray(fill, dtype=np.float64)
    return out


def blur(src, kernel):
    """Separable convolution with clamp-to-edge, horizontal pass first."""
    h, w, c = src.shape
    k = np.asarray(kernel, dtype=np.float64)
    r = (k.shape[0] - 1) // 2
    cols = np.arange(w)
    tmp = np.zeros_like(src)
    for i in range(k.shape[0]):
        idx = np.clip(cols + i - r, 0, w - 1)
        tmp += k[i] * src[:, idx, :]
    rows = np.arange(h)
    out = np.zeros_like(src)
    for i in range(k.shape[0]):
        idx = np.clip(rows + i - r, 0, h - 1)
        out += k[i] * tmp[idx, :, :]
    return out


def morph(src, radius, dilate):
    """Square-window per-channel max (dilate) or min (erode), clamped borders."""
    op = np.maximum if dilate else np.minimum
    h, w, _ = src.shape
    cols = np.arange(w)
    tmp = src.copy()
    for d in range(-radius, radius + 1):
        tmp = op(tmp, src[:, np.clip(cols + d, 0, w - 1), :])
    rows = np.arange(h)
    out = tmp.copy()
    for d in range(-radius, radius + 1):
        out = op(out, tmp[np.clip(rows + d, 0, h - 1), :, :])
    return out
