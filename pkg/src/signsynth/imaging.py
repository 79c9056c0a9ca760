"""Raster images, PNG I/O, deterministic random streams and pixel helpers.

Random streams use numpy's Philox4x64 counter-based generator keyed by a
64-bit seed. Child streams are keyed by the first 8 bytes (little endian) of
``blake2b(parent_seed_le64 || utf8(label), digest_size=8)``, so a stream is a
pure function of the root seed and the chain of derivation labels.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from . import kernels
from .errors import DecodeError, InvalidDimension, IoError

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
LUMA_WEIGHTS = (0.299, 0.587, 0.114)
_U64 = (1 << 64) - 1


class Raster:
    """Immutable 8-bit RGB image stored row-major as an (h, w, 3) uint8 array."""

    __slots__ = ("_pixels",)

    def __init__(self, pixels):
        arr = np.asarray(pixels)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise InvalidDimension(f"expected (h, w, 3) pixel array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidDimension(f"raster must be at least 1x1, got {arr.shape[1]}x{arr.shape[0]}")
        if arr.dtype != np.uint8:
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValueError("channel values must lie in [0, 255]")
            if np.issubdtype(arr.dtype, np.floating) and not np.all(arr == np.round(arr)):
                raise ValueError("float pixels must be integral; use from_float() to round")
        arr = np.array(arr, dtype=np.uint8, order="C", copy=True)
        arr.flags.writeable = False
        self._pixels = arr

    @classmethod
    def filled(cls, width, height, color):
        arr = np.empty((height, width, 3), dtype=np.uint8)
        arr[...] = np.asarray(color, dtype=np.uint8)
        return cls(arr)

    @classmethod
    def from_bytes(cls, width, height, data):
        buf = np.frombuffer(bytes(data), dtype=np.uint8)
        if buf.size != width * height * 3:
            raise InvalidDimension(
                f"buffer of {buf.size} bytes does not match {width}x{height}x3"
            )
        return cls(buf.reshape(height, width, 3))

    @classmethod
    def from_float(cls, values):
        """Round-to-nearest (half up) and clamp a float array into a raster."""
        return cls(quantize(values))

    @property
    def pixels(self):
        return self._pixels

    @property
    def width(self):
        return self._pixels.shape[1]

    @property
    def height(self):
        return self._pixels.shape[0]

    @property
    def size(self):
        return self.width, self.height

    def to_bytes(self):
        return self._pixels.tobytes()

    def as_float(self):
        return self._pixels.astype(np.float64)

    def __eq__(self, other):
        if not isinstance(other, Raster):
            return NotImplemented
        return self._pixels.shape == other._pixels.shape and bool(np.array_equal(self._pixels, other._pixels))

    def __hash__(self):
        return hash((self._pixels.shape, self._pixels.tobytes()))

    def __repr__(self):
        return f"Raster({self.width}x{self.height})"


def quantize(values):
    """floor(v + 0.5) clamped to [0, 255], as uint8."""
    v = np.floor(np.asarray(values, dtype=np.float64) + 0.5)
    return np.clip(v, 0.0, 255.0).astype(np.uint8)


def luminance(r):
    """Rec. 601 luma of each pixel as float64 in [0, 255]."""
    px = r.pixels.astype(np.float64)
    return px[..., 0] * LUMA_WEIGHTS[0] + px[..., 1] * LUMA_WEIGHTS[1] + px[..., 2] * LUMA_WEIGHTS[2]


# --- PNG I/O -----------------------------------------------------------------

def _read_png_header(path):
    try:
        with open(path, "rb") as fh:
            head = fh.read(33)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if len(head) < 33 or head[:8] != PNG_SIGNATURE or head[12:16] != b"IHDR":
        raise DecodeError(f"{path}: not a PNG file")
    width, height, depth, color_type = struct.unpack(">IIBB", head[16:26])
    if width == 0 or height == 0:
        raise DecodeError(f"{path}: zero image dimension")
    if depth != 8:
        raise DecodeError(f"{path}: unsupported bit depth {depth} (only 8-bit PNG)")
    if color_type not in (0, 2, 3, 4, 6):
        raise DecodeError(f"{path}: invalid color type {color_type}")
    return width, height, color_type


def _decode(path):
    _read_png_header(path)
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode in ("L", "RGB"):
                rgb = np.asarray(im.convert("RGB"), dtype=np.uint8)
                return rgb, None
            rgba = np.asarray(im.convert("RGBA"), dtype=np.uint8)
    except (UnidentifiedImageError, SyntaxError, ValueError, OSError, EOFError) as exc:
        raise DecodeError(f"{path}: malformed PNG ({exc})") from exc
    return rgba[..., :3], rgba[..., 3]


def load_png(path):
    """Load an 8-bit PNG as RGB; alpha is composited over opaque white."""
    rgb, alpha = _decode(path)
    if alpha is None:
        return Raster(rgb)
    return Raster(_over_white(rgb, alpha))


def load_png_with_alpha(path):
    """Like load_png, but also return the alpha channel as a float mask in [0, 1].

    The mask is None when the file has no alpha channel.
    """
    rgb, alpha = _decode(path)
    if alpha is None:
        return Raster(rgb), None
    return Raster(_over_white(rgb, alpha)), alpha.astype(np.float64) / 255.0


def _over_white(rgb, alpha):
    a = alpha.astype(np.int32)[..., None]
    c = rgb.astype(np.int32)
    return ((c * a + 255 * (255 - a) + 127) // 255).astype(np.uint8)


def save_png(r, path):
    """Write ``r`` as a lossless 8-bit RGB PNG."""
    path = Path(path)
    if not path.parent.is_dir():
        raise IoError(f"destination directory does not exist: {path.parent}")
    try:
        Image.fromarray(np.ascontiguousarray(r.pixels), "RGB").save(path, format="PNG", compress_level=6)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


# --- resampling ----------------------------------------------------------------

def resize_bilinear(r, new_w, new_h):
    """Bilinear resize using pixel-center alignment and edge clamping."""
    if new_w < 1 or new_h < 1:
        raise InvalidDimension(f"target size must be >= 1x1, got {new_w}x{new_h}")
    if (new_w, new_h) == r.size:
        return r
    out = resize_float(r.as_float(), new_w, new_h)
    return Raster.from_float(out)


def resize_float(arr, new_w, new_h):
    """Resize an (h, w, c) float array; shared by rasters and masks."""
    h, w = arr.shape[:2]
    xs = (np.arange(new_w, dtype=np.float64) + 0.5) * (w / new_w) - 0.5
    ys = (np.arange(new_h, dtype=np.float64) + 0.5) * (h / new_h) - 0.5
    mx, my = np.meshgrid(xs, ys)
    return kernels.remap(arr, mx, my, np.zeros(arr.shape[2]), False)


# --- random streams ------------------------------------------------------------

class RandomSource:
    """Single-owner deterministic random stream (Philox4x64 keyed by ``seed``)."""

    __slots__ = ("seed", "_gen")

    def __init__(self, seed):
        seed = int(seed)
        if not 0 <= seed <= _U64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        self._gen = np.random.Generator(np.random.Philox(key=seed))

    def derive(self, label):
        return rng_derive(self, label)

    @property
    def generator(self):
        return self._gen

    def next_u64(self):
        return int(self._gen.bit_generator.random_raw())

    def random(self, size=None):
        return self._gen.random(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def integers(self, low, high, size=None):
        """Integers in the closed interval [low, high]."""
        return self._gen.integers(low, high, size=size, endpoint=True)

    def __repr__(self):
        return f"RandomSource(seed={self.seed:#018x})"


def derive_seed(seed, label):
    digest = hashlib.blake2b(
        int(seed).to_bytes(8, "little") + str(label).encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little")


def rng_derive(parent, label):
    """Child stream determined only by (parent.seed, label)."""
    return RandomSource(derive_seed(parent.seed, label))
