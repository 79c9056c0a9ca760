import hashlib
import struct
import zlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from signsynth.errors import DecodeError, InvalidDimension, IoError
from signsynth.imaging import (
    Raster,
    RandomSource,
    derive_seed,
    load_png,
    load_png_with_alpha,
    quantize,
    resize_bilinear,
    rng_derive,
    save_png,
)

MASK64 = (1 << 64) - 1


# --- independent oracles ------------------------------------------------------------

def decode_png_stdlib(path):
    """Minimal 8-bit RGB/RGBA/gray PNG decoder (zlib + struct only), all five filter types."""
    data = open(path, "rb").read()
    assert data[:8] == b"\x89PNG\r\n\x1a\n"
    pos, idat, ihdr = 8, b"", None
    while pos < len(data):
        (n,) = struct.unpack(">I", data[pos:pos + 4])
        tag = data[pos + 4:pos + 8]
        body = data[pos + 8:pos + 8 + n]
        (crc,) = struct.unpack(">I", data[pos + 8 + n:pos + 12 + n])
        assert zlib.crc32(tag + body) & 0xFFFFFFFF == crc
        if tag == b"IHDR":
            ihdr = struct.unpack(">IIBBBBB", body)
        elif tag == b"IDAT":
            idat += body
        pos += 12 + n
    w, h, depth, ctype = ihdr[:4]
    assert depth == 8
    bpp = {0: 1, 2: 3, 4: 2, 6: 4}[ctype]
    raw = zlib.decompress(idat)
    stride = w * bpp
    prev = bytearray(stride)
    rows = []
    for y in range(h):
        ftype = raw[y * (stride + 1)]
        line = bytearray(raw[y * (stride + 1) + 1:(y + 1) * (stride + 1)])
        for i in range(stride):
            a = line[i - bpp] if i >= bpp else 0
            b = prev[i]
            c = prev[i - bpp] if i >= bpp else 0
            if ftype == 1:
                line[i] = (line[i] + a) & 0xFF
            elif ftype == 2:
                line[i] = (line[i] + b) & 0xFF
            elif ftype == 3:
                line[i] = (line[i] + (a + b) // 2) & 0xFF
            elif ftype == 4:
                p = a + b - c
                pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
                pred = a if pa <= pb and pa <= pc else (b if pb <= pc else c)
                line[i] = (line[i] + pred) & 0xFF
        rows.append(bytes(line))
        prev = line
    return w, h, ctype, np.frombuffer(b"".join(rows), dtype=np.uint8).reshape(h, w, bpp)


def philox4x64_10(counter, key):
    """Reference Philox4x64-10 block function."""
    c, k = list(counter), list(key)
    for _ in range(10):
        p0 = 0xD2E7470EE14C6C93 * c[0]
        p1 = 0xCA5A826395121157 * c[2]
        c = [(p1 >> 64) ^ c[1] ^ k[0], p1 & MASK64, (p0 >> 64) ^ c[3] ^ k[1], p0 & MASK64]
        k = [(k[0] + 0x9E3779B97F4A7C15) & MASK64, (k[1] + 0xBB67AE8584CAA73B) & MASK64]
    return c


def random_raster(seed, w, h):
    return Raster(np.random.default_rng(seed).integers(0, 256, size=(h, w, 3), dtype=np.uint8))


# --- Raster ---------------------------------------------------------------------------

def test_raster_is_immutable_and_validated():
    r = Raster.filled(4, 3, (1, 2, 3))
    assert r.size == (4, 3) and r.width == 4 and r.height == 3
    with pytest.raises(ValueError):
        r.pixels[0, 0, 0] = 9
    with pytest.raises(InvalidDimension):
        Raster(np.zeros((0, 3, 3), dtype=np.uint8))
    with pytest.raises((ValueError, InvalidDimension)):
        Raster(np.zeros((2, 2), dtype=np.uint8))


def test_raster_bytes_round_trip():
    r = random_raster(1, 5, 7)
    assert len(r.to_bytes()) == 5 * 7 * 3
    assert Raster.from_bytes(5, 7, r.to_bytes()) == r
    with pytest.raises((ValueError, InvalidDimension)):
        Raster.from_bytes(5, 7, b"\x00" * 10)


def test_quantize_rounds_half_up_and_clamps():
    assert quantize([-3.0, 0.49, 0.5, 1.5, 254.5, 300.0]).tolist() == [0, 0, 1, 2, 255, 255]


# --- PNG ----------------------------------------------------------------------------

def test_white_pixel(tmp_path):
    p = tmp_path / "w.png"
    Image.new("RGB", (1, 1), (255, 255, 255)).save(p)
    r = load_png(p)
    assert r.size == (1, 1) and r.pixels.tolist() == [[[255, 255, 255]]]


def test_rgba_composited_over_white(tmp_path):
    px = np.array([[[10, 20, 30, 0], [10, 20, 30, 255]], [[100, 0, 0, 128], [0, 0, 0, 255]]], dtype=np.uint8)
    p = tmp_path / "a.png"
    Image.fromarray(px, "RGBA").save(p)
    r = load_png(p)
    assert r.pixels[0, 0].tolist() == [255, 255, 255]
    assert r.pixels[0, 1].tolist() == [10, 20, 30]
    # 100*128/255 + 255*127/255 = 177.2 -> 177
    assert r.pixels[1, 0].tolist() == [177, 127, 127]
    _, mask = load_png_with_alpha(p)
    assert mask[0, 0] == 0.0 and mask[0, 1] == 1.0


def test_grayscale_replicated(tmp_path):
    p = tmp_path / "g.png"
    Image.fromarray(np.array([[0, 77], [200, 255]], dtype=np.uint8), "L").save(p)
    r, mask = load_png_with_alpha(p)
    assert mask is None
    assert r.pixels[1, 0].tolist() == [200, 200, 200]


def test_round_trip_random_32(tmp_path):
    r = random_raster(7, 32, 32)
    save_png(r, tmp_path / "r.png")
    assert load_png(tmp_path / "r.png") == r


@settings(max_examples=25, deadline=None)
@given(w=st.integers(1, 17), h=st.integers(1, 17), seed=st.integers(0, 2**32 - 1))
def test_round_trip_property(tmp_path_factory, w, h, seed):
    path = tmp_path_factory.mktemp("rt") / "x.png"
    r = random_raster(seed, w, h)
    save_png(r, path)
    assert load_png(path) == r


def test_gradient_decodes_with_independent_reader(tmp_path):
    ys, xs = np.mgrid[0:64, 0:64]
    px = np.stack([xs * 4, ys * 4, (xs + ys) * 2], axis=-1).astype(np.uint8)
    r = Raster(px)
    save_png(r, tmp_path / "g.png")
    w, h, ctype, arr = decode_png_stdlib(tmp_path / "g.png")
    assert (w, h, ctype) == (64, 64, 2)
    assert np.array_equal(arr, px)


def test_save_to_missing_directory(tmp_path):
    with pytest.raises(IoError):
        save_png(Raster.filled(2, 2, (0, 0, 0)), tmp_path / "nope" / "x.png")


def test_load_errors(tmp_path):
    with pytest.raises(IoError):
        load_png(tmp_path / "missing.png")
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"not a png at all, definitely not" * 2)
    with pytest.raises(DecodeError):
        load_png(bad)
    deep = tmp_path / "16.png"
    Image.fromarray(np.full((3, 3), 40000, dtype=np.uint16)).save(deep)
    with pytest.raises(DecodeError, match="bit depth"):
        load_png(deep)
    trunc = tmp_path / "trunc.png"
    save_png(random_raster(3, 16, 16), trunc)
    trunc.write_bytes(trunc.read_bytes()[:60])
    with pytest.raises(DecodeError):
        load_png(trunc)


# --- resize ---------------------------------------------------------------------------

def test_resize_identity_and_dimensions():
    r = random_raster(2, 9, 5)
    assert resize_bilinear(r, 9, 5) is r
    out = resize_bilinear(r, 13, 4)
    assert out.size == (13, 4)
    with pytest.raises(InvalidDimension):
        resize_bilinear(r, 0, 4)


def test_resize_two_to_three():
    r = Raster(np.array([[[0, 0, 0], [255, 255, 255]]], dtype=np.uint8))
    out = resize_bilinear(r, 3, 1)
    # hand computation: centers map to -1/6, 1/2, 7/6 -> 0, 127.5, 255
    assert out.pixels[0, :, 0].tolist() == [0, 128, 255]


@settings(max_examples=30, deadline=None)
@given(w=st.integers(1, 20), h=st.integers(1, 20), nw=st.integers(1, 40), nh=st.integers(1, 40),
       color=st.tuples(st.integers(0, 255), st.integers(0, 255), st.integers(0, 255)))
def test_resize_constant(w, h, nw, nh, color):
    out = resize_bilinear(Raster.filled(w, h, color), nw, nh)
    assert out.size == (nw, nh)
    assert np.all(out.pixels == np.array(color, dtype=np.uint8))


# --- random streams ------------------------------------------------------------------

def test_stream_matches_reference_philox():
    # Random123 known-answer vector for counter 0, key 0
    assert philox4x64_10([0, 0, 0, 0], [0, 0]) == [
        0x16554D9ECA36314C, 0xDB20FE9D672D0FDC, 0xD7E772CEE186176B, 0x7E68B68AEC7BA23B]
    for seed in (0, 7, 2**64 - 1):
        block = philox4x64_10([1, 0, 0, 0], [seed, 0])
        r = RandomSource(seed)
        assert [r.next_u64() for _ in range(4)] == block


def test_derive_seed_is_blake2b():
    for seed, label in [(0, "a"), (42, "step0:rotation"), (2**64 - 1, "synth/stop/17")]:
        d = hashlib.blake2b(seed.to_bytes(8, "little") + label.encode(), digest_size=8).digest()
        assert derive_seed(seed, label) == int.from_bytes(d, "little")
    assert derive_seed(0, "a") == 3038475612934027643


def test_derive_determinism_and_order_independence():
    s = RandomSource(99)
    a1 = rng_derive(s, "a")
    s.random(100)  # consuming the parent does not change children
    b = rng_derive(s, "b")
    a2 = rng_derive(s, "a")
    assert a1.next_u64() == a2.next_u64()
    assert b.seed != a1.seed


def test_derive_no_collisions_over_label_corpus():
    s = RandomSource(2024)
    labels = [f"{ds}/{c}/{i}" for ds in ("synth", "gtsrb") for c in ("stop", "yield", "speed-50") for i in range(300)]
    labels += [f"step{i}:{k}" for i in range(40) for k in ("rotation", "noise", "blur")]
    firsts = {rng_derive(s, lab).next_u64() for lab in labels}
    assert len(firsts) == len(labels)


def test_random_source_rejects_bad_seed():
    with pytest.raises(ValueError):
        RandomSource(-1)
    with pytest.raises(ValueError):
        RandomSource(2**64)


def test_integers_inclusive():
    r = RandomSource(3)
    draws = set(r.integers(1, 3, size=500).tolist())
    assert draws == {1, 2, 3}
