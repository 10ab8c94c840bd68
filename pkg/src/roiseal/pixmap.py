"""8-bit grayscale images: container, PGM I/O, quality metrics, synthetic phantom."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

BLOCK = 8


class PgmError(ValueError):
    """Malformed or unsupported PGM data."""


class MaxvalUnsupported(PgmError):
    """PGM maxval is not 255."""


@dataclass(frozen=True)
class Image:
    """Immutable 8-bit grayscale raster.

    ``pixels`` is a read-only (height, width) uint8 array, row-major with the
    origin at the top-left corner.
    """

    pixels: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.asarray(self.pixels)
        if a.ndim != 2 or a.size == 0:
            raise ValueError("pixels must be a non-empty 2-D array")
        if a.dtype != np.uint8:
            if a.min() < 0 or a.max() > 255:
                raise ValueError("pixel values must lie in [0, 255]")
            a = a.astype(np.uint8)
        a = np.ascontiguousarray(a)
        a.setflags(write=False)
        object.__setattr__(self, "pixels", a)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Image):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )

    def __hash__(self):
        return hash((self.pixels.shape, self.pixels.tobytes()))


def load_pgm(data: bytes) -> Image:
    """Parse a binary PGM (magic ``P5``, maxval 255).

    Header tokens may be separated by arbitrary whitespace and ``#`` comments;
    exactly one whitespace byte separates the maxval from the raster.
    """
    if data[:2] == b"P2":
        raise PgmError("ASCII PGM (P2) is not supported, use binary P5")
    if data[:2] != b"P5":
        raise PgmError("not a binary PGM: missing P5 magic")

    pos = 2
    tokens = []
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            eol = data.find(b"\n", pos)
            if eol < 0:
                raise PgmError("unterminated comment in header")
            pos = eol + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise PgmError("truncated header")
        tok = data[start:pos]
        if not tok.isdigit():
            raise PgmError(f"bad header token {tok!r}")
        tokens.append(int(tok))
    pos += 1  # single whitespace byte after maxval

    width, height, maxval = tokens
    if width <= 0 or height <= 0:
        raise PgmError("non-positive dimensions")
    if maxval != 255:
        raise MaxvalUnsupported(f"maxval {maxval} unsupported, expected 255")
    raster = data[pos : pos + width * height]
    if len(raster) != width * height:
        raise PgmError("truncated pixel data")
    return Image(np.frombuffer(raster, dtype=np.uint8).reshape(height, width))


def save_pgm(img: Image) -> bytes:
    """Serialize to the canonical binary PGM form (bit-exact)."""
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def psnr(a: Image, b: Image) -> float:
    """Peak signal-to-noise ratio in dB; ``math.inf`` for identical images."""
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError("psnr: dimension mismatch")
    diff = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / mse)


def histogram(img: Image) -> np.ndarray:
    """Counts of each intensity value, shape (256,)."""
    return np.bincount(img.pixels.ravel(), minlength=256)


def block_grid(img: Image) -> list[tuple[int, int]]:
    """Raster-ordered (blockX, blockY) positions covering the image.

    Dimensions must already be multiples of 8; call pad_to_block_multiple
    first otherwise.
    """
    if img.width % BLOCK or img.height % BLOCK:
        raise ValueError("image dimensions must be multiples of 8 (pad first)")
    nx, ny = img.width // BLOCK, img.height // BLOCK
    return [(bx, by) for by in range(ny) for bx in range(nx)]


def pad_to_block_multiple(img: Image) -> Image:
    """Edge-replicate the last row/column up to the next multiple of 8."""
    h, w = img.pixels.shape
    ph = (-h) % BLOCK
    pw = (-w) % BLOCK
    if not ph and not pw:
        return img
    return Image(np.pad(img.pixels, ((0, ph), (0, pw)), mode="edge"))


def crop(img: Image, width: int, height: int) -> Image:
    """Top-left crop, used to undo padding."""
    return Image(img.pixels[:height, :width])


# Linear congruential generator used by gen_phantom. Knuth's MMIX parameters:
# x <- (6364136223846793005 * x + 1442695040888963407) mod 2^64, and each
# draw takes the top 24 bits as a uniform value in [0, 1). Pure integer
# arithmetic, so the stream is identical on every platform.
_LCG_A = 6364136223846793005
_LCG_C = 1442695040888963407
_LCG_MASK = (1 << 64) - 1
_LCG_SEED_MIX = 0x9E3779B97F4A7C15


def _lcg_uniform(seed: int, count: int) -> np.ndarray:
    out = np.empty(count)
    x = (int(seed) ^ _LCG_SEED_MIX) & _LCG_MASK
    for i in range(count):
        x = (_LCG_A * x + _LCG_C) & _LCG_MASK
        out[i] = (x >> 40) / float(1 << 24)
    return out


def _bilinear_upsample(grid: np.ndarray, step: int, height: int, width: int) -> np.ndarray:
    gh, gw = grid.shape
    ys = np.arange(height) / step
    xs = np.arange(width) / step
    y0 = np.clip(ys.astype(int), 0, gh - 2)
    x0 = np.clip(xs.astype(int), 0, gw - 2)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    g00 = grid[y0][:, x0]
    g01 = grid[y0][:, x0 + 1]
    g10 = grid[y0 + 1][:, x0]
    g11 = grid[y0 + 1][:, x0 + 1]
    return g00 * (1 - fy) * (1 - fx) + g01 * (1 - fy) * fx + g10 * fy * (1 - fx) + g11 * fy * fx

# Phantom texture layout: speckle is built from two LCG-driven noise grids,
# a coarse one for tissue structure and a fine one for grain. Grid steps and
# amplitudes below were tuned once so that an 800x600 phantom lands in
# realistic JPEG size/PSNR territory; they are fixed constants of the format.
_COARSE_STEP = 24
_FINE_STEP = 2
_FINE_AMP = 0.85
_MARGIN = 24  # zero border kept around the fan, 3 blocks


def gen_phantom(width: int, height: int, seed: int) -> Image:
    """Deterministic ultrasound-style test image.

    A bright speckled sector (values 30..255) sits on an exactly-zero
    background, leaving at least a 3-block zero margin on every side.
    Same (width, height, seed) always yields the same pixels.
    """
    if width % BLOCK or height % BLOCK:
        raise ValueError("phantom dimensions must be multiples of 8")
    if width < 64 or height < 64:
        raise ValueError("phantom must be at least 64x64")

    m = _MARGIN
    cx = width / 2.0
    apex_y = float(m)
    radius = height - 2 * m - max(1, height // 75)
    slope = 0.62
    if slope * radius > width / 2 - m - 1:
        slope = (width / 2 - m - 1) / radius
    inner = 0.06 * radius + 2.0

    gh, gw = height // _COARSE_STEP + 2, width // _COARSE_STEP + 2
    fh, fw = height // _FINE_STEP + 2, width // _FINE_STEP + 2
    stream = _lcg_uniform(seed, gh * gw + fh * fw)
    coarse = _bilinear_upsample(stream[: gh * gw].reshape(gh, gw), _COARSE_STEP, height, width)
    fine = _bilinear_upsample(stream[gh * gw :].reshape(fh, fw), _FINE_STEP, height, width)

    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    dy = yy - apex_y
    dx = xx - cx
    r2 = dx * dx + dy * dy
    in_fan = (dy > 0) & (np.abs(dx) <= slope * dy) & (r2 >= inner * inner) & (r2 <= radius * radius)
    # keep the fan strictly inside the zero margin regardless of geometry
    in_fan &= (xx >= m) & (xx <= width - 1 - m) & (yy >= m) & (yy <= height - 1 - m)

    depth_gain = 1.0 - 0.55 * (r2 - inner * inner) / (radius * radius - inner * inner)
    texture = (0.45 + 0.55 * coarse) * (1.0 - _FINE_AMP / 2 + _FINE_AMP * fine)
    value = 150.0 * depth_gain * texture

    near_field = (r2 > inner * inner) & (r2 < (inner + 0.075 * radius) ** 2)
    value = value + 70.0 * near_field

    # one hypoechoic and one hyperechoic lesion, scaled with the image
    lx, ly = 0.11 * width, 0.52 * (radius - inner)
    e1 = ((xx - cx - lx) ** 2 / (0.09 * width) ** 2
          + (yy - apex_y - ly) ** 2 / (0.075 * height) ** 2) < 1.0
    e2 = ((xx - cx + 1.2 * lx) ** 2 / (0.06 * width) ** 2
          + (yy - apex_y - 1.25 * ly) ** 2 / (0.115 * height) ** 2) < 1.0
    value = np.where(e1, value * 0.35, value)
    value = np.where(e2, np.minimum(value * 1.6 + 30.0, 255.0), value)

    out = np.where(in_fan, np.clip(np.floor(value), 30, 255), 0.0)
    return Image(out.astype(np.uint8))
