"""Block-transform compression channel: 8x8 DCT, quality-scaled quantization.

The transform is the orthonormal 2-D DCT-II. It is computed as a cosine
congruence followed by an elementwise normalization whose rational entries
(1/8 for the DC term, 1/4 for pure-AC terms) are stored exactly. That makes
the DC path exact for integer blocks: a constant block always produces its
analytic DC value, and quantizer ties round the same way on every platform.
"""

from __future__ import annotations

import numpy as np

from .pixmap import BLOCK, Image, crop, pad_to_block_multiple


def _cosine_matrix() -> np.ndarray:
    g = np.empty((8, 8))
    for p in range(8):
        for m in range(8):
            g[p, m] = np.cos((2 * m + 1) * p * np.pi / 16.0)
    return g


_COS = _cosine_matrix()            # row 0 is exactly all ones
_COS_T = np.ascontiguousarray(_COS.T)
_ALPHA = np.array([np.sqrt(1.0 / 8.0)] + [0.5] * 7)
_SCALE = np.outer(_ALPHA, _ALPHA)
_SCALE[0, 0] = 0.125               # exact alpha0^2
_SCALE[1:, 1:] = 0.25              # exact alpha_p * alpha_q, p,q >= 1
_SCALE.setflags(write=False)
_COS.setflags(write=False)

# Standard luminance quantization table, natural (row-major) order.
QUANT_BASE = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.int64,
)
QUANT_BASE.setflags(write=False)

# Natural index of each position along the standard zigzag scan.
ZIGZAG_INDEX = np.array(
    [
         0,  1,  8, 16,  9,  2,  3, 10,
        17, 24, 32, 25, 18, 11,  4,  5,
        12, 19, 26, 33, 40, 48, 41, 34,
        27, 20, 13,  6,  7, 14, 21, 28,
        35, 42, 49, 56, 57, 50, 43, 36,
        29, 22, 15, 23, 30, 37, 44, 51,
        58, 59, 52, 45, 38, 31, 39, 46,
        53, 60, 61, 54, 47, 55, 62, 63,
    ],
    dtype=np.int64,
)
ZIGZAG_INDEX.setflags(write=False)


def round_half_away(x: np.ndarray) -> np.ndarray:
    """Round to nearest integer with halves away from zero (Matlab round)."""
    x = np.asarray(x)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def quality_table(quality: int) -> np.ndarray:
    """Scale the base table for a quality factor (IJG mapping), as int64 (8, 8).

    scale = 5000/q for q < 50, else 200 - 2q; each entry is
    clamp(floor((base*scale + 50)/100), 1, 255).
    """
    if not 1 <= int(quality) <= 100:
        raise ValueError(f"quality {quality} out of range 1..100")
    q = int(quality)
    scale = 5000.0 / q if q < 50 else 200.0 - 2.0 * q
    table = np.floor((QUANT_BASE * scale + 50.0) / 100.0).astype(np.int64)
    return np.clip(table, 1, 255)


def _as_batch(blocks: np.ndarray) -> tuple[np.ndarray, bool]:
    b = np.asarray(blocks, dtype=np.float64)
    if b.shape == (8, 8):
        return b[None, :, :], True
    if b.ndim == 3 and b.shape[1:] == (8, 8):
        return b, False
    raise ValueError("expected an (8, 8) block or an (n, 8, 8) batch")


def dct2(block: np.ndarray, level_shift: bool = False) -> np.ndarray:
    """Forward 2-D DCT of one 8x8 block (or a batch of them)."""
    b, single = _as_batch(block)
    if level_shift:
        b = b - 128.0
    f = _SCALE * (_COS @ b @ _COS_T)
    return f[0] if single else f


def idct2(coeffs: np.ndarray, level_shift: bool = False) -> np.ndarray:
    """Inverse of dct2; real-valued output, no rounding or clamping."""
    f, single = _as_batch(coeffs)
    x = _COS_T @ (_SCALE * f) @ _COS
    if level_shift:
        x = x + 128.0
    return x[0] if single else x


def quantize(coeffs: np.ndarray, qtable: np.ndarray) -> np.ndarray:
    """Divide by the step sizes and round to nearest (ties away from zero)."""
    f, single = _as_batch(coeffs)
    levels = round_half_away(f / qtable.astype(np.float64)).astype(np.int64)
    return levels[0] if single else levels


def dequantize(levels: np.ndarray, qtable: np.ndarray) -> np.ndarray:
    """Multiply quantizer output back to coefficient magnitudes."""
    lv = np.asarray(levels, dtype=np.float64)
    return lv * qtable.astype(np.float64)


def zigzag(levels: np.ndarray) -> np.ndarray:
    """Reorder one 8x8 level block (natural order) into the zigzag scan."""
    lv = np.asarray(levels)
    if lv.shape == (8, 8):
        lv = lv.reshape(64)
    if lv.shape != (64,):
        raise ValueError("expected 64 levels")
    return lv[ZIGZAG_INDEX]


def inverse_zigzag(scan: np.ndarray) -> np.ndarray:
    """Undo zigzag, returning an (8, 8) block in natural order."""
    scan = np.asarray(scan)
    if scan.shape != (64,):
        raise ValueError("expected a 64-element scan")
    out = np.empty(64, dtype=scan.dtype)
    out[ZIGZAG_INDEX] = scan
    return out.reshape(8, 8)


def image_to_blocks(pixels: np.ndarray) -> np.ndarray:
    """Tile an (h, w) array, h and w multiples of 8, into (n, 8, 8) raster order."""
    h, w = pixels.shape
    return (
        pixels.reshape(h // BLOCK, BLOCK, w // BLOCK, BLOCK)
        .swapaxes(1, 2)
        .reshape(-1, BLOCK, BLOCK)
    )


def blocks_to_image(blocks: np.ndarray, height: int, width: int) -> np.ndarray:
    """Inverse of image_to_blocks."""
    return (
        blocks.reshape(height // BLOCK, width // BLOCK, BLOCK, BLOCK)
        .swapaxes(1, 2)
        .reshape(height, width)
    )


def forward_levels(pixels: np.ndarray, qtable: np.ndarray, level_shift: bool = True) -> np.ndarray:
    """Quantized levels for every block of a padded raster, (n, 8, 8) int64.

    This is the encoder half shared by roundtrip() and the entropy codec, so
    the two stay bit-exact with each other.
    """
    blocks = image_to_blocks(np.asarray(pixels, dtype=np.float64))
    if level_shift:
        blocks = blocks - 128.0
    coeffs = _SCALE * (_COS @ blocks @ _COS_T)
    return round_half_away(coeffs / qtable.astype(np.float64)).astype(np.int64)


def reconstruct_pixels(
    levels: np.ndarray, qtable: np.ndarray, height: int, width: int, level_shift: bool = True
) -> np.ndarray:
    """Decoder half shared by roundtrip() and the entropy codec: uint8 (h, w)."""
    coeffs = levels.astype(np.float64) * qtable.astype(np.float64)
    blocks = _COS_T @ (_SCALE * coeffs) @ _COS
    if level_shift:
        blocks = blocks + 128.0
    blocks = np.clip(round_half_away(blocks), 0, 255).astype(np.uint8)
    return blocks_to_image(blocks, height, width)


def block_channel(block: np.ndarray, qtable: np.ndarray) -> np.ndarray:
    """One block through dct2 -> quantize -> dequantize -> idct2, pre-rounding."""
    return idct2(dequantize(quantize(dct2(block), qtable), qtable))


def roundtrip(img: Image, quality: int, level_shift: bool = True) -> Image:
    """Simulate compression and decompression at the given quality.

    Per block: dct2 -> quantize -> dequantize -> idct2 -> round to nearest
    integer (ties away from zero) -> clamp to [0, 255]. Non-multiple-of-8
    images are edge-padded internally and cropped back.
    """
    qtable = quality_table(quality)
    padded = pad_to_block_multiple(img)
    levels = forward_levels(padded.pixels, qtable, level_shift)
    out = reconstruct_pixels(levels, qtable, padded.height, padded.width, level_shift)
    return crop(Image(out), img.width, img.height)
