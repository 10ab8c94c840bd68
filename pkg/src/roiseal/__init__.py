"""roiseal: ROI-hash watermarking for grayscale images, with a self-contained
baseline JPEG codec for reproducible robustness experiments."""

from .jpegcodec import (
    BadMarker,
    JpegBytes,
    JpegError,
    TruncatedStream,
    UnsupportedJpeg,
    decode_jpeg,
    encode_jpeg,
)
from .jpegsim import (
    QUANT_BASE,
    ZIGZAG_INDEX,
    dct2,
    dequantize,
    idct2,
    inverse_zigzag,
    quality_table,
    quantize,
    roundtrip,
    zigzag,
)
from .pixmap import (
    Image,
    MaxvalUnsupported,
    PgmError,
    block_grid,
    gen_phantom,
    histogram,
    load_pgm,
    pad_to_block_multiple,
    psnr,
    save_pgm,
)
from .sweep import SweepReport, SweepRow, run_sweep
from .watermark import (
    BlockNotDark,
    CapacityExceeded,
    EmbedManifest,
    KeyNotCoprime,
    NoContent,
    Rect,
    VerifyReport,
    WatermarkError,
    WatermarkParams,
    detect_roi,
    digest,
    embed,
    embeddable_blocks,
    extract,
    map_position,
    serialize_roi,
    verify_reference,
    verify_strict,
)

__version__ = "0.1.0"

__all__ = [
    "BadMarker",
    "BlockNotDark",
    "CapacityExceeded",
    "EmbedManifest",
    "Image",
    "JpegBytes",
    "JpegError",
    "KeyNotCoprime",
    "MaxvalUnsupported",
    "NoContent",
    "PgmError",
    "QUANT_BASE",
    "Rect",
    "SweepReport",
    "SweepRow",
    "TruncatedStream",
    "UnsupportedJpeg",
    "VerifyReport",
    "WatermarkError",
    "WatermarkParams",
    "ZIGZAG_INDEX",
    "block_grid",
    "dct2",
    "decode_jpeg",
    "dequantize",
    "detect_roi",
    "digest",
    "embed",
    "embeddable_blocks",
    "encode_jpeg",
    "extract",
    "gen_phantom",
    "histogram",
    "idct2",
    "inverse_zigzag",
    "load_pgm",
    "map_position",
    "pad_to_block_multiple",
    "psnr",
    "quality_table",
    "quantize",
    "roundtrip",
    "run_sweep",
    "save_pgm",
    "serialize_roi",
    "verify_reference",
    "verify_strict",
    "zigzag",
    "__version__",
]
