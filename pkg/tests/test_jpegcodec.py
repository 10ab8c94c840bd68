import io
from pathlib import Path

import numpy as np
import pytest

from roiseal import (
    Image,
    JpegError,
    TruncatedStream,
    UnsupportedJpeg,
    decode_jpeg,
    encode_jpeg,
    gen_phantom,
    roundtrip,
)

GOLDEN_DIR = Path(__file__).parent / "golden"
GOLDEN_QUALITIES = (30, 60, 90)


@pytest.fixture(scope="module")
def small_phantom():
    return gen_phantom(128, 96, 7)


class TestMarkers:
    def test_starts_soi_ends_eoi(self, small_phantom):
        data = encode_jpeg(small_phantom, 60).data
        assert data[:2] == b"\xFF\xD8"
        assert data[-2:] == b"\xFF\xD9"

    def test_metadata(self, small_phantom):
        enc = encode_jpeg(small_phantom, 75)
        assert (enc.width, enc.height, enc.quality) == (128, 96, 75)

    def test_quality_range(self, small_phantom):
        with pytest.raises(ValueError):
            encode_jpeg(small_phantom, 101)


class TestCodecSimulatorEquivalence:
    @pytest.mark.parametrize("quality", [30, 60, 90])
    def test_matches_roundtrip(self, small_phantom, quality):
        decoded = decode_jpeg(encode_jpeg(small_phantom, quality))
        assert decoded == roundtrip(small_phantom, quality, level_shift=True)

    @pytest.mark.parametrize("quality", [25, 60, 95])
    def test_matches_roundtrip_on_noise(self, quality):
        rng = np.random.default_rng(20)
        img = Image(rng.integers(0, 256, (48, 64), dtype=np.uint8))
        decoded = decode_jpeg(encode_jpeg(img, quality))
        assert decoded == roundtrip(img, quality, level_shift=True)

    def test_odd_dimensions_roundtrip(self):
        rng = np.random.default_rng(21)
        img = Image(rng.integers(0, 256, (14, 20), dtype=np.uint8))
        decoded = decode_jpeg(encode_jpeg(img, 80))
        assert (decoded.width, decoded.height) == (20, 14)
        assert decoded == roundtrip(img, 80, level_shift=True)

    def test_dimensions_preserved(self, small_phantom):
        decoded = decode_jpeg(encode_jpeg(small_phantom, 60))
        assert (decoded.width, decoded.height) == (128, 96)

    def test_size_grows_with_quality(self, small_phantom):
        assert len(encode_jpeg(small_phantom, 30).data) < len(
            encode_jpeg(small_phantom, 90).data
        )

    def test_compression_band_on_reference_phantom(self, phantom800):
        size = len(encode_jpeg(phantom800, 60).data)
        reduction = 100.0 * (1.0 - size / (800 * 600))
        assert 85.0 <= reduction <= 95.0


class TestDecodeErrors:
    def test_truncated_scan(self, small_phantom):
        data = encode_jpeg(small_phantom, 60).data
        with pytest.raises(TruncatedStream):
            decode_jpeg(data[:-40])

    def test_truncated_header(self, small_phantom):
        data = encode_jpeg(small_phantom, 60).data
        with pytest.raises(JpegError):
            decode_jpeg(data[:20])

    def test_missing_soi(self):
        with pytest.raises(JpegError):
            decode_jpeg(b"\x00\x01\x02\x03")

    def test_progressive_rejected(self, small_phantom):
        pil = pytest.importorskip("PIL.Image")
        buf = io.BytesIO()
        pil.fromarray(np.asarray(small_phantom.pixels)).save(
            buf, format="JPEG", progressive=True
        )
        with pytest.raises(UnsupportedJpeg):
            decode_jpeg(buf.getvalue())

    def test_color_rejected(self, small_phantom):
        pil = pytest.importorskip("PIL.Image")
        buf = io.BytesIO()
        rgb = np.stack([np.asarray(small_phantom.pixels)] * 3, axis=-1)
        pil.fromarray(rgb, mode="RGB").save(buf, format="JPEG")
        with pytest.raises(UnsupportedJpeg):
            decode_jpeg(buf.getvalue())


class TestForeignDecoders:
    def test_pillow_accepts_our_files(self, small_phantom):
        pil = pytest.importorskip("PIL.Image")
        enc = encode_jpeg(small_phantom, 60)
        with pil.open(io.BytesIO(enc.data)) as im:
            assert im.size == (128, 96)
            assert im.mode == "L"
            foreign = np.asarray(im.convert("L"))
        ours = decode_jpeg(enc).pixels
        # libjpeg's integer IDCT deviates from the exact transform by at most
        # one gray level on a small fraction of pixels
        diff = np.abs(foreign.astype(int) - ours.astype(int))
        assert diff.max() <= 1
        assert (diff != 0).mean() < 0.02

    def test_we_accept_pillow_files(self, small_phantom):
        pil = pytest.importorskip("PIL.Image")
        buf = io.BytesIO()
        pil.fromarray(np.asarray(small_phantom.pixels)).save(
            buf, format="JPEG", quality=70
        )
        decoded = decode_jpeg(buf.getvalue())
        assert (decoded.width, decoded.height) == (128, 96)
        foreign = np.asarray(pil.open(io.BytesIO(buf.getvalue())).convert("L"))
        diff = np.abs(foreign.astype(int) - decoded.pixels.astype(int))
        assert diff.max() <= 1


class TestGoldenFiles:
    """The bytestream format is frozen: these files are part of the contract."""

    @pytest.mark.parametrize("quality", GOLDEN_QUALITIES)
    def test_encoder_is_bit_exact(self, small_phantom, quality):
        golden = (GOLDEN_DIR / f"phantom-128x96-s7-q{quality}.jpg").read_bytes()
        assert encode_jpeg(small_phantom, quality).data == golden

    @pytest.mark.parametrize("quality", GOLDEN_QUALITIES)
    def test_decoder_matches_frozen_pixels(self, quality):
        from roiseal import load_pgm

        golden = (GOLDEN_DIR / f"phantom-128x96-s7-q{quality}.jpg").read_bytes()
        expected = load_pgm(
            (GOLDEN_DIR / f"phantom-128x96-s7-q{quality}.decoded.pgm").read_bytes()
        )
        assert decode_jpeg(golden) == expected
