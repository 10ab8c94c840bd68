"""Baseline JFIF bytestream encoder/decoder (ITU-T T.81, sequential DCT).

Single 8-bit grayscale component, fixed Annex K luminance Huffman tables,
no restart markers, no progressive mode. The block transform and quantizer
are shared with the simulator in jpegsim, which keeps decode(encode(x))
bit-identical to the simulated roundtrip.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import jpegsim
from .pixmap import BLOCK, Image, crop, pad_to_block_multiple


class JpegError(ValueError):
    """Malformed or unsupported JPEG data."""


class TruncatedStream(JpegError):
    """Input ended before the bytestream was complete."""


class BadMarker(JpegError):
    """Unexpected marker sequence or corrupt entropy data."""


class UnsupportedJpeg(JpegError):
    """Valid JPEG feature outside the baseline single-component subset."""


@dataclass(frozen=True)
class JpegBytes:
    """Encoded bytestream plus the metadata it was produced with."""

    data: bytes
    width: int
    height: int
    quality: int


# Annex K luminance Huffman tables: BITS (codes per length 1..16) and HUFFVAL.
DC_BITS = (0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0)
DC_VALUES = tuple(range(12))
AC_BITS = (0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7D)
AC_VALUES = (
    0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06, 0x13, 0x51, 0x61, 0x07,
    0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xA1, 0x08, 0x23, 0x42, 0xB1, 0xC1, 0x15, 0x52, 0xD1, 0xF0,
    0x24, 0x33, 0x62, 0x72, 0x82, 0x09, 0x0A, 0x16, 0x17, 0x18, 0x19, 0x1A, 0x25, 0x26, 0x27, 0x28,
    0x29, 0x2A, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3A, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48, 0x49,
    0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69,
    0x6A, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7A, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
    0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3, 0xA4, 0xA5, 0xA6, 0xA7,
    0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5, 0xB6, 0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3, 0xC4, 0xC5,
    0xC6, 0xC7, 0xC8, 0xC9, 0xCA, 0xD2, 0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA, 0xE1, 0xE2,
    0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA, 0xF1, 0xF2, 0xF3, 0xF4, 0xF5, 0xF6, 0xF7, 0xF8,
    0xF9, 0xFA,
)

_M_SOI, _M_EOI, _M_SOS, _M_DQT, _M_DHT, _M_SOF0, _M_DRI, _M_DNL, _M_COM = (
    0xD8, 0xD9, 0xDA, 0xDB, 0xC4, 0xC0, 0xDD, 0xDC, 0xFE,
)
_SOF_UNSUPPORTED = frozenset(
    [0xC1, 0xC2, 0xC3, 0xC5, 0xC6, 0xC7, 0xC9, 0xCA, 0xCB, 0xCD, 0xCE, 0xCF]
)


def _canonical_codes(bits, values):
    """(code, length) per symbol, in canonical Huffman order (T.81 C.2)."""
    table = {}
    code = 0
    k = 0
    for length in range(1, 17):
        for _ in range(bits[length - 1]):
            table[values[k]] = (code, length)
            k += 1
            code += 1
        code <<= 1
    return table


def _encoder_arrays(bits, values):
    table = _canonical_codes(bits, values)
    size = max(values) + 1
    codes = np.zeros(size, dtype=np.uint32)
    lengths = np.zeros(size, dtype=np.uint8)
    for sym, (code, length) in table.items():
        codes[sym] = code
        lengths[sym] = length
    return codes, lengths


def _decoder_window_tables(bits, values):
    """16-bit-prefix lookup: window -> (symbol, code length); length 0 = invalid."""
    sym = np.zeros(1 << 16, dtype=np.int16)
    ln = np.zeros(1 << 16, dtype=np.uint8)
    for value, (code, length) in _canonical_codes(bits, values).items():
        lo = code << (16 - length)
        hi = (code + 1) << (16 - length)
        sym[lo:hi] = value
        ln[lo:hi] = length
    return sym, ln


_DC_CODE, _DC_LEN = _encoder_arrays(DC_BITS, DC_VALUES)
_AC_CODE, _AC_LEN = _encoder_arrays(AC_BITS, AC_VALUES)
_POW2_16 = (1 << np.arange(15, -1, -1)).astype(np.uint32)


class _BitWriter:
    """MSB-first bit accumulator with 0xFF byte stuffing."""

    __slots__ = ("buf", "acc", "nbits")

    def __init__(self):
        self.buf = bytearray()
        self.acc = 0
        self.nbits = 0

    def put(self, code: int, length: int):
        self.acc = (self.acc << length) | code
        self.nbits += length
        while self.nbits >= 8:
            byte = (self.acc >> (self.nbits - 8)) & 0xFF
            self.buf.append(byte)
            if byte == 0xFF:
                self.buf.append(0x00)
            self.nbits -= 8
        self.acc &= (1 << self.nbits) - 1

    def finish(self) -> bytes:
        if self.nbits:
            pad = 8 - self.nbits
            self.put((1 << pad) - 1, pad)  # pad final byte with 1-bits
        return bytes(self.buf)


def _magnitude_category(v: int) -> int:
    return v.bit_length() if v >= 0 else (-v).bit_length()


def _segment(marker: int, payload: bytes) -> bytes:
    return bytes([0xFF, marker]) + struct.pack(">H", 2 + len(payload)) + payload


def encode_jpeg(img: Image, quality: int) -> JpegBytes:
    """Encode to a baseline sequential JFIF bytestream (level shift applied).

    Emits SOI, a minimal JFIF APP0, DQT (zigzag order), SOF0, the two Annex K
    luminance DHT segments, SOS, the entropy-coded scan and EOI. Non-multiple
    -of-8 images are edge-padded; SOF0 records the true dimensions.
    """
    qtable = jpegsim.quality_table(quality)
    padded = pad_to_block_multiple(img)
    levels = jpegsim.forward_levels(padded.pixels, qtable, level_shift=True)

    out = bytearray()
    out += b"\xFF\xD8"
    out += _segment(0xE0, b"JFIF\x00\x01\x01\x00\x00\x01\x00\x01\x00\x00")
    zz_table = qtable.reshape(64)[jpegsim.ZIGZAG_INDEX]
    out += _segment(_M_DQT, b"\x00" + bytes(int(v) for v in zz_table))
    out += _segment(_M_SOF0, struct.pack(">BHHB", 8, img.height, img.width, 1) + b"\x01\x11\x00")
    out += _segment(_M_DHT, b"\x00" + bytes(DC_BITS) + bytes(DC_VALUES))
    out += _segment(_M_DHT, b"\x10" + bytes(AC_BITS) + bytes(AC_VALUES))
    out += _segment(_M_SOS, b"\x01\x01\x00\x00\x3F\x00")

    zz = levels.reshape(-1, 64)[:, jpegsim.ZIGZAG_INDEX]
    nonzero = zz != 0
    rev = nonzero[:, ::-1]
    has_ac = rev[:, :-1].any(axis=1)
    last_nz = np.where(has_ac, 63 - rev.argmax(axis=1), 0)
    rows = zz.tolist()
    lasts = last_nz.tolist()

    writer = _BitWriter()
    put = writer.put
    pred = 0
    for row, last in zip(rows, lasts):
        diff = row[0] - pred
        pred = row[0]
        s = _magnitude_category(diff)
        put(int(_DC_CODE[s]), int(_DC_LEN[s]))
        if s:
            put((diff if diff >= 0 else diff - 1) & ((1 << s) - 1), s)
        run = 0
        for k in range(1, last + 1):
            v = row[k]
            if v == 0:
                run += 1
                continue
            while run >= 16:
                put(int(_AC_CODE[0xF0]), int(_AC_LEN[0xF0]))
                run -= 16
            s = _magnitude_category(v)
            sym = (run << 4) | s
            put(int(_AC_CODE[sym]), int(_AC_LEN[sym]))
            put((v if v >= 0 else v - 1) & ((1 << s) - 1), s)
            run = 0
        if last < 63:
            put(int(_AC_CODE[0x00]), int(_AC_LEN[0x00]))

    out += writer.finish()
    out += b"\xFF\xD9"
    return JpegBytes(bytes(out), img.width, img.height, int(quality))


class _SegmentReader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def u8(self) -> int:
        if self.pos >= len(self.data):
            raise TruncatedStream("unexpected end of stream")
        v = self.data[self.pos]
        self.pos += 1
        return v

    def u16(self) -> int:
        return (self.u8() << 8) | self.u8()

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedStream("unexpected end of stream")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def next_marker(self) -> int:
        if self.u8() != 0xFF:
            raise BadMarker("expected a marker")
        marker = self.u8()
        while marker == 0xFF:  # optional fill bytes
            marker = self.u8()
        return marker


def _parse_dqt(payload: bytes, tables: dict):
    pos = 0
    while pos < len(payload):
        pq_tq = payload[pos]
        pos += 1
        if pq_tq >> 4 != 0:
            raise UnsupportedJpeg("16-bit quantization tables not supported")
        if pos + 64 > len(payload):
            raise TruncatedStream("short DQT segment")
        scan = np.frombuffer(payload[pos : pos + 64], dtype=np.uint8).astype(np.int64)
        tables[pq_tq & 0x0F] = jpegsim.inverse_zigzag(scan)
        pos += 64


def _parse_dht(payload: bytes, dc_tables: dict, ac_tables: dict):
    pos = 0
    while pos < len(payload):
        tc_th = payload[pos]
        pos += 1
        if pos + 16 > len(payload):
            raise TruncatedStream("short DHT segment")
        bits = tuple(payload[pos : pos + 16])
        pos += 16
        count = sum(bits)
        if pos + count > len(payload):
            raise TruncatedStream("short DHT segment")
        values = tuple(payload[pos : pos + count])
        pos += count
        target = ac_tables if tc_th >> 4 else dc_tables
        if tc_th >> 4 not in (0, 1):
            raise UnsupportedJpeg("arithmetic coding conditioning not supported")
        target[tc_th & 0x0F] = _decoder_window_tables(bits, values)


def decode_jpeg(data: bytes | JpegBytes) -> Image:
    """Decode a baseline single-component JFIF bytestream to an Image."""
    if isinstance(data, JpegBytes):
        data = data.data
    reader = _SegmentReader(data)
    if reader.u8() != 0xFF or reader.u8() != _M_SOI:
        raise BadMarker("missing SOI marker")

    qtables: dict[int, np.ndarray] = {}
    dc_tables: dict[int, tuple] = {}
    ac_tables: dict[int, tuple] = {}
    frame = None  # (height, width, qtable id)
    scan_tables = None  # (dc id, ac id)

    while True:
        marker = reader.next_marker()
        if marker == _M_EOI:
            raise TruncatedStream("EOI before any scan data")
        if marker == _M_SOI:
            raise BadMarker("nested SOI")
        if marker in _SOF_UNSUPPORTED:
            raise UnsupportedJpeg(f"SOF marker 0xFF{marker:02X} is not baseline sequential")
        if marker == 0x01 or 0xD0 <= marker <= 0xD7:  # TEM / bare RSTn
            raise BadMarker("unexpected standalone marker before scan")

        seg_len = reader.u16()
        if seg_len < 2:
            raise BadMarker("segment length shorter than its own length field")
        payload = reader.take(seg_len - 2)
        if marker == _M_DQT:
            _parse_dqt(payload, qtables)
        elif marker == _M_DHT:
            _parse_dht(payload, dc_tables, ac_tables)
        elif marker == _M_SOF0:
            precision, height, width, ncomp = struct.unpack(">BHHB", payload[:6])
            if precision != 8:
                raise UnsupportedJpeg(f"{precision}-bit precision not supported")
            if ncomp != 1:
                raise UnsupportedJpeg("only single-component grayscale is supported")
            frame = (height, width, payload[8])
        elif marker == _M_DRI:
            if struct.unpack(">H", payload[:2])[0] != 0:
                raise UnsupportedJpeg("restart intervals not supported")
        elif marker == _M_DNL:
            raise UnsupportedJpeg("DNL segments not supported")
        elif marker == _M_SOS:
            if frame is None:
                raise BadMarker("SOS before SOF")
            if payload[0] != 1:
                raise UnsupportedJpeg("multi-component scan not supported")
            ss, se, ah_al = payload[3], payload[4], payload[5]
            if (ss, se, ah_al) != (0, 63, 0):
                raise UnsupportedJpeg("non-baseline spectral selection")
            scan_tables = (payload[2] >> 4, payload[2] & 0x0F)
            break
        # APPn, COM and other length-bearing segments are skipped

    height, width, qid = frame
    if qid not in qtables:
        raise BadMarker(f"scan references missing quantization table {qid}")
    if scan_tables[0] not in dc_tables or scan_tables[1] not in ac_tables:
        raise BadMarker("scan references missing Huffman table")

    entropy = _entropy_segment(data, reader.pos)
    levels = _decode_scan(
        entropy,
        dc_tables[scan_tables[0]],
        ac_tables[scan_tables[1]],
        n_blocks=((height + 7) // 8) * ((width + 7) // 8),
    )
    padded_h, padded_w = ((height + 7) // 8) * 8, ((width + 7) // 8) * 8
    natural = np.zeros((levels.shape[0], 64), dtype=np.int64)
    natural[:, jpegsim.ZIGZAG_INDEX] = levels
    pixels = jpegsim.reconstruct_pixels(
        natural.reshape(-1, 8, 8), qtables[qid], padded_h, padded_w, level_shift=True
    )
    return crop(Image(pixels), width, height)


def _entropy_segment(data: bytes, start: int) -> bytes:
    """Entropy-coded bytes between SOS and EOI, with 0xFF00 stuffing removed."""
    pos = start
    while True:
        idx = data.find(b"\xFF", pos)
        if idx < 0 or idx + 1 >= len(data):
            raise TruncatedStream("missing EOI marker")
        nxt = data[idx + 1]
        if nxt == 0x00:
            pos = idx + 2
            continue
        if 0xD0 <= nxt <= 0xD7:
            raise UnsupportedJpeg("restart markers not supported")
        if nxt == _M_EOI:
            return data[start:idx].replace(b"\xFF\x00", b"\xFF")
        raise BadMarker(f"unexpected marker 0xFF{nxt:02X} inside scan")


def _decode_scan(entropy: bytes, dc_table, ac_table, n_blocks: int) -> np.ndarray:
    """Huffman-decode the scan into (n_blocks, 64) zigzag-ordered levels."""
    dc_sym = dc_table[0].tolist()
    dc_len = dc_table[1].tolist()
    ac_sym = ac_table[0].tolist()
    ac_len = ac_table[1].tolist()
    bits = np.unpackbits(np.frombuffer(entropy, dtype=np.uint8))
    n_real = bits.size
    padded = np.concatenate([bits, np.zeros(16, dtype=np.uint8)])
    win = (np.lib.stride_tricks.sliding_window_view(padded, 16) @ _POW2_16).tolist()

    levels = np.zeros((n_blocks, 64), dtype=np.int64)
    pos = 0
    pred = 0
    for bi in range(n_blocks):
        w = win[pos]
        length = dc_len[w]
        if length == 0:
            raise BadMarker("invalid DC Huffman code")
        s = dc_sym[w]
        pos += length
        if s:
            raw = win[pos] >> (16 - s)
            pos += s
            diff = raw if raw >= (1 << (s - 1)) else raw - ((1 << s) - 1)
        else:
            diff = 0
        pred += diff
        row = levels[bi]
        row[0] = pred
        k = 1
        while k < 64:
            w = win[pos]
            length = ac_len[w]
            if length == 0:
                raise BadMarker("invalid AC Huffman code")
            sym = ac_sym[w]
            pos += length
            if sym == 0x00:  # EOB
                break
            if sym == 0xF0:  # ZRL
                k += 16
                continue
            k += sym >> 4
            s = sym & 0x0F
            if s == 0:
                raise BadMarker(f"invalid AC run/size symbol 0x{sym:02X}")
            if k > 63:
                raise BadMarker("AC run overflows block")
            raw = win[pos] >> (16 - s)
            pos += s
            row[k] = raw if raw >= (1 << (s - 1)) else raw - ((1 << s) - 1)
            k += 1
        if pos > n_real:
            raise TruncatedStream("scan data ended mid-block")
    return levels
