"""PNG and binary PGM (P5) codecs for 8-bit grayscale images.

PNG decoding accepts 8/16-bit grayscale, gray+alpha, RGB, RGBA and palette
images (plus 1/2/4-bit grayscale and palette), non-interlaced.  Color is
reduced to luminance with the ITU-R 601 weights; alpha is ignored.
"""

from __future__ import annotations

import re
import struct
import zlib
from pathlib import Path

import numpy as np

from . import kernels
from .errors import MalformedFile, UnsupportedFormat
from .raster import GrayImage

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_CHANNELS = {0: 1, 2: 3, 3: 1, 4: 2, 6: 4}
_ALLOWED_DEPTHS = {0: (1, 2, 4, 8, 16), 2: (8, 16), 3: (1, 2, 4, 8), 4: (8, 16), 6: (8, 16)}


def sniff_format(data: bytes) -> str:
    if data.startswith(PNG_SIGNATURE):
        return "png"
    if data[:2] == b"P5":
        return "pgm"
    if len(data) >= 2 and data[:1] == b"P" and data[1:2].isdigit():
        raise UnsupportedFormat(f"netpbm variant {data[:2].decode()} is not supported (P5 only)")
    raise UnsupportedFormat("unrecognised image format")


def luminance(rgb: np.ndarray) -> np.ndarray:
    """ITU-R 601 luma of an (..., 3) uint8 array, rounded half away from zero."""
    r, g, b = (rgb[..., i].astype(np.int64) for i in range(3))
    # integer arithmetic keeps the rounding exact
    return ((299 * r + 587 * g + 114 * b + 500) // 1000).astype(np.uint8)


def decode_image(data: bytes, fmt: str | None = None) -> GrayImage:
    fmt = fmt or sniff_format(data)
    if fmt == "png":
        return _decode_png(data)
    if fmt == "pgm":
        return _decode_pgm(data)
    raise UnsupportedFormat(f"format {fmt!r} is not supported")


def encode_image(img: GrayImage, fmt: str = "png") -> bytes:
    if fmt == "png":
        return _encode_png(img)
    if fmt == "pgm":
        return _encode_pgm(img)
    raise UnsupportedFormat(f"format {fmt!r} is not supported")


def read_image(path) -> GrayImage:
    return decode_image(Path(path).read_bytes())


def write_image(img: GrayImage, path) -> None:
    path = Path(path)
    fmt = "pgm" if path.suffix.lower() in (".pgm", ".pnm") else "png"
    path.write_bytes(encode_image(img, fmt))


# -- PGM -------------------------------------------------------------------

_PGM_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n?)*([^\s#]+)")


def _decode_pgm(data: bytes) -> GrayImage:
    if data[:2] != b"P5":
        sniff_format(data)
        raise MalformedFile("not a P5 file")
    pos = 2
    fields = []
    for _ in range(3):
        m = _PGM_TOKEN.match(data, pos)
        if not m:
            raise MalformedFile("truncated PGM header")
        try:
            fields.append(int(m.group(1)))
        except ValueError:
            raise MalformedFile(f"bad PGM header field {m.group(1)!r}") from None
        pos = m.end()
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise MalformedFile("PGM header must end in a single whitespace byte")
    pos += 1
    width, height, maxval = fields
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise MalformedFile(f"invalid PGM dimensions/maxval {width}x{height}/{maxval}")
    bps = 1 if maxval < 256 else 2
    need = width * height * bps
    payload = data[pos:pos + need]
    if len(payload) != need:
        raise MalformedFile(f"PGM payload has {len(payload)} bytes, expected {need}")
    dtype = np.uint8 if bps == 1 else np.dtype(">u2")
    arr = np.frombuffer(payload, dtype=dtype).reshape(height, width).astype(np.int64)
    if np.any(arr > maxval):
        raise MalformedFile("PGM sample exceeds maxval")
    if maxval != 255:
        arr = (arr * 255 * 2 + maxval) // (2 * maxval)
    return GrayImage(arr.astype(np.uint8))


def _encode_pgm(img: GrayImage) -> bytes:
    return f"P5\n{img.width} {img.height}\n255\n".encode() + img.pixels.tobytes()


# -- PNG -------------------------------------------------------------------

def _chunk(tag: bytes, body: bytes) -> bytes:
    return struct.pack(">I", len(body)) + tag + body + struct.pack(">I", zlib.crc32(tag + body))


def _encode_png(img: GrayImage) -> bytes:
    h, w = img.pixels.shape
    raw = np.zeros((h, w + 1), dtype=np.uint8)
    raw[:, 1:] = img.pixels  # filter type 0 on every row
    ihdr = struct.pack(">IIBBBBB", w, h, 8, 0, 0, 0, 0)
    return (PNG_SIGNATURE + _chunk(b"IHDR", ihdr)
            + _chunk(b"IDAT", zlib.compress(raw.tobytes(), 6)) + _chunk(b"IEND", b""))


def _read_chunks(data: bytes):
    pos = len(PNG_SIGNATURE)
    while True:
        if pos + 8 > len(data):
            raise MalformedFile("truncated PNG chunk header")
        (length,) = struct.unpack(">I", data[pos:pos + 4])
        tag = data[pos + 4:pos + 8]
        body = data[pos + 8:pos + 8 + length]
        crc = data[pos + 8 + length:pos + 12 + length]
        if len(body) != length or len(crc) != 4:
            raise MalformedFile(f"truncated PNG chunk {tag!r}")
        if struct.unpack(">I", crc)[0] != zlib.crc32(tag + body):
            raise MalformedFile(f"CRC mismatch in PNG chunk {tag!r}")
        yield tag, body
        if tag == b"IEND":
            return
        pos += 12 + length


def _decode_png(data: bytes) -> GrayImage:
    if not data.startswith(PNG_SIGNATURE):
        raise MalformedFile("missing PNG signature")
    header = None
    palette = None
    idat = []
    for tag, body in _read_chunks(data):
        if tag == b"IHDR":
            if len(body) != 13:
                raise MalformedFile("bad IHDR length")
            header = struct.unpack(">IIBBBBB", body)
        elif tag == b"PLTE":
            if len(body) % 3:
                raise MalformedFile("bad PLTE length")
            palette = np.frombuffer(body, dtype=np.uint8).reshape(-1, 3)
        elif tag == b"IDAT":
            idat.append(body)
    if header is None:
        raise MalformedFile("PNG without IHDR")
    width, height, depth, ctype, comp, filt, interlace = header
    if width < 1 or height < 1:
        raise MalformedFile("PNG has zero dimension")
    if ctype not in _CHANNELS or depth not in _ALLOWED_DEPTHS[ctype]:
        raise UnsupportedFormat(f"PNG color type {ctype} / bit depth {depth}")
    if comp != 0 or filt != 0:
        raise MalformedFile("unknown PNG compression or filter method")
    if interlace != 0:
        raise UnsupportedFormat("interlaced PNG is not supported")
    if ctype == 3 and palette is None:
        raise MalformedFile("palette PNG without PLTE")
    try:
        raw = zlib.decompress(b"".join(idat))
    except zlib.error as exc:
        raise MalformedFile(f"corrupt PNG image data: {exc}") from None

    channels = _CHANNELS[ctype]
    bits_pp = depth * channels
    stride = (width * bits_pp + 7) // 8
    bpp = max(1, bits_pp // 8)
    if len(raw) < height * (stride + 1):
        raise MalformedFile("PNG image data is truncated")
    rows = kernels.png_unfilter(np.frombuffer(raw, dtype=np.uint8)[:height * (stride + 1)],
                                height, stride, bpp)

    if depth == 16:
        samples = rows.reshape(height, -1, 2)
        vals = samples[..., 0].astype(np.uint16) * 256 + samples[..., 1]
        # 16 -> 8 bit, rounded
        arr = ((vals.astype(np.int64) * 255 * 2 + 65535) // (2 * 65535)).astype(np.uint8)
        arr = arr[:, :width * channels].reshape(height, width, channels)
    elif depth == 8:
        arr = rows[:, :width * channels].reshape(height, width, channels)
    else:
        bits = np.unpackbits(rows, axis=1)
        per = bits[:, :width * depth].reshape(height, width, depth)
        weights = 1 << np.arange(depth - 1, -1, -1)
        idx = (per * weights).sum(axis=2)
        if ctype == 0:
            arr = (idx * 255 // ((1 << depth) - 1)).astype(np.uint8)[..., None]
        else:
            arr = idx.astype(np.uint8)[..., None]

    if ctype == 3:
        if int(arr.max()) >= len(palette):
            raise MalformedFile("palette index out of range")
        return GrayImage(luminance(palette[arr[..., 0]]))
    if ctype in (0, 4):
        return GrayImage(arr[..., 0])
    return GrayImage(luminance(arr[..., :3]))
