"""Netpbm (PBM P1/P4, PGM P2/P5) and VOX3 text volume readers and writers."""
from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .core import BinaryImage2D, BinaryImage3D, DomainError, GrayImage2D, ImageFormatError

_TOKEN = re.compile(rb"#[^\n]*|\S+")


def _header(data: bytes, count: int):
    """First ``count`` whitespace-separated header tokens and the offset after them."""
    tokens = []
    pos = 0
    for m in _TOKEN.finditer(data):
        if m.group().startswith(b"#"):
            continue
        tokens.append(m.group())
        pos = m.end()
        if len(tokens) == count:
            break
    if len(tokens) < count:
        raise ImageFormatError("truncated header")
    return tokens, pos


def _ints(tokens):
    try:
        return [int(t) for t in tokens]
    except ValueError as exc:
        raise ImageFormatError(f"non-integer header field: {exc}") from exc


def _square(w: int, h: int) -> int:
    if w != h or w < 1:
        raise ImageFormatError(f"image must be square and non-empty, got {w}x{h}")
    return w


def parse_pbm(data: bytes) -> BinaryImage2D:
    magic = data[:2]
    if magic not in (b"P1", b"P4"):
        raise ImageFormatError(f"not a PBM file (magic {magic!r})")
    (_, w, h), pos = _header(data, 3)
    w, h = _ints([w, h])
    n = _square(w, h)
    if magic == b"P1":
        body = re.sub(rb"#[^\n]*", b"", data[pos:])
        bits = np.frombuffer(bytes(ch for ch in body if ch in b"01"), dtype=np.uint8) - ord("0")
        if bits.size != n * n:
            raise ImageFormatError(f"expected {n * n} pixels, found {bits.size}")
        return BinaryImage2D(bits.reshape(n, n))
    raw = np.frombuffer(data[pos + 1:], dtype=np.uint8)
    stride = (n + 7) // 8
    if raw.size < stride * n:
        raise ImageFormatError("truncated P4 raster")
    bits = np.unpackbits(raw[:stride * n].reshape(n, stride), axis=1)[:, :n]
    return BinaryImage2D(bits)


def parse_pgm(data: bytes) -> GrayImage2D:
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise ImageFormatError(f"not a PGM file (magic {magic!r})")
    (_, w, h, maxval), pos = _header(data, 4)
    w, h, maxval = _ints([w, h, maxval])
    n = _square(w, h)
    if not 0 < maxval < 65536:
        raise ImageFormatError(f"maxval {maxval} out of range")
    if magic == b"P2":
        body = re.sub(rb"#[^\n]*", b"", data[pos:]).split()
        vals = np.array(_ints(body), dtype=np.int64)
        if vals.size != n * n:
            raise ImageFormatError(f"expected {n * n} pixels, found {vals.size}")
    else:
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
        raw = data[pos + 1:pos + 1 + n * n * dtype.itemsize]
        if len(raw) < n * n * dtype.itemsize:
            raise ImageFormatError("truncated P5 raster")
        vals = np.frombuffer(raw, dtype=dtype).astype(np.int64)
    if vals.max(initial=0) > maxval:
        raise ImageFormatError("pixel value exceeds maxval")
    return GrayImage2D(vals.reshape(n, n) / maxval)


def format_pbm(image: BinaryImage2D, binary: bool = True) -> bytes:
    v = image.values
    n = image.n
    if binary:
        return f"P4\n{n} {n}\n".encode() + np.packbits(v, axis=1).tobytes()
    lines = [" ".join(str(int(x)) for x in row) for row in v]
    return f"P1\n{n} {n}\n".encode() + ("\n".join(lines) + "\n").encode()


def format_pgm(image: GrayImage2D, maxval: int = 65535, binary: bool = True) -> bytes:
    n = image.n
    q = np.rint(image.values * maxval).astype(np.int64)
    if binary:
        dtype = ">u2" if maxval > 255 else np.uint8
        return f"P5\n{n} {n}\n{maxval}\n".encode() + q.astype(dtype).tobytes()
    lines = [" ".join(str(int(x)) for x in row) for row in q]
    return f"P2\n{n} {n}\n{maxval}\n".encode() + ("\n".join(lines) + "\n").encode()


def parse_vox3(text: str) -> BinaryImage3D:
    lines = text.split("\n")
    if not lines or lines[0].strip() != "VOX3":
        raise ImageFormatError("not a VOX3 file")
    try:
        n = int(lines[1])
    except (IndexError, ValueError) as exc:
        raise ImageFormatError("VOX3 side length missing") from exc
    if n < 1:
        raise ImageFormatError("VOX3 side length must be positive")
    rows = [ln.strip() for ln in lines[2:] if ln.strip()]
    if len(rows) != n * n or any(len(r) != n or set(r) - {"0", "1"} for r in rows):
        raise ImageFormatError(f"VOX3 body must be {n} blocks of {n} lines of {n} bits")
    # block k holds the slice values[:, :, k]; line i of the block is row i
    vol = np.array([[list(map(int, r)) for r in rows[k * n:(k + 1) * n]] for k in range(n)],
                   dtype=np.uint8)
    return BinaryImage3D(np.transpose(vol, (1, 2, 0)))


def format_vox3(image: BinaryImage3D) -> str:
    v = image.values
    n = image.n
    blocks = ["\n".join("".join(str(int(x)) for x in v[i, :, k]) for i in range(n))
              for k in range(n)]
    return f"VOX3\n{n}\n" + "\n\n".join(blocks) + "\n"


def read_image(path):
    """Load a PBM, PGM or VOX3 file by its content."""
    data = Path(path).read_bytes()
    if data.startswith(b"VOX3"):
        return parse_vox3(data.decode("ascii", errors="replace"))
    if data[:2] in (b"P1", b"P4"):
        return parse_pbm(data)
    if data[:2] in (b"P2", b"P5"):
        return parse_pgm(data)
    raise ImageFormatError(f"{path}: unrecognised image format")


def write_image(path, image) -> None:
    if isinstance(image, BinaryImage2D):
        Path(path).write_bytes(format_pbm(image))
    elif isinstance(image, GrayImage2D):
        Path(path).write_bytes(format_pgm(image))
    elif isinstance(image, BinaryImage3D):
        Path(path).write_text(format_vox3(image))
    else:
        raise DomainError(f"cannot write {type(image).__name__}")
