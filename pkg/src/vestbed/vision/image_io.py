"""Binary PGM (P5) and PPM (P6) image I/O, 8-bit only."""

from __future__ import annotations

from pathlib import Path

import numpy as np


class ImageFormatError(Exception):
    pass


def _read_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read `count` whitespace-separated header tokens, skipping # comments."""
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < count:
        if pos >= len(data):
            raise ImageFormatError(f"truncated header at byte {pos}")
        ch = data[pos:pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
        else:
            start = pos
            while pos < len(data) and not data[pos:pos + 1].isspace():
                pos += 1
            tokens.append(data[start:pos])
    return tokens, pos + 1  # one whitespace byte separates header from pixels


def load_image(path: str | Path) -> np.ndarray:
    """Load a P5/P6 file as float64 HxW (gray) or HxWx3 (RGB) in [0, 255]."""
    data = Path(path).read_bytes()
    tokens, offset = _read_tokens(data, 4)
    magic = tokens[0]
    if magic not in (b"P5", b"P6"):
        raise ImageFormatError(f"unsupported magic {magic!r}")
    width, height, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise ImageFormatError(f"only 8-bit images supported, maxval={maxval}")
    channels = 1 if magic == b"P5" else 3
    need = width * height * channels
    pixels = np.frombuffer(data, dtype=np.uint8, count=-1, offset=offset)
    if len(pixels) < need:
        raise ImageFormatError(
            f"pixel data truncated at byte {offset + len(pixels)}: "
            f"expected {need} bytes, found {len(pixels)}")
    arr = pixels[:need].astype(np.float64)
    if channels == 1:
        return arr.reshape(height, width)
    return arr.reshape(height, width, 3)


def save_image(path: str | Path, img: np.ndarray) -> None:
    """Write an HxW or HxWx3 array (values in [0, 255]) as P5/P6."""
    arr = np.clip(np.asarray(img), 0, 255).astype(np.uint8)
    if arr.ndim == 2:
        magic, (h, w) = b"P5", arr.shape
    elif arr.ndim == 3 and arr.shape[2] == 3:
        magic, (h, w) = b"P6", arr.shape[:2]
    else:
        raise ImageFormatError(f"cannot encode shape {arr.shape}")
    header = b"%s\n%d %d\n255\n" % (magic, w, h)
    Path(path).write_bytes(header + arr.tobytes())
