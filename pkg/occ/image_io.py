"""
Grayscale image files: binary PGM (P5, maxval 255) and 8-bit PNG.
"""

import io
from pathlib import Path
from typing import Tuple, Union

import numpy as np
from PIL import Image

PathLike = Union[str, Path]

_WHITESPACE = b" \t\r\n\v\f"


class ImageFormatError(ValueError):
    """Raised for malformed or unsupported image files."""


def encode_pgm(img: np.ndarray) -> bytes:
    """Serialize a 2D uint8 array as P5."""
    img = np.ascontiguousarray(img)
    if img.ndim != 2 or img.dtype != np.uint8:
        raise ImageFormatError(f"expected a 2D uint8 image, got {img.dtype} with shape {img.shape}")
    height, width = img.shape
    return f"P5\n{width} {height}\n255\n".encode("ascii") + img.tobytes()


def _next_token(data: bytes, pos: int) -> Tuple[bytes, int]:
    """Read one header token, skipping whitespace and # comments."""
    while pos < len(data):
        if data[pos] in _WHITESPACE:
            pos += 1
        elif data[pos:pos + 1] == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
        else:
            break
    start = pos
    while pos < len(data) and data[pos] not in _WHITESPACE and data[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise ImageFormatError(f"truncated PGM header at offset {start}")
    return data[start:pos], pos


def decode_pgm(data: bytes) -> np.ndarray:
    """Parse a P5 graymap with maxval 255."""
    magic, pos = _next_token(data, 0)
    if magic != b"P5":
        raise ImageFormatError(f"not a binary PGM (magic {magic!r}) at offset 0")

    fields = []
    for name in ("width", "height", "maxval"):
        token_start = pos
        token, pos = _next_token(data, pos)
        if not token.isdigit():
            raise ImageFormatError(f"invalid PGM {name} {token!r} at offset {token_start}")
        fields.append(int(token))
    width, height, maxval = fields
    if maxval != 255:
        raise ImageFormatError(f"unsupported bit depth: maxval {maxval}")
    if width < 1 or height < 1:
        raise ImageFormatError(f"invalid PGM size {width}x{height} at offset {pos}")
    if pos >= len(data) or data[pos] not in _WHITESPACE:
        raise ImageFormatError(f"missing separator after PGM header at offset {pos}")
    pos += 1

    expected = width * height
    if len(data) - pos < expected:
        raise ImageFormatError(
            f"truncated PGM raster: need {expected} bytes at offset {pos}, have {len(data) - pos}"
        )
    return np.frombuffer(data, dtype=np.uint8, count=expected, offset=pos).reshape(height, width).copy()


def write_image(path: PathLike, img: np.ndarray) -> Path:
    """Write by extension: .pgm as P5, .png as 8-bit grayscale."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix.lower() == ".png":
        if img.ndim != 2 or img.dtype != np.uint8:
            raise ImageFormatError(f"expected a 2D uint8 image, got {img.dtype} with shape {img.shape}")
        Image.fromarray(img).save(path, format="PNG")
    else:
        path.write_bytes(encode_pgm(img))
    return path


def decode_image_bytes(data: bytes, source: str = "image") -> np.ndarray:
    """Decode P5 graymap bytes, or anything Pillow can open, to 8-bit grayscale."""
    if data[:2] == b"P5":
        return decode_pgm(data)
    try:
        with Image.open(io.BytesIO(data)) as im:
            if im.mode in ("I", "I;16", "I;16B", "I;16L", "F"):
                raise ImageFormatError(f"unsupported bit depth: mode {im.mode}")
            return np.asarray(im.convert("L"), dtype=np.uint8).copy()
    except ImageFormatError:
        raise
    except Exception as e:
        raise ImageFormatError(f"cannot read {source}: {e}") from e


def read_image(path: PathLike) -> np.ndarray:
    """Read a P5 graymap or any 8-bit image Pillow can open, as grayscale."""
    path = Path(path)
    return decode_image_bytes(path.read_bytes(), source=str(path))
