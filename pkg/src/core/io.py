"""
File formats: IVOL volumes, binary PGM images, blur-kernel text and trace CSV.

Every writer goes through :func:`atomic_write` so a failed run never leaves
a partial file behind.
"""

import logging
import os
import struct
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Iterator, Union

import numpy as np

from ..models.volume import Shape
from .errors import FormatError
from .tensor import as_volume, unvectorize, vectorize

logger = logging.getLogger(__name__)

IVOL_MAGIC = b"IVOL"
IVOL_VERSION = 1

PathLike = Union[str, Path]


@contextmanager
def atomic_write(path: PathLike, mode: str = "wb") -> Iterator[IO]:
    """Write to a temporary sibling file and rename it over ``path`` on success."""
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=str(path.parent or "."))
    try:
        with os.fdopen(fd, mode) as handle:
            yield handle
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def encode_ivol(volume: np.ndarray) -> bytes:
    """Serialize a volume to IVOL bytes."""
    volume = as_volume(volume, copy=False)
    shape = Shape.of(volume)
    header = IVOL_MAGIC + struct.pack("<BB", IVOL_VERSION, shape.ndim)
    header += struct.pack(f"<{shape.ndim}I", *shape.dims)
    return header + vectorize(volume).astype("<f8").tobytes()


def decode_ivol(payload: bytes) -> np.ndarray:
    """Parse IVOL bytes into a volume."""
    if len(payload) < 6 or payload[:4] != IVOL_MAGIC:
        raise FormatError("not an IVOL file (bad magic)")
    version, ndim = struct.unpack_from("<BB", payload, 4)
    if version != IVOL_VERSION:
        raise FormatError(f"unsupported IVOL version {version}")
    if ndim not in (2, 3):
        raise FormatError(f"IVOL ndim must be 2 or 3, got {ndim}")
    offset = 6 + 4 * ndim
    if len(payload) < offset:
        raise FormatError("truncated IVOL header")
    dims = struct.unpack_from(f"<{ndim}I", payload, 6)
    try:
        shape = Shape.from_dims(dims)
    except ValueError as exc:
        raise FormatError(f"invalid IVOL extents {dims}: {exc}") from exc
    expected = offset + 8 * shape.size
    if len(payload) != expected:
        raise FormatError(f"IVOL payload has {len(payload)} bytes, expected {expected}")
    samples = np.frombuffer(payload, dtype="<f8", offset=offset).astype(np.float64)
    if not np.all(np.isfinite(samples)):
        raise FormatError("IVOL payload holds non-finite samples")
    return unvectorize(samples, shape)


def write_ivol(path: PathLike, volume: np.ndarray) -> Path:
    """Write a volume as an IVOL file."""
    payload = encode_ivol(volume)
    with atomic_write(path, "wb") as handle:
        handle.write(payload)
    logger.debug(f"Wrote IVOL {path} ({len(payload)} bytes)")
    return Path(path)


def read_ivol(path: PathLike) -> np.ndarray:
    """Read an IVOL file."""
    return decode_ivol(Path(path).read_bytes())


def _pgm_tokens(payload: bytes, count: int):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens = []
    pos = 2
    while len(tokens) < count:
        while pos < len(payload) and payload[pos:pos + 1].isspace():
            pos += 1
        if pos < len(payload) and payload[pos:pos + 1] == b"#":
            while pos < len(payload) and payload[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(payload) and not payload[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated PGM header")
        tokens.append(payload[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def decode_pgm(payload: bytes) -> np.ndarray:
    """Parse binary P5 PGM bytes into a [0, 1]-scaled 2D volume."""
    if payload[:2] != b"P5":
        raise FormatError("only binary PGM (P5) is supported")
    tokens, offset = _pgm_tokens(payload, 3)
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise FormatError(f"invalid PGM header {tokens}") from exc
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise FormatError(f"invalid PGM geometry {width}x{height} maxval={maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height
    if len(payload) < offset + count * dtype.itemsize:
        raise FormatError("truncated PGM raster")
    raster = np.frombuffer(payload, dtype=dtype, count=count, offset=offset)
    return raster.reshape(height, width).astype(np.float64) / float(maxval)


def encode_pgm(image: np.ndarray, bits: int = 8) -> bytes:
    """Serialize a [0, 1] image as 8- or 16-bit binary PGM (values clipped)."""
    image = as_volume(image, copy=False)
    if image.ndim != 2:
        raise FormatError("PGM holds 2D images only")
    if bits not in (8, 16):
        raise FormatError(f"PGM bit depth must be 8 or 16, got {bits}")
    maxval = 255 if bits == 8 else 65535
    levels = np.rint(np.clip(image, 0.0, 1.0) * maxval)
    raster = levels.astype("u1" if bits == 8 else ">u2")
    height, width = image.shape
    return f"P5\n{width} {height}\n{maxval}\n".encode("ascii") + raster.tobytes()


def read_pgm(path: PathLike) -> np.ndarray:
    """Read a binary PGM file."""
    return decode_pgm(Path(path).read_bytes())


def write_pgm(path: PathLike, image: np.ndarray, bits: int = 8) -> Path:
    """Write a binary PGM file."""
    payload = encode_pgm(image, bits)
    with atomic_write(path, "wb") as handle:
        handle.write(payload)
    return Path(path)


def read_volume(path: PathLike) -> np.ndarray:
    """Read an IVOL or PGM file, chosen by content."""
    payload = Path(path).read_bytes()
    if payload[:4] == IVOL_MAGIC:
        return decode_ivol(payload)
    if payload[:2] == b"P5":
        return decode_pgm(payload)
    raise FormatError(f"{path}: neither IVOL nor binary PGM")


def parse_kernel_text(text: str) -> np.ndarray:
    """Parse kernel text: ``rows cols`` then row-major taps."""
    tokens = text.split()
    if len(tokens) < 2:
        raise FormatError("kernel text needs a 'rows cols' header")
    try:
        rows, cols = int(tokens[0]), int(tokens[1])
        taps = [float(t) for t in tokens[2:]]
    except ValueError as exc:
        raise FormatError(f"kernel text is not numeric: {exc}") from exc
    if rows < 1 or cols < 1 or len(taps) != rows * cols:
        raise FormatError(f"kernel header {rows}x{cols} does not match {len(taps)} taps")
    return np.asarray(taps, dtype=np.float64).reshape(rows, cols)


def format_kernel_text(taps: np.ndarray) -> str:
    """Render kernel taps in the text format."""
    rows, cols = taps.shape
    lines = [f"{rows} {cols}"]
    lines.extend(" ".join(repr(float(v)) for v in row) for row in taps)
    return "\n".join(lines) + "\n"


def read_kernel_taps(path: PathLike) -> np.ndarray:
    """Read kernel taps from an IVOL (2D) or text file."""
    payload = Path(path).read_bytes()
    if payload[:4] == IVOL_MAGIC:
        taps = decode_ivol(payload)
        if taps.ndim != 2:
            raise FormatError("kernel IVOL must be 2D")
        return taps
    return parse_kernel_text(payload.decode("ascii"))


def write_text(path: PathLike, text: str) -> Path:
    """Atomically write a text file."""
    with atomic_write(path, "w") as handle:
        handle.write(text)
    return Path(path)
