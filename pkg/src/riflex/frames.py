"""Frame decoding: binary PGM/PPM images and the RFLX1 raw container.

RFLX1 layout::

    RFLX1\\n
    {"height": H, "width": W, "channels": C, "frames": T, "dtype": "f32le"}\\n
    T*H*W*C little-endian float32 values, frame-major, rows, then channels

Values are used as decoded; PGM/PPM samples are not rescaled by maxval.
"""

from __future__ import annotations

import json
import re
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from .errors import FrameDataError
from .norepeat import FrameSequence

RFLX_MAGIC = b"RFLX1"
_WS = b" \t\r\n\x0b\x0c"
PathLike = Union[str, Path]


def _header_tokens(data: bytes, count: int) -> Tuple[List[bytes], int]:
    tokens = []
    i = 0
    while len(tokens) < count:
        while i < len(data) and data[i] in _WS:
            i += 1
        if i < len(data) and data[i:i + 1] == b"#":
            while i < len(data) and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        start = i
        while i < len(data) and data[i] not in _WS and data[i:i + 1] != b"#":
            i += 1
        if start == i:
            raise FrameDataError("truncated PNM header")
        tokens.append(data[start:i])
    # exactly one whitespace byte separates maxval from the raster
    return tokens, i + 1


def decode_pnm(data: bytes) -> np.ndarray:
    """Decode a P5 (grey) or P6 (RGB) image to an ``(H, W, C)`` float array."""
    if data[:2] not in (b"P5", b"P6"):
        raise FrameDataError(f"not a binary PGM/PPM file (magic {data[:2]!r})")
    tokens, offset = _header_tokens(data, 4)
    channels = 1 if tokens[0] == b"P5" else 3
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise FrameDataError(f"bad PNM header {tokens!r}") from None
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise FrameDataError(f"bad PNM dimensions or maxval: {width}x{height}, {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    n = width * height * channels
    raster = data[offset:offset + n * dtype.itemsize]
    if len(raster) != n * dtype.itemsize:
        raise FrameDataError(f"PNM raster truncated: expected {n * dtype.itemsize} bytes, got {len(raster)}")
    return np.frombuffer(raster, dtype=dtype).reshape(height, width, channels).astype(np.float64)


def encode_pnm(frame: np.ndarray, maxval: int = 255) -> bytes:
    frame = np.asarray(frame)
    if frame.ndim == 2:
        frame = frame[..., None]
    height, width, channels = frame.shape
    if channels not in (1, 3):
        raise FrameDataError(f"PNM holds 1 or 3 channels, got {channels}")
    magic = b"P5" if channels == 1 else b"P6"
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    values = np.clip(np.rint(frame), 0, maxval).astype(dtype)
    return magic + f"\n{width} {height}\n{maxval}\n".encode() + values.tobytes()


def read_pnm(path: PathLike) -> np.ndarray:
    return decode_pnm(Path(path).read_bytes())


def _frame_number(path: Path) -> int:
    digits = re.findall(r"\d+", path.stem)
    if not digits:
        raise FrameDataError(f"frame file {path.name} has no frame number")
    return int(digits[-1])


def read_frame_dir(path: PathLike) -> FrameSequence:
    """Load numbered ``*.pgm`` / ``*.ppm`` files, ordered by the last number in each name."""
    path = Path(path)
    files = [p for p in path.iterdir() if p.suffix.lower() in (".pgm", ".ppm")]
    if not files:
        raise FrameDataError(f"no .pgm/.ppm frames in {path}")
    files.sort(key=lambda p: (_frame_number(p), p.name))
    return FrameSequence.from_frames([read_pnm(p) for p in files])


def write_frame_dir(seq: FrameSequence, path: PathLike, maxval: int = 255) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    ext = ".pgm" if seq.frames.shape[-1] == 1 else ".ppm"
    width = max(4, len(str(len(seq) - 1)))
    for t, frame in enumerate(seq.frames):
        (path / f"frame_{t:0{width}d}{ext}").write_bytes(encode_pnm(frame, maxval))


def decode_rflx(data: bytes) -> FrameSequence:
    if not data.startswith(RFLX_MAGIC):
        raise FrameDataError("missing RFLX1 magic")
    rest = data[len(RFLX_MAGIC):]
    if rest[:1] == b"\n":
        rest = rest[1:]
    end = rest.find(b"\n")
    if end < 0:
        raise FrameDataError("RFLX1 header line not terminated")
    try:
        header = json.loads(rest[:end])
        h, w, c, t = (int(header[k]) for k in ("height", "width", "channels", "frames"))
    except (ValueError, KeyError, TypeError) as exc:
        raise FrameDataError(f"bad RFLX1 header: {exc}") from None
    if header.get("dtype") != "f32le":
        raise FrameDataError(f"unsupported RFLX1 dtype {header.get('dtype')!r}")
    payload = rest[end + 1:]
    expected = t * h * w * c * 4
    if len(payload) != expected:
        raise FrameDataError(f"RFLX1 payload is {len(payload)} bytes, header implies {expected}")
    arr = np.frombuffer(payload, dtype="<f4").reshape(t, h, w, c)
    return FrameSequence(arr.astype(np.float64))


def encode_rflx(seq: FrameSequence) -> bytes:
    t, h, w, c = seq.frames.shape
    header = json.dumps(
        {"height": h, "width": w, "channels": c, "frames": t, "dtype": "f32le"}, sort_keys=True
    )
    return RFLX_MAGIC + b"\n" + header.encode() + b"\n" + seq.frames.astype("<f4").tobytes()


def load_video(path: PathLike) -> FrameSequence:
    """A frame directory or an RFLX1 file."""
    path = Path(path)
    if path.is_dir():
        return read_frame_dir(path)
    if not path.exists():
        raise FrameDataError(f"{path} does not exist")
    return decode_rflx(path.read_bytes())
