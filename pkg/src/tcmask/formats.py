"""Binary mask container, RLE codec, PPM frames, atomic file writes.

The .tcmask container is bit-exact and self-describing:

    magic  4 bytes  b"TCMK"
    u8     version  1
    u8     kind     0 = visible u16 grid, 1 = xray bit planes, 2 = triplet bit planes
    u16    K        instance count (3 for triplets)
    u16    T        frame count
    u16    H, W     spatial size

followed by a little-endian row-major payload. Kind 0 stores T*H*W uint16
instance ids. Kinds 1 and 2 store boolean planes packed 8 pixels per byte,
most significant bit first, rows padded to whole bytes, plane order t-major
k-minor.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile

import numpy as np

MAGIC = b"TCMK"
VERSION = 1
KIND_VISIBLE = 0
KIND_XRAY = 1
KIND_TRIPLET = 2

_HEADER = struct.Struct("<4sBBHHHH")


def atomic_write_bytes(path, data: bytes) -> None:
    """Write via temp file + rename so readers never observe partial data."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tcmask-tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.chmod(tmp, 0o644)  # mkstemp defaults to 0600
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def atomic_write_json(path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=1) + "\n")


def _pack_planes(planes: np.ndarray) -> bytes:
    """(N, H, W) boolean planes -> packed payload, one padded row at a time."""
    return np.packbits(planes.astype(np.uint8), axis=-1).tobytes()


def _unpack_planes(payload: bytes, n: int, h: int, w: int) -> np.ndarray:
    row_bytes = (w + 7) // 8
    raw = np.frombuffer(payload, dtype=np.uint8).reshape(n, h, row_bytes)
    bits = np.unpackbits(raw, axis=-1, count=w)
    return bits.astype(bool)


def save_visible_grid(path, visible: np.ndarray, instance_count: int) -> None:
    """Store a (T, H, W) uint16 instance-id grid as kind 0."""
    visible = np.asarray(visible)
    if visible.ndim != 3:
        raise ValueError("visible grid must be (T, H, W)")
    t, h, w = visible.shape
    header = _HEADER.pack(MAGIC, VERSION, KIND_VISIBLE, instance_count, t, h, w)
    payload = visible.astype("<u2").tobytes()
    atomic_write_bytes(path, header + payload)


def save_planes(path, planes: np.ndarray, kind: int) -> None:
    """Store (T, K, H, W) boolean planes as kind 1 (xray) or 2 (triplet)."""
    if kind not in (KIND_XRAY, KIND_TRIPLET):
        raise ValueError("kind must be 1 or 2")
    planes = np.asarray(planes)
    if planes.ndim != 4:
        raise ValueError("planes must be (T, K, H, W)")
    t, k, h, w = planes.shape
    header = _HEADER.pack(MAGIC, VERSION, kind, k, t, h, w)
    payload = _pack_planes(planes.reshape(t * k, h, w))
    atomic_write_bytes(path, header + payload)


def load_tcmask(path) -> tuple[int, np.ndarray]:
    """Read any .tcmask file; returns (kind, array).

    Kind 0 yields a (T, H, W) uint16 grid, kinds 1-2 a (T, K, H, W) bool array.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, kind, k, t, h, w = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    payload = data[_HEADER.size :]
    if kind == KIND_VISIBLE:
        expected = t * h * w * 2
        if len(payload) != expected:
            raise ValueError(f"{path}: payload size {len(payload)} != {expected}")
        grid = np.frombuffer(payload, dtype="<u2").reshape(t, h, w)
        return kind, grid.astype(np.uint16)
    if kind in (KIND_XRAY, KIND_TRIPLET):
        row_bytes = (w + 7) // 8
        expected = t * k * h * row_bytes
        if len(payload) != expected:
            raise ValueError(f"{path}: payload size {len(payload)} != {expected}")
        return kind, _unpack_planes(payload, t * k, h, w).reshape(t, k, h, w)
    raise ValueError(f"{path}: unknown kind {kind}")


# --- COCO-style uncompressed RLE (row-major, starts with the zero run) -------


def rle_encode(mask: np.ndarray) -> list[int]:
    flat = np.asarray(mask, dtype=bool).ravel()
    if flat.size == 0:
        return [0]
    changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], changes, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs.insert(0, 0)
    return [int(r) for r in runs]


def rle_decode(counts: list[int], height: int, width: int) -> np.ndarray:
    total = sum(counts)
    if total != height * width:
        raise ValueError(f"run lengths sum to {total}, expected {height * width}")
    flat = np.zeros(height * width, dtype=bool)
    pos = 0
    value = False
    for run in counts:
        if value:
            flat[pos : pos + run] = True
        pos += run
        value = not value
    return flat.reshape(height, width)


# --- PPM (binary P6) ----------------------------------------------------------


def write_ppm(path, rgb: np.ndarray) -> None:
    rgb = np.asarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError("ppm expects an (H, W, 3) uint8 image")
    h, w = rgb.shape[:2]
    atomic_write_bytes(path, b"P6\n%d %d\n255\n" % (w, h) + rgb.tobytes())


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    fields = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    if fields[0] != b"P6":
        raise ValueError("not a binary PPM file")
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise ValueError("only 8-bit PPM supported")
    pixels = np.frombuffer(data, dtype=np.uint8, count=h * w * 3, offset=pos + 1)
    return pixels.reshape(h, w, 3).copy()
