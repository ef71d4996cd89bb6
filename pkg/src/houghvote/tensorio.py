"""Binary tensor interchange (HVT1) plus label maps and region remapping.

File layout, little-endian throughout, no padding:

    bytes 0..3   magic "HVT1"
    byte  4      dtype code: 0 = float32, 1 = float64
    byte  5      ndim, 1..4
    next 4*ndim  dims as uint32
    rest         payload, row-major (last dim fastest)

The layout is normative: any reader/writer pair must round-trip files
byte-exactly.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import (
    BadMagic,
    NotAPermutation,
    TensorFormatError,
    TruncatedFile,
    UnsupportedDtype,
)

MAGIC = b"HVT1"
_CODE_TO_DTYPE = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_KIND_TO_CODE = {"float32": 0, "float64": 1}
MAX_NDIM = 4


def write_tensor(tensor, path) -> None:
    """Write an array (1..4 dims, float32/float64) in the HVT1 layout."""
    arr = np.asarray(tensor)
    code = _KIND_TO_CODE.get(arr.dtype.name)
    if code is None:
        raise UnsupportedDtype(f"cannot write dtype {arr.dtype}; use float32 or float64")
    if not 1 <= arr.ndim <= MAX_NDIM:
        raise TensorFormatError(f"tensor must have 1..{MAX_NDIM} dims, got {arr.ndim}")
    if any(d >= 2 ** 32 for d in arr.shape):
        raise TensorFormatError(f"dimension too large for uint32: {arr.shape}")
    header = MAGIC + bytes([code, arr.ndim]) + struct.pack(f"<{arr.ndim}I", *arr.shape)
    payload = np.ascontiguousarray(arr, dtype=_CODE_TO_DTYPE[code]).tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_tensor(path) -> np.ndarray:
    """Read an HVT1 file; exact inverse of write_tensor."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < len(MAGIC):
        raise TruncatedFile(f"{path}: file shorter than the magic string")
    if data[:4] != MAGIC:
        raise BadMagic(f"{path}: bad magic {data[:4]!r}")
    if len(data) < 6:
        raise TruncatedFile(f"{path}: header cut short")
    code, ndim = data[4], data[5]
    dtype = _CODE_TO_DTYPE.get(code)
    if dtype is None:
        raise UnsupportedDtype(f"{path}: unknown dtype code {code}")
    if not 1 <= ndim <= MAX_NDIM:
        raise TensorFormatError(f"{path}: ndim must be 1..{MAX_NDIM}, got {ndim}")
    hdr_end = 6 + 4 * ndim
    if len(data) < hdr_end:
        raise TruncatedFile(f"{path}: dims cut short")
    dims = struct.unpack(f"<{ndim}I", data[6:hdr_end])
    expected = int(np.prod(dims, dtype=np.int64)) * dtype.itemsize
    payload = len(data) - hdr_end
    if payload < expected:
        raise TruncatedFile(f"{path}: payload has {payload} bytes, expected {expected}")
    if payload > expected:
        raise TensorFormatError(f"{path}: {payload - expected} trailing bytes after payload")
    arr = np.frombuffer(data, dtype=dtype, count=int(np.prod(dims, dtype=np.int64)),
                        offset=hdr_end)
    return arr.reshape(dims).copy()


def check_permutation(perm, n: int) -> tuple[int, ...]:
    """Validate that perm is a bijection on [0, n); returns it as ints."""
    try:
        perm = tuple(int(p) for p in perm)
    except (TypeError, ValueError) as exc:
        raise NotAPermutation(f"permutation entries must be integers: {exc}") from exc
    if sorted(perm) != list(range(n)):
        raise NotAPermutation(f"{perm} is not a permutation of 0..{n - 1}")
    return perm


def remap_regions(E, perm) -> np.ndarray:
    """Reorder the region axis: output channel r = input channel perm[r].

    Adapts evidence from trained models whose region-id order differs from
    this engine's ring-major convention.
    """
    E = np.asarray(E)
    if E.ndim < 1:
        raise TensorFormatError("cannot remap a scalar")
    perm = check_permutation(perm, E.shape[-1])
    return E[..., list(perm)]


def load_labels(path) -> list[str]:
    """Class names from a JSON array; index == class id."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, list) or not doc:
        raise ValueError(f"{path}: label map must be a non-empty JSON array")
    if not all(isinstance(name, str) for name in doc):
        raise ValueError(f"{path}: label names must be strings")
    if len(set(doc)) != len(doc):
        raise ValueError(f"{path}: label names must be unique")
    return doc
