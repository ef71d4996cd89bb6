"""numpy-facing bindings for the voting engine.

Thin wrappers over the ``houghvote`` library for use inside ML pipelines:
field construction from plain dicts, voting/decoding/attribution on numpy
arrays, and conversion between the HVT tensor format and ``.npy`` files.
No numerics are reimplemented here; every call runs the engine's own code
path, so results are bit-identical to the command-line tool's.
"""

from dataclasses import dataclass

import numpy as np

import houghvote as _hv

__version__ = "0.1.0"

__all__ = [
    "BoundField",
    "attribute",
    "build_field",
    "build_temporal_field",
    "convert",
    "decode",
    "vote",
]


@dataclass(frozen=True)
class BoundField:
    """Immutable handle to a constructed vote field.

    Exposes the geometry (region count, kernel side, per-region pixel
    counts); safe to share across threads.
    """

    handle: _hv.VoteField

    @property
    def R(self) -> int:
        return self.handle.R

    @property
    def field_side(self) -> int:
        return self.handle.field_side

    @property
    def counts(self) -> list:
        return list(self.handle.counts)


def build_field(spec: dict) -> BoundField:
    """Build a vote field from a spec dict; raises ValueError when invalid.

    Keys: ``angle_bin_deg``, ``ring_diams``, optional ``temporal``.
    """
    return BoundField(_hv.build_vote_field(_hv.VoteFieldSpec.from_dict(spec)))


def build_temporal_field() -> BoundField:
    """The 4-quadrant motion-voting field."""
    return BoundField(_hv.build_temporal_field())


def _unwrap(field) -> _hv.VoteField:
    return field.handle if isinstance(field, BoundField) else field


def vote(array, field, backend: str = "scatter", *,
         threshold: float = 0.0) -> np.ndarray:
    """Aggregate an HxWxR evidence array into an HxW presence map.

    Contiguous float32 input is handed to the engine as-is (no copy);
    anything else is copied into a contiguous buffer first. Output is
    float32, identical to the command-line ``vote`` on the same data.
    """
    array = np.ascontiguousarray(array)
    return _hv.vote(array, _unwrap(field), backend, threshold=threshold)


def decode(presence, wh, offset, *, stride: int = 4, top_k: int = 100,
           score_thresh: float = 0.0) -> list:
    """Decode presence maps (HxW or CxHxW) into Detection objects."""
    presence = np.asarray(presence)
    if presence.ndim == 2:
        presence = presence[None]
    aux = _hv.AuxMaps(wh=np.asarray(wh), offset=np.asarray(offset), stride=stride)
    return _hv.decode_all(presence, aux, top_k=top_k, score_thresh=score_thresh)


def attribute(evidence, field, center, *, keep_zeros: bool = False) -> list:
    """Voters behind a map location, as VoteRecord objects."""
    return _hv.attribute(np.asarray(evidence), _unwrap(field), center,
                         keep_zeros=keep_zeros)


def convert(path_in, path_out, direction: str) -> None:
    """Convert between HVT tensor files and ``.npy`` arrays.

    ``direction`` is ``"hvt2npy"`` or ``"npy2hvt"``. Only float32/float64
    arrays exist in the HVT format; anything else raises TypeError.
    """
    if direction == "hvt2npy":
        with open(path_out, "wb") as fh:  # np.save would append .npy to a name
            np.save(fh, _hv.read_tensor(path_in))
    elif direction == "npy2hvt":
        arr = np.load(path_in)
        try:
            _hv.write_tensor(arr, path_out)
        except _hv.UnsupportedDtype as exc:
            raise TypeError(str(exc)) from exc
    else:
        raise ValueError(f"direction must be 'hvt2npy' or 'npy2hvt', got {direction!r}")
