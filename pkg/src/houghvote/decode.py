"""Turn presence maps and auxiliary maps into detections.

Peaks are the pixels that survive a 3x3 max-pool (equality comparison,
truncated neighborhoods at borders). Each peak is shifted by the predicted
sub-pixel center offset, scaled by the downsample stride, and wrapped in a
box from the predicted width/height map.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import maximum_filter

from .errors import ShapeMismatch


@dataclass(frozen=True)
class AuxMaps:
    """Width/height and center-offset maps plus the map-to-image stride.

    ``wh[y, x]`` is (h, w) in output-map units; ``offset[y, x]`` is the
    (dy, dx) sub-pixel center correction. ``stride`` is the downsample
    factor between the input image and the maps (4 for the usual backbone).
    """

    wh: np.ndarray
    offset: np.ndarray
    stride: int = 4

    def __post_init__(self):
        wh = np.asarray(self.wh)
        offset = np.asarray(self.offset)
        if wh.ndim != 3 or wh.shape[2] != 2:
            raise ShapeMismatch(f"wh map must be HxWx2, got shape {wh.shape}")
        if offset.shape != wh.shape:
            raise ShapeMismatch(f"offset map shape {offset.shape} != wh map shape {wh.shape}")
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        object.__setattr__(self, "wh", wh)
        object.__setattr__(self, "offset", offset)


@dataclass(frozen=True)
class Detection:
    """One decoded instance.

    ``box`` is (x, y, w, h) in input-image pixels; ``center`` is the peak's
    integer (cy, cx) in output-map coordinates, kept so the decode is
    invertible.
    """

    class_id: int
    score: float
    box: tuple[float, float, float, float]
    center: tuple[int, int]

    def to_json_dict(self) -> dict:
        return {
            "class_id": self.class_id,
            "score": self.score,
            "bbox": list(self.box),
        }


def extract_peaks(O, top_k: int = 100) -> list[tuple[int, int, float]]:
    """Local maxima of a presence map under 3x3 suppression.

    A pixel survives iff it equals the maximum of its 3x3 neighborhood
    (truncated at borders). Survivors are sorted by score descending, ties
    broken by (cy, cx); at most ``top_k`` are returned.
    """
    if top_k < 1:
        raise ValueError(f"top_k must be >= 1, got {top_k}")
    O = np.asarray(O)
    if O.ndim != 2:
        raise ShapeMismatch(f"presence map must be HxW, got shape {O.shape}")
    pooled = maximum_filter(O, size=3, mode="constant", cval=-np.inf)
    ys, xs = np.nonzero(O == pooled)
    scores = O[ys, xs].astype(np.float64)
    order = np.lexsort((xs, ys, -scores))[:top_k]
    return [(int(ys[i]), int(xs[i]), float(scores[i])) for i in order]


def decode_detections(peaks, aux: AuxMaps, class_id: int = 0,
                      score_thresh: float = 0.0) -> list[Detection]:
    """Decode peaks of one class into boxes in input-image pixels.

    For a peak (cy, cx, s) with s >= score_thresh, the image-space center is
    ((cy + offset_dy) * stride, (cx + offset_dx) * stride) and the box size
    is the wh entry times stride, centered there.
    """
    stride = aux.stride
    dets = []
    for cy, cx, score in peaks:
        if score < score_thresh:
            continue
        h, w = (float(v) for v in aux.wh[cy, cx])
        oy, ox = (float(v) for v in aux.offset[cy, cx])
        cy_img = (cy + oy) * stride
        cx_img = (cx + ox) * stride
        bw = w * stride
        bh = h * stride
        dets.append(Detection(
            class_id=class_id,
            score=float(score),
            box=(cx_img - bw / 2, cy_img - bh / 2, bw, bh),
            center=(cy, cx),
        ))
    dets.sort(key=lambda d: (-d.score, d.center[0], d.center[1]))
    return dets


def decode_all(O_stack, aux: AuxMaps, top_k: int = 100,
               score_thresh: float = 0.0) -> list[Detection]:
    """Decode a CxHxW presence stack; keep the global top_k by score.

    Peaks are extracted per class, decoded, pooled, and sorted by score
    descending with ties broken by (class_id, cy, cx).
    """
    O_stack = np.asarray(O_stack)
    if O_stack.ndim != 3:
        raise ShapeMismatch(f"presence stack must be CxHxW, got shape {O_stack.shape}")
    if O_stack.shape[1:] != aux.wh.shape[:2]:
        raise ShapeMismatch(
            f"presence maps {O_stack.shape[1:]} do not match aux maps {aux.wh.shape[:2]}"
        )
    dets: list[Detection] = []
    for c in range(O_stack.shape[0]):
        peaks = extract_peaks(O_stack[c], top_k)
        dets.extend(decode_detections(peaks, aux, class_id=c, score_thresh=score_thresh))
    dets.sort(key=lambda d: (-d.score, d.class_id, d.center[0], d.center[1]))
    return dets[:top_k]


def write_jsonl(detections, fh) -> None:
    """One JSON object per line: {"class_id", "score", "bbox": [x, y, w, h]}."""
    for det in detections:
        fh.write(json.dumps(det.to_json_dict()) + "\n")


def write_coco(detections, fh, image_id: int = 0) -> None:
    """COCO-results-style JSON array for downstream evaluation tooling."""
    doc = [
        {
            "image_id": image_id,
            "category_id": det.class_id,
            "bbox": list(det.box),
            "score": det.score,
        }
        for det in detections
    ]
    json.dump(doc, fh, indent=1)
    fh.write("\n")
