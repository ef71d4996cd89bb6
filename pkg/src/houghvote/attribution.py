"""Inverse voting: recover the voters behind a presence-map value.

A pixel (i, j) votes for a center through region r exactly when
(i, j) + delta == center for some offset delta of region r, i.e. the voter
set is the point-reflected field placed at the center, clipped to the map.
Summing the recovered strengths reproduces the presence value at the center.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ImageSizeMismatch, OutOfBounds, ShapeMismatch
from .fields import VoteField


@dataclass(frozen=True)
class VoteRecord:
    """One vote: ``voter`` pixel (i, j) contributed ``strength`` through ``region``."""

    voter: tuple[int, int]
    region: int
    strength: float


def attribute(E, field: VoteField, center, keep_zeros: bool = False) -> list[VoteRecord]:
    """All votes received by ``center``, one record per (voter, region).

    Strength is E(i, j, r) / K_r. Records are ordered by region, then by the
    field's offset order. Zero-strength votes are omitted unless
    ``keep_zeros`` is set (the geometric voter set does not depend on
    evidence values).
    """
    E = np.asarray(E)
    if E.ndim != 3 or E.shape[2] != field.R:
        raise ShapeMismatch(f"evidence shape {E.shape} does not match field with R={field.R}")
    H, W = E.shape[:2]
    cy, cx = (int(v) for v in center)
    if not (0 <= cy < H and 0 <= cx < W):
        raise OutOfBounds(f"center ({cy}, {cx}) outside {H}x{W} map")
    records = []
    for r, offs in enumerate(field.offsets):
        k_r = field.counts[r]
        ii = cy - offs[:, 0]
        jj = cx - offs[:, 1]
        ok = (ii >= 0) & (ii < H) & (jj >= 0) & (jj < W)
        for i, j in zip(ii[ok], jj[ok]):
            s = float(E[i, j, r]) / k_r
            if s != 0.0 or keep_zeros:
                records.append(VoteRecord(voter=(int(i), int(j)), region=r, strength=s))
    return records


def vote_map(records, H: int, W: int) -> np.ndarray:
    """HxW map of vote strength per voter pixel (summed across regions)."""
    out = np.zeros((H, W), dtype=np.float64)
    for rec in records:
        out[rec.voter] += rec.strength
    return out.astype(np.float32)


def class_interactions(detections, E_stack, prob_maps, field: VoteField) -> np.ndarray:
    """CxC voting-activity matrix: rows are vote-getters, columns vote-givers.

    For each detection of class c, the geometric voter pixels of its center
    are enumerated and the class-probability vectors at those (distinct)
    pixels are summed into row c. ``detections`` holds Detection objects or
    (class_id, cy, cx) tuples.
    """
    E_stack = np.asarray(E_stack)
    prob_maps = np.asarray(prob_maps)
    if prob_maps.ndim != 3:
        raise ShapeMismatch(f"prob_maps must be CxHxW, got shape {prob_maps.shape}")
    if E_stack.ndim != 4 or E_stack.shape[:3] != prob_maps.shape or E_stack.shape[3] != field.R:
        raise ShapeMismatch(
            f"evidence stack {E_stack.shape} does not match prob maps "
            f"{prob_maps.shape} and field R={field.R}"
        )
    if prob_maps.size and prob_maps.min() < 0:
        raise ValueError("prob_maps must be non-negative")
    C, H, W = prob_maps.shape
    M = np.zeros((C, C), dtype=np.float64)
    for det in detections:
        if hasattr(det, "class_id"):
            c, (cy, cx) = det.class_id, det.center
        else:
            c, cy, cx = det
        records = attribute(E_stack[c], field, (cy, cx), keep_zeros=True)
        if not records:
            continue
        flat = np.unique([rec.voter[0] * W + rec.voter[1] for rec in records])
        M[c] += prob_maps[:, flat // W, flat % W].sum(axis=1)
    return M


def jet_colormap(t) -> np.ndarray:
    """Piecewise-linear jet: 0 -> dark blue (0, 0, 128), 1 -> dark red (128, 0, 0)."""
    t = np.asarray(t, dtype=np.float64)
    r = np.clip(1.5 - np.abs(4.0 * t - 3.0), 0.0, 1.0)
    g = np.clip(1.5 - np.abs(4.0 * t - 2.0), 0.0, 1.0)
    b = np.clip(1.5 - np.abs(4.0 * t - 1.0), 0.0, 1.0)
    return np.rint(np.stack([r, g, b], axis=-1) * 255.0).astype(np.uint8)


def render_heatmap(m, underlay=None, alpha: float = 0.5) -> np.ndarray:
    """Min-max normalized jet rendering of a map, as an HxWx3 uint8 image.

    A constant map renders at the colormap midpoint. With ``underlay``
    (HxWx3 uint8 of the same size), the heatmap is alpha-blended on top.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeMismatch(f"heatmap input must be HxW, got shape {m.shape}")
    lo, hi = float(m.min()), float(m.max())
    if hi > lo:
        t = (m - lo) / (hi - lo)
    else:
        t = np.full_like(m, 0.5)
    img = jet_colormap(t)
    if underlay is not None:
        underlay = np.asarray(underlay)
        if underlay.shape != img.shape:
            raise ImageSizeMismatch(
                f"underlay shape {underlay.shape} does not match heatmap {img.shape}"
            )
        blended = alpha * img.astype(np.float64) + (1.0 - alpha) * underlay.astype(np.float64)
        img = np.rint(blended).astype(np.uint8)
    return img


def save_png(img, path) -> None:
    """Write an HxWx3 uint8 image as PNG."""
    from PIL import Image

    Image.fromarray(np.asarray(img, dtype=np.uint8), mode="RGB").save(path, format="PNG")
