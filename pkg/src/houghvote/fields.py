"""Log-polar vote-field geometry.

A vote field is a partition of a pixel disk into regions: an unsplit central
ring plus outer rings cut into angular sectors. Each region r holds K_r pixel
offsets relative to the field center; a voter adds its region-r evidence,
split evenly 1/K_r, to the pixels at those offsets.

Conventions fixed here (and relied on by every other module):

* Ring parameters are diameters in pixels. A field built from diameters
  ``(2, 8, 16)`` spans a 17x17 grid and pixels are binned by Euclidean
  distance from the center: the central ring covers ``d <= 1``, the next
  ring ``1 < d <= 4``, and so on (half-open bands, compared on squared
  integer distances so membership is exact).
* Angles are measured from the +x axis, counter-clockwise (``atan2(dy, dx)``),
  and sectors are half-open ``[start, start + angle_bin_deg)``.
* Region ids are 0-based, ring-major, angle ascending: region 0 is the
  central ring, regions 1..n_sectors are the second ring, etc. Ring numbers
  are 1-based (ring 1 = central ring), matching the masking interface.
* Temporal fields have a single ring, no unsplit center: the disk minus the
  center pixel is cut into 4 quadrants; region 0 is the ``[0, 90)`` degree
  quadrant (+x/+y motion).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptySelection, InvalidSpec

TEMPORAL_ANGLE_DEG = 90
TEMPORAL_RING_DIAM = 8


@dataclass(frozen=True)
class VoteFieldSpec:
    """Parameters of a log-polar vote field.

    ``angle_bin_deg`` must divide 360; ``ring_diams`` are strictly ascending
    positive even pixel diameters. ``split_center`` stays False for spatial
    fields (the central ring is never cut); temporal fields cut every ring.
    """

    angle_bin_deg: int
    ring_diams: tuple[int, ...]
    split_center: bool = False
    temporal: bool = False

    def __post_init__(self):
        object.__setattr__(self, "ring_diams", tuple(int(d) for d in self.ring_diams))
        validate_spec(self)

    @property
    def n_sectors(self) -> int:
        return 360 // self.angle_bin_deg

    @classmethod
    def from_dict(cls, doc: dict) -> "VoteFieldSpec":
        try:
            angle = int(doc["angle_bin_deg"])
            diams = tuple(int(d) for d in doc["ring_diams"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidSpec(f"bad field spec document: {exc}") from exc
        return cls(
            angle_bin_deg=angle,
            ring_diams=diams,
            split_center=bool(doc.get("split_center", False)),
            temporal=bool(doc.get("temporal", False)),
        )

    @classmethod
    def from_json(cls, path) -> "VoteFieldSpec":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InvalidSpec(f"field spec is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise InvalidSpec("field spec JSON must be an object")
        return cls.from_dict(doc)


def validate_spec(spec: VoteFieldSpec) -> None:
    """Raise InvalidSpec unless ``spec`` satisfies every invariant."""
    a = spec.angle_bin_deg
    if not isinstance(a, int) or a < 1 or a > 360 or 360 % a != 0:
        raise InvalidSpec(f"angle_bin_deg must be a positive divisor of 360, got {a}")
    diams = spec.ring_diams
    if len(diams) == 0:
        raise InvalidSpec("ring_diams must be non-empty")
    for d in diams:
        if d < 2:
            raise InvalidSpec(f"ring diameter must be >= 2, got {d}")
        if d % 2 != 0:
            raise InvalidSpec(f"ring diameter must be even, got {d}")
    if any(b <= a_ for a_, b in zip(diams, diams[1:])):
        raise InvalidSpec(f"ring_diams must be strictly ascending, got {diams}")
    if spec.temporal:
        if len(diams) != 1:
            raise InvalidSpec("temporal fields have exactly one ring")
        if a != TEMPORAL_ANGLE_DEG:
            raise InvalidSpec("temporal fields use a 90 degree angle bin")
    elif spec.split_center:
        raise InvalidSpec("spatial fields never split the central ring")


@dataclass(frozen=True)
class VoteField:
    """A materialized vote field: per-region offsets and pixel counts.

    ``offsets[r]`` is an int64 array of shape (K_r, 2) holding (dy, dx)
    relative to the field center; ``counts[r]`` == K_r; ``ring_ids[r]`` is
    the 1-based ring the region belongs to. Arrays are write-protected so a
    field can be shared across worker threads.
    """

    spec: VoteFieldSpec
    R: int
    field_side: int
    offsets: tuple[np.ndarray, ...]
    counts: tuple[int, ...]
    ring_ids: tuple[int, ...]

    @property
    def max_radius(self) -> int:
        """Largest possible offset magnitude (pixels), from the spec."""
        return self.spec.ring_diams[-1] // 2

    @property
    def n_rings(self) -> int:
        return len(self.spec.ring_diams)

    def region_map(self) -> np.ndarray:
        """field_side x field_side int map of region ids, -1 outside all regions."""
        side = self.field_side
        c = side // 2
        out = np.full((side, side), -1, dtype=np.int64)
        for r, offs in enumerate(self.offsets):
            out[offs[:, 0] + c, offs[:, 1] + c] = r
        return out


def _sector_of(dy: int, dx: int, angle_bin_deg: int) -> int:
    """Angular sector for an integer offset, boundaries half-open.

    Axis and diagonal directions are snapped exactly (their true angles are
    the only grid angles that can land on a sector boundary); everything
    else is strictly interior to a 45-degree octant, far beyond float error
    from any boundary at the field sizes in use.
    """
    if dx == 0 or dy == 0 or abs(dx) == abs(dy):
        octant = {
            (1, 0): 0.0, (1, 1): 45.0, (0, 1): 90.0, (-1, 1): 135.0,
            (-1, 0): 180.0, (-1, -1): 225.0, (0, -1): 270.0, (1, -1): 315.0,
        }
        deg = octant[(int(np.sign(dx)), int(np.sign(dy)))]
    else:
        deg = math.degrees(math.atan2(dy, dx)) % 360.0
    return int(deg // angle_bin_deg) % (360 // angle_bin_deg)


def build_vote_field(spec: VoteFieldSpec) -> VoteField:
    """Construct the region partition for ``spec``.

    Every pixel within Euclidean distance max(ring_diams)/2 of the center is
    assigned to exactly one region; assignment is a pure function of the
    spec, so identical specs yield byte-identical fields.
    """
    validate_spec(spec)
    radii = [d // 2 for d in spec.ring_diams]
    rmax = radii[-1]
    n_sectors = spec.n_sectors
    sq = [r * r for r in radii]

    if spec.temporal:
        n_regions = n_sectors * len(radii)
    else:
        n_regions = 1 + n_sectors * (len(radii) - 1)
    buckets: list[list[tuple[int, int]]] = [[] for _ in range(n_regions)]
    ring_ids: list[int] = [0] * n_regions

    for dy in range(-rmax, rmax + 1):
        for dx in range(-rmax, rmax + 1):
            d2 = dy * dy + dx * dx
            if d2 > sq[-1]:
                continue
            if spec.temporal and d2 == 0:
                continue  # center pixel casts no temporal vote
            ring = next(i for i, s in enumerate(sq) if d2 <= s)
            if spec.temporal:
                region = ring * n_sectors + _sector_of(dy, dx, spec.angle_bin_deg)
            elif ring == 0:
                region = 0
            else:
                region = 1 + (ring - 1) * n_sectors + _sector_of(dy, dx, spec.angle_bin_deg)
            buckets[region].append((dy, dx))
            ring_ids[region] = ring + 1

    for r, pixels in enumerate(buckets):
        if not pixels:
            raise InvalidSpec(
                f"region {r} is empty; angle bin {spec.angle_bin_deg} is too fine "
                f"for ring diameters {spec.ring_diams}"
            )

    offsets = []
    for pixels in buckets:
        arr = np.array(pixels, dtype=np.int64)
        arr.flags.writeable = False
        offsets.append(arr)

    return VoteField(
        spec=spec,
        R=n_regions,
        field_side=spec.ring_diams[-1] + 1,
        offsets=tuple(offsets),
        counts=tuple(len(p) for p in buckets),
        ring_ids=tuple(ring_ids),
    )


def build_temporal_field() -> VoteField:
    """4-quadrant single-ring field used for motion-feature voting.

    Region 0 covers the [0, 90) degree quadrant (+x/+y relative motion);
    regions proceed counter-clockwise. The center pixel is excluded.
    """
    return build_vote_field(
        VoteFieldSpec(
            angle_bin_deg=TEMPORAL_ANGLE_DEG,
            ring_diams=(TEMPORAL_RING_DIAM,),
            temporal=True,
        )
    )


def mask_regions(field: VoteField, keep_rings) -> VoteField:
    """Restrict a field to the regions of the given 1-based ring numbers.

    ``keep_rings={1}`` keeps only the central ring; ``{2, .., n}`` drops it;
    ``{3, 4, 5}`` on a 5-ring field keeps only the outer context. The masked
    field no longer covers the full disk but votes exactly like the original
    restricted to the kept regions.
    """
    keep = {int(k) for k in keep_rings}
    if not keep:
        raise EmptySelection("keep_rings is empty")
    valid = set(range(1, field.n_rings + 1))
    if not keep <= valid:
        raise EmptySelection(f"unknown ring numbers {sorted(keep - valid)}; field has rings {sorted(valid)}")
    sel = [r for r in range(field.R) if field.ring_ids[r] in keep]
    return VoteField(
        spec=field.spec,
        R=len(sel),
        field_side=field.field_side,
        offsets=tuple(field.offsets[r] for r in sel),
        counts=tuple(field.counts[r] for r in sel),
        ring_ids=tuple(field.ring_ids[r] for r in sel),
    )


def remap_field(field: VoteField, perm) -> VoteField:
    """Reorder regions so that region r of the result is region perm[r].

    Counterpart of tensorio.remap_regions: voting a remapped evidence tensor
    through the correspondingly remapped field reproduces the original
    presence map. Used to adapt to trained models that numbered regions
    differently.
    """
    from .tensorio import check_permutation  # local import avoids a cycle

    perm = check_permutation(perm, field.R)
    return VoteField(
        spec=field.spec,
        R=field.R,
        field_side=field.field_side,
        offsets=tuple(field.offsets[p] for p in perm),
        counts=tuple(field.counts[p] for p in perm),
        ring_ids=tuple(field.ring_ids[p] for p in perm),
    )


@dataclass(frozen=True)
class KernelBank:
    """Per-region convolution kernels realizing the vote field.

    ``kernels`` has shape (R, S, S) float64 with value 1/K_r on region r's
    pixels and 0 elsewhere, so each kernel sums to 1 and distinct kernels
    have disjoint support. Stride-1 transposed convolution of an evidence
    channel with its kernel performs that region's voting.
    """

    kernels: np.ndarray
    field_side: int

    @property
    def R(self) -> int:
        return self.kernels.shape[0]


def materialize_kernels(field: VoteField) -> KernelBank:
    """Turn a vote field into its transposed-convolution kernel bank."""
    side = field.field_side
    c = side // 2
    kernels = np.zeros((field.R, side, side), dtype=np.float64)
    for r, offs in enumerate(field.offsets):
        kernels[r, offs[:, 0] + c, offs[:, 1] + c] = 1.0 / field.counts[r]
    kernels.flags.writeable = False
    return KernelBank(kernels=kernels, field_side=side)
