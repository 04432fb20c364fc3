"""Discrete bin geometry: height map, gravity placement, static stability,
and empty-maximal-space (EMS) maintenance.

All coordinates are integer grid cells. A box is the half-open region
``[lo, hi)``. The bin origin is the front-left-bottom corner; axes are
X (length L), Y (width W), Z (height H). BinState is a value: every
mutating operation returns a fresh state and never touches its input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

ORACLE_MAX_CELLS = 8  # per-axis limit for the exhaustive oracle

# fraction of the footprint that must rest on columns at the landing height
SUPPORT_RATIO = 0.6


class GeometryError(ValueError):
    """Domain error: out-of-bounds footprint, overlapping or unstable placement."""


class BinDims(NamedTuple):
    L: int
    W: int
    H: int

    def validate(self) -> "BinDims":
        if min(self) < 1:
            raise GeometryError(f"bin dims must be >= 1, got {tuple(self)}")
        return self

    @property
    def volume(self) -> int:
        return self.L * self.W * self.H


class Flb(NamedTuple):
    """Front-left-bottom corner of a box, in cells."""

    x: int
    y: int
    z: int


@dataclass(frozen=True)
class PlacedBox:
    flb: Flb
    dims: tuple[int, int, int]
    item_id: int = -1

    @property
    def volume(self) -> int:
        dx, dy, dz = self.dims
        return dx * dy * dz

    @property
    def hi(self) -> tuple[int, int, int]:
        return (self.flb.x + self.dims[0], self.flb.y + self.dims[1], self.flb.z + self.dims[2])


@dataclass(frozen=True)
class Ems:
    """Empty maximal space: the box [lo, hi) cannot be grown along any axis."""

    lo: tuple[int, int, int]
    hi: tuple[int, int, int]

    @property
    def volume(self) -> int:
        return (self.hi[0] - self.lo[0]) * (self.hi[1] - self.lo[1]) * (self.hi[2] - self.lo[2])

    def contains(self, other: "Ems") -> bool:
        return all(self.lo[a] <= other.lo[a] and other.hi[a] <= self.hi[a] for a in range(3))

    def overlaps_box(self, blo: Sequence[int], bhi: Sequence[int]) -> bool:
        return all(self.lo[a] < bhi[a] and blo[a] < self.hi[a] for a in range(3))


@dataclass(frozen=True)
class BinState:
    """One bin: dims, per-column height map, placed boxes, and the EMS set.

    ``height_map`` has shape (W, L) and is indexed ``[y, x]``. ``scratch``
    memoizes placement queries against this immutable state; it never leaves
    the state and does not participate in equality.
    """

    dims: BinDims
    height_map: np.ndarray
    placed: tuple[PlacedBox, ...]
    ems: tuple[Ems, ...]
    scratch: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def placed_volume(self) -> int:
        return sum(b.volume for b in self.placed)

    @property
    def max_height(self) -> int:
        return int(self.height_map.max())


def empty_bin(dims: BinDims | tuple[int, int, int]) -> BinState:
    dims = BinDims(*dims).validate()
    hm = np.zeros((dims.W, dims.L), dtype=np.int64)
    return BinState(dims=dims, height_map=hm, placed=(), ems=(Ems((0, 0, 0), tuple(dims)),))


def drop_z(bin_state: BinState, dims: Sequence[int], xy: tuple[int, int]) -> Optional[int]:
    """Resting height of a box dropped at footprint (x, y); None if it would
    poke out of the top of the bin."""
    L, W, H = bin_state.dims
    dx, dy, dz = dims
    x, y = xy
    if dx < 1 or dy < 1 or dz < 1:
        raise GeometryError(f"box dims must be positive, got {tuple(dims)}")
    if x < 0 or y < 0 or x + dx > L or y + dy > W:
        raise GeometryError(f"footprint {xy} + {(dx, dy)} outside bin base {(L, W)}")
    z = int(bin_state.height_map[y : y + dy, x : x + dx].max())
    if z + dz > H:
        return None
    return z


def is_stable(bin_state: BinState, dims: Sequence[int], flb: Flb) -> bool:
    """True if the box rests on the floor, on enough supporting area, or on
    all four bottom corners at exactly its base height."""
    if flb.z == 0:
        return True
    dx, dy, _ = dims
    x, y = flb.x, flb.y
    footprint = bin_state.height_map[y : y + dy, x : x + dx]
    support = footprint == flb.z
    if support.mean() >= SUPPORT_RATIO:
        return True
    return bool(support[0, 0] and support[0, -1] and support[-1, 0] and support[-1, -1])


def apply_placement(
    bin_state: BinState,
    dims: Sequence[int],
    flb: Flb,
    item_id: int = -1,
) -> BinState:
    """Place a box and return the updated bin.

    The box must rest at its gravity height (no floating placements: this
    also rules out overlap with existing boxes), fit inside the bin, and be
    stable.
    """
    dx, dy, dz = (int(d) for d in dims)
    z = drop_z(bin_state, (dx, dy, dz), (flb.x, flb.y))
    if z is None:
        raise GeometryError(f"box {dims} at {tuple(flb)} exceeds bin height")
    if z != flb.z:
        raise GeometryError(f"box {dims} at {tuple(flb)} does not rest at drop height {z}")
    if not is_stable(bin_state, (dx, dy, dz), flb):
        raise GeometryError(f"box {dims} at {tuple(flb)} is not stable")
    box = PlacedBox(flb=flb, dims=(dx, dy, dz), item_id=item_id)
    hm = bin_state.height_map.copy()
    hm[flb.y : flb.y + dy, flb.x : flb.x + dx] = flb.z + dz
    return BinState(
        dims=bin_state.dims,
        height_map=hm,
        placed=bin_state.placed + (box,),
        ems=tuple(ems_update(bin_state.ems, box, bin_state.dims)),
    )


def _residuals(e: Ems, blo: Sequence[int], bhi: Sequence[int]) -> Iterable[Ems]:
    """Split an EMS around an overlapping box into up to six residual boxes,
    one per face of the box (the box's axis-aligned complement within e)."""
    for axis in range(3):
        if blo[axis] > e.lo[axis]:
            hi = list(e.hi)
            hi[axis] = blo[axis]
            yield Ems(e.lo, tuple(hi))
        if bhi[axis] < e.hi[axis]:
            lo = list(e.lo)
            lo[axis] = bhi[axis]
            yield Ems(tuple(lo), e.hi)


def ems_update(ems: Sequence[Ems], new_box: PlacedBox, dims: BinDims) -> list[Ems]:
    """Difference process: subtract a newly placed box from the EMS set.

    Every EMS intersecting the box is replaced by its residual boxes; the
    candidate pool is then pruned to the boxes not contained in another.
    Starting from the exact maximal set, this yields the exact maximal set
    of the new occupancy: any maximal empty box of the new state avoids the
    placed box, hence sits on one side of it inside some old EMS, hence is
    contained in (and by maximality equals) one of the residuals.
    """
    blo, bhi = new_box.flb, new_box.hi
    candidates: set[Ems] = set()
    for e in ems:
        if e.overlaps_box(blo, bhi):
            candidates.update(_residuals(e, blo, bhi))
        else:
            candidates.add(e)
    return _prune_contained(candidates)


def _prune_contained(candidates: set[Ems]) -> list[Ems]:
    """Drop every box contained in another candidate (vectorized pairwise)."""
    if not candidates:
        return []
    boxes = sorted(candidates, key=lambda e: (-e.volume, e.lo, e.hi))
    lo = np.array([b.lo for b in boxes])
    hi = np.array([b.hi for b in boxes])
    # contained[i, j]: box i inside box j
    contained = (lo[:, None, :] >= lo[None, :, :]).all(-1) & (hi[:, None, :] <= hi[None, :, :]).all(-1)
    np.fill_diagonal(contained, False)
    keep = ~contained.any(axis=1)
    return [b for b, k in zip(boxes, keep) if k]


def occupancy_grid(bin_state: BinState) -> np.ndarray:
    """Boolean occupancy grid of shape (L, W, H), indexed [x, y, z]."""
    L, W, H = bin_state.dims
    occ = np.zeros((L, W, H), dtype=bool)
    for b in bin_state.placed:
        x, y, z = b.flb
        dx, dy, dz = b.dims
        occ[x : x + dx, y : y + dy, z : z + dz] = True
    return occ


def maximal_empty_boxes_oracle(occupancy: np.ndarray) -> set[Ems]:
    """Exhaustively enumerate all maximal empty boxes of a small occupancy grid.

    Test oracle only: every candidate box (via a 3D summed-area table) is
    checked for emptiness and for being blocked on all six sides. Refuses
    grids larger than 8 cells per axis.
    """
    occupancy = np.asarray(occupancy, dtype=bool)
    L, W, H = occupancy.shape
    if max(L, W, H) > ORACLE_MAX_CELLS:
        raise GeometryError(f"oracle limited to {ORACLE_MAX_CELLS}^3 grids, got {occupancy.shape}")

    sat = np.zeros((L + 1, W + 1, H + 1), dtype=np.int64)
    sat[1:, 1:, 1:] = occupancy.cumsum(0).cumsum(1).cumsum(2)

    def count(x1, x2, y1, y2, z1, z2):
        return (
            sat[x2, y2, z2]
            - sat[x1, y2, z2]
            - sat[x2, y1, z2]
            - sat[x2, y2, z1]
            + sat[x1, y1, z2]
            + sat[x1, y2, z1]
            + sat[x2, y1, z1]
            - sat[x1, y1, z1]
        )

    def pairs(n):
        a, b = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
        m = a < b
        return a[m], b[m]

    x1, x2 = pairs(L)
    y1, y2 = pairs(W)
    z1, z2 = pairs(H)
    ix, iy, iz = np.meshgrid(np.arange(len(x1)), np.arange(len(y1)), np.arange(len(z1)), indexing="ij")
    ix, iy, iz = ix.ravel(), iy.ravel(), iz.ravel()
    X1, X2, Y1, Y2, Z1, Z2 = x1[ix], x2[ix], y1[iy], y2[iy], z1[iz], z2[iz]

    empty = count(X1, X2, Y1, Y2, Z1, Z2) == 0
    blocked = empty.copy()
    # a box is maximal iff each one-cell extension hits a wall or an occupied cell
    blocked &= (X1 == 0) | (count(np.maximum(X1 - 1, 0), X1, Y1, Y2, Z1, Z2) > 0)
    blocked &= (X2 == L) | (count(X2, np.minimum(X2 + 1, L), Y1, Y2, Z1, Z2) > 0)
    blocked &= (Y1 == 0) | (count(X1, X2, np.maximum(Y1 - 1, 0), Y1, Z1, Z2) > 0)
    blocked &= (Y2 == W) | (count(X1, X2, Y2, np.minimum(Y2 + 1, W), Z1, Z2) > 0)
    blocked &= (Z1 == 0) | (count(X1, X2, Y1, Y2, np.maximum(Z1 - 1, 0), Z1) > 0)
    blocked &= (Z2 == H) | (count(X1, X2, Y1, Y2, Z2, np.minimum(Z2 + 1, H)) > 0)

    idx = np.nonzero(blocked)[0]
    return {
        Ems((int(X1[i]), int(Y1[i]), int(Z1[i])), (int(X2[i]), int(Y2[i]), int(Z2[i])))
        for i in idx
    }


def ems_encode(ems: Sequence[Ems], n_ems: int, dims: BinDims) -> np.ndarray:
    """Fixed-length (n_ems, 6) encoding: corners normalized to [0, 1] by the
    bin dims, sorted by volume descending (ties: lexicographic lo), truncated
    and zero-padded."""
    out = np.zeros((n_ems, 6), dtype=np.float64)
    ordered = sorted(ems, key=lambda e: (-e.volume, e.lo, e.hi))[:n_ems]
    scale = np.array([dims.L, dims.W, dims.H], dtype=np.float64)
    for i, e in enumerate(ordered):
        out[i, :3] = np.asarray(e.lo) / scale
        out[i, 3:] = np.asarray(e.hi) / scale
    return out
