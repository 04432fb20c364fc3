"""Placement policies: map effective item dims to a position in the bin.

The candidate set is the front-left-bottom corners of the current EMS set,
with gravity resolving the height. The default policy is deep-bottom-left
fill with a best-fit tie-break; anything implementing PlacementPolicy can be
swapped in via the registry.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .geometry import SUPPORT_RATIO, BinState, Flb, GeometryError, PlacedBox, ems_update


@dataclass(frozen=True)
class PlacementDecision:
    flb: Flb
    rot: int  # 1 swaps dx and dy
    feasible: bool

    @staticmethod
    def infeasible() -> "PlacementDecision":
        return PlacementDecision(flb=Flb(0, 0, 0), rot=0, feasible=False)


def rotated(dims: Sequence[int], rot: int) -> tuple[int, int, int]:
    dx, dy, dz = dims
    return (dy, dx, dz) if rot else (dx, dy, dz)


class PlacementPolicy(Protocol):
    name: str

    def __call__(self, bin_state: BinState, dims: Sequence[int]) -> PlacementDecision: ...


def _landing_maps(bin_state: BinState, dx: int, dy: int) -> tuple[np.ndarray, np.ndarray]:
    """Gravity landing over every footprint position, memoized per state.

    Returns (zmap, stable) over window origins [y, x]: the resting height of
    a dx-by-dy footprint and whether the box would be stable there.
    """
    key = ("land", dx, dy)
    hit = bin_state.scratch.get(key)
    if hit is not None:
        return hit
    windows = sliding_window_view(bin_state.height_map, (dy, dx))
    zmap = windows.max(axis=(2, 3))
    at_z = windows == zmap[:, :, None, None]
    cnt = at_z.sum(axis=(2, 3))
    corners = at_z[:, :, 0, 0] & at_z[:, :, 0, -1] & at_z[:, :, -1, 0] & at_z[:, :, -1, -1]
    stable = (zmap == 0) | (cnt >= SUPPORT_RATIO * dx * dy) | corners
    bin_state.scratch[key] = (zmap, stable)
    return zmap, stable


def _corner_xys(bin_state: BinState) -> list[tuple[int, int]]:
    key = "corners"
    hit = bin_state.scratch.get(key)
    if hit is None:
        hit = sorted({(e.lo[0], e.lo[1]) for e in bin_state.ems})
        bin_state.scratch[key] = hit
    return hit


def feasible_positions(bin_state: BinState, dims: Sequence[int]) -> list[tuple[Flb, int]]:
    """All (flb, rot) candidates at EMS corners that land in-bounds, rest at
    their gravity height, and are stable. Sorted by (z, y, x, rot)."""
    if min(dims) < 1:
        raise GeometryError(f"box dims must be positive, got {tuple(dims)}")
    L, W, H = bin_state.dims
    corners = _corner_xys(bin_state)
    out = []
    for rot in (0, 1):
        dx, dy, dz = rotated(dims, rot)
        if dx > L or dy > W:
            continue
        zmap, stable = _landing_maps(bin_state, dx, dy)
        for x, y in corners:
            if x + dx > L or y + dy > W:
                continue
            z = int(zmap[y, x])
            if z + dz <= H and stable[y, x]:
                out.append((Flb(x, y, z), rot))
    out.sort(key=lambda c: (c[0].z, c[0].y, c[0].x, c[1]))
    return out


def _residual_ems_volume(bin_state: BinState, dims: Sequence[int], flb: Flb, rot: int) -> int:
    box = PlacedBox(flb=flb, dims=rotated(dims, rot))
    return sum(e.volume for e in ems_update(bin_state.ems, box, bin_state.dims))


class DblfPlacement:
    """Deep-bottom-left fill: minimal (z, y, x); among rotations tied there,
    the one leaving the smaller total residual EMS volume, then rot=0."""

    name = "dblf"

    def __call__(self, bin_state: BinState, dims: Sequence[int]) -> PlacementDecision:
        key = ("dblf", tuple(dims))
        hit = bin_state.scratch.get(key)
        if hit is not None:
            return hit
        decision = self._decide(bin_state, dims)
        bin_state.scratch[key] = decision
        return decision

    def _decide(self, bin_state: BinState, dims: Sequence[int]) -> PlacementDecision:
        candidates = feasible_positions(bin_state, dims)
        if not candidates:
            return PlacementDecision.infeasible()
        best_flb, best_rot = candidates[0]
        # a rotation can tie on (z, y, x); square footprints tie trivially
        if dims[0] != dims[1]:
            tied = [c for c in candidates if c[0] == best_flb]
            if len(tied) > 1:
                best_flb, best_rot = min(
                    tied,
                    key=lambda c: (_residual_ems_volume(bin_state, dims, c[0], c[1]), c[1]),
                )
        return PlacementDecision(flb=best_flb, rot=best_rot, feasible=True)


def place_dblf(bin_state: BinState, dims: Sequence[int]) -> PlacementDecision:
    return DblfPlacement()(bin_state, dims)


PLACERS = {"dblf": DblfPlacement}


def get_placer(name: str) -> PlacementPolicy:
    try:
        return PLACERS[name]()
    except KeyError:
        raise GeometryError(f"unknown placer {name!r}; known: {sorted(PLACERS)}") from None
