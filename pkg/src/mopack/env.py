"""The packing decision process: 5N item-face candidate units, vector rewards
(space gain, negated normalized time), linear scalarization under a
preference vector, and deterministic seeded transitions.

States are values; step() returns a fresh state, so search algorithms can
hold many states at once without copying.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import BinDims, BinState, Flb, apply_placement, empty_bin
from .items import (
    FACE_ORDER,
    N_FACES,
    Buffer,
    Face,
    Item,
    ItemStream,
    RandomItemStream,
    TimeCostProfile,
    default_dim_range,
    face_dims,
    get_profile,
    new_buffer,
    op_time,
    refill,
)
from .placement import PlacementPolicy, get_placer, rotated


class EnvError(ValueError):
    pass


@dataclass(frozen=True)
class PreferenceVector:
    """Convex weights (w_space, w_time) over the two objectives."""

    w_space: float
    w_time: float

    def __post_init__(self):
        if self.w_space < 0 or self.w_time < 0 or abs(self.w_space + self.w_time - 1) > 1e-9:
            raise EnvError(f"preference must be on the simplex, got {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.w_space, self.w_time], dtype=np.float64)


def preference_grid(k: int) -> list[PreferenceVector]:
    """k evenly spaced preferences from (0, 1) to (1, 0)."""
    if k < 2:
        raise EnvError(f"preference grid needs k >= 2, got {k}")
    return [PreferenceVector(w, 1.0 - w) for w in np.linspace(0.0, 1.0, k)]


@dataclass(frozen=True)
class VectorReward:
    r_space: float
    r_time: float

    def as_array(self) -> np.ndarray:
        return np.array([self.r_space, self.r_time], dtype=np.float64)


def scalarize(omega: PreferenceVector, r: VectorReward) -> float:
    return omega.w_space * r.r_space + omega.w_time * r.r_time


@dataclass(frozen=True, eq=False)
class ItemFaceUnit:
    """One selectable candidate: an item grasped by one face, with its
    predicted placement and operational time."""

    slot: int
    item_id: int
    face: Face
    eff_dims: tuple[int, int, int]
    flb: Flb
    rot: int
    feasible: bool
    time_cost: float
    encoding: np.ndarray  # 7 floats: dims, flb (normalized), rot flag
    time_norm: float

    @property
    def placed_dims(self) -> tuple[int, int, int]:
        return rotated(self.eff_dims, self.rot)


_PAD_UNIT_ENCODING = np.zeros(7, dtype=np.float64)


def _pad_unit(slot: int, face: Face) -> ItemFaceUnit:
    return ItemFaceUnit(
        slot=slot,
        item_id=-1,
        face=face,
        eff_dims=(1, 1, 1),
        flb=Flb(0, 0, 0),
        rot=0,
        feasible=False,
        time_cost=0.0,
        encoding=_PAD_UNIT_ENCODING,
        time_norm=0.0,
    )


@dataclass(frozen=True)
class EnvConfig:
    """Everything that defines an episode distribution except the seed."""

    bin_dims: BinDims = BinDims(10, 10, 10)
    buffer_size: int = 1
    item_lo: Optional[int] = None  # None: RS-style range from the bin dims
    item_hi: Optional[int] = None
    profile: TimeCostProfile = None  # type: ignore[assignment]
    placer: PlacementPolicy = None  # type: ignore[assignment]
    n_ems: int = 64
    variable_fraction: Optional[float] = None
    finite_items: Optional[tuple[Item, ...]] = None

    def __post_init__(self):
        if self.profile is None:
            object.__setattr__(self, "profile", get_profile("simulation"))
        if self.placer is None:
            object.__setattr__(self, "placer", get_placer("dblf"))
        lo, hi = default_dim_range(self.bin_dims)
        if self.item_lo is None:
            object.__setattr__(self, "item_lo", lo)
        if self.item_hi is None:
            object.__setattr__(self, "item_hi", hi)
        if self.buffer_size < 1:
            raise EnvError("buffer size must be >= 1")

    @property
    def t_ref(self) -> float:
        return self.profile.max_time

    @property
    def n_units(self) -> int:
        return N_FACES * self.buffer_size


@dataclass(frozen=True)
class EnvState:
    bin: BinState
    buffer: Buffer
    units: tuple[ItemFaceUnit, ...]
    omega: PreferenceVector
    step_count: int
    cum_time: float
    done: bool


def build_units(
    bin_state: BinState,
    buffer: Buffer,
    placer: PlacementPolicy,
    profile: TimeCostProfile,
    buffer_size: int,
) -> tuple[ItemFaceUnit, ...]:
    """The 5N candidate list, item-major in buffer order, faces in FACE_ORDER.
    Vacant or missing slots yield masked padding units."""
    L, W, H = bin_state.dims
    scale = np.array([L, W, H, L, W, H, 1.0], dtype=np.float64)
    units: list[ItemFaceUnit] = []
    for slot in range(buffer_size):
        item = buffer.slots[slot] if slot < len(buffer.slots) else None
        for face in FACE_ORDER:
            if item is None:
                units.append(_pad_unit(slot, face))
                continue
            eff = face_dims(item, face)
            decision = placer(bin_state, eff)
            t = op_time(item, face, profile)
            raw = np.array(
                [eff[0], eff[1], eff[2], decision.flb.x, decision.flb.y, decision.flb.z,
                 decision.rot],
                dtype=np.float64,
            )
            units.append(
                ItemFaceUnit(
                    slot=slot,
                    item_id=item.id,
                    face=face,
                    eff_dims=eff,
                    flb=decision.flb,
                    rot=decision.rot,
                    feasible=decision.feasible,
                    time_cost=t,
                    encoding=raw / scale,
                    time_norm=t / profile.max_time,
                )
            )
    return tuple(units)


def _make_stream(cfg: EnvConfig, seed: int) -> ItemStream:
    from .items import FiniteItemStream

    if cfg.finite_items is not None:
        return FiniteItemStream(cfg.finite_items)
    return RandomItemStream(
        cfg.bin_dims,
        cfg.item_lo,
        cfg.item_hi,
        np.random.default_rng(seed),
        variable_fraction=cfg.variable_fraction,
    )


def reset(cfg: EnvConfig, seed: int, omega: PreferenceVector) -> EnvState:
    bin_state = empty_bin(cfg.bin_dims)
    buffer = new_buffer(_make_stream(cfg, seed), cfg.buffer_size)
    units = build_units(bin_state, buffer, cfg.placer, cfg.profile, cfg.buffer_size)
    done = not any(u.feasible for u in units)
    return EnvState(
        bin=bin_state,
        buffer=buffer,
        units=units,
        omega=omega,
        step_count=0,
        cum_time=0.0,
        done=done,
    )


def step(cfg: EnvConfig, state: EnvState, action: int) -> tuple[EnvState, VectorReward, bool]:
    """Place the selected unit, refill the buffer, rebuild candidates.

    Invalid or masked actions raise without touching the state.
    """
    if state.done:
        raise EnvError("episode is done")
    if not (0 <= action < len(state.units)):
        raise EnvError(f"action {action} out of range [0, {len(state.units)})")
    unit = state.units[action]
    if not unit.feasible:
        raise EnvError(f"action {action} is masked (infeasible unit)")

    new_bin = apply_placement(state.bin, unit.placed_dims, unit.flb, item_id=unit.item_id)
    item, buffer = state.buffer.take(unit.slot)
    buffer = refill(buffer)
    units = build_units(new_bin, buffer, cfg.placer, cfg.profile, cfg.buffer_size)
    done = not any(u.feasible for u in units)

    reward = VectorReward(
        r_space=item.volume / cfg.bin_dims.volume,
        r_time=-unit.time_cost / cfg.t_ref,
    )
    new_state = EnvState(
        bin=new_bin,
        buffer=buffer,
        units=units,
        omega=state.omega,
        step_count=state.step_count + 1,
        cum_time=state.cum_time + unit.time_cost,
        done=done,
    )
    return new_state, reward, done


def feasible_actions(state: EnvState, faces: Optional[frozenset[Face]] = None) -> list[int]:
    return [
        i
        for i, u in enumerate(state.units)
        if u.feasible and (faces is None or u.face in faces)
    ]


def utilization(state: EnvState) -> float:
    return state.bin.placed_volume / state.bin.dims.volume


def total_time(state: EnvState) -> float:
    return state.cum_time


def state_hash(state: EnvState) -> str:
    h = hashlib.sha256()
    h.update(state.bin.height_map.tobytes())
    h.update(str(state.step_count).encode())
    h.update(repr(sorted((b.flb, b.dims) for b in state.bin.placed)).encode())
    return h.hexdigest()[:16]
