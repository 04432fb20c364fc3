"""Items, graspable faces, per-face time costs, seeded item streams, and the
selection buffer.

An item's dims (l, w, h) are as seen in the conveyor camera frame. Grasping
a face and placing it so that face ends up on top permutes the dims; the
face also fixes the reorientation cost, and its surface category fixes the
transport cost.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .geometry import BinDims


class Face(Enum):
    TOP = 0
    FRONT = 1
    BACK = 2
    LEFT = 3
    RIGHT = 4


FACE_ORDER = (Face.TOP, Face.FRONT, Face.BACK, Face.LEFT, Face.RIGHT)
N_FACES = len(FACE_ORDER)


class SurfaceCategory(Enum):
    SMOOTH = 0
    TAPED = 1
    LABELED = 2


class Variability(Enum):
    UNIFORM = "uniform"
    VARIABLE = "variable"
    OTHER = "other"


class ItemError(ValueError):
    pass


@dataclass(frozen=True)
class Item:
    id: int
    dims: tuple[int, int, int]
    surfaces: tuple[SurfaceCategory, ...]  # one per face, FACE_ORDER

    def __post_init__(self):
        if min(self.dims) < 1:
            raise ItemError(f"item dims must be >= 1, got {self.dims}")
        if len(self.surfaces) != N_FACES:
            raise ItemError("an item has exactly five faces")

    def surface(self, face: Face) -> SurfaceCategory:
        return self.surfaces[face.value]

    @property
    def volume(self) -> int:
        l, w, h = self.dims
        return l * w * h


def face_dims(item: Item, face: Face) -> tuple[int, int, int]:
    """Effective (dx, dy, dz) once the grasped face becomes the top face."""
    l, w, h = item.dims
    if face is Face.TOP:
        return (l, w, h)
    if face in (Face.FRONT, Face.BACK):
        return (l, h, w)
    return (w, h, l)


@dataclass(frozen=True)
class TimeCostProfile:
    """Per-face reorientation times plus per-surface-category transport times;
    total cost of a grasp is the sum of the two."""

    name: str
    reorient: tuple[float, float, float, float, float]  # FACE_ORDER
    surface: tuple[float, float, float]  # SurfaceCategory order

    def __post_init__(self):
        if any(t < 0 or not np.isfinite(t) for t in self.reorient + self.surface):
            raise ItemError("time costs must be finite and >= 0")

    @property
    def max_time(self) -> float:
        """Largest possible single-grasp cost; the reward normalizer."""
        return max(self.reorient) + max(self.surface)

    def to_dict(self) -> dict:
        return {"name": self.name, "reorient": list(self.reorient), "surface": list(self.surface)}

    @classmethod
    def from_dict(cls, d: dict) -> "TimeCostProfile":
        return cls(name=d["name"], reorient=tuple(d["reorient"]), surface=tuple(d["surface"]))


SIMULATION_PROFILE = TimeCostProfile(
    name="simulation",
    reorient=(0.0, 1.0, 3.0, 2.0, 2.0),
    surface=(0.0, 2.0, 4.0),
)

# measured on the arm: transport seconds by surface category; back grasps were
# kinematically infeasible and carry a prohibitive penalty
ROBOT_PROFILE = TimeCostProfile(
    name="robot",
    reorient=(0.0, 6.0, 100.0, 12.0, 12.0),
    surface=(3.0, 6.0, 10.0),
)

PROFILES = {p.name: p for p in (SIMULATION_PROFILE, ROBOT_PROFILE)}


def get_profile(name: str) -> TimeCostProfile:
    try:
        return PROFILES[name]
    except KeyError:
        raise ItemError(f"unknown time profile {name!r}; known: {sorted(PROFILES)}") from None


def op_time(item: Item, face: Face, profile: TimeCostProfile) -> float:
    return profile.reorient[face.value] + profile.surface[item.surface(face).value]


def sample_item(rng: np.random.Generator, bin_dims: BinDims, lo: int, hi: int, item_id: int = 0) -> Item:
    """Uniform integer dims in [lo, hi], each face's surface category uniform."""
    if not (1 <= lo <= hi <= min(bin_dims)):
        raise ItemError(f"invalid dim range [{lo}, {hi}] for bin {tuple(bin_dims)}")
    dims = tuple(int(d) for d in rng.integers(lo, hi + 1, size=3))
    surfaces = tuple(SurfaceCategory(int(s)) for s in rng.integers(0, 3, size=N_FACES))
    return Item(id=item_id, dims=dims, surfaces=surfaces)


def default_dim_range(bin_dims: BinDims) -> tuple[int, int]:
    """RS-style sampling range: [min(L,W,H)/10, min(L,W,H)/2], floored, >= 1."""
    m = min(bin_dims)
    return (max(1, m // 10), max(1, m // 2))


def classify_variability(item: Item) -> Variability:
    """Near-cubic items are uniform; items with two dims three or more apart
    are variable. For integer dims the two rules partition everything."""
    spread = max(item.dims) - min(item.dims)
    if spread <= 2:
        return Variability.UNIFORM
    return Variability.VARIABLE


# --- item streams ---


class ItemStream:
    """Source of items with value semantics: draw() returns (item, new_stream)
    and never mutates self, so envs holding a stream can be copied freely."""

    def draw(self) -> tuple[Optional[Item], "ItemStream"]:
        raise NotImplementedError

    @property
    def exhausted(self) -> bool:
        return False


class RandomItemStream(ItemStream):
    """Infinite seeded stream of uniformly sampled items.

    Items are pre-drawn in chunks so repeated draw() calls stay cheap; the
    chunk buffer is immutable and shared between the stream values it spawns,
    so two streams at the same position always yield the same items.

    With variable_fraction set, each item's shape class is drawn first
    (Bernoulli) and dims are rejection-sampled until they classify as the
    drawn class; raises if the range cannot produce the class.
    """

    MAX_REJECTS = 10_000
    CHUNK = 64

    def __init__(
        self,
        bin_dims: BinDims,
        lo: int,
        hi: int,
        rng: np.random.Generator,
        next_id: int = 0,
        variable_fraction: Optional[float] = None,
        _ahead: tuple[Item, ...] = (),
    ):
        self.bin_dims = bin_dims
        self.lo = lo
        self.hi = hi
        self._rng = rng
        self.next_id = next_id
        self.variable_fraction = variable_fraction
        self._ahead = _ahead  # items already drawn, starting at next_id

    def _sample_one(self, rng: np.random.Generator, item_id: int) -> Item:
        if self.variable_fraction is None:
            return sample_item(rng, self.bin_dims, self.lo, self.hi, item_id)
        want = (
            Variability.VARIABLE
            if rng.random() < self.variable_fraction
            else Variability.UNIFORM
        )
        for _ in range(self.MAX_REJECTS):
            item = sample_item(rng, self.bin_dims, self.lo, self.hi, item_id)
            if classify_variability(item) is want:
                return item
        raise ItemError(f"dim range [{self.lo}, {self.hi}] cannot produce {want.value} items")

    def draw(self) -> tuple[Item, "RandomItemStream"]:
        ahead = self._ahead
        rng = self._rng
        if not ahead:
            rng = copy.deepcopy(rng)
            ahead = tuple(self._sample_one(rng, self.next_id + k) for k in range(self.CHUNK))
        nxt = RandomItemStream(
            self.bin_dims,
            self.lo,
            self.hi,
            rng,
            self.next_id + 1,
            self.variable_fraction,
            _ahead=ahead[1:],
        )
        return ahead[0], nxt


class FiniteItemStream(ItemStream):
    """Replay of a fixed item list; exhausts."""

    def __init__(self, items: tuple[Item, ...], index: int = 0):
        self.items = tuple(items)
        self.index = index

    @property
    def exhausted(self) -> bool:
        return self.index >= len(self.items)

    def draw(self) -> tuple[Optional[Item], "FiniteItemStream"]:
        if self.exhausted:
            return None, self
        return self.items[self.index], FiniteItemStream(self.items, self.index + 1)


def item_to_json(item: Item) -> str:
    return json.dumps(
        {"id": item.id, "dims": list(item.dims), "surfaces": [s.value for s in item.surfaces]}
    )


def item_from_json(line: str) -> Item:
    d = json.loads(line)
    return Item(
        id=d["id"],
        dims=tuple(d["dims"]),
        surfaces=tuple(SurfaceCategory(s) for s in d["surfaces"]),
    )


def export_stream(items: list[Item], path) -> None:
    with open(path, "w") as f:
        for it in items:
            f.write(item_to_json(it) + "\n")


def import_stream(path) -> FiniteItemStream:
    with open(path) as f:
        return FiniteItemStream(tuple(item_from_json(line) for line in f if line.strip()))


# --- buffer ---


@dataclass(frozen=True)
class Buffer:
    """The semi-online window: the N items currently visible and selectable.

    Vacated slots are None until refill(); refill draws from the stream into
    the vacated position, or drops the slot once the stream is exhausted.
    """

    slots: tuple[Optional[Item], ...]
    stream: ItemStream

    @property
    def items(self) -> tuple[Item, ...]:
        return tuple(s for s in self.slots if s is not None)

    def take(self, index: int) -> tuple[Item, "Buffer"]:
        item = self.slots[index]
        if item is None:
            raise ItemError(f"buffer slot {index} is already vacant")
        slots = self.slots[:index] + (None,) + self.slots[index + 1 :]
        return item, Buffer(slots=slots, stream=self.stream)


def new_buffer(stream: ItemStream, size: int) -> Buffer:
    slots: list[Optional[Item]] = []
    for _ in range(size):
        item, stream = stream.draw()
        if item is None:
            break
        slots.append(item)
    return Buffer(slots=tuple(slots), stream=stream)


def refill(buffer: Buffer) -> Buffer:
    """Fill vacated slots from the stream; shrink if the stream ran dry."""
    slots: list[Optional[Item]] = []
    stream = buffer.stream
    for slot in buffer.slots:
        if slot is not None:
            slots.append(slot)
            continue
        item, stream = stream.draw()
        if item is not None:
            slots.append(item)
    return Buffer(slots=tuple(slots), stream=stream)
