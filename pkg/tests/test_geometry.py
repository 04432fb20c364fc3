import numpy as np
import pytest

from mopack.geometry import (
    BinDims,
    Ems,
    Flb,
    GeometryError,
    PlacedBox,
    apply_placement,
    drop_z,
    empty_bin,
    ems_encode,
    ems_update,
    is_stable,
    maximal_empty_boxes_oracle,
    occupancy_grid,
)


def place(bin_state, dims, x, y, item_id=-1):
    z = drop_z(bin_state, dims, (x, y))
    assert z is not None
    return apply_placement(bin_state, dims, Flb(x, y, z), item_id=item_id)


# --- drop_z ---


def test_drop_z_empty_bin():
    b = empty_bin((10, 10, 10))
    assert drop_z(b, (2, 2, 2), (0, 0)) == 0


def test_drop_z_stacks_on_flat_top():
    b = place(empty_bin((10, 10, 10)), (3, 3, 3), 0, 0)
    assert drop_z(b, (2, 2, 2), (0, 0)) == 3


def test_drop_z_height_overflow_is_infeasible():
    b = place(empty_bin((10, 10, 10)), (3, 3, 3), 0, 0)
    assert drop_z(b, (2, 2, 8), (0, 0)) is None


def test_drop_z_out_of_bounds_footprint():
    b = empty_bin((10, 10, 10))
    with pytest.raises(GeometryError):
        drop_z(b, (2, 2, 2), (9, 0))


# --- is_stable ---


def test_floor_contact_is_stable():
    b = empty_bin((10, 10, 10))
    assert is_stable(b, (4, 4, 2), Flb(0, 0, 0))


def test_full_support_is_stable():
    b = place(empty_bin((10, 10, 10)), (3, 3, 3), 0, 0)
    assert is_stable(b, (2, 2, 2), Flb(0, 0, 3))


def test_single_corner_column_is_unstable():
    # 1x1 column under one corner: ratio 1/16 < 0.6 and corners unsupported
    b = place(empty_bin((10, 10, 10)), (1, 1, 3), 0, 0)
    assert (b.height_map == 3).sum() == 1
    assert not is_stable(b, (4, 4, 2), Flb(0, 0, 3))


def test_four_corner_support_is_stable():
    b = empty_bin((10, 10, 10))
    for x, y in [(0, 0), (3, 0), (0, 3), (3, 3)]:
        b = place(b, (1, 1, 2), x, y)
    # ratio 4/16 < 0.6 but all four corners rest at z=2
    assert is_stable(b, (4, 4, 2), Flb(0, 0, 2))


def test_stability_monotone_in_support():
    # adding support columns at the resting height never flips stable -> unstable
    rng = np.random.default_rng(7)
    for _ in range(50):
        b = empty_bin((8, 8, 8))
        cells = [(x, y) for x in range(4) for y in range(4)]
        rng.shuffle(cells)
        k = rng.integers(1, len(cells))
        chosen = cells[:k]
        for x, y in chosen:
            b = place(b, (1, 1, 2), x, y)
        before = is_stable(b, (4, 4, 2), Flb(0, 0, 2))
        extra = [c for c in cells if c not in chosen]
        if not extra or not before:
            continue
        b2 = place(b, (1, 1, 2), *extra[0])
        assert is_stable(b2, (4, 4, 2), Flb(0, 0, 2))


# --- apply_placement ---


def test_apply_placement_updates_height_map():
    b = place(empty_bin((10, 10, 10)), (2, 2, 2), 0, 0)
    assert b.height_map[:2, :2].min() == 2
    assert b.height_map.sum() == 2 * 4


def test_apply_placement_rejects_floating():
    b = empty_bin((10, 10, 10))
    with pytest.raises(GeometryError):
        apply_placement(b, (2, 2, 2), Flb(0, 0, 5))


def test_apply_placement_rejects_overlap():
    b = place(empty_bin((10, 10, 10)), (3, 3, 3), 0, 0)
    # z=0 overlaps the placed box; the gravity check rejects it
    with pytest.raises(GeometryError):
        apply_placement(b, (2, 2, 2), Flb(0, 0, 0))


def test_apply_placement_is_pure():
    b0 = empty_bin((10, 10, 10))
    hm0 = b0.height_map.copy()
    place(b0, (2, 2, 2), 0, 0)
    assert (b0.height_map == hm0).all()
    assert b0.placed == ()


def test_sequential_tiling_fills_bin_exactly():
    b = empty_bin((10, 10, 10))
    n = 0
    for z in range(5):
        for x in range(0, 10, 2):
            for y in range(0, 10, 2):
                b = place(b, (2, 2, 2), x, y, item_id=n)
                n += 1
    assert n == 125
    assert b.placed_volume == 1000
    assert all(e.volume == 0 for e in b.ems) or len(b.ems) == 0
    assert (b.height_map == 10).all()


def test_drop_z_after_placement_returns_top():
    b = place(empty_bin((10, 10, 10)), (4, 3, 5), 2, 1)
    assert drop_z(b, (4, 3, 2), (2, 1)) == 5


# --- ems_update ---


def test_empty_bin_single_ems():
    b = empty_bin((10, 10, 10))
    assert b.ems == (Ems((0, 0, 0), (10, 10, 10)),)


def test_ems_after_corner_box():
    b = place(empty_bin((10, 10, 10)), (2, 2, 2), 0, 0)
    expected = {
        Ems((2, 0, 0), (10, 10, 10)),
        Ems((0, 2, 0), (10, 10, 10)),
        Ems((0, 0, 2), (10, 10, 10)),
    }
    assert set(b.ems) == expected


def test_ems_full_bin_is_empty_set():
    b = place(empty_bin((10, 10, 10)), (5, 10, 10), 0, 0)
    b = place(b, (5, 10, 10), 5, 0)
    assert b.ems == ()


# --- oracle ---


def test_oracle_all_empty():
    occ = np.zeros((4, 4, 4), dtype=bool)
    assert maximal_empty_boxes_oracle(occ) == {Ems((0, 0, 0), (4, 4, 4))}


def test_oracle_single_occupied_cell():
    occ = np.zeros((2, 2, 2), dtype=bool)
    occ[0, 0, 0] = True
    expected = {
        Ems((1, 0, 0), (2, 2, 2)),
        Ems((0, 1, 0), (2, 2, 2)),
        Ems((0, 0, 1), (2, 2, 2)),
    }
    assert maximal_empty_boxes_oracle(occ) == expected


def test_oracle_all_occupied():
    occ = np.ones((3, 3, 3), dtype=bool)
    assert maximal_empty_boxes_oracle(occ) == set()


def test_oracle_refuses_large_grid():
    with pytest.raises(GeometryError):
        maximal_empty_boxes_oracle(np.zeros((9, 4, 4), dtype=bool))


def random_fill(dims, rng, max_steps=12):
    """Randomly drop boxes at feasible stable spots; yields each new state."""
    b = empty_bin(dims)
    for _ in range(max_steps):
        dx, dy, dz = rng.integers(1, max(2, min(dims) // 2 + 1), size=3)
        candidates = []
        for x in range(dims[0] - dx + 1):
            for y in range(dims[1] - dy + 1):
                z = drop_z(b, (dx, dy, dz), (x, y))
                if z is not None and is_stable(b, (dx, dy, dz), Flb(x, y, z)):
                    candidates.append((x, y, z))
        if not candidates:
            break
        x, y, z = candidates[rng.integers(len(candidates))]
        b = apply_placement(b, (int(dx), int(dy), int(dz)), Flb(x, y, z))
        yield b


def test_ems_matches_oracle_on_random_sequences():
    rng = np.random.default_rng(42)
    steps = 0
    for _ in range(30):
        dims = tuple(int(d) for d in rng.integers(3, 9, size=3))
        for b in random_fill(dims, rng):
            steps += 1
            assert set(b.ems) == maximal_empty_boxes_oracle(occupancy_grid(b)), (
                f"EMS mismatch on {dims} after {len(b.placed)} boxes"
            )
    assert steps > 100


def test_ems_never_overlaps_placed_boxes():
    rng = np.random.default_rng(3)
    for _ in range(5):
        for b in random_fill((10, 10, 10), rng, max_steps=20):
            for e in b.ems:
                for box in b.placed:
                    assert not e.overlaps_box(box.flb, box.hi)


def test_ems_invariants_inside_bin_and_maximal_set():
    rng = np.random.default_rng(11)
    for b in random_fill((6, 6, 6), rng, max_steps=15):
        for e in b.ems:
            assert all(0 <= e.lo[a] < e.hi[a] <= b.dims[a] for a in range(3))
        for i, e in enumerate(b.ems):
            for j, f in enumerate(b.ems):
                if i != j:
                    assert not f.contains(e)


# --- ems_encode ---


def test_encode_empty_bin():
    b = empty_bin((10, 10, 10))
    enc = ems_encode(b.ems, 4, b.dims)
    assert enc.shape == (4, 6)
    np.testing.assert_array_equal(enc[0], [0, 0, 0, 1, 1, 1])
    np.testing.assert_array_equal(enc[1:], 0)


def test_encode_truncates_to_largest():
    dims = BinDims(10, 10, 10)
    ems = [
        Ems((0, 0, 0), (1, 1, 1)),
        Ems((0, 0, 0), (5, 5, 5)),
        Ems((0, 0, 0), (3, 3, 3)),
    ]
    enc = ems_encode(ems, 2, dims)
    np.testing.assert_allclose(enc[0, 3:], [0.5, 0.5, 0.5])
    np.testing.assert_allclose(enc[1, 3:], [0.3, 0.3, 0.3])


def test_encode_full_bin_all_zero():
    enc = ems_encode([], 4, BinDims(10, 10, 10))
    np.testing.assert_array_equal(enc, 0)


def test_placed_volume_monotone():
    rng = np.random.default_rng(5)
    prev = 0
    for b in random_fill((8, 8, 8), rng, max_steps=25):
        assert b.placed_volume >= prev
        assert b.placed_volume <= b.dims.volume
        prev = b.placed_volume


def test_placed_box_volume():
    box = PlacedBox(Flb(0, 0, 0), (2, 3, 4), item_id=7)
    assert box.volume == 24
    assert box.hi == (2, 3, 4)
