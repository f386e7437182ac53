import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import flood_fill_counts, min_cell_distance
from powerplane.fitness import (
    evaluate_partition,
    extract_islands,
    fitness,
    island_centroid_distance,
    island_min_distance,
    make_partition,
    penalty_per_pin,
)
from powerplane.model import Island, normalize_problem


def test_uniform_grid_is_one_island():
    isl = extract_islands(np.ones((10, 10), dtype=int), 1)
    assert len(isl[1]) == 1
    assert isl[1][0].size == 100


def test_columns_split_net_in_two():
    labels = np.full((10, 10), 2)
    labels[:, :2] = 1
    labels[:, 8:] = 1
    counts = {k: len(v) for k, v in extract_islands(labels, 2).items()}
    assert counts == {1: 2, 2: 1}


def test_diagonal_touch_joins_islands():
    labels = np.full((4, 4), 2)
    labels[0, 0] = labels[1, 1] = 1
    assert len(extract_islands(labels, 2)[1]) == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(2, 24), st.integers(0, 2**31 - 1))
def test_island_counts_match_flood_fill(m, res, seed):
    labels = np.random.default_rng(seed).integers(1, m + 1, size=(res, res))
    got = {k: len(v) for k, v in extract_islands(labels, m).items()}
    assert got == flood_fill_counts(labels, m)


def test_adjacent_cells_one_pitch_apart():
    a = Island.from_cells(1, [(5, 5)], 100)
    b = Island.from_cells(1, [(5, 6)], 100)
    assert island_min_distance(a, b, 100) == pytest.approx(0.01)


def test_three_four_five():
    a = Island.from_cells(1, [(0, 0)], 100)
    b = Island.from_cells(1, [(3, 4)], 100)
    assert island_min_distance(a, b, 100) == pytest.approx(0.05)
    assert island_centroid_distance(a, b) == pytest.approx(0.05)


def test_identical_islands_have_zero_centroid_distance():
    a = Island.from_cells(1, [(1, 1), (1, 2), (2, 1)], 50)
    assert island_centroid_distance(a, a) == 0.0


def test_l_shape_centroid_distance_against_hand_value():
    # L: (0,0),(1,0),(2,0),(2,1); mirror across the column axis at col 10
    a = Island.from_cells(1, [(0, 0), (1, 0), (2, 0), (2, 1)], 20)
    b = Island.from_cells(1, [(0, 10), (1, 10), (2, 10), (2, 9)], 20)
    # column means 0.25 and 9.75, equal row means
    assert island_centroid_distance(a, b) == pytest.approx(9.5 / 20)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_min_distance_matches_pair_scan(seed):
    rng = np.random.default_rng(seed)
    res = 30
    grid = rng.random((res, res)) < 0.35
    labels = np.where(grid, 1, 2)
    islands = extract_islands(labels, 2)[1]
    if len(islands) < 2:
        return
    a, b = islands[0], islands[1]
    want = min_cell_distance(a.cells.tolist(), b.cells.tolist(), res)
    assert island_min_distance(a, b, res) == pytest.approx(want, rel=1e-12)


def _board(pins_a, pins_b, res=20):
    return normalize_problem([pins_a, pins_b], (1, 1), grid_resolution=res)


def test_all_single_islands_gives_minus_m():
    p = normalize_problem(
        [[(0.05, 0.5)], [(0.3, 0.5)], [(0.5, 0.5)], [(0.7, 0.5)], [(0.95, 0.5)]],
        (1, 1), grid_resolution=20,
    )
    labels = np.repeat(np.repeat(np.arange(1, 6)[None, :], 4, axis=1), 20, axis=0)
    fb = fitness(p, labels)
    assert fb.total == -5
    assert fb.f_dmin == 0 and fb.f_dcent == 0 and fb.feasibility_penalty == 0


def test_two_islands_direct_formula():
    res = 20
    p = normalize_problem([[(0.025, 0.025)]], (1, 1), grid_resolution=res)
    part, fb = evaluate_partition(p, np.ones((res, res), dtype=int))
    assert fb.total == -1
    # net 1 as two single cells two pitches apart, net 2 everywhere else
    p2 = _board([(0.025, 0.025)], [(0.5, 0.5)], res)
    labels = np.full((res, res), 2)
    labels[0, 0] = 1
    labels[0, 2] = 1
    fb = fitness(p2, labels)
    assert fb.f_island == -3
    assert fb.f_dmin == pytest.approx(-0.1)
    assert fb.f_dcent == pytest.approx(-0.1)
    assert fb.total == pytest.approx(-3.2)


def test_breakdown_sums_and_signs():
    rng = np.random.default_rng(0)
    p = _board([(0.1, 0.1), (0.9, 0.1)], [(0.5, 0.9)])
    for _ in range(20):
        labels = rng.integers(1, 3, size=(20, 20))
        fb = fitness(p, labels)
        assert fb.total == pytest.approx(fb.f_island + fb.f_dmin + fb.f_dcent + fb.feasibility_penalty)
        assert max(fb.f_island, fb.f_dmin, fb.f_dcent, fb.feasibility_penalty) <= 0


def test_penalty_dominates_feasible_candidates():
    p = _board([(0.1, 0.1)], [(0.9, 0.9)])
    rng = np.random.default_rng(1)
    worst_feasible = math.inf
    best_infeasible = -math.inf
    for _ in range(30):
        labels = rng.integers(1, 3, size=(20, 20))
        labels[2, 2] = 1
        fb = fitness(p, labels, k=4)
        worst_feasible = min(worst_feasible, fb.total) if fb.misclassified_pins == 0 else worst_feasible
        labels[2, 2] = 2
        fb = fitness(p, labels, k=4)
        best_infeasible = max(best_infeasible, fb.total)
    assert best_infeasible < worst_feasible
    assert penalty_per_pin(2, 4) == pytest.approx(10 * (2 + math.sqrt(2) * 8))


def test_distance_terms_switch_off_exactly():
    p = _board([(0.1, 0.1)], [(0.9, 0.9)])
    labels = np.random.default_rng(2).integers(1, 3, size=(20, 20))
    fb = fitness(p, labels, use_distance=False)
    assert fb.f_dmin == 0.0 and fb.f_dcent == 0.0


def test_fitness_invariant_under_net_permutation():
    rng = np.random.default_rng(5)
    pins = [[(0.1, 0.1)], [(0.5, 0.5)], [(0.9, 0.2)]]
    p = normalize_problem(pins, (1, 1), grid_resolution=20)
    q = normalize_problem([pins[2], pins[0], pins[1]], (1, 1), grid_resolution=20)
    relabel = np.array([0, 2, 3, 1])
    for _ in range(10):
        labels = rng.integers(1, 4, size=(20, 20))
        assert fitness(p, labels).total == pytest.approx(fitness(q, relabel[labels]).total)


def test_merging_islands_strictly_improves():
    rng = np.random.default_rng(11)
    p = _board([(0.025, 0.025)], [(0.975, 0.975)], 24)
    checked = 0
    for _ in range(200):
        labels = np.full((24, 24), 2)
        labels[0, 0] = 1
        for _ in range(rng.integers(2, 5)):
            r, c = rng.integers(0, 22, size=2)
            labels[r:r + 2, c:c + 2] = 1
        labels[23, 23] = 2
        islands = extract_islands(labels, 2)[1]
        if len(islands) < 2:
            continue
        before = fitness(p, labels).total
        # bridge the first two islands with a straight run of net-1 cells
        (r0, c0), (r1, c1) = islands[0].cells[0], islands[1].cells[0]
        merged = labels.copy()
        n = max(abs(r1 - r0), abs(c1 - c0)) + 1
        for t in np.linspace(0, 1, 2 * n):
            merged[round(r0 + t * (r1 - r0)), round(c0 + t * (c1 - c0))] = 1
        merged[23, 23] = 2
        if len(extract_islands(merged, 2)[1]) != len(islands) - 1:
            continue
        if len(extract_islands(merged, 2)[2]) != len(extract_islands(labels, 2)[2]):
            continue
        assert fitness(p, merged).total > before
        checked += 1
    assert checked >= 20


def test_fitness_independent_of_physical_extents():
    a = normalize_problem([[(1, 1)], [(9, 9)]], (10, 10), grid_resolution=20)
    b = normalize_problem([[(100, 10)], [(900, 90)]], (1000, 100), grid_resolution=20)
    labels = np.random.default_rng(4).integers(1, 3, size=(20, 20))
    assert fitness(a, labels).total == fitness(b, labels).total


def test_u_shaped_plane_beats_split_plane():
    from instances import u_channel

    p = u_channel()
    res = p.grid_resolution
    c = (np.arange(res) + 0.5) / res
    xx, yy = np.meshgrid(c, c)
    # net B in a box hanging from the top edge; net A wraps underneath
    box = (np.abs(xx - 0.5) < 0.15) & (yy > 0.45)
    u_shape = np.where(box, 2, 1)
    # B's box reaches down past A's bottom pin, cutting A's arms apart
    band = (np.abs(xx - 0.5) < 0.15) & (yy > 0.05)
    pocket = np.hypot(xx - 0.5, yy - 0.15) < 0.05
    split = np.where(band & ~pocket, 2, 1)
    fu, fs = fitness(p, u_shape), fitness(p, split)
    assert fu.misclassified_pins == fs.misclassified_pins == 0
    assert fs.f_island < fu.f_island
    assert fu.total > fs.total
