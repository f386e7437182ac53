import numpy as np
import pytest

from powerplane.model import (
    DuplicateCrossNetPin,
    NetVanished,
    Partition,
    PinOutsideBoard,
    ProblemError,
    cell_index,
    check_feasible,
    extra_islands,
    normalize_problem,
    safe_extra_islands,
)
from powerplane.fitness import make_partition


def test_normalize_maps_into_unit_square():
    p = normalize_problem([[(0, 0), (200, 50)], [(100, 100)]], (200, 100))
    assert p.m == 2
    assert p.net_ids == [1, 2]
    assert p.nets[0].coords().tolist() == [[0.0, 0.0], [1.0, 0.5]]
    assert p.nets[1].coords().tolist() == [[0.5, 1.0]]
    assert [n.label for n in p.nets] == ["N1", "N2"]


def test_pin_outside_board_rejected():
    with pytest.raises(PinOutsideBoard):
        normalize_problem([[(10, 10), (101, 5)]], (100, 100))


def test_duplicate_pin_across_nets_rejected():
    with pytest.raises(DuplicateCrossNetPin):
        normalize_problem([[(1, 1)], [(1, 1)]], (10, 10))


def test_duplicate_pin_within_net_allowed():
    p = normalize_problem([[(1, 1), (1, 1)]], (10, 10))
    assert p.nets[0].pin_count == 2


def test_resolution_floor():
    with pytest.raises(ProblemError):
        normalize_problem([[(1, 1)]], (10, 10), grid_resolution=15)


def test_empty_problem_rejected():
    with pytest.raises(ProblemError):
        normalize_problem([], (10, 10))


def test_cell_index_clamps_far_edge():
    assert cell_index(0.0, 100) == 0
    assert cell_index(0.015, 100) == 1
    assert cell_index(1.0, 100) == 99


def test_subproblem_renumbers():
    p = normalize_problem([[(1, 1)], [(2, 2)], [(3, 3)]], (10, 10), ["a", "b", "c"])
    sub = p.subproblem([3, 1])
    assert sub.net_ids == [1, 2]
    assert [n.label for n in sub.nets] == ["c", "a"]


def test_feasibility_report_lists_misplaced_pins():
    p = normalize_problem([[(0.1, 0.1)], [(0.9, 0.9)]], (1, 1), grid_resolution=16)
    labels = np.ones((16, 16), dtype=int)
    rep = check_feasible(p, labels)
    assert not rep.feasible
    assert list(rep.misclassified) == [2]
    labels[14:, 14:] = 2
    assert check_feasible(p, labels).feasible


def test_extra_islands_counts_and_vanished_net():
    labels = np.ones((16, 16), dtype=int)
    labels[:, :2] = 2
    labels[:, -2:] = 2
    part = make_partition(labels, 2)
    assert extra_islands(part, 2) == 1
    with pytest.raises(NetVanished):
        extra_islands(make_partition(np.ones((16, 16), dtype=int), 2), 2)
    assert safe_extra_islands(make_partition(np.ones((16, 16), dtype=int), 2), 2) is None


def test_extra_islands_invariant_under_relabeling():
    rng = np.random.default_rng(3)
    labels = rng.integers(1, 4, size=(20, 20))
    perm = np.array([0, 3, 1, 2])
    a = extra_islands(make_partition(labels, 3), 3)
    b = extra_islands(make_partition(perm[labels], 3), 3)
    assert a == b
