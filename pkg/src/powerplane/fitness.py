"""Island extraction and the fitness the genetic optimizer maximizes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .genopt import handle_count
from .model import Island, Partition, Problem, check_feasible

EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


def extract_islands(labels: np.ndarray, m: int) -> Dict[int, List[Island]]:
    """8-connected components of every net id in ``1..m``.

    Islands of a net are ordered by the raster position of their first cell.
    Nets absent from the grid map to an empty list.
    """
    res = labels.shape[0]
    out: Dict[int, List[Island]] = {}
    for net_id in range(1, m + 1):
        comp, n = ndimage.label(labels == net_id, structure=EIGHT_CONNECTED)
        if n == 0:
            out[net_id] = []
            continue
        rows, cols = np.nonzero(comp)
        ids = comp[rows, cols] - 1
        order = np.argsort(ids, kind="stable")
        rows, cols, ids = rows[order], cols[order], ids[order]
        bounds = np.searchsorted(ids, np.arange(n + 1))
        counts = np.diff(bounds)
        cx = (np.bincount(ids, weights=cols, minlength=n) / counts + 0.5) / res
        cy = (np.bincount(ids, weights=rows, minlength=n) / counts + 0.5) / res
        cells = np.column_stack([rows, cols])
        out[net_id] = [
            Island(net_id, cells[bounds[j]:bounds[j + 1]], (float(cx[j]), float(cy[j])))
            for j in range(n)
        ]
    return out


def make_partition(labels: np.ndarray, m: int) -> Partition:
    return Partition(labels=labels, islands=extract_islands(labels, m))


def _boundary(cells: np.ndarray) -> np.ndarray:
    # the closest cell of a set to any outside point never has all four
    # axis neighbours inside the set
    if len(cells) <= 4:
        return cells
    lo = cells.min(axis=0)
    shape = cells.max(axis=0) - lo + 3
    mask = np.zeros(shape, dtype=bool)
    local = cells - lo + 1
    mask[local[:, 0], local[:, 1]] = True
    interior = (
        mask[:-2, 1:-1] & mask[2:, 1:-1] & mask[1:-1, :-2] & mask[1:-1, 2:]
    )
    keep = ~interior[local[:, 0] - 1, local[:, 1] - 1]
    return cells[keep]


def island_min_distance(a: Island, b: Island, resolution: int) -> float:
    """Smallest distance between cell centers of ``a`` and ``b`` (board units)."""
    pa, pb = _boundary(a.cells), _boundary(b.cells)
    if len(pa) > len(pb):
        pa, pb = pb, pa
    d, _ = cKDTree(pb).query(pa, k=1)
    return float(d.min()) / resolution


def island_centroid_distance(a: Island, b: Island) -> float:
    return math.dist(a.centroid, b.centroid)


def net_distance_terms(islands: Sequence[Island], resolution: int):
    """Summed pairwise (min distance, centroid distance) over one net's islands.

    Each unordered pair is counted once.
    """
    s = len(islands)
    if s < 2:
        return 0.0, 0.0
    cent = np.array([isl.centroid for isl in islands])
    diff = cent[:, None, :] - cent[None, :, :]
    cdist = np.sqrt((diff ** 2).sum(-1))
    dcent = float(cdist[np.triu_indices(s, 1)].sum())

    bounds = [_boundary(isl.cells) for isl in islands]
    owner = np.concatenate([np.full(len(b), j) for j, b in enumerate(bounds)])
    allpts = np.concatenate(bounds)
    dmin = 0.0
    for a in range(s - 1):
        later = owner > a
        d, _ = cKDTree(bounds[a]).query(allpts[later], k=1)
        best = np.full(s, np.inf)
        np.minimum.at(best, owner[later], d)
        dmin += float(best[a + 1:].sum())
    return dmin / resolution, dcent


@dataclass(frozen=True)
class FitnessWeights:
    island: float = 1.0
    dmin: float = 1.0
    dcent: float = 1.0


@dataclass(frozen=True)
class FitnessBreakdown:
    f_island: float
    f_dmin: float
    f_dcent: float
    feasibility_penalty: float
    total: float
    misclassified_pins: int = 0

    def as_dict(self) -> dict:
        return {
            "f_island": self.f_island,
            "f_dmin": self.f_dmin,
            "f_dcent": self.f_dcent,
            "feasibility_penalty": self.feasibility_penalty,
            "total": self.total,
            "misclassified_pins": self.misclassified_pins,
        }


def penalty_per_pin(m: int, k: int) -> float:
    """Large enough that any infeasible candidate ranks below a feasible one."""
    return 10.0 * (m + math.sqrt(2.0) * m * k)


def evaluate_partition(
    problem: Problem,
    labels: np.ndarray,
    k: Optional[int] = None,
    use_distance: bool = True,
    weights: FitnessWeights = FitnessWeights(),
):
    """Return ``(partition, breakdown)`` for a label grid."""
    m = problem.m
    res = problem.grid_resolution
    partition = make_partition(labels, m)
    if k is None:
        k = handle_count(problem)

    n_islands = sum(len(v) for v in partition.islands.values())
    dmin = dcent = 0.0
    if use_distance:
        for islands in partition.islands.values():
            a, b = net_distance_terms(islands, res)
            dmin += a
            dcent += b
    bad = check_feasible(problem, partition).count
    f_island = -weights.island * n_islands
    f_dmin = -weights.dmin * dmin
    f_dcent = -weights.dcent * dcent
    penalty = -penalty_per_pin(m, k) * bad
    # 0.0 rather than -0.0 keeps result documents stable
    f_dmin, f_dcent, penalty = f_dmin + 0.0, f_dcent + 0.0, penalty + 0.0
    total = f_island + f_dmin + f_dcent + penalty
    return partition, FitnessBreakdown(f_island, f_dmin, f_dcent, penalty, total, bad)


def fitness(problem: Problem, labels: np.ndarray, **kwargs) -> FitnessBreakdown:
    return evaluate_partition(problem, labels, **kwargs)[1]
