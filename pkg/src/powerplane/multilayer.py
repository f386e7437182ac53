"""Layer assignment by hierarchical clustering of nets, then GOMLP per layer.

Nets are clustered on the *inverse* of a pin-set distance, so the pair of
nets that lie farthest apart merges first and ends up sharing a layer.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog
from scipy.spatial.distance import cdist

from .genopt import GaConfig, derive_seed
from .gomlp import DEFAULT_BUDGET, GomlpResult, SolverOptions, solve
from .model import Net, Problem
from .neural import TrainConfig

METRICS = ("hd", "emd")
LINKAGES = ("average", "single", "complete")


class CoincidentNets(ValueError):
    def __init__(self, i: int, j: int):
        super().__init__(f"nets {i} and {j} are at distance zero")
        self.pair = (i, j)


def _coords(net) -> np.ndarray:
    if isinstance(net, Net):
        return net.coords()
    return np.asarray(net, dtype=float).reshape(-1, 2)


def hausdorff_distance(n1, n2) -> float:
    """Symmetric Hausdorff distance between two pin sets."""
    d = cdist(_coords(n1), _coords(n2))
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def earth_mover_distance(n1, n2) -> float:
    """Minimum total Euclidean matching cost between two pin sets.

    Equal sizes: cost of the best bijection.  Unequal sizes: optimal
    transport with uniform masses, rescaled by the mean set size so the two
    cases agree when sizes match.
    """
    a, b = _coords(n1), _coords(n2)
    cost = cdist(a, b)
    p, q = len(a), len(b)
    if p == q:
        rows, cols = linear_sum_assignment(cost)
        return float(cost[rows, cols].sum())
    # transport plan x[i, j] >= 0 with row sums 1/p and column sums 1/q
    a_eq = np.zeros((p + q, p * q))
    for i in range(p):
        a_eq[i, i * q:(i + 1) * q] = 1.0
    for j in range(q):
        a_eq[p + j, j::q] = 1.0
    b_eq = np.concatenate([np.full(p, 1.0 / p), np.full(q, 1.0 / q)])
    res = linprog(cost.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"transport LP failed: {res.message}")
    return float(res.fun) * (p + q) / 2.0


@dataclass(frozen=True, eq=False)
class NetDistanceMatrix:
    metric: str
    net_ids: Tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if v.shape != (len(self.net_ids),) * 2:
            raise ValueError("matrix shape does not match net ids")
        if not np.allclose(v, v.T, rtol=0, atol=0) or np.any(np.diag(v) != 0):
            raise ValueError("distance matrix must be symmetric with zero diagonal")
        if not np.isfinite(v).all() or (v < 0).any():
            raise ValueError("distances must be finite and nonnegative")


def distance_matrix(problem: Problem, metric: str = "hd") -> NetDistanceMatrix:
    fn = {"hd": hausdorff_distance, "emd": earth_mover_distance}[metric]
    m = problem.m
    v = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            v[i, j] = v[j, i] = fn(problem.nets[i], problem.nets[j])
    return NetDistanceMatrix(metric, tuple(problem.net_ids), v)


@dataclass(frozen=True)
class Merge:
    a: int
    b: int
    height: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    """Agglomerative merge tree.

    Cluster ``i < m`` is the leaf ``leaves[i]``; the cluster created by merge
    ``t`` has id ``m + t``.
    """

    leaves: Tuple[int, ...]
    merges: Tuple[Merge, ...]
    linkage: str = "average"

    def members(self, cluster: int) -> List[int]:
        m = len(self.leaves)
        if cluster < m:
            return [self.leaves[cluster]]
        mg = self.merges[cluster - m]
        return self.members(mg.a) + self.members(mg.b)

    def to_dict(self) -> dict:
        return {
            "leaves": list(self.leaves),
            "linkage": self.linkage,
            "merges": [
                {"a": mg.a, "b": mg.b, "height": mg.height, "size": mg.size}
                for mg in self.merges
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Dendrogram":
        return cls(
            leaves=tuple(d["leaves"]),
            merges=tuple(Merge(x["a"], x["b"], x["height"], x["size"]) for x in d["merges"]),
            linkage=d.get("linkage", "average"),
        )


def cluster(distances: NetDistanceMatrix, linkage: str = "average") -> Dendrogram:
    """Agglomerative clustering with dissimilarity ``1 / distance``.

    Ties in linkage value go to the pair with the lowest cluster ids.
    """
    if linkage not in LINKAGES:
        raise ValueError(f"unknown linkage {linkage!r}")
    v = distances.values
    m = len(v)
    for i in range(m):
        for j in range(i + 1, m):
            if v[i, j] == 0:
                raise CoincidentNets(distances.net_ids[i], distances.net_ids[j])
    with np.errstate(divide="ignore"):
        inv = 1.0 / v
    np.fill_diagonal(inv, 0.0)

    active: Dict[int, List[int]] = {i: [i] for i in range(m)}
    merges = []
    for t in range(m - 1):
        best = None
        ids = sorted(active)
        for x, ca in enumerate(ids):
            for cb in ids[x + 1:]:
                block = inv[np.ix_(active[ca], active[cb])]
                if linkage == "average":
                    d = float(block.mean())
                elif linkage == "single":
                    d = float(block.min())
                else:
                    d = float(block.max())
                if best is None or d < best[0]:
                    best = (d, ca, cb)
        d, ca, cb = best
        members = active.pop(ca) + active.pop(cb)
        active[m + t] = members
        merges.append(Merge(ca, cb, d, len(members)))
    return Dendrogram(tuple(distances.net_ids), tuple(merges), linkage)


def assign_layers(dendrogram: Dendrogram, k: int) -> Dict[int, int]:
    """Cut the tree into ``k`` clusters; layers numbered by smallest net id."""
    m = len(dendrogram.leaves)
    if not 1 <= k <= m:
        raise ValueError(f"layer count must lie in 1..{m}")
    clusters = {i: [dendrogram.leaves[i]] for i in range(m)}
    for t, mg in enumerate(dendrogram.merges[: m - k]):
        clusters[m + t] = clusters.pop(mg.a) + clusters.pop(mg.b)
    groups = sorted(sorted(c) for c in clusters.values())
    return {nid: layer for layer, g in enumerate(groups, start=1) for nid in g}


def layers_of(assignment: Dict[int, int]) -> Dict[int, List[int]]:
    out: Dict[int, List[int]] = {}
    for nid, layer in sorted(assignment.items()):
        out.setdefault(layer, []).append(nid)
    return out


@dataclass
class LayerResult:
    layer: int
    net_ids: List[int]
    result: GomlpResult

    @property
    def success(self) -> bool:
        return self.result.success


@dataclass
class LayeredSolution:
    k: int
    assignment: Dict[int, int]
    layers: List[LayerResult]

    @property
    def success(self) -> bool:
        return all(l.success for l in self.layers)

    @property
    def total_ei(self) -> float:
        return sum(math.inf if l.result.ei is None else l.result.ei for l in self.layers)


@dataclass
class MultilayerResult:
    metric: str
    linkage: str
    distances: NetDistanceMatrix
    dendrogram: Dendrogram
    attempts: List[LayeredSolution] = field(default_factory=list)
    mcdl: Optional[int] = None
    searched: bool = False
    wall_time: float = 0.0

    @property
    def final(self) -> LayeredSolution:
        """The solution at the MCDL, else the best attempt by total EI."""
        if self.mcdl is not None:
            return next(a for a in self.attempts if a.k == self.mcdl)
        return min(self.attempts, key=lambda a: (a.total_ei, a.k))


def _solve_layer(args):
    problem, ga, train_config, budget, options = args
    return solve(problem, ga, train_config, budget, options)


def solve_layers(
    problem: Problem,
    assignment: Dict[int, int],
    ga: GaConfig,
    train_config: TrainConfig,
    budget: float,
    options: SolverOptions,
    workers: int = 1,
) -> LayeredSolution:
    """Run GOMLP on every layer; layer seeds depend only on (seed, K, layer)."""
    groups = layers_of(assignment)
    k = len(groups)
    jobs = []
    for layer, ids in groups.items():
        seed = derive_seed(ga.rng_seed, k, layer)
        layer_ga = GaConfig(**{**ga.__dict__, "rng_seed": seed})
        jobs.append((problem.subproblem(ids), layer_ga, train_config, budget, options))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_solve_layer, jobs))
    else:
        results = [_solve_layer(j) for j in jobs]
    return LayeredSolution(
        k=k,
        assignment=dict(assignment),
        layers=[LayerResult(layer, ids, r) for (layer, ids), r in zip(groups.items(), results)],
    )


def solve_multilayer(
    problem: Problem,
    metric: str = "hd",
    k: Optional[int] = None,
    ga: GaConfig = GaConfig(),
    train_config: TrainConfig = TrainConfig(),
    budget: float = DEFAULT_BUDGET,
    options: SolverOptions = SolverOptions(),
    linkage: str = "average",
    total_budget: Optional[float] = None,
    workers: int = 1,
) -> MultilayerResult:
    """Cluster nets, assign layers and generate planes per layer.

    With ``k`` given, one assignment is solved.  Without it the layer count
    climbs from 1 until every layer is feasible with zero extra islands; that
    count is the MCDL.  ``budget`` applies to each layer solve and
    ``total_budget``, if set, bounds the whole search.
    """
    t0 = time.perf_counter()
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    dist = distance_matrix(problem, metric)
    dendro = cluster(dist, linkage)
    out = MultilayerResult(metric, linkage, dist, dendro)
    if k is not None:
        out.attempts.append(
            solve_layers(problem, assign_layers(dendro, k), ga, train_config, budget, options, workers)
        )
        out.wall_time = time.perf_counter() - t0
        return out

    out.searched = True
    for kk in range(1, problem.m + 1):
        if total_budget is not None and time.perf_counter() - t0 > total_budget:
            break
        sol = solve_layers(problem, assign_layers(dendro, kk), ga, train_config, budget, options, workers)
        out.attempts.append(sol)
        if sol.success:
            out.mcdl = kk
            break
    out.wall_time = time.perf_counter() - t0
    return out
