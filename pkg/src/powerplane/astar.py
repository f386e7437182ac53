"""Baseline: MST skeletons, crossing pruning, A* island connection, 1-NN fill.

Routing uses a lattice with one node per grid cell center and 8-neighbour
moves.  Path costs are tracked exactly as ``(straight moves, diagonal
moves)`` so equal-cost paths compare equal regardless of summation order.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .fitness import make_partition
from .model import Partition, Problem, cell_index, check_feasible, safe_extra_islands

SQRT2 = math.sqrt(2.0)
Point = Tuple[float, float]
Node = Tuple[int, int]

NEIGHBOURS = (
    (-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0),
    (-1, -1, 1), (-1, 1, 1), (1, -1, 1), (1, 1, 1),
)


@dataclass(frozen=True)
class Segment:
    a: Point
    b: Point

    def __post_init__(self):
        if tuple(self.a) == tuple(self.b):
            raise ValueError("degenerate segment")

    @property
    def length(self) -> float:
        return math.dist(self.a, self.b)


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> bool:
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return False
        self.parent[max(ri, rj)] = min(ri, rj)
        return True


def mst_edges(pins) -> List[Tuple[int, int]]:
    """Kruskal on the complete Euclidean graph; edges as index pairs."""
    pts = np.asarray(pins, dtype=float).reshape(-1, 2)
    n = len(pts)
    candidates = sorted(
        (math.dist(pts[i], pts[j]), i, j) for i in range(n) for j in range(i + 1, n)
    )
    uf = UnionFind(n)
    edges = []
    for _, i, j in candidates:
        if uf.union(i, j):
            edges.append((i, j))
            if len(edges) == n - 1:
                break
    return edges


def kruskal_mst(pins) -> List[Segment]:
    pts = [tuple(map(float, p)) for p in pins]
    return [Segment(pts[i], pts[j]) for i, j in mst_edges(pts)]


def _orient(p, q, r) -> float:
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def _on_segment(p, q, r) -> bool:
    """``q`` collinear with ``p``-``r`` lies within their bounding box."""
    return (
        min(p[0], r[0]) <= q[0] <= max(p[0], r[0])
        and min(p[1], r[1]) <= q[1] <= max(p[1], r[1])
    )


def segments_intersect(s1: Segment, s2: Segment) -> bool:
    """True when the closed segments share at least one point."""
    p1, q1, p2, q2 = s1.a, s1.b, s2.a, s2.b
    o1, o2 = _orient(p1, q1, p2), _orient(p1, q1, q2)
    o3, o4 = _orient(p2, q2, p1), _orient(p2, q2, q1)
    if ((o1 > 0 and o2 < 0) or (o1 < 0 and o2 > 0)) and (
        (o3 > 0 and o4 < 0) or (o3 < 0 and o4 > 0)
    ):
        return True
    return (
        (o1 == 0 and _on_segment(p1, p2, q1))
        or (o2 == 0 and _on_segment(p1, q2, q1))
        or (o3 == 0 and _on_segment(p2, p1, q2))
        or (o4 == 0 and _on_segment(p2, q1, q2))
    )


@dataclass(frozen=True)
class Tree:
    net_id: int
    pins: Tuple[int, ...]
    edges: Tuple[Tuple[int, int], ...]


def prune_and_group(
    problem: Problem, msts: Mapping[int, Sequence[Tuple[int, int]]]
) -> Dict[int, List[Tree]]:
    """Drop MST edges that touch another net's MST edge, then split into trees.

    The set of edges to drop is decided against the unpruned trees of all
    nets at once, so the outcome does not depend on net order.
    """
    coords = {n.id: n.coords() for n in problem.nets}
    segs = {
        nid: [Segment(tuple(coords[nid][i]), tuple(coords[nid][j])) for i, j in edges]
        for nid, edges in msts.items()
    }
    doomed = {nid: set() for nid in msts}
    ids = sorted(msts)
    for x, na in enumerate(ids):
        for nb in ids[x + 1:]:
            for ia, sa in enumerate(segs[na]):
                for ib, sb in enumerate(segs[nb]):
                    if segments_intersect(sa, sb):
                        doomed[na].add(ia)
                        doomed[nb].add(ib)

    out: Dict[int, List[Tree]] = {}
    for nid in ids:
        n_pins = len(coords[nid])
        uf = UnionFind(n_pins)
        kept = [e for i, e in enumerate(msts[nid]) if i not in doomed[nid]]
        for i, j in kept:
            uf.union(i, j)
        groups: Dict[int, List[int]] = {}
        for p in range(n_pins):
            groups.setdefault(uf.find(p), []).append(p)
        trees = []
        for members in sorted(groups.values()):
            mset = set(members)
            trees.append(Tree(
                net_id=nid,
                pins=tuple(members),
                edges=tuple(e for e in kept if e[0] in mset),
            ))
        out[nid] = trees
    return out


# -- routing -----------------------------------------------------------------

@dataclass
class RoutingGraph:
    """Lattice of ``size x size`` nodes at cell centers with 8-neighbour edges.

    ``blocked[r, c]`` nodes cannot be entered except as a search target.
    """

    size: int
    blocked: np.ndarray = None

    def __post_init__(self):
        if self.blocked is None:
            self.blocked = np.zeros((self.size, self.size), dtype=bool)

    def point(self, node: Node) -> Point:
        r, c = node
        return ((c + 0.5) / self.size, (r + 0.5) / self.size)

    def node_of(self, point) -> Node:
        x, y = point
        return (int(cell_index(y, self.size)), int(cell_index(x, self.size)))

    def neighbours(self, node: Node):
        r, c = node
        n = self.size
        for dr, dc, diag in NEIGHBOURS:
            rr, cc = r + dr, c + dc
            if 0 <= rr < n and 0 <= cc < n:
                yield (rr, cc), diag


def cost_value(cost: Tuple[int, int], pitch: float = 1.0) -> float:
    return (cost[0] + cost[1] * SQRT2) * pitch


@dataclass
class PathResult:
    nodes: List[Node]
    cost: Tuple[int, int]
    expanded: int

    def length(self, size: int) -> float:
        return cost_value(self.cost, 1.0 / size)


def astar(
    graph: RoutingGraph, sources: Iterable[Node], targets: Iterable[Node]
) -> Optional[PathResult]:
    """Shortest path from any source to any target.

    The heuristic is the straight-line distance to the nearest target, which
    never overestimates the lattice distance.
    """
    sources = set(map(tuple, sources))
    targets = set(map(tuple, targets))
    if not sources or not targets:
        return None
    hit = sources & targets
    if hit:
        return PathResult([min(hit)], (0, 0), 0)
    tnodes = sorted(targets)
    kd = cKDTree(np.array(tnodes, dtype=float))

    def h(node):
        return kd.query(node, k=1)[0]

    best: Dict[Node, Tuple[int, int]] = {}
    parent: Dict[Node, Optional[Node]] = {}
    heap = []
    counter = 0
    for s in sorted(sources):
        best[s] = (0, 0)
        parent[s] = None
        heapq.heappush(heap, (h(s), 0.0, counter, s))
        counter += 1
    closed = set()
    blocked = graph.blocked
    while heap:
        _, g, _, node = heapq.heappop(heap)
        if node in closed:
            continue
        if node in targets:
            path = [node]
            while parent[path[-1]] is not None:
                path.append(parent[path[-1]])
            return PathResult(path[::-1], best[node], len(closed))
        closed.add(node)
        a, b = best[node]
        for nxt, diag in graph.neighbours(node):
            if nxt in closed or nxt in sources:
                continue
            if blocked[nxt] and nxt not in targets:
                continue
            cand = (a + 1 - diag, b + diag)
            gv = cost_value(cand)
            old = best.get(nxt)
            if old is None or gv < cost_value(old):
                best[nxt] = cand
                parent[nxt] = node
                heapq.heappush(heap, (gv + h(nxt), gv, counter, nxt))
                counter += 1
    return None


# -- island connection -------------------------------------------------------

def sample_segment(a, b, spacing: float) -> np.ndarray:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    n = max(1, math.ceil(math.dist(a, b) / spacing))
    t = np.linspace(0.0, 1.0, n + 1)[:, None]
    return a + t * (b - a)


def tree_points(problem: Problem, tree: Tree, spacing: float) -> np.ndarray:
    coords = problem.net(tree.net_id).coords()
    parts = [coords[list(tree.pins)]]
    for i, j in tree.edges:
        parts.append(sample_segment(coords[i], coords[j], spacing))
    return np.concatenate(parts)


def rasterize(points, size: int) -> FrozenSet[Node]:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    rows = cell_index(pts[:, 1], size)
    cols = cell_index(pts[:, 0], size)
    return frozenset(zip(rows.tolist(), cols.tolist()))


def net_order(problem: Problem) -> List[int]:
    """Most pins first; ties by net id."""
    return [n.id for n in sorted(problem.nets, key=lambda n: (-n.pin_count, n.id))]


@dataclass
class ConnectionReport:
    order: List[int]
    # net id -> list of components, each a list of tree indices
    components: Dict[int, List[List[int]]]
    paths: Dict[int, List[List[Point]]]
    failures: List[Tuple[int, Tuple[int, ...], Tuple[int, ...]]] = field(default_factory=list)

    @property
    def success(self) -> bool:
        return all(len(c) == 1 for c in self.components.values())


def _component_distance(a: np.ndarray, b: np.ndarray) -> float:
    d, _ = cKDTree(b).query(a, k=1)
    return float(d.min())


def connect_islands(
    problem: Problem,
    trees: Mapping[int, List[Tree]],
    graph_resolution: Optional[int] = None,
) -> ConnectionReport:
    """Join each net's trees with A* paths, one net at a time.

    Within a net the closest pair of current components is routed first.
    Nodes within one lattice step of another net's trees, pins or paths are
    blocked.  A pair that cannot be routed is recorded and skipped.
    """
    size = graph_resolution or problem.grid_resolution
    spacing = 0.5 / size
    occupied = {nid: np.zeros((size, size), dtype=bool) for nid in trees}
    nodes_of = {}
    for nid, ts in trees.items():
        nodes_of[nid] = [rasterize(tree_points(problem, t, spacing), size) for t in ts]
        for ns in nodes_of[nid]:
            r, c = zip(*ns)
            occupied[nid][list(r), list(c)] = True

    order = [nid for nid in net_order(problem) if nid in trees]
    report = ConnectionReport(order=order, components={}, paths={})
    struct = np.ones((3, 3), dtype=bool)
    for nid in order:
        others = np.zeros((size, size), dtype=bool)
        for other, occ in occupied.items():
            if other != nid:
                others |= occ
        graph = RoutingGraph(size, ndimage.binary_dilation(others, structure=struct))

        comps: List[Tuple[List[int], set]] = [([i], set(ns)) for i, ns in enumerate(nodes_of[nid])]
        failed = set()
        paths: List[List[Point]] = []
        while len(comps) > 1:
            arrays = [np.array(sorted(c[1]), dtype=float) for c in comps]
            pairs = []
            for i in range(len(comps)):
                for j in range(i + 1, len(comps)):
                    key = (tuple(sorted(comps[i][0])), tuple(sorted(comps[j][0])))
                    if key not in failed:
                        pairs.append((_component_distance(arrays[i], arrays[j]), i, j, key))
            if not pairs:
                break
            _, i, j, key = min(pairs)
            found = astar(graph, comps[i][1], comps[j][1])
            if found is None:
                failed.add(key)
                report.failures.append((nid, key[0], key[1]))
                continue
            for node in found.nodes:
                occupied[nid][node] = True
            paths.append([graph.point(nd) for nd in found.nodes])
            merged = (sorted(comps[i][0] + comps[j][0]), comps[i][1] | comps[j][1] | set(found.nodes))
            comps = [c for x, c in enumerate(comps) if x not in (i, j)] + [merged]
            comps.sort(key=lambda c: c[0])
        report.components[nid] = [c[0] for c in comps]
        report.paths[nid] = paths
    return report


# -- inflation ---------------------------------------------------------------

def net_samples(
    problem: Problem,
    trees: Mapping[int, List[Tree]],
    paths: Mapping[int, List[List[Point]]],
    spacing: float,
) -> Dict[int, np.ndarray]:
    """Dense points along every tree edge and routed path of each net."""
    out = {}
    for net in problem.nets:
        parts = [tree_points(problem, t, spacing) for t in trees.get(net.id, [])]
        for path in paths.get(net.id, []):
            parts.append(np.asarray(path[:1], dtype=float))
            for a, b in zip(path[:-1], path[1:]):
                parts.append(sample_segment(a, b, spacing))
        if not parts:
            parts = [net.coords()]
        out[net.id] = np.concatenate(parts)
    return out


def nearest_net_labels(samples: Mapping[int, np.ndarray], resolution: int, chunk: int = 2048) -> np.ndarray:
    """Label each cell center with the net of its nearest sample point.

    Exact distance ties go to the lowest net id.
    """
    ids = sorted(samples)
    pts = np.concatenate([samples[i] for i in ids])
    owner = np.concatenate([np.full(len(samples[i]), i) for i in ids])
    c = (np.arange(resolution) + 0.5) / resolution
    xx, yy = np.meshgrid(c, c)
    centers = np.column_stack([xx.ravel(), yy.ravel()])
    out = np.empty(len(centers), dtype=np.int64)
    for s in range(0, len(centers), chunk):
        q = centers[s:s + chunk]
        dx = q[:, None, 0] - pts[None, :, 0]
        dy = q[:, None, 1] - pts[None, :, 1]
        # first minimum wins, and samples are ordered by net id
        out[s:s + chunk] = owner[np.argmin(dx * dx + dy * dy, axis=1)]
    return out.reshape(resolution, resolution)


def inflate_knn(
    problem: Problem,
    trees: Mapping[int, List[Tree]],
    paths: Optional[Mapping[int, List[List[Point]]]] = None,
    resolution: Optional[int] = None,
) -> Partition:
    res = resolution or problem.grid_resolution
    samples = net_samples(problem, trees, paths or {}, 0.5 / res)
    return make_partition(nearest_net_labels(samples, res), problem.m)


@dataclass
class AstarResult:
    partition: Partition
    ei: Optional[int]
    feasible: bool
    wall_time: float
    trees: Dict[int, List[Tree]]
    report: ConnectionReport


def solve_astar(problem: Problem, graph_resolution: Optional[int] = None) -> AstarResult:
    """The whole baseline pipeline on one problem."""
    t0 = time.perf_counter()
    msts = {n.id: mst_edges(n.coords()) for n in problem.nets}
    trees = prune_and_group(problem, msts)
    report = connect_islands(problem, trees, graph_resolution)
    partition = inflate_knn(problem, trees, report.paths)
    return AstarResult(
        partition=partition,
        ei=safe_extra_islands(partition, problem.m),
        feasible=check_feasible(problem, partition).feasible,
        wall_time=time.perf_counter() - t0,
        trees=trees,
        report=report,
    )
