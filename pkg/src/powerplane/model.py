"""Boards, nets, pins, partitions and the extra-islands metric.

All coordinates held by a :class:`Problem` are normalized to the unit
square.  The physical coordinates the problem was built from are kept on
each :class:`Net` so problems serialize back to exactly what was loaded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

DEFAULT_GRID_RESOLUTION = 100
MIN_GRID_RESOLUTION = 16


class ProblemError(ValueError):
    """Base class for invalid problem input."""


class PinOutsideBoard(ProblemError):
    def __init__(self, net_id: int, pin: Tuple[float, float]):
        super().__init__(f"net {net_id}: pin {pin} lies outside the board")
        self.net_id = net_id
        self.pin = pin


class DuplicateCrossNetPin(ProblemError):
    def __init__(self, net_a: int, net_b: int, pin: Tuple[float, float]):
        super().__init__(
            f"nets {net_a} and {net_b} both have a pin at {pin}"
        )
        self.net_ids = (net_a, net_b)
        self.pin = pin


class NetVanished(ValueError):
    """A net owns no cells of the partition, so its island count is zero."""

    def __init__(self, net_ids: Sequence[int]):
        super().__init__(f"nets without any cells: {list(net_ids)}")
        self.net_ids = list(net_ids)


@dataclass(frozen=True)
class Pin:
    x: float
    y: float

    def __iter__(self):
        yield self.x
        yield self.y


@dataclass(frozen=True)
class Net:
    id: int
    label: str
    pins: Tuple[Pin, ...]
    # physical coordinates as supplied, used for serialization
    raw_pins: Tuple[Tuple[float, float], ...] = field(default=(), repr=False)

    def __post_init__(self):
        if not self.pins:
            raise ProblemError(f"net {self.id} has no pins")

    @property
    def pin_count(self) -> int:
        return len(self.pins)

    def coords(self) -> np.ndarray:
        """Normalized pin coordinates as an (q, 2) array."""
        return np.array([(p.x, p.y) for p in self.pins], dtype=float)


@dataclass(frozen=True)
class Problem:
    nets: Tuple[Net, ...]
    board_width: float = 1.0
    board_height: float = 1.0
    grid_resolution: int = DEFAULT_GRID_RESOLUTION

    def __post_init__(self):
        if not self.nets:
            raise ProblemError("a problem needs at least one net")
        ids = [n.id for n in self.nets]
        if len(set(ids)) != len(ids):
            raise ProblemError(f"duplicate net ids: {ids}")
        if self.grid_resolution < MIN_GRID_RESOLUTION:
            raise ProblemError(
                f"grid_resolution must be >= {MIN_GRID_RESOLUTION}, "
                f"got {self.grid_resolution}"
            )
        _check_cross_net_duplicates(self.nets)

    @property
    def m(self) -> int:
        return len(self.nets)

    @property
    def net_ids(self) -> List[int]:
        return [n.id for n in self.nets]

    @property
    def total_pins(self) -> int:
        return sum(n.pin_count for n in self.nets)

    def net(self, net_id: int) -> Net:
        for n in self.nets:
            if n.id == net_id:
                return n
        raise KeyError(net_id)

    def pin_array(self) -> Tuple[np.ndarray, np.ndarray]:
        """All pins as ``(coords (P, 2), net ids (P,))``."""
        coords = np.concatenate([n.coords() for n in self.nets])
        ids = np.concatenate(
            [np.full(n.pin_count, n.id, dtype=int) for n in self.nets]
        )
        return coords, ids

    def subproblem(self, net_ids: Sequence[int]) -> "Problem":
        """Problem restricted to ``net_ids``, renumbered 1..z in that order."""
        chosen = [self.net(i) for i in net_ids]
        return Problem(
            nets=tuple(
                Net(id=j, label=n.label, pins=n.pins, raw_pins=n.raw_pins)
                for j, n in enumerate(chosen, start=1)
            ),
            board_width=self.board_width,
            board_height=self.board_height,
            grid_resolution=self.grid_resolution,
        )


def _check_cross_net_duplicates(nets: Sequence[Net]) -> None:
    seen: Dict[Tuple[float, float], int] = {}
    for net in nets:
        for p in set((p.x, p.y) for p in net.pins):
            other = seen.setdefault(p, net.id)
            if other != net.id:
                raise DuplicateCrossNetPin(other, net.id, p)


@dataclass(frozen=True, eq=False)
class Island:
    """An 8-connected set of grid cells belonging to one net.

    ``cells`` is an (n, 2) integer array of ``(row, col)`` indices; the
    centroid is in normalized board coordinates ``(x, y)``.
    """

    net_id: int
    cells: np.ndarray
    centroid: Tuple[float, float]

    @property
    def size(self) -> int:
        return len(self.cells)

    @property
    def cell_set(self) -> frozenset:
        return frozenset(map(tuple, self.cells.tolist()))

    @classmethod
    def from_cells(cls, net_id: int, cells, resolution: int) -> "Island":
        cells = np.asarray(cells, dtype=int).reshape(-1, 2)
        if len(cells) == 0:
            raise ValueError("an island needs at least one cell")
        cy, cx = (cells.mean(axis=0) + 0.5) / resolution
        return cls(net_id, cells, (float(cx), float(cy)))


@dataclass(frozen=True, eq=False)
class Partition:
    """A label grid (``labels[row, col]``, row along y) plus its islands."""

    labels: np.ndarray
    islands: Mapping[int, List[Island]]

    @property
    def resolution(self) -> int:
        return self.labels.shape[0]

    def island_counts(self) -> Dict[int, int]:
        return {nid: len(isl) for nid, isl in self.islands.items()}


def cell_index(coord, resolution: int):
    """Grid index of the cell containing ``coord``; 1.0 maps to the last cell."""
    idx = np.floor(np.asarray(coord, dtype=float) * resolution).astype(int)
    return np.clip(idx, 0, resolution - 1)


def cell_centers(resolution: int) -> np.ndarray:
    """Centers of all cells in row-major order, as (R*R, 2) ``(x, y)``."""
    c = (np.arange(resolution) + 0.5) / resolution
    xx, yy = np.meshgrid(c, c)
    return np.column_stack([xx.ravel(), yy.ravel()])


def normalize_problem(
    raw_pins_per_net: Sequence[Sequence[Tuple[float, float]]],
    board_extents: Tuple[float, float],
    labels: Optional[Sequence[str]] = None,
    grid_resolution: int = DEFAULT_GRID_RESOLUTION,
) -> Problem:
    """Map physical pin coordinates affinely into the unit square.

    Net ids are assigned 1..m in input order.
    """
    width, height = (float(v) for v in board_extents)
    if not (width > 0 and height > 0):
        raise ProblemError(f"board extents must be positive, got {board_extents}")
    if labels is None:
        labels = [f"N{i}" for i in range(1, len(raw_pins_per_net) + 1)]
    if len(labels) != len(raw_pins_per_net):
        raise ProblemError("one label per net required")

    nets = []
    for net_id, (label, raw) in enumerate(zip(labels, raw_pins_per_net), start=1):
        raw = tuple((float(x), float(y)) for x, y in raw)
        pins = []
        for x, y in raw:
            if not (0.0 <= x <= width and 0.0 <= y <= height):
                raise PinOutsideBoard(net_id, (x, y))
            pins.append(Pin(x / width, y / height))
        nets.append(Net(id=net_id, label=str(label), pins=tuple(pins), raw_pins=raw))
    return Problem(
        nets=tuple(nets),
        board_width=width,
        board_height=height,
        grid_resolution=int(grid_resolution),
    )


@dataclass
class FeasibilityReport:
    misclassified: Dict[int, List[Pin]]

    @property
    def feasible(self) -> bool:
        return not self.misclassified

    @property
    def count(self) -> int:
        return sum(len(v) for v in self.misclassified.values())


def check_feasible(problem: Problem, partition) -> FeasibilityReport:
    """List, per net, the pins whose cell carries another net's label.

    ``partition`` may be a :class:`Partition` or a bare label grid.
    """
    labels = getattr(partition, "labels", partition)
    res = problem.grid_resolution
    if labels.shape != (res, res):
        raise ValueError(
            f"partition grid {labels.shape} does not match resolution {res}"
        )
    report: Dict[int, List[Pin]] = {}
    for net in problem.nets:
        coords = net.coords()
        cols = cell_index(coords[:, 0], res)
        rows = cell_index(coords[:, 1], res)
        bad = np.flatnonzero(labels[rows, cols] != net.id)
        if len(bad):
            report[net.id] = [net.pins[i] for i in bad]
    return FeasibilityReport(report)


def extra_islands(partition: Partition, m: int) -> int:
    """``sum(s_i) - m``; zero when every net is a single island."""
    counts = partition.island_counts()
    vanished = [nid for nid, s in counts.items() if s == 0]
    if vanished:
        raise NetVanished(vanished)
    if len(counts) != m:
        raise ValueError(f"partition covers {len(counts)} nets, expected {m}")
    return sum(counts.values()) - m


def safe_extra_islands(partition: Partition, m: int) -> Optional[int]:
    """EI, or None when some net owns no cell at all."""
    try:
        return extra_islands(partition, m)
    except NetVanished:
        return None
