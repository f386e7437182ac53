"""Synthetic benchmark problems with controllable difficulty."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .model import DEFAULT_GRID_RESOLUTION, Problem, normalize_problem


class GenerationStuck(RuntimeError):
    pass


@dataclass(frozen=True)
class SyntheticSpec:
    """Knobs for :func:`generate_problems`.

    ``interleave_factor`` is the probability that a net is split into two
    clusters placed far apart, usually with other nets between them.
    """

    net_count: int = 5
    pins_per_net: Tuple[int, int] = (2, 5)
    cluster_spread: float = 0.04
    interleave_factor: float = 0.0
    rng_seed: int = 0
    board: Tuple[float, float] = (100.0, 100.0)
    grid_resolution: int = DEFAULT_GRID_RESOLUTION
    min_pin_gap: float = 0.04
    max_retries: int = 200

    def __post_init__(self):
        if not 2 <= self.net_count <= 20:
            raise ValueError("net_count must lie in 2..20")
        lo, hi = self.pins_per_net
        if not 1 <= lo <= hi:
            raise ValueError("pins_per_net must be a range 1 <= lo <= hi")
        if not 0.0 <= self.interleave_factor <= 1.0:
            raise ValueError("interleave_factor must lie in [0, 1]")


def _centers(n: int, min_sep: float, rng, fixed=()) -> np.ndarray:
    pts = [np.asarray(p) for p in fixed]
    out = []
    for _ in range(n):
        for _ in range(500):
            c = rng.uniform(0.12, 0.88, size=2)
            if all(np.hypot(*(c - p)) >= min_sep for p in pts):
                break
        else:
            return None
        pts.append(c)
        out.append(c)
    return np.array(out)


def _cluster(center, count, spread, rng) -> np.ndarray:
    pts = center + rng.normal(0.0, spread, size=(count, 2))
    return np.clip(pts, 0.03, 0.97)


def _far_from_others(pts_by_net, gap) -> bool:
    allpts = np.concatenate(pts_by_net)
    owner = np.concatenate([np.full(len(p), i) for i, p in enumerate(pts_by_net)])
    d = np.hypot(*(allpts[:, None, :] - allpts[None, :, :]).transpose(2, 0, 1))
    cross = owner[:, None] != owner[None, :]
    return bool((d[cross] >= gap).all()) if cross.any() else True


def generate_problem(spec: SyntheticSpec, rng: np.random.Generator, index: int = 0) -> Problem:
    n = spec.net_count
    lo, hi = spec.pins_per_net
    min_sep = min(0.3, 0.75 / math.sqrt(n))
    for _ in range(spec.max_retries):
        counts = rng.integers(lo, hi + 1, size=n)
        split = rng.random(n) < spec.interleave_factor
        split &= counts >= 2
        centers = _centers(n, min_sep, rng)
        if centers is None:
            continue
        pins = []
        ok = True
        extra = []
        for i in range(n):
            if not split[i]:
                pins.append(_cluster(centers[i], counts[i], spec.cluster_spread, rng))
                continue
            # second cluster far from the first so other nets sit between
            for _ in range(200):
                c2 = rng.uniform(0.08, 0.92, size=2)
                if np.hypot(*(c2 - centers[i])) >= 0.45 and all(
                    np.hypot(*(c2 - c)) >= 0.5 * min_sep
                    for j, c in enumerate(list(centers) + extra) if j != i
                ):
                    break
            else:
                ok = False
                break
            extra.append(c2)
            h = counts[i] // 2
            pins.append(np.concatenate([
                _cluster(centers[i], counts[i] - h, spec.cluster_spread, rng),
                _cluster(c2, h, spec.cluster_spread, rng),
            ]))
        if ok and _far_from_others(pins, spec.min_pin_gap):
            w, h = spec.board
            raw = [[(round(float(x) * w, 3), round(float(y) * h, 3)) for x, y in p] for p in pins]
            labels = [chr(ord("A") + i) if n <= 26 else f"N{i + 1}" for i in range(n)]
            return normalize_problem(raw, spec.board, labels, spec.grid_resolution)
    raise GenerationStuck(
        f"problem {index}: no valid layout after {spec.max_retries} attempts"
    )


def generate_problems(spec: SyntheticSpec, count: int) -> List[Problem]:
    """``count`` problems, deterministic in ``spec.rng_seed``."""
    rng = np.random.default_rng([spec.rng_seed, 0x5EED])
    return [generate_problem(spec, rng, i) for i in range(count)]
