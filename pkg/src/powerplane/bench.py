"""GOMLP versus the A* baseline on a problem suite."""

from __future__ import annotations

import math
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import stats

from .astar import solve_astar
from .genopt import GaConfig, derive_seed
from .gomlp import DEFAULT_BUDGET, SolverOptions, solve
from .model import Problem
from .neural import TrainConfig


@dataclass
class BenchmarkRow:
    problem_id: str
    net_count: int
    ei_gomlp: Optional[int] = None
    ei_astar: Optional[int] = None
    feasible_gomlp: bool = False
    feasible_astar: bool = False
    time_gomlp: float = 0.0
    time_astar: float = 0.0
    seed: int = 0
    error: Optional[str] = None

    @property
    def crashed(self) -> bool:
        return self.error is not None

    def outcome(self) -> str:
        """'win', 'tie' or 'loss' for GOMLP; a vanished net counts as worst."""
        g = math.inf if self.ei_gomlp is None else self.ei_gomlp
        a = math.inf if self.ei_astar is None else self.ei_astar
        if g < a:
            return "win"
        return "tie" if g == a else "loss"


@dataclass
class BenchmarkReport:
    rows: List[BenchmarkRow]
    wins: int = 0
    ties: int = 0
    losses: int = 0
    crashed: int = 0
    win_or_tie_rate: float = 0.0
    sign_test_p: float = 1.0
    t_test_p: Optional[float] = None
    config: dict = field(default_factory=dict)

    @classmethod
    def from_rows(cls, rows: Sequence[BenchmarkRow], config: Optional[dict] = None) -> "BenchmarkReport":
        rows = sorted(rows, key=lambda r: (r.crashed, _ei_key(r.ei_gomlp), r.problem_id))
        ok = [r for r in rows if not r.crashed]
        outcomes = [r.outcome() for r in ok]
        wins, ties, losses = (outcomes.count(o) for o in ("win", "tie", "loss"))
        rate = (wins + ties) / len(ok) if ok else 0.0
        # two-sided sign test on the untied pairs
        sign_p = float(stats.binomtest(wins, wins + losses, 0.5).pvalue) if wins + losses else 1.0
        t_p = None
        finite = [r for r in ok if r.ei_gomlp is not None and r.ei_astar is not None]
        diffs = np.array([r.ei_astar - r.ei_gomlp for r in finite], dtype=float)
        if len(diffs) >= 2 and np.ptp(diffs) > 0:
            t_p = float(stats.ttest_rel(
                [r.ei_astar for r in finite], [r.ei_gomlp for r in finite]
            ).pvalue)
        return cls(
            rows=list(rows), wins=wins, ties=ties, losses=losses,
            crashed=len(rows) - len(ok), win_or_tie_rate=rate,
            sign_test_p=sign_p, t_test_p=t_p, config=dict(config or {}),
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        for row, r in zip(d["rows"], self.rows):
            row["outcome"] = None if r.crashed else r.outcome()
        return d

    def summary(self) -> str:
        n = self.wins + self.ties + self.losses
        lines = [
            f"problems: {n} (+{self.crashed} crashed)",
            f"GOMLP wins {self.wins}, ties {self.ties}, losses {self.losses}",
            f"win-or-tie rate: {self.win_or_tie_rate:.1%}",
            f"sign test p = {self.sign_test_p:.4g}",
        ]
        if self.t_test_p is not None:
            lines.append(f"paired t-test p = {self.t_test_p:.4g}")
        return "\n".join(lines)


def _ei_key(ei):
    return math.inf if ei is None else ei


def _run_one(args) -> BenchmarkRow:
    pid, problem, ga, train_config, budget, options = args
    row = BenchmarkRow(problem_id=pid, net_count=problem.m, seed=ga.rng_seed)
    try:
        g = solve(problem, ga, train_config, budget, options)
        row.ei_gomlp, row.feasible_gomlp, row.time_gomlp = g.ei, g.feasible, g.wall_time
        a = solve_astar(problem)
        row.ei_astar, row.feasible_astar, row.time_astar = a.ei, a.feasible, a.wall_time
    except Exception as exc:  # a crash flags the row, the suite keeps going
        row.error = f"{type(exc).__name__}: {exc}\n{traceback.format_exc(limit=3)}"
    return row


def run_benchmark(
    problems: Sequence[Problem],
    ga: GaConfig = GaConfig(),
    train_config: TrainConfig = TrainConfig(),
    budget: float = DEFAULT_BUDGET,
    options: SolverOptions = SolverOptions(),
    problem_ids: Optional[Sequence[str]] = None,
    workers: int = 1,
    progress=None,
) -> BenchmarkReport:
    """Both solvers on every problem; GOMLP seed derived from (seed, index)."""
    if not problems:
        raise ValueError("need at least one problem")
    ids = list(problem_ids) if problem_ids is not None else [f"p{i:03d}" for i in range(len(problems))]
    jobs = []
    for i, (pid, p) in enumerate(zip(ids, problems)):
        seeded = GaConfig(**{**ga.__dict__, "rng_seed": derive_seed(ga.rng_seed, i)})
        jobs.append((pid, p, seeded, train_config, budget, options))
    rows = []
    t0 = time.perf_counter()
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            for row in pool.map(_run_one, jobs):
                rows.append(row)
                if progress:
                    progress(row)
    else:
        for job in jobs:
            row = _run_one(job)
            rows.append(row)
            if progress:
                progress(row)
    config = {
        "ga": asdict(ga), "train": asdict(train_config), "budget": budget,
        "options": {k: v for k, v in asdict(options).items() if k != "weights"},
        "wall_time": time.perf_counter() - t0,
    }
    return BenchmarkReport.from_rows(rows, config)
