"""Single-layer plane generation: genetic optimizer outside, MLP inside."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import List, Optional, Tuple

import numpy as np

from .fitness import FitnessBreakdown, FitnessWeights, evaluate_partition, make_partition
from .genopt import GaConfig, derive_seed, evolve, handle_count, handles_of
from .model import Partition, Problem, cell_index, check_feasible, safe_extra_islands
from .neural import TrainConfig, predict_grid, train

DEFAULT_BUDGET = 60.0


@dataclass(frozen=True)
class SolverOptions:
    """Ablation switches and evaluation knobs shared by the GOMLP variants."""

    feature_expansion: bool = True
    # inner training stops once every pin is classified; handles only steer
    stop_on_pins_only: bool = True
    distance_terms: bool = True
    weights: FitnessWeights = FitnessWeights()
    stop_on_success: bool = True
    snapshots: bool = False
    workers: int = 1


@dataclass(frozen=True, eq=False)
class EvalRecord:
    breakdown: FitnessBreakdown
    labels: np.ndarray
    ei: Optional[int]
    feasible: bool
    epochs: int
    train_accuracy: float

    @property
    def fitness(self) -> float:
        return self.breakdown.total

    @property
    def success(self) -> bool:
        return self.feasible and self.ei == 0


@dataclass
class Snapshot:
    generation: int
    labels: np.ndarray
    chromosome: np.ndarray


@dataclass
class GomlpResult:
    best_partition: Partition
    best_chromosome: np.ndarray
    fitness_history: List[Tuple[float, float]]
    ei: Optional[int]
    feasible: bool
    wall_time: float
    best_breakdown: Optional[FitnessBreakdown] = None
    k: int = 0
    generations_run: int = 0
    best_generation: int = 0
    evaluations: int = 0
    timed_out: bool = False
    generation_snapshots: List[Snapshot] = field(default_factory=list)

    @property
    def success(self) -> bool:
        return self.feasible and self.ei == 0

    def handles(self) -> np.ndarray:
        m = len(self.best_partition.islands)
        if self.k == 0 or len(self.best_chromosome) == 0:
            return np.zeros((m, 0, 2))
        return handles_of(self.best_chromosome, self.k, m)


def snapped_pins(problem: Problem) -> Tuple[np.ndarray, np.ndarray]:
    """Pins moved to the centers of their cells, with their net ids.

    Training on cell centers makes full training accuracy on the pins
    equivalent to a feasible label grid.
    """
    coords, ids = problem.pin_array()
    res = problem.grid_resolution
    snapped = (cell_index(coords, res) + 0.5) / res
    return snapped, ids


def evaluate_handles(
    chromosome: np.ndarray,
    generation: int,
    member: int,
    *,
    problem: Problem,
    train_config: TrainConfig,
    run_seed: int,
    k: int,
    options: SolverOptions,
) -> EvalRecord:
    """Train on pins plus this chromosome's handles and score the grid."""
    m = problem.m
    pins, pin_ids = snapped_pins(problem)
    handles = handles_of(chromosome, k, m).reshape(-1, 2)
    handle_ids = np.repeat(np.arange(1, m + 1), k)
    pts = np.concatenate([pins, handles])
    ids = np.concatenate([pin_ids, handle_ids])
    clf = train(
        pts, ids, train_config,
        rng_seed=derive_seed(run_seed, generation, member),
        n_classes=m,
        expand=options.feature_expansion,
        fit_mask=(np.arange(len(ids)) < len(pin_ids)) if options.stop_on_pins_only else None,
    )
    labels = predict_grid(clf, problem.grid_resolution).astype(np.int16)
    partition, breakdown = evaluate_partition(
        problem, labels, k=k, use_distance=options.distance_terms, weights=options.weights
    )
    return EvalRecord(
        breakdown=breakdown,
        labels=labels,
        ei=safe_extra_islands(partition, m),
        feasible=breakdown.misclassified_pins == 0,
        epochs=clf.epochs_run,
        train_accuracy=clf.train_accuracy,
    )


def solve(
    problem: Problem,
    ga: GaConfig = GaConfig(),
    train_config: TrainConfig = TrainConfig(),
    time_budget: float = DEFAULT_BUDGET,
    options: SolverOptions = SolverOptions(),
) -> GomlpResult:
    """Evolve handle placements until success, N generations or the budget."""
    if not time_budget > 0:
        raise ValueError("time_budget must be positive")
    t0 = time.perf_counter()
    k = handle_count(problem)
    m = problem.m
    evaluate = partial(
        evaluate_handles,
        problem=problem,
        train_config=train_config,
        run_seed=ga.rng_seed,
        k=k,
        options=options,
    )
    snapshots: List[Snapshot] = []
    n_evals = 0

    def after_generation(gen, population, records):
        nonlocal n_evals
        n_evals += len(records) if gen == 0 else len(records) - ga.elite_size
        best = max(range(len(records)), key=lambda i: records[i].fitness)
        if options.snapshots:
            snapshots.append(Snapshot(gen, records[best].labels, population[best].copy()))
        return options.stop_on_success and any(r.success for r in records)

    def abort():
        return time.perf_counter() - t0 > time_budget

    if options.workers > 1:
        with ProcessPoolExecutor(options.workers) as pool:
            evo = evolve(
                evaluate, ga, k, m,
                fitness_of=lambda r: r.fitness,
                after_generation=after_generation,
                abort=abort,
                mapper=partial(pool.map, chunksize=1),
            )
    else:
        evo = evolve(
            evaluate, ga, k, m,
            fitness_of=lambda r: r.fitness,
            after_generation=after_generation,
            abort=abort,
        )

    rec: EvalRecord = evo.best_record
    partition = make_partition(rec.labels, m)
    return GomlpResult(
        best_partition=partition,
        best_chromosome=evo.best_chromosome,
        fitness_history=[(h.best, h.mean) for h in evo.history],
        ei=safe_extra_islands(partition, m),
        feasible=check_feasible(problem, partition).feasible,
        wall_time=time.perf_counter() - t0,
        best_breakdown=rec.breakdown,
        k=k,
        generations_run=evo.history[-1].generation,
        best_generation=evo.best_generation,
        evaluations=max(n_evals, len(evo.records)),
        timed_out=evo.aborted,
        generation_snapshots=snapshots,
    )


def solve_mlp_only(
    problem: Problem,
    train_config: TrainConfig = TrainConfig(),
    rng_seed: int = 0,
    options: SolverOptions = SolverOptions(),
) -> GomlpResult:
    """One MLP fitted to the pins alone; no handles and no evolution."""
    t0 = time.perf_counter()
    m = problem.m
    pins, ids = snapped_pins(problem)
    clf = train(
        pins, ids, train_config,
        rng_seed=derive_seed(rng_seed, 0, 0),
        n_classes=m,
        expand=options.feature_expansion,
    )
    labels = predict_grid(clf, problem.grid_resolution).astype(np.int16)
    partition, breakdown = evaluate_partition(
        problem, labels, k=handle_count(problem),
        use_distance=options.distance_terms, weights=options.weights,
    )
    return GomlpResult(
        best_partition=partition,
        best_chromosome=np.zeros(0),
        fitness_history=[(breakdown.total, breakdown.total)],
        ei=safe_extra_islands(partition, m),
        feasible=breakdown.misclassified_pins == 0,
        wall_time=time.perf_counter() - t0,
        best_breakdown=breakdown,
        evaluations=1,
    )
