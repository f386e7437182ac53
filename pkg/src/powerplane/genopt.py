"""Genetic optimizer over handle placements.

A chromosome is a flat vector of ``2*k*m`` genes in ``[0, 1]``: net ``i``
owns the contiguous block of ``k`` ``(x, y)`` handle pairs starting at
``2*k*(i-1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, List, Optional

import numpy as np

SELECTION_EPSILON = 1e-6


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 30
    generations: int = 20
    elite_size: int = 10
    mutation_rate: float = 0.05
    crossover_swap_probability: float = 0.5
    rng_seed: int = 0
    # breed from the elite pool only; False breeds from the whole population
    parents_from_elites: bool = True

    def __post_init__(self):
        if self.population_size < 1:
            raise ValueError("population_size must be positive")
        if not 0 <= self.elite_size < self.population_size:
            raise ValueError("elite_size must be smaller than population_size")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        for name in ("mutation_rate", "crossover_swap_probability"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")


def handle_count(problem) -> int:
    """Handles per net: ``ceil(2 * total pins / m)``, at least 1."""
    return max(1, math.ceil(2 * problem.total_pins / problem.m))


def derive_seed(*parts: int) -> int:
    """A 32-bit seed that depends only on ``parts``."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def initialize_population(config: GaConfig, k: int, m: int) -> np.ndarray:
    rng = np.random.default_rng([config.rng_seed, 0xC0FFEE])
    return rng.uniform(0.0, 1.0, size=(config.population_size, 2 * k * m))


def handles_of(chromosome: np.ndarray, k: int, m: int) -> np.ndarray:
    """Handle coordinates as (m, k, 2)."""
    return np.asarray(chromosome).reshape(m, k, 2)


def selection_weights(fitnesses) -> np.ndarray:
    f = np.asarray(fitnesses, dtype=float)
    w = f - f.min() + SELECTION_EPSILON
    return w / w.sum()


def select_parents(fitnesses, n_pairs: int, rng: np.random.Generator) -> np.ndarray:
    """Fitness-proportional draws, returned as (n_pairs, 2) member indices."""
    p = selection_weights(fitnesses)
    return rng.choice(len(p), size=(n_pairs, 2), p=p)


def crossover(a: np.ndarray, b: np.ndarray, swap_probability: float, rng):
    """Swap whole ``(x, y)`` handle pairs between two parents."""
    pa, pb = a.reshape(-1, 2).copy(), b.reshape(-1, 2).copy()
    swap = rng.random(len(pa)) < swap_probability
    pa[swap], pb[swap] = b.reshape(-1, 2)[swap], a.reshape(-1, 2)[swap]
    return pa.ravel(), pb.ravel()


def mutate(genes: np.ndarray, rate: float, rng) -> np.ndarray:
    """Replace each gene, with probability ``rate``, by a fresh uniform draw."""
    out = genes.copy()
    hit = rng.random(len(out)) < rate
    out[hit] = rng.random(int(hit.sum()))
    return out


def elite_indices(fitnesses, elite_size: int) -> np.ndarray:
    """Best members first; equal fitness keeps population order."""
    order = np.argsort(-np.asarray(fitnesses, dtype=float), kind="stable")
    return order[:elite_size]


def next_generation(population, fitnesses, config: GaConfig, generation: int = 0):
    """Elites copied verbatim, followed by crossed-over and mutated children.

    Returns ``(new_population, elite_source_indices)``; row ``j`` of the new
    population for ``j < elite_size`` is a copy of
    ``population[elite_source_indices[j]]``.
    """
    population = np.asarray(population, dtype=float)
    rng = np.random.default_rng([config.rng_seed, generation + 1, 0xB1EED])
    elites = elite_indices(fitnesses, config.elite_size)
    children: List[np.ndarray] = [population[i].copy() for i in elites]
    n_children = config.population_size - len(children)
    pool = elites if (config.parents_from_elites and len(elites)) else np.arange(len(population))
    pairs = pool[select_parents(np.asarray(fitnesses, dtype=float)[pool], (n_children + 1) // 2, rng)]
    for i, j in pairs:
        c1, c2 = crossover(
            population[i], population[j], config.crossover_swap_probability, rng
        )
        for c in (c1, c2):
            if len(children) < config.population_size:
                children.append(mutate(c, config.mutation_rate, rng))
    return np.array(children), elites


@dataclass
class GenerationStats:
    generation: int
    best: float
    mean: float


@dataclass
class Evolution:
    population: np.ndarray
    records: list
    fitnesses: np.ndarray
    history: List[GenerationStats]
    best_record: Any
    best_chromosome: np.ndarray
    best_generation: int
    aborted: bool = False


def evolve(
    evaluate: Callable[[np.ndarray, int, int], Any],
    config: GaConfig,
    k: int,
    m: int,
    fitness_of: Callable[[Any], float] = float,
    after_generation: Optional[Callable[[int, np.ndarray, list], bool]] = None,
    abort: Optional[Callable[[], bool]] = None,
    mapper=map,
) -> Evolution:
    """Generational loop around an evaluation callback.

    ``evaluate(chromosome, generation, member)`` returns a record whose
    fitness is ``fitness_of(record)``.  Elites keep their record across
    generations instead of being re-evaluated, so the best fitness per
    generation never decreases.  ``after_generation(gen, population,
    records)`` returning True ends the run; ``abort()`` is polled after
    every evaluation and, when true, stops mid-generation (at least one
    member is always evaluated).
    """
    pop = initialize_population(config, k, m)
    best = {"fit": -np.inf, "record": None, "chrom": None, "gen": 0}
    aborted = False

    def run_batch(chroms, gen, first):
        nonlocal aborted
        out = []
        results = mapper(evaluate, chroms, [gen] * len(chroms), range(first, first + len(chroms)))
        for chrom, rec in zip(chroms, results):
            out.append(rec)
            f = fitness_of(rec)
            if f > best["fit"]:
                best.update(fit=f, record=rec, chrom=chrom.copy(), gen=gen)
            if abort is not None and abort():
                aborted = True
                break
        return out

    records = run_batch(pop, 0, 0)
    if aborted:
        pop = pop[:len(records)]
    fit = np.array([fitness_of(r) for r in records])
    history = [GenerationStats(0, float(fit.max()), float(fit.mean()))]
    stopped = after_generation is not None and after_generation(0, pop, records)

    gen = 0
    while not (aborted or stopped) and gen < config.generations:
        gen += 1
        pop_new, elites = next_generation(pop, fit, config, gen - 1)
        ne = len(elites)
        fresh = run_batch(pop_new[ne:], gen, ne)
        if aborted:
            break
        records = [records[i] for i in elites] + fresh
        pop = pop_new
        fit = np.array([fitness_of(r) for r in records])
        history.append(GenerationStats(gen, float(fit.max()), float(fit.mean())))
        if after_generation is not None:
            stopped = after_generation(gen, pop, records)

    return Evolution(
        population=pop,
        records=records,
        fitnesses=fit,
        history=history,
        best_record=best["record"],
        best_chromosome=best["chrom"],
        best_generation=best["gen"],
        aborted=aborted,
    )
