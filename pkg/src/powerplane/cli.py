"""Command line entry points.

Exit codes: 0 success, 1 usage error, 2 input error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import io
from .astar import solve_astar
from .bench import run_benchmark
from .fitness import make_partition
from .genopt import GaConfig
from .gomlp import DEFAULT_BUDGET, SolverOptions, solve
from .model import Problem, check_feasible, safe_extra_islands
from .multilayer import solve_multilayer
from .neural import TrainConfig
from .render import render_partition, render_snapshots
from .synthetic import GenerationStuck, SyntheticSpec, generate_problems

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _load(path, grid: Optional[int]) -> Problem:
    try:
        problem = io.load_problem(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if grid is not None:
        try:
            problem = dataclasses.replace(problem, grid_resolution=grid)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    return problem


def _emit(doc, out: Optional[str]) -> None:
    text = io.dumps_result(doc)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _ga(args) -> GaConfig:
    return GaConfig(
        population_size=args.population,
        generations=args.generations,
        elite_size=args.elite,
        rng_seed=args.seed,
    )


def _gomlp_doc(problem, result, ga, train, options, budget):
    return io.result_document(
        "gomlp",
        problem,
        config={
            "ga": dataclasses.asdict(ga),
            "train": dataclasses.asdict(train),
            "options": dataclasses.asdict(options),
            "budget": budget,
        },
        metrics={
            "ei": result.ei,
            "feasible": result.feasible,
            "success": result.success,
            "k": result.k,
            "generations_run": result.generations_run,
            "best_generation": result.best_generation,
            "evaluations": result.evaluations,
            "timed_out": result.timed_out,
            "fitness": result.best_breakdown.as_dict() if result.best_breakdown else None,
            "fitness_history": [list(h) for h in result.fitness_history],
        },
        timings={"wall_time": result.wall_time},
        partition=io.partition_doc(result.best_partition, result.ei, result.feasible),
        handles=result.handles(),
        snapshots=[
            {"generation": s.generation, "labels": io.encode_labels(s.labels),
             "chromosome": s.chromosome}
            for s in result.generation_snapshots
        ],
    )


def cmd_solve_gomlp(args) -> int:
    problem = _load(args.problem, args.grid)
    ga = _ga(args)
    train = TrainConfig()
    options = SolverOptions(
        feature_expansion=not args.no_feature_expansion,
        distance_terms=not args.no_distance_terms,
        snapshots=args.snapshots,
        workers=args.workers,
    )
    result = solve(problem, ga, train, args.budget, options)
    _emit(_gomlp_doc(problem, result, ga, train, options, args.budget), args.out)
    return EXIT_OK


def cmd_solve_astar(args) -> int:
    problem = _load(args.problem, args.grid)
    result = solve_astar(problem)
    doc = io.result_document(
        "astar",
        problem,
        config={"graph_resolution": problem.grid_resolution, "seed": args.seed},
        metrics={
            "ei": result.ei,
            "feasible": result.feasible,
            "success": result.feasible and result.ei == 0,
            "net_order": result.report.order,
            "trees_per_net": {nid: len(ts) for nid, ts in result.trees.items()},
            "failed_connections": [
                {"net": nid, "from": list(a), "to": list(b)}
                for nid, a, b in result.report.failures
            ],
        },
        timings={"wall_time": result.wall_time},
        partition=io.partition_doc(result.partition, result.ei, result.feasible),
    )
    _emit(doc, args.out)
    return EXIT_OK


def _layer_doc(problem, lr):
    sub = problem.subproblem(lr.net_ids)
    r = lr.result
    return {
        "layer": lr.layer,
        "net_ids": lr.net_ids,
        "labels": [problem.net(i).label for i in lr.net_ids],
        "ei": r.ei,
        "feasible": r.feasible,
        "generations_run": r.generations_run,
        "partition": io.partition_doc(r.best_partition, r.ei, r.feasible),
        "problem": io.problem_to_dict(sub),
        "timings": {"wall_time": r.wall_time},
    }


def cmd_solve_multilayer(args) -> int:
    problem = _load(args.problem, args.grid)
    if args.layers is not None and not 1 <= args.layers <= problem.m:
        raise UsageError(f"--layers must lie in 1..{problem.m}")
    ga = _ga(args)
    train = TrainConfig()
    linkage = {"avg": "average"}.get(args.linkage, args.linkage)
    result = solve_multilayer(
        problem, metric=args.metric, k=args.layers, ga=ga, train_config=train,
        budget=args.budget, linkage=linkage, workers=args.workers,
    )
    attempts = [
        {
            "k": a.k,
            "success": a.success,
            "assignment": a.assignment,
            "layers": [_layer_doc(problem, lr) for lr in a.layers],
        }
        for a in result.attempts
    ]
    final = result.final
    doc = io.result_document(
        "multilayer",
        problem,
        config={
            "ga": dataclasses.asdict(ga), "train": dataclasses.asdict(train),
            "metric": args.metric, "linkage": linkage, "layers": args.layers,
            "auto_mcdl": args.layers is None, "budget": args.budget,
        },
        metrics={
            "mcdl": result.mcdl,
            "k": final.k,
            "success": final.success,
            "total_ei": final.total_ei,
            "assignment": final.assignment,
        },
        timings={"wall_time": result.wall_time},
        distances={"net_ids": result.distances.net_ids, "values": result.distances.values},
        dendrogram=result.dendrogram.to_dict(),
        attempts=attempts,
    )
    _emit(doc, args.out)
    return EXIT_OK


def cmd_gen_problems(args) -> int:
    spec = SyntheticSpec(
        net_count=args.nets,
        interleave_factor=args.interleave,
        rng_seed=args.seed,
        pins_per_net=tuple(args.pins),
    )
    problems = generate_problems(spec, args.count)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = []
    for i, p in enumerate(problems):
        name = f"{args.prefix}{i:03d}.json"
        io.save_problem(p, out_dir / name)
        names.append(name)
    doc = io.result_document(
        "problems", None,
        config=dataclasses.asdict(spec) | {"count": args.count},
        metrics={"files": names, "pins": [p.total_pins for p in problems]},
        timings={},
    )
    _emit(doc, args.manifest)
    return EXIT_OK


def cmd_bench(args) -> int:
    suite = Path(args.suite_dir)
    files = sorted(f for f in suite.glob("*.json") if f.name != "manifest.json")
    if not files:
        raise InputError(f"no problem files in {suite}")
    problems = [_load(f, None) for f in files]
    ga = GaConfig(rng_seed=args.seed)

    def progress(row):
        print(f"{row.problem_id}: gomlp {row.ei_gomlp} astar {row.ei_astar}"
              f"{' CRASHED' if row.crashed else ''}", file=sys.stderr, flush=True)

    report = run_benchmark(
        problems, ga, TrainConfig(), args.budget,
        problem_ids=[f.stem for f in files], workers=args.workers, progress=progress,
    )
    rows = []
    for r in report.to_dict()["rows"]:
        r["timings"] = {"gomlp": r.pop("time_gomlp"), "astar": r.pop("time_astar")}
        rows.append(r)
    config = dict(report.config)
    wall = config.pop("wall_time")
    doc = io.result_document(
        "benchmark", None,
        config={**config, "suite": [f.name for f in files]},
        metrics={
            "wins": report.wins, "ties": report.ties, "losses": report.losses,
            "crashed": report.crashed, "win_or_tie_rate": report.win_or_tie_rate,
            "sign_test_p": report.sign_test_p, "t_test_p": report.t_test_p,
        },
        timings={"wall_time": wall},
        rows=rows,
    )
    _emit(doc, args.report)
    print(report.summary(), file=sys.stderr)
    return EXIT_OK


def cmd_render(args) -> int:
    try:
        doc = io.load_result(args.result)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read result {args.result}: {exc}") from exc
    except Exception as exc:  # jsonschema.ValidationError
        raise InputError(f"invalid result document: {exc}") from exc
    if doc.get("problem") is None:
        raise InputError("result document has no problem to draw")
    problem = io.problem_from_dict(doc["problem"])
    out = Path(args.out)
    written: List[Path] = []
    if doc["kind"] == "multilayer":
        out.mkdir(parents=True, exist_ok=True)
        k = doc["metrics"]["k"]
        attempt = next(a for a in doc["attempts"] if a["k"] == k)
        for layer in attempt["layers"]:
            sub = io.problem_from_dict(layer["problem"])
            part = make_partition(io.decode_labels(layer["partition"]["labels"]), sub.m)
            written.append(render_partition(
                sub, part, out / f"layer_{layer['layer']}.svg", title=f"layer {layer['layer']}"
            ))
    elif "partition" in doc:
        part = make_partition(io.decode_labels(doc["partition"]["labels"]), problem.m)
        handles = np.asarray(doc.get("handles") or [])
        written.append(render_partition(
            problem, part, out, handles=handles if handles.size else None,
            title=f"{doc['kind']}  EI={doc['metrics'].get('ei')}",
        ))
        if args.snapshots and doc.get("snapshots"):
            from .gomlp import Snapshot

            snaps = [
                Snapshot(s["generation"], io.decode_labels(s["labels"]), np.asarray(s["chromosome"]))
                for s in doc["snapshots"]
            ]
            written += render_snapshots(
                problem, snaps, out.parent / (out.stem + "_snapshots"), doc["metrics"]["k"]
            )
    else:
        raise InputError(f"nothing to render in a {doc['kind']!r} document")
    for p in written:
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="powerplane", description="Power plane generation on PCB layers.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common_ga(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--generations", type=int, default=GaConfig.generations)
        sp.add_argument("--population", type=int, default=GaConfig.population_size)
        sp.add_argument("--elite", type=int, default=GaConfig.elite_size)
        sp.add_argument("--budget", type=float, default=DEFAULT_BUDGET,
                        help="seconds per GOMLP run")
        sp.add_argument("--grid", type=int, default=None, help="override grid resolution")
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--out", default=None, help="result document path (default stdout)")

    sp = sub.add_parser("solve-gomlp", help="single-layer plane generation")
    sp.add_argument("problem")
    common_ga(sp)
    sp.add_argument("--no-feature-expansion", action="store_true")
    sp.add_argument("--no-distance-terms", action="store_true")
    sp.add_argument("--snapshots", action="store_true", help="store the best partition per generation")
    sp.set_defaults(func=cmd_solve_gomlp)

    sp = sub.add_parser("solve-astar", help="MST + A* + nearest-neighbour baseline")
    sp.add_argument("problem")
    sp.add_argument("--grid", type=int, default=None)
    sp.add_argument("--seed", type=int, default=0, help="recorded only; the baseline is deterministic")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_solve_astar)

    sp = sub.add_parser("solve-multilayer", help="cluster nets onto layers, then GOMLP per layer")
    sp.add_argument("problem")
    common_ga(sp)
    sp.add_argument("--metric", choices=("hd", "emd"), default="hd")
    group = sp.add_mutually_exclusive_group()
    group.add_argument("--layers", type=int, default=None)
    group.add_argument("--auto-mcdl", action="store_true", help="search the minimum layer count (default)")
    sp.add_argument("--linkage", choices=("avg", "average", "single", "complete"), default="avg")
    sp.set_defaults(func=cmd_solve_multilayer)

    sp = sub.add_parser("gen-problems", help="write a synthetic problem suite")
    sp.add_argument("--nets", type=int, default=6)
    sp.add_argument("--count", type=int, default=10)
    sp.add_argument("--interleave", type=float, default=0.3)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--pins", type=int, nargs=2, default=(2, 5), metavar=("MIN", "MAX"))
    sp.add_argument("--prefix", default="p")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--manifest", default=None, help="where to write the manifest (default stdout)")
    sp.set_defaults(func=cmd_gen_problems)

    sp = sub.add_parser("bench", help="GOMLP against A* over a suite directory")
    sp.add_argument("--suite-dir", required=True)
    sp.add_argument("--budget", type=float, default=DEFAULT_BUDGET)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--report", default=None, help="report path (default stdout)")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("render", help="draw a result document as SVG")
    sp.add_argument("--result", required=True)
    sp.add_argument("--out", required=True, help="SVG path, or directory for multilayer results")
    sp.add_argument("--snapshots", action="store_true", help="also draw stored generations")
    sp.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, io.ProblemFormatError, GenerationStuck) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        # config validation (population sizes, rates, budgets)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
