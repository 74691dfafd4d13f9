"""Command-line entry point: ``taskweave <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from . import world
from .baselines import PLANNERS
from .harness import (BENCH_C, BENCH_SAMPLES, BenchmarkConfig, default_seed, run_benchmark, run_episode,
                      training_environments, write_trace)
from .likelihood import FrequencyModel, train
from .planner import PlannerConfig
from .report import text_table
from .scltl import ParseError, compile_task, to_dot


def _gen_env(args) -> int:
    from .generate import generate
    env = generate(args.seed, args.size)
    Path(args.out).write_text(world.dumps(env))
    print(f"wrote {args.out}  size={env.size_class} containers={len(env.containers)} "
          f"checksum={env.checksum()}")
    return 0


def _train_model(args) -> int:
    paths = sorted(Path(args.envs_dir).glob("*.json"))
    if not paths:
        print(f"no environment files in {args.envs_dir}", file=sys.stderr)
        return 2
    envs = [world.loads(p.read_text()) for p in paths]
    model = train(envs, alpha=args.alpha)
    model.save(args.out)
    print(f"trained on {len(envs)} homes -> {args.out}")
    return 0


def _run(args) -> int:
    env = world.loads(Path(args.env).read_text())
    model = None
    if args.planner != "nonlearned-myopic":
        if args.model:
            model = FrequencyModel.load(args.model)
        else:
            model = train(training_environments(args.train_envs))
    cfg = PlannerConfig(samples=args.samples, c=args.c, depth=args.depth, seed=args.seed)
    res = run_episode(env, args.task, args.planner, args.robots, model, args.seed, config=cfg)
    write_trace(res, args.trace)
    print("outcome,time,distance,steps,planner,seed")
    print(f"{res.outcome},{res.time:g},{res.distance},{res.steps},{res.planner},{res.seed}")
    return 0 if res.completed else 1


def _bench(args) -> int:
    doc = json.loads(Path(args.config).read_text()) if args.config else {}
    cfg = BenchmarkConfig.from_document(doc)
    progress = (lambda msg: print(msg, file=sys.stderr)) if args.verbose else None
    result = run_benchmark(cfg, args.out_dir, progress=progress)
    sys.stdout.write(text_table(result.table))
    print(f"results in {args.out_dir}")
    return 0


def _dfa(args) -> int:
    try:
        dfa = compile_task(args.formula)
    except ParseError as e:
        print(f"parse error at {e.position}: {e}", file=sys.stderr)
        return 2
    if args.dot:
        sys.stdout.write(to_dot(dfa))
        return 0
    print("state,accepting,distance,relevant")
    for z in range(dfa.n_states):
        d = dfa.distance(z)
        print(f"{z},{int(dfa.is_accepting(z))},{'' if d is None else d},{' '.join(dfa.relevant(z))}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="taskweave", description="Multi-robot task planning under unknown container contents.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-env", help="generate a home and save it as JSON")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--size", choices=["small", "medium", "large"], default="medium")
    g.add_argument("--out", required=True)
    g.set_defaults(fn=_gen_env)

    t = sub.add_parser("train-model", help="fit the frequency likelihood model on saved homes")
    t.add_argument("--envs-dir", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--alpha", type=float, default=1.0)
    t.set_defaults(fn=_train_model)

    r = sub.add_parser("run", help="run one episode and write its event trace")
    r.add_argument("--env", required=True)
    r.add_argument("--task", required=True)
    r.add_argument("--planner", choices=PLANNERS, default="mr-pouct")
    r.add_argument("--robots", type=int, default=2)
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--model", help="saved likelihood model; trained on generated homes if omitted")
    r.add_argument("--train-envs", type=int, default=500)
    r.add_argument("--samples", type=int, default=BENCH_SAMPLES)
    r.add_argument("--c", type=float, default=BENCH_C)
    r.add_argument("--depth", type=int, default=30)
    r.add_argument("--trace", default="trace.jsonl")
    r.set_defaults(fn=_run)

    b = sub.add_parser("bench", help="run a benchmark campaign")
    b.add_argument("--config", help="JSON benchmark config; defaults if omitted")
    b.add_argument("--out-dir", required=True)
    b.set_defaults(fn=_bench)

    d = sub.add_parser("dfa", help="compile a task formula")
    d.add_argument("--formula", required=True)
    d.add_argument("--dot", action="store_true", help="emit Graphviz instead of the state table")
    d.set_defaults(fn=_dfa)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if getattr(args, "seed", "absent") is None:
        args.seed = default_seed()
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
