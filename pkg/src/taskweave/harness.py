"""Episodes and benchmark campaigns.

This is the only place that resolves ground truth: planners see beliefs and
likelihoods, the episode loop asks the environment what a search reveals.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import random
import time as _time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .baselines import PLANNERS, plan_learned_myopic, plan_nonlearned_myopic
from .belief import (BeliefState, UnsatisfiableTask, apply_outcome, cells_moved, next_outcome,
                     trace_record)
from .generate import generate
from .likelihood import FrequencyModel, LikelihoodModel, train
from .planner import POUCT, PlannerConfig
from .scltl import compile_task
from .world import Environment

log = logging.getLogger(__name__)

SEED_ENV_VAR = "TASKWEAVE_SEED"


def default_seed(fallback: int = 0) -> int:
    v = os.environ.get(SEED_ENV_VAR)
    return int(v) if v not in (None, "") else fallback


# --------------------------------------------------------------------------
# tasks
# --------------------------------------------------------------------------


def _t1(a, b):
    return f"F {a} && F {b}"


def _t2(a, b, c):
    return f"F {a} && F {b} && F {c}"


def _t3(a, b, c):
    return f"F {a} && (F {b} || F {c})"


def _t4(a, b):
    return f"(!{b} U {a}) && F {b}"


def _t5(a, b, c):
    return f"((!{c} && !{b}) U {a}) && (!{c} U {b}) && F {c}"


def _t6(a, b, c, d):
    return f"(((!{c} && !{d}) U {a}) || ((!{c} && !{d}) U {b})) && (!{d} U {c}) && F {d}"


TEMPLATES: Dict[int, Callable[..., str]] = {1: _t1, 2: _t2, 3: _t3, 4: _t4, 5: _t5, 6: _t6}
ARITY = {1: 2, 2: 3, 3: 3, 4: 2, 5: 3, 6: 4}
DESCRIPTIONS = {
    1: "interact with a and b",
    2: "interact with a, b and c",
    3: "interact with a, and either b or c",
    4: "interact with a, then b",
    5: "interact with a, then b, then c",
    6: "interact with a or b, then c, then d",
}


class TaskGenerationError(ValueError):
    pass


def render_task(template: int, objects: Sequence[str], skill: str = "i") -> str:
    if template not in TEMPLATES:
        raise ValueError(f"template must be one of {sorted(TEMPLATES)}")
    if len(objects) != ARITY[template]:
        raise ValueError(f"template {template} takes {ARITY[template]} objects")
    return TEMPLATES[template](*[f"{skill}-{o}" for o in objects])


@dataclass(frozen=True)
class Task:
    text: str
    template: int
    objects: Tuple[str, ...]


def generate_task(env: Environment, seed: int, template: Optional[int] = None) -> Task:
    """Pick a template uniformly and fill it with distinct objects present in the home."""
    rng = random.Random(f"task:{seed}")
    tid = template if template is not None else rng.randint(1, 6)
    pool = sorted(env.objects())
    if len(pool) < ARITY[tid]:
        raise TaskGenerationError(f"home holds {len(pool)} distinct objects; template {tid} needs {ARITY[tid]}")
    objs = tuple(rng.sample(pool, ARITY[tid]))
    text = render_task(tid, objs)
    dfa = compile_task(text)
    if not dfa.relevant(dfa.initial):
        raise TaskGenerationError(f"task {text!r} is satisfied before any interaction")
    return Task(text, tid, objs)


# --------------------------------------------------------------------------
# planners
# --------------------------------------------------------------------------

PlannerFn = Callable[[BeliefState, int], Tuple]


def make_planner(name: str, model: Optional[LikelihoodModel], config: PlannerConfig = PlannerConfig()) -> PlannerFn:
    """``fn(belief, step) -> joint action`` for a planner selected by name."""
    if name == "nonlearned-myopic":
        return lambda b, step: plan_nonlearned_myopic(b)
    if model is None:
        raise ValueError(f"planner {name!r} needs a likelihood model")
    if name == "learned-myopic":
        return lambda b, step: plan_learned_myopic(b, model)
    if name == "mr-pouct":
        def fn(b, step):
            cfg = PlannerConfig(config.samples, config.c, config.depth,
                                config.seed * 1_000_003 + step, config.dead_end_cost)
            return POUCT(b, model, cfg).search().best_joint_action()
        return fn
    raise ValueError(f"unknown planner {name!r}; choose from {PLANNERS}")


# --------------------------------------------------------------------------
# episodes
# --------------------------------------------------------------------------


@dataclass
class EpisodeResult:
    time: float
    distances: List[int]
    outcome: str
    planner: str
    seed: int
    steps: int
    trace: List[Dict] = field(default_factory=list)

    @property
    def distance(self) -> int:
        return sum(self.distances)

    @property
    def completed(self) -> bool:
        return self.outcome == "completed"


def run_episode(env: Environment, task: str, planner: str | PlannerFn, n_robots: int = 1,
                model: Optional[LikelihoodModel] = None, seed: int = 0,
                budget: Optional[int] = None, config: Optional[PlannerConfig] = None) -> EpisodeResult:
    """Plan, execute until the first real outcome, replan; until the task is done.

    ``budget`` caps the number of replans (default ten per container).
    """
    dfa = compile_task(task)
    b = BeliefState.initial(env, dfa, n_robots)
    if isinstance(planner, str):
        name = planner
        cfg = config or PlannerConfig(seed=seed)
        fn = make_planner(planner, model, PlannerConfig(cfg.samples, cfg.c, cfg.depth, seed, cfg.dead_end_cost))
    else:
        name, fn = getattr(planner, "__name__", "custom"), planner
    budget = budget if budget is not None else 10 * max(len(env.containers), 1)
    distances = [0] * n_robots
    trace: List[Dict] = []
    steps = 0
    outcome = "completed"
    while not b.accepting:
        if b.free_robots:
            if steps >= budget:
                outcome = "budget-exceeded"
                break
            try:
                joint = fn(b, steps)
            except UnsatisfiableTask:
                outcome = "unsatisfiable"
                break
            steps += 1
            b = b.assign(joint)
        if not any(r.active for r in b.robots):
            outcome = "unsatisfiable"
            break
        ev = next_outcome(b)
        for j, r in enumerate(b.robots):
            distances[j] += cells_moved(env, r, ev.time)
        after = apply_outcome(b, ev)
        trace.append(trace_record(b, after, ev))
        b = after
    return EpisodeResult(b.time, distances, outcome, name, seed, steps, trace)


def write_trace(result: EpisodeResult, path) -> None:
    with open(path, "w") as f:
        for rec in result.trace:
            f.write(json.dumps(rec, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# benchmark
# --------------------------------------------------------------------------


# campaign defaults: far below the 1e5 planning budget so a campaign fits in minutes,
# with a smaller exploration constant tuned for that budget
BENCH_SAMPLES = 2000
BENCH_C = 0.5


@dataclass
class BenchmarkConfig:
    planners: List[str] = field(default_factory=lambda: list(PLANNERS))
    team_sizes: List[int] = field(default_factory=lambda: [1, 2, 3])
    size_classes: List[str] = field(default_factory=lambda: ["small", "medium", "large"])
    trials: int = 50
    seed: int = 0
    planner: PlannerConfig = field(default_factory=lambda: PlannerConfig(samples=BENCH_SAMPLES, c=BENCH_C))
    model_path: Optional[str] = None
    train_envs: int = 500

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if any(n < 1 for n in self.team_sizes):
            raise ValueError("team sizes must be >= 1")
        unknown = set(self.planners) - set(PLANNERS)
        if unknown:
            raise ValueError(f"unknown planners {sorted(unknown)}")

    @classmethod
    def from_document(cls, doc: Mapping) -> "BenchmarkConfig":
        p = doc.get("planner", {})
        pc = PlannerConfig(p.get("samples", BENCH_SAMPLES), p.get("c", BENCH_C), p.get("depth", 30),
                           p.get("seed", 0), p.get("dead_end_cost"))
        return cls(
            planners=list(doc.get("planners", PLANNERS)),
            team_sizes=list(doc.get("team_sizes", [1, 2, 3])),
            size_classes=list(doc.get("size_classes", ["small", "medium", "large"])),
            trials=int(doc.get("trials", 50)),
            seed=int(doc.get("seed", default_seed())),
            planner=pc,
            model_path=doc.get("model"),
            train_envs=int(doc.get("train_envs", 500)),
        )


CSV_COLUMNS = ["trial", "size", "robots", "planner", "time", "distance", "outcome", "env_checksum", "task"]

# training homes are drawn from a seed range disjoint from evaluation homes
TRAIN_SEED_OFFSET = 10_000_000


def training_environments(n: int, seed: int = 0) -> List[Environment]:
    classes = ("small", "medium", "large")
    return [generate(TRAIN_SEED_OFFSET + seed * 100_003 + i, classes[i % 3]) for i in range(n)]


def trial_seed(base: int, size: str, robots: int, trial: int) -> int:
    return base * 1_000_003 + {"small": 0, "medium": 1, "large": 2}[size] * 100_000 + trial


@dataclass
class BenchmarkResult:
    rows: List[Dict]
    table: List[Dict]

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: r[k] for k in CSV_COLUMNS})
        return buf.getvalue()


def improvement(baseline: float, ours: float) -> float:
    """Percent reduction of ``ours`` relative to ``baseline``."""
    return (baseline - ours) / baseline * 100.0


def aggregate(rows: Sequence[Mapping], ours: str = "mr-pouct") -> List[Dict]:
    """Mean makespan per (size, robots, planner) plus improvement columns."""
    cells: Dict[Tuple[str, int], Dict[str, List[float]]] = {}
    for r in rows:
        if r["outcome"] != "completed":
            continue
        cells.setdefault((r["size"], int(r["robots"])), {}).setdefault(r["planner"], []).append(float(r["time"]))
    order = {"small": 0, "medium": 1, "large": 2}
    out = []
    for (size, robots), by_planner in sorted(cells.items(), key=lambda kv: (order.get(kv[0][0], 9), kv[0][1])):
        row: Dict = {"size": size, "robots": robots}
        for name, vals in sorted(by_planner.items()):
            row[name] = sum(vals) / len(vals)
            row[f"n[{name}]"] = len(vals)
        if ours in by_planner:
            for base in ("nonlearned-myopic", "learned-myopic"):
                if base in by_planner:
                    row[f"improvement vs {base}"] = improvement(row[base], row[ours])
        out.append(row)
    return out


def run_trial(cfg: BenchmarkConfig, model: Optional[LikelihoodModel], size: str, robots: int,
              trial: int) -> List[Dict]:
    """All planners on one shared (home, task) instance."""
    seed = trial_seed(cfg.seed, size, robots, trial)
    rows = []
    try:
        env = generate(seed, size)
        task = generate_task(env, seed)
    except Exception as e:  # recorded, campaign continues
        log.warning("trial %s/%s/%s seed %s failed: %s", size, robots, trial, seed, e)
        return [dict(trial=trial, size=size, robots=robots, planner=p, time="", distance="",
                     outcome=f"error: {e}", env_checksum="", task="", seed=seed) for p in cfg.planners]
    checksum = env.checksum()
    for name in cfg.planners:
        try:
            res = run_episode(env, task.text, name, robots, model, seed, config=cfg.planner)
            rows.append(dict(trial=trial, size=size, robots=robots, planner=name, time=res.time,
                             distance=res.distance, outcome=res.outcome, env_checksum=checksum,
                             task=task.text, seed=seed))
        except Exception as e:
            log.warning("trial %s/%s/%s planner %s seed %s failed: %s", size, robots, trial, name, seed, e)
            rows.append(dict(trial=trial, size=size, robots=robots, planner=name, time="", distance="",
                             outcome=f"error: {e}", env_checksum=checksum, task=task.text, seed=seed))
    return rows


def load_or_train_model(cfg: BenchmarkConfig) -> FrequencyModel:
    if cfg.model_path:
        return FrequencyModel.load(cfg.model_path)
    return train(training_environments(cfg.train_envs, cfg.seed))


def run_benchmark(cfg: BenchmarkConfig, out_dir=None, model: Optional[LikelihoodModel] = None,
                  progress: Optional[Callable[[str], None]] = None) -> BenchmarkResult:
    """Every (size, team size, trial) instance, every planner; optional files in ``out_dir``."""
    if model is None and any(p != "nonlearned-myopic" for p in cfg.planners):
        model = load_or_train_model(cfg)
    rows: List[Dict] = []
    for size in cfg.size_classes:
        for robots in cfg.team_sizes:
            for trial in range(cfg.trials):
                t0 = _time.perf_counter()
                rows += run_trial(cfg, model, size, robots, trial)
                if progress:
                    progress(f"{size} robots={robots} trial={trial} ({_time.perf_counter() - t0:.1f}s)")
    result = BenchmarkResult(rows, aggregate(rows))
    if out_dir is not None:
        from .report import write_reports
        write_reports(result, Path(out_dir))
    return result
