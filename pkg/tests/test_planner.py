import math
import random
from collections import Counter

import pytest

from helpers import corridor, exact_values, oracle_cost
from taskweave.belief import WAIT, Action, BeliefState, FreeBranch, FreeDistribution
from taskweave.generate import generate
from taskweave.harness import generate_task, run_episode
from taskweave.likelihood import ConstantModel, oracle_model
from taskweave.planner import (POUCT, ChanceNode, PlannerConfig, SearchNode, Stat, backup, dead_end_cost,
                               heuristic_cost_to_go, plan, sample_transition, ucb_select)
from taskweave.scltl import compile_task


def _belief(env, task, n=1):
    return BeliefState.initial(env, compile_task(task), n)


def _node_with(stats, visits):
    env = corridor(6, {"a": 2, "b": 4})
    node = SearchNode(_belief(env, "F pick-x"), {}, (0,))
    node.stats = stats
    node.visits = visits
    return node


def _stat(name, n, q):
    s = Stat(Action(name, "pick-x"))
    s.n, s.q = n, q
    return s


def test_config_validation():
    for bad in (dict(samples=0), dict(c=-1), dict(depth=0)):
        with pytest.raises(ValueError):
            PlannerConfig(**bad)


def test_ucb_untried_first():
    node = _node_with([_stat("a", 3, 1.0), _stat("b", 0, 0.0)], 3)
    assert ucb_select(node, 1.0).container == "b"


def test_ucb_greedy_when_c_zero():
    node = _node_with([_stat("a", 3, 2.0), _stat("b", 5, 1.0)], 8)
    assert ucb_select(node, 0.0).container == "b"


def test_ucb_bonus_prefers_rarely_tried():
    node = _node_with([_stat("a", 1, 0.5), _stat("b", 100, 0.5)], 101)
    assert ucb_select(node, 1.0).container == "a"


def test_ucb_uses_normalized_cost():
    # raw costs differ by 10; normalized by 1000 the exploration term dominates
    node = _node_with([_stat("a", 10, 100.0), _stat("b", 40, 90.0)], 50)
    assert ucb_select(node, 1.0, scale=1000.0).container == "a"
    assert ucb_select(node, 1.0, scale=1.0).container == "b"


def _dist(ps):
    env = corridor(4, {"a": 2})
    b = _belief(env, "F pick-x")
    return FreeDistribution(FreeBranch(b, p, float(k), p) for k, p in enumerate(ps))


def test_sample_transition_inversion():
    node = ChanceNode(_dist([0.3, 0.7]))
    assert sample_transition(node, 0.25)[0] == 0
    assert sample_transition(node, 0.31)[0] == 1
    single = ChanceNode(_dist([1.0]))
    assert all(sample_transition(single, u)[0] == 0 for u in (0.0, 0.5, 0.999999))


def test_sample_transition_frequencies():
    node = ChanceNode(_dist([0.2, 0.5, 0.3]))
    rng = random.Random(1)
    counts = Counter(sample_transition(node, rng.random())[0] for _ in range(100_000))
    for k, p in enumerate([0.2, 0.5, 0.3]):
        assert abs(counts[k] / 100_000 - p) < 0.01


def test_backup_running_mean():
    node = _node_with([_stat("a", 0, 0.0)], 0)
    s = node.stats[0]
    backup([(node, s, 0.0)], 12.0)
    assert (s.n, s.q, node.visits) == (1, 12.0, 1)
    backup([(node, s, 0.0)], 6.0)
    assert s.q == 9.0
    child = _node_with([_stat("b", 0, 0.0)], 0)
    backup([(node, s, 0.0), (child, child.stats[0], 4.0)], 10.0)
    assert child.stats[0].q == 6.0  # only the cost accrued below the child


def test_heuristic_examples():
    env = corridor(10, {"a": 4, "b": 9})
    b = _belief(env, "F pick-x")
    assert heuristic_cost_to_go(b) == 4 + 5
    acc = BeliefState(env, b.dfa, next(iter(b.dfa.accepting)), b.robots)
    assert heuristic_cost_to_go(acc) == 0
    ruled = BeliefState(env, b.dfa, b.state, b.robots, (), {("a", "x"): False})
    assert heuristic_cost_to_go(ruled) == 9 + 5
    none = BeliefState(env, b.dfa, b.state, b.robots, (), {("a", "x"): False, ("b", "x"): False})
    assert heuristic_cost_to_go(none) == math.inf
    assert dead_end_cost(none) == 9


def test_heuristic_counts_remaining_stages():
    env = corridor(10, {"a": 4})
    b = _belief(env, "(!pick-y U pick-x) && F pick-y")
    assert heuristic_cost_to_go(b) == 4 + 2 * 5


def test_heuristic_is_admissible_on_oracle_instances():
    checked = 0
    for seed in range(100):
        env = generate(seed, "small")
        task = generate_task(env, seed)
        b = _belief(env, task.text)
        opt = oracle_cost(env, b.dfa, env.robot_starts[0])
        assert heuristic_cost_to_go(b) <= opt + 1e-9
        checked += 1
    assert checked == 100


def test_unique_best_action_next_to_object():
    env = corridor(10, {"a": 1, "b": 9}, {"a": ["x"]})
    b = _belief(env, "F pick-x")
    joint = plan(b, oracle_model(env), PlannerConfig(samples=200))
    assert joint == (Action("a", "pick-x"),)


def test_single_robot_matches_visiting_order_oracle():
    env = corridor(12, {"a": 2, "b": 6, "c": 11}, {"c": ["x"], "a": ["y"]})
    task = "F pick-x && F pick-y"
    res = run_episode(env, task, "mr-pouct", 1, oracle_model(env), seed=3, config=PlannerConfig(samples=500))
    assert res.completed
    assert res.time == oracle_cost(env, compile_task(task), env.robot_starts[0])


def test_seed_determinism():
    env = generate(2, "small")
    task = generate_task(env, 2).text
    b = _belief(env, task, 2)
    model = ConstantModel({}, 0.2)
    cfg = PlannerConfig(samples=300, seed=5)
    a = POUCT(b, model, cfg).search()
    c = POUCT(b, model, cfg).search()
    assert a.best_joint_action() == c.best_joint_action()
    assert a.root_values() == c.root_values()


def test_visits_match_rollout_history():
    env = generate(2, "small")
    b = _belief(env, generate_task(env, 2).text, 2)
    p = POUCT(b, ConstantModel({}, 0.3), PlannerConfig(samples=300)).search()
    stack = [p.root]
    while stack:
        node = stack.pop()
        if isinstance(node, SearchNode):
            assert node.visits == sum(s.n for s in node.stats)
            assert set(node.children) <= {s.action for s in node.stats}
            assert all(math.isfinite(s.q) for s in node.stats)
            stack.extend(node.children.values())
        elif isinstance(node, ChanceNode):
            stack.extend(c for c in node.children if c is not None)


def test_wait_never_chosen_when_all_free():
    env = generate(5, "small")
    for seed in range(5):
        b = _belief(env, generate_task(env, seed).text, 3)
        joint = plan(b, ConstantModel({}, 0.3), PlannerConfig(samples=200, seed=seed))
        assert WAIT not in joint or any(a is not None and not a.is_wait for a in joint)
        assert all(a is not None for a in joint)


def test_planner_errors():
    env = corridor(6, {"a": 2})
    b = _belief(env, "F pick-x")
    acc = BeliefState(env, b.dfa, next(iter(b.dfa.accepting)), b.robots)
    with pytest.raises(ValueError):
        POUCT(acc, ConstantModel({}))
    with pytest.raises(ValueError):
        POUCT(b.assign([Action("a", "pick-x")]), ConstantModel({}))


def _sequencing_instance():
    """Robot 1 stands at b's container; robot 0 is on its way to a's."""
    env = corridor(21, {"B": 0, "C": 10, "A": 20}, {"A": ["a"], "B": ["b"]}, starts=(10, 0))
    dfa = compile_task("(!i-b U i-a) && F i-b")
    b = BeliefState.initial(env, dfa, 2)
    known = {("B", "a"): False, ("B", "b"): True}
    b = BeliefState(env, dfa, b.state, b.robots, (), known).assign({0: Action("A", "i-a")})
    model = ConstantModel({("A", "a"): 0.9, ("C", "a"): 0.1, ("A", "b"): 0.1, ("C", "b"): 0.1})
    return b, model


def test_wait_is_bellman_optimal_on_sequencing_instance():
    b, model = _sequencing_instance()
    q = exact_values(b, model, dead_end_cost)
    best = min(q, key=q.get)
    assert dict(best)[1] == WAIT


def test_planner_waits_on_sequencing_instance():
    b, model = _sequencing_instance()
    joint = plan(b, model, PlannerConfig(samples=2000, seed=0))
    assert joint[1] == WAIT
