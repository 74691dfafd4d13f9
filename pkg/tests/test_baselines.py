import itertools

import pytest

from helpers import corridor
from taskweave.baselines import container_weights, plan_learned_myopic, plan_nonlearned_myopic
from taskweave.belief import WAIT, Action, BeliefState, UnsatisfiableTask
from taskweave.generate import generate
from taskweave.harness import generate_task, run_episode
from taskweave.likelihood import ConstantModel, train
from taskweave.scltl import compile_task
from taskweave.world import Container, Environment, GridMap


def _belief(env, task, n=1, known=None):
    b = BeliefState.initial(env, compile_task(task), n)
    return BeliefState(env, b.dfa, b.state, b.robots, (), known or {})


def test_nonlearned_nearest():
    env = corridor(10, {"far": 9, "near": 3})
    assert plan_nonlearned_myopic(_belief(env, "F pick-x")) == (Action("near", "pick-x"),)


def test_nonlearned_skips_resolved_container():
    env = corridor(10, {"far": 9, "near": 3})
    b = _belief(env, "F pick-x", known={("near", "x"): False})
    assert plan_nonlearned_myopic(b) == (Action("far", "pick-x"),)


def test_nonlearned_lowest_word_on_ties():
    env = corridor(10, {"a": 3})
    assert plan_nonlearned_myopic(_belief(env, "F pick-y && F pick-x")) == (Action("a", "pick-x"),)


def test_nonlearned_two_robots_index_order():
    grid = GridMap(5, 5, frozenset())
    cs = [Container("p", "shelf", "kitchen", (0, 2)), Container("q", "shelf", "kitchen", (4, 4))]
    env = Environment(grid, cs, [(0, 4), (0, 0)])
    joint = plan_nonlearned_myopic(_belief(env, "F pick-x", 2))
    # robot 0 takes its nearest container first, robot 1 gets the other
    assert joint == (Action("p", "pick-x"), Action("q", "pick-x"))


def test_nonlearned_unsatisfiable():
    env = corridor(10, {"a": 3})
    b = _belief(env, "F pick-x", known={("a", "x"): False})
    with pytest.raises(UnsatisfiableTask):
        plan_nonlearned_myopic(b)


def test_weights_sum_over_relevant_words():
    env = corridor(10, {"s": 3})
    b = _belief(env, "F pick-w1 && F pick-w2")
    model = ConstantModel({("s", "w1"): 0.2, ("s", "w2"): 0.3})
    assert container_weights(b, model)["s"] == pytest.approx(0.5)
    resolved = _belief(env, "F pick-w1 && F pick-w2", known={("s", "w1"): False, ("s", "w2"): False})
    assert container_weights(resolved, model)["s"] == 0


def test_learned_top_k_with_min_travel_pairing():
    env = corridor(12, {"hi": 2, "mid": 10, "low": 6}, starts=(11, 0))
    model = ConstantModel({("hi", "x"): 0.9, ("mid", "x"): 0.8, ("low", "x"): 0.1})
    b = _belief(env, "F pick-x", 2)
    joint = plan_learned_myopic(b, model)
    assert {a.container for a in joint} == {"hi", "mid"}
    cells = [r.cell for r in b.robots]

    def travel(j):
        return sum(env.move_time(c, a.container) for c, a in zip(cells, j))

    best = min(travel(p) for p in itertools.permutations(joint))
    assert travel(joint) == best


def test_learned_picks_argmax_word():
    env = corridor(10, {"s": 3})
    model = ConstantModel({("s", "a"): 0.2, ("s", "b"): 0.6})
    assert plan_learned_myopic(_belief(env, "F pick-a && F pick-b"), model) == (Action("s", "pick-b"),)


def test_baselines_only_use_relevant_words():
    env = generate(3, "medium")
    model = train([generate(100 + i, "medium") for i in range(20)])
    for seed in range(10):
        task = generate_task(env, seed).text
        b = _belief(env, task, 3)
        for fn in (plan_nonlearned_myopic, lambda b: plan_learned_myopic(b, model)):
            joint = fn(b)
            assert WAIT not in joint
            assert all(a.word in b.relevant() for a in joint)


def test_baselines_complete_episodes():
    model = train([generate(100 + i, "small") for i in range(20)])
    for seed in range(20):
        env = generate(seed, "small")
        task = generate_task(env, seed).text
        for name in ("nonlearned-myopic", "learned-myopic"):
            assert run_episode(env, task, name, 2, model, seed).completed
