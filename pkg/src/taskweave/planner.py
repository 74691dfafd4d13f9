"""PO-UCT over multi-robot belief states.

The tree alternates two node types. A :class:`SearchNode` assigns one free
robot at a time, so a joint action for ``k`` free robots is a path of ``k``
decision edges instead of one edge out of ``|A|^k``. Once every free robot
holds an action, a :class:`ChanceNode` holds the distribution of beliefs in
which some robot is free again and samples one per visit.

Action values are mean accumulated time (lower is better).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .baselines import plan_learned_myopic
from .belief import (Action, BeliefState, FreeDistribution, UnsatisfiableTask, _invert,
                     advance_until_free, available_actions, position, sample_successor)
from .likelihood import CachedModel, LikelihoodModel

JointAction = Tuple[Action, ...]


@dataclass(frozen=True)
class PlannerConfig:
    samples: int = 100_000
    c: float = math.sqrt(2)
    depth: int = 30
    seed: int = 0
    dead_end_cost: Optional[float] = None

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.c < 0:
            raise ValueError("c must be >= 0")
        if self.depth < 1:
            raise ValueError("depth must be >= 1")


class Stat:
    """One rollout-history row: action, visit count, mean cost."""

    __slots__ = ("action", "n", "q")

    def __init__(self, action: Action):
        self.action = action
        self.n = 0
        self.q = 0.0

    def __repr__(self) -> str:
        return f"[{self.action}, {self.n}, {self.q:.3f}]"


class SearchNode:
    __slots__ = ("belief", "assigned", "pending", "stats", "children", "visits")

    def __init__(self, belief: BeliefState, assigned: Dict[int, Action], pending: Tuple[int, ...]):
        self.belief = belief
        self.assigned = assigned
        self.pending = pending
        self.visits = 0
        self.children: Dict[Action, object] = {}
        if belief.accepting or not pending:
            self.stats: List[Stat] = []
        else:
            self.stats = [Stat(a) for a in available_actions(belief, pending[0], assigned)]

    @property
    def terminal(self) -> bool:
        return self.belief.accepting

    @property
    def rollout_history(self) -> List[list]:
        return [[s.action, s.n, s.q] for s in self.stats]

    def stat(self, action: Action) -> Stat:
        for s in self.stats:
            if s.action == action:
                return s
        raise KeyError(action)


class ChanceNode:
    __slots__ = ("dist", "weights", "children")

    def __init__(self, dist: FreeDistribution):
        self.dist = dist
        self.weights = [br.probability for br in dist]
        self.children: List[Optional[SearchNode]] = [None] * len(dist)


def ucb_select(node: SearchNode, c: float, scale: float = 1.0) -> Action:
    """Untried actions first, in enumeration order; then lower confidence bound on cost."""
    for s in node.stats:
        if s.n == 0:
            return s.action
    scale = scale if scale > 0 else 1.0
    log_n = math.log(node.visits) if node.visits > 0 else 0.0
    best, best_v = None, math.inf
    for s in node.stats:
        v = s.q / scale - c * math.sqrt(log_n / s.n)
        if v < best_v:
            best, best_v = s.action, v
    return best


def sample_transition(node: ChanceNode, u: float) -> Tuple[int, BeliefState, float, float]:
    """Inverse-CDF draw of a branch: (index, belief, elapsed, probability)."""
    k = _invert(node.weights, u)
    br = node.dist[k]
    return k, br.belief, br.elapsed, br.probability


def backup(path: Sequence[Tuple[SearchNode, Stat, float]], total_cost: float) -> None:
    """Fold one rollout's cost into the running means along ``path``.

    Each entry carries the cost already accrued when its node was reached, so
    the value credited to the edge is what came after it.
    """
    for node, stat, cost_at in path:
        node.visits += 1
        stat.n += 1
        stat.q += (total_cost - cost_at - stat.q) / stat.n


def heuristic_cost_to_go(b: BeliefState, ignore_history: bool = False) -> float:
    """Lower bound on the time left: reach the nearest viable container, then interact.

    ``T_move + distance_to_accept * min_interact``, minimized over robots,
    relevant words and containers not ruled out. A robot already executing a
    relevant action is credited with its remaining time instead. With
    ``ignore_history`` no container is ruled out.
    """
    if b.accepting:
        return 0.0
    d = b.dfa.distance(b.state)
    if d is None:
        raise ValueError("belief is in the rejecting sink")
    env = b.env
    sk = env.skills
    i_min = sk.min_interact
    words = b.relevant()
    objs = [w.split("-", 1)[-1] for w in words]
    viable = [cid for cid in env.container_ids
              if ignore_history or not all(b.known.get((cid, o)) is False for o in objs)]
    best = math.inf
    for i, r in enumerate(b.robots):
        frac = 0.0
        if r.active:
            move, done = b.timing(i)
            if r.action.word in words:
                best = min(best, max(done - r.elapsed - i_min, 0.0))
            traveled = r.elapsed * sk.speed
            if traveled < env.steps(r.cell, r.action.container):
                frac = (traveled - math.floor(traveled + 1e-9)) / sk.speed
        pos = position(env, r)
        for cid in viable:
            best = min(best, max(env.move_time(pos, cid) - frac, 0.0) + sk.search_duration)
    if best == math.inf:
        return math.inf
    return best + d * i_min


def dead_end_cost(b: BeliefState) -> float:
    """Value of a simulated history that has ruled out every container.

    The object is known to exist, so the history is treated as a false
    negative: the bound is computed as if nothing had been ruled out.
    """
    return heuristic_cost_to_go(b, ignore_history=True)


class POUCT:
    """One planning episode rooted at a belief.

    ``policy`` completes assignments below the tree frontier; it defaults to
    the learned-myopic rule on the same likelihood model.
    """

    def __init__(self, root: BeliefState, model: LikelihoodModel, config: PlannerConfig = PlannerConfig(),
                 policy: Optional[Callable] = None):
        if root.accepting:
            raise ValueError("task already complete")
        if not root.free_robots:
            raise ValueError("no free robot to plan for")
        self.model = CachedModel(model, root.env)
        self.config = config
        self.rng = random.Random(config.seed)
        self.policy = policy or (lambda b, robots=None, partial=None:
                                 plan_learned_myopic(b, self.model, robots, partial))
        self.root = SearchNode(root, {}, root.free_robots)
        if not self.root.stats:
            raise UnsatisfiableTask("no robot has an action that can advance the task")
        self.max_cost = 0.0
        self.iterations = 0

    # -- tree construction ---------------------------------------------------
    def _child(self, node: SearchNode, a: Action):
        assigned = dict(node.assigned)
        assigned[node.pending[0]] = a
        rest = node.pending[1:]
        if rest:
            return SearchNode(node.belief, assigned, rest)
        return ChanceNode(advance_until_free(node.belief.assign(assigned), self.model))

    # -- one iteration -------------------------------------------------------
    def iterate(self) -> float:
        cfg = self.config
        node = self.root
        cost = 0.0
        depth = 0
        path: List[Tuple[SearchNode, Stat, float]] = []
        while True:
            if node.terminal:
                down = 0.0
                break
            if depth >= cfg.depth:
                down = self._h(node.belief)
                break
            if not node.stats:
                down = self._dead_end(node.belief)
                break
            a = ucb_select(node, cfg.c, self.max_cost)
            stat = node.stat(a)
            path.append((node, stat, cost))
            child = node.children.get(a)
            fresh = child is None
            if fresh:
                child = node.children[a] = self._child(node, a)
            if isinstance(child, ChanceNode):
                k, b, dt, _ = sample_transition(child, self.rng.random())
                cost += dt
                depth += 1
                nxt = child.children[k]
                if nxt is None:
                    nxt = child.children[k] = SearchNode(b, {}, b.free_robots)
                    fresh = True
                node = nxt
            else:
                node = child
            if fresh:
                down = self.rollout(node, depth)
                break
        total = cost + down
        if total > self.max_cost:
            self.max_cost = total
        backup(path, total)
        self.iterations += 1
        return total

    def rollout(self, node: SearchNode, depth: int) -> float:
        """Simulate from ``node`` with the default policy; returns cost-to-go."""
        b = node.belief
        cost = 0.0
        cfg = self.config
        if b.accepting:
            return 0.0
        try:
            b = b.assign(self.policy(b, node.pending, node.assigned))
        except UnsatisfiableTask:
            return self._dead_end(b)
        while True:
            if depth >= cfg.depth:
                return cost + self._h(b)
            b, dt, _ = sample_successor(b, self.model, self.rng.random())
            cost += dt
            depth += 1
            if b.accepting:
                return cost
            try:
                b = b.assign(self.policy(b))
            except UnsatisfiableTask:
                return cost + self._dead_end(b)

    def _dead_end(self, b: BeliefState) -> float:
        if self.config.dead_end_cost is not None:
            return self.config.dead_end_cost
        return dead_end_cost(b)

    def _h(self, b: BeliefState) -> float:
        h = heuristic_cost_to_go(b)
        return self._dead_end(b) if h == math.inf else h

    def search(self, samples: Optional[int] = None) -> "POUCT":
        for _ in range(self.config.samples if samples is None else samples):
            self.iterate()
        return self

    # -- result --------------------------------------------------------------
    def best_joint_action(self) -> JointAction:
        """Follow minimum-mean-cost edges through the assignment nodes."""
        node = self.root
        assigned: Dict[int, Action] = {}
        while True:
            tried = [s for s in node.stats if s.n > 0]
            if tried:
                a = min(tried, key=lambda s: s.q).action
            else:
                joint = self.policy(node.belief, node.pending, node.assigned)
                a = joint[node.pending[0]]
            assigned[node.pending[0]] = a
            if len(node.pending) == 1:
                break
            child = node.children.get(a)
            node = child if isinstance(child, SearchNode) else SearchNode(
                node.belief, dict(assigned), node.pending[1:])
        b = self.root.belief
        return tuple(assigned.get(i, r.action) for i, r in enumerate(b.robots))

    def root_values(self) -> Dict[Action, Tuple[int, float]]:
        return {s.action: (s.n, s.q) for s in self.root.stats}


def plan(b: BeliefState, model: LikelihoodModel, config: PlannerConfig = PlannerConfig()) -> JointAction:
    """Joint action for the team: free robots get new actions, busy ones keep theirs."""
    return POUCT(b, model, config).search().best_joint_action()
