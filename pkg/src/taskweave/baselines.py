"""Myopic comparison planners.

Both assign only the currently free robots, never wait on purpose, and only
ever pick words that advance the task from the current automaton state.
"""

from __future__ import annotations

import itertools
from typing import Dict, List, Optional, Sequence, Tuple

from .belief import WAIT, Action, BeliefState, UnsatisfiableTask
from .likelihood import LikelihoodModel
from .world import object_of

JointAction = Tuple[Action, ...]


def _taken(b: BeliefState, partial: Dict[int, Action]) -> Tuple[set, set]:
    pairs, containers = set(), set()
    for j, r in enumerate(b.robots):
        a = r.action if not r.free else partial.get(j)
        if a is not None and not a.is_wait:
            pairs.add(a)
            containers.add(a.container)
    return pairs, containers


def _joint(b: BeliefState, assigned: Dict[int, Action]) -> JointAction:
    return tuple(assigned.get(i, r.action) for i, r in enumerate(b.robots))


def _fallback(b: BeliefState, robot: int, assigned: Dict[int, Action]) -> Action:
    """Nearest untaken pair on a container someone else already targets, else wait."""
    pairs, _ = _taken(b, assigned)
    cell = b.robots[robot].cell
    best = None
    for cid in b.env.container_ids:
        for w in sorted(b.relevant()):
            a = Action(cid, w)
            if a in pairs or b.known.get((cid, object_of(w))) is False:
                continue
            key = (b.env.move_time(cell, cid), cid, w)
            if best is None or key < best[0]:
                best = (key, a)
    if best is not None:
        return best[1]
    if pairs:
        return WAIT
    raise UnsatisfiableTask("no container can still hold a task-relevant object")


def _check(b: BeliefState, robots: Sequence[int]) -> None:
    if not robots:
        raise ValueError("no free robot to assign")
    if b.accepting:
        raise ValueError("task already complete")


def plan_nonlearned_myopic(b: BeliefState, model: Optional[LikelihoodModel] = None,
                           robots: Optional[Sequence[int]] = None,
                           partial: Optional[Dict[int, Action]] = None) -> JointAction:
    """Send each free robot, in index order, to its nearest unclaimed viable container."""
    robots = b.free_robots if robots is None else robots
    _check(b, robots)
    words = sorted(b.relevant())
    assigned: Dict[int, Action] = dict(partial or {})
    for i in robots:
        pairs, claimed = _taken(b, assigned)
        cell = b.robots[i].cell
        best = None
        for cid in b.env.container_ids:
            if cid in claimed:
                continue
            ws = [w for w in words
                  if b.known.get((cid, object_of(w))) is not False and Action(cid, w) not in pairs]
            if not ws:
                continue
            key = (b.env.move_time(cell, cid), cid)
            if best is None or key < best[0]:
                best = (key, Action(cid, ws[0]))
        assigned[i] = best[1] if best is not None else _fallback(b, i, assigned)
    return _joint(b, assigned)


def container_weights(b: BeliefState, model: LikelihoodModel) -> Dict[str, float]:
    """Summed likelihood of every relevant word per container, history-aware."""
    words = b.relevant()
    out = {}
    for cid in b.env.container_ids:
        out[cid] = sum(b.p_found(Action(cid, w), model) for w in words)
    return out


def plan_learned_myopic(b: BeliefState, model: LikelihoodModel,
                        robots: Optional[Sequence[int]] = None,
                        partial: Optional[Dict[int, Action]] = None) -> JointAction:
    """Target the top-weighted containers, pairing robots to minimize total travel."""
    robots = list(b.free_robots if robots is None else robots)
    _check(b, robots)
    words = sorted(b.relevant())
    assigned: Dict[int, Action] = dict(partial or {})
    pairs, claimed = _taken(b, assigned)
    env = b.env

    scored = []
    for cid in env.container_ids:
        if cid in claimed:
            continue
        best_w, best_p, total = None, -1.0, 0.0
        for w in words:
            a = Action(cid, w)
            if a in pairs:
                continue
            p = b.p_found(a, model)
            total += p
            if p > best_p:
                best_w, best_p = w, p
        if total > 0:
            scored.append((-total, cid, best_w))
    scored.sort()
    targets = scored[:len(robots)]

    k = len(targets)
    if k:
        cells = [b.robots[i].cell for i in robots]
        best = None
        for perm in itertools.permutations(range(len(robots)), k):
            cost = 0.0
            for t_idx, r_idx in enumerate(perm):
                cost += env.move_time(cells[r_idx], targets[t_idx][1])
            if best is None or cost < best[0]:
                best = (cost, perm)
        for t_idx, r_idx in enumerate(best[1]):
            _, cid, w = targets[t_idx]
            assigned[robots[r_idx]] = Action(cid, w)
    for i in robots:
        if i not in assigned:
            assigned[i] = _fallback(b, i, assigned)
    return _joint(b, assigned)


PLANNERS = ("nonlearned-myopic", "learned-myopic", "mr-pouct")
