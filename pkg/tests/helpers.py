"""Small hand-built homes and independent oracles shared by the tests."""

from __future__ import annotations

import itertools
import math
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

from taskweave.scltl import FALSE, TRUE, And, Atom, Eventually, Not, Or, Until
from taskweave.world import Container, Environment, GridMap, SkillProfile


def corridor(length: int, containers: Mapping[str, int], contents: Mapping[str, Iterable[str]] = (),
             starts: Sequence[int] = (0,), interact: float = 5.0, search: float = 0.0) -> Environment:
    """A 1-cell-wide hallway; containers and robots are given by x position."""
    grid = GridMap(length, 1, frozenset())
    cs = [Container(cid, "shelf", "livingroom", (x, 0)) for cid, x in containers.items()]
    return Environment(grid, cs, [(x, 0) for x in starts],
                       SkillProfile(search_duration=search, default_interact=interact),
                       dict(contents or {}))


# -- formula oracles -------------------------------------------------------


def naive_progress(f, word):
    """Formula progression with constant folding only, no normalization."""
    if f is TRUE or f is FALSE or f == TRUE or f == FALSE:
        return f
    if isinstance(f, Atom):
        return TRUE if f.name == word else FALSE
    if isinstance(f, Not):
        return FALSE if f.atom.name == word else TRUE
    if isinstance(f, And):
        parts = [naive_progress(c, word) for c in f.children]
        if any(p == FALSE for p in parts):
            return FALSE
        parts = [p for p in parts if p != TRUE]
        return TRUE if not parts else parts[0] if len(parts) == 1 else And(tuple(parts))
    if isinstance(f, Or):
        parts = [naive_progress(c, word) for c in f.children]
        if any(p == TRUE for p in parts):
            return TRUE
        parts = [p for p in parts if p != FALSE]
        return FALSE if not parts else parts[0] if len(parts) == 1 else Or(tuple(parts))
    if isinstance(f, Eventually):
        return _or(naive_progress(f.child, word), f)
    if isinstance(f, Until):
        return _or(naive_progress(f.right, word), _and(naive_progress(f.left, word), f))
    raise TypeError(f)


def _and(a, b):
    if a == FALSE or b == FALSE:
        return FALSE
    if a == TRUE:
        return b
    if b == TRUE:
        return a
    return And((a, b))


def _or(a, b):
    if a == TRUE or b == TRUE:
        return TRUE
    if a == FALSE:
        return b
    if b == FALSE:
        return a
    return Or((a, b))


def progression_accepts(f, words: Sequence[str]) -> bool:
    for w in words:
        f = naive_progress(f, w)
    return f == TRUE


def holds(f, trace: Sequence[str], i: int = 0) -> bool:
    """Strict finite-trace semantics: every witness must lie inside ``trace``."""
    n = len(trace)
    if f == TRUE:
        return True
    if f == FALSE:
        return False
    if isinstance(f, Atom):
        return i < n and trace[i] == f.name
    if isinstance(f, Not):
        return i < n and trace[i] != f.atom.name
    if isinstance(f, And):
        return all(holds(c, trace, i) for c in f.children)
    if isinstance(f, Or):
        return any(holds(c, trace, i) for c in f.children)
    if isinstance(f, Eventually):
        return any(holds(f.child, trace, j) for j in range(i, n))
    if isinstance(f, Until):
        for j in range(i, n):
            if holds(f.right, trace, j):
                return True
            if not holds(f.left, trace, j):
                return False
        return False
    raise TypeError(f)


def all_words(alphabet: Sequence[str], max_len: int):
    for n in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=n)


# -- single-robot search oracle ---------------------------------------------


def best_order_cost(env: Environment, start, words: Sequence[str]) -> float:
    """Cheapest ground-truth schedule for one robot completing ``words`` in order.

    With perfect knowledge the robot walks straight to a container holding the
    next object and interacts there.
    """
    sk = env.skills
    best = math.inf
    holders = [[c.id for c in env.containers if w.split("-", 1)[1] in env.reveal(c.id)] for w in words]
    for choice in itertools.product(*holders):
        t, cell = 0.0, start
        for w, cid in zip(words, choice):
            t += env.move_time(cell, cid) + sk.search_duration + sk.interact_time(w)
            cell = env.container(cid).cell
        best = min(best, t)
    return best


def oracle_cost(env: Environment, dfa, start) -> float:
    """Minimum over every word sequence the automaton accepts (no repeats needed)."""
    best = math.inf
    # breadth over DFA paths that strictly progress
    frontier: List[Tuple[int, Tuple[str, ...]]] = [(dfa.initial, ())]
    while frontier:
        nxt = []
        for z, ws in frontier:
            if z in dfa.accepting:
                best = min(best, best_order_cost(env, start, ws))
                continue
            for w in dfa.relevant(z):
                nxt.append((dfa.step(z, w), ws + (w,)))
        frontier = nxt
    return best


def enumerate_outcomes(b, model) -> Dict[Tuple, float]:
    """Free-belief distribution by enumerating every search outcome combination.

    Each active, unsearched robot's search succeeds or fails independently.
    For every combination the first freeing event (search failure, or task
    interaction completion after a success) is located by replaying the time
    line, and probability mass is collected per resulting event.
    """
    robots = [i for i, r in enumerate(b.robots) if r.active]
    out: Dict[Tuple, float] = {}
    for outcome in itertools.product((True, False), repeat=len(robots)):
        p = 1.0
        events = []
        for i, ok in zip(robots, outcome):
            r = b.robots[i]
            ps = b.p_found(r.action, model)
            p *= ps if ok else 1.0 - ps
            move, done = b.timing(i)
            if not r.searched:
                ts = max(move - r.elapsed, 0.0)
                if not ok:
                    events.append((ts, i, 0))
                    continue
            events.append((max(done - r.elapsed, 0.0), i, 1))
        if p == 0.0:
            continue
        t, i, kind = min(events)
        # searches resolved before the freeing event all succeeded
        found = tuple(sorted(j for j in robots if not b.robots[j].searched
                             and (max(b.timing(j)[0] - b.robots[j].elapsed, 0.0), j, 0) < (t, i, kind)))
        key = (t, i, kind, found)
        out[key] = out.get(key, 0.0) + p
    return out


# -- exact Bellman value over the belief model --------------------------------


def _joint_actions(b):
    from taskweave.belief import available_actions
    free = b.free_robots

    def rec(k, partial):
        if k == len(free):
            yield dict(partial)
            return
        for a in available_actions(b, free[k], partial):
            partial[free[k]] = a
            yield from rec(k + 1, partial)
            del partial[free[k]]

    yield from rec(0, {})


def _belief_key(b):
    return (b.state, b.robots, tuple(sorted(b.known.items())))


def exact_values(b, model, dead_end, memo=None):
    """Q value of every joint action at ``b`` under the belief model itself.

    Implements the Bellman recursion exhaustively: each joint action's value is
    the probability-weighted elapsed time plus the best value of the successor.
    ``dead_end(b)`` prices beliefs with no available action.
    """
    from taskweave.belief import advance_until_free
    memo = {} if memo is None else memo
    out = {}
    for joint in _joint_actions(b):
        nb = b.assign(joint)
        if not any(r.active for r in nb.robots):
            continue
        q = 0.0
        for br in advance_until_free(nb, model):
            q += br.probability * (br.elapsed + exact_value(br.belief, model, dead_end, memo))
        out[tuple(sorted(joint.items()))] = q
    return out


def exact_value(b, model, dead_end, memo):
    if b.accepting:
        return 0.0
    key = _belief_key(b)
    if key in memo:
        return memo[key]
    vals = exact_values(b, model, dead_end, memo)
    v = min(vals.values()) if vals else dead_end(b)
    memo[key] = v
    return v
