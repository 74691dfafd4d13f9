"""Multi-robot belief states and the advance-until-a-robot-is-free transition.

A belief bundles what the team knows: the map and containers (through the
environment, without peeking at contents), each robot's pose and the action
it is executing, the task automaton and its current state, and the search
outcomes observed so far.

Each non-wait action ``<container, word>`` is move -> search -> interact. A
search can fail, which frees the robot on arrival; success keeps it busy for
the interaction and then advances the automaton by ``word``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .likelihood import LikelihoodModel
from .scltl import Dfa
from .world import Cell, Environment, object_of

FOUND = "found"
NOT_FOUND = "not-found"

# event kinds; searches sort before completions at equal times
_SEARCH = 0
_DONE = 1


@dataclass(frozen=True)
class Action:
    container: Optional[str]
    word: Optional[str]

    @property
    def is_wait(self) -> bool:
        return self.container is None

    @property
    def obj(self) -> str:
        return object_of(self.word)

    def __str__(self) -> str:
        return "wait" if self.is_wait else f"{self.container}:{self.word}"

    @classmethod
    def parse(cls, text: str) -> "Action":
        if text == "wait":
            return WAIT
        cid, word = text.split(":", 1)
        return cls(cid, word)


WAIT = Action(None, None)


@dataclass(frozen=True)
class Observation:
    action: Action
    outcome: str
    time: float = 0.0


@dataclass(frozen=True)
class Robot:
    """Pose and progress of one robot.

    ``cell`` is where the current action started (the current cell when the
    robot is free or waiting). ``elapsed`` is time spent on the action and
    ``searched`` records whether the container has already been searched.
    """

    cell: Cell
    action: Optional[Action] = None
    elapsed: float = 0.0
    searched: bool = False

    @property
    def free(self) -> bool:
        return self.action is None

    @property
    def active(self) -> bool:
        return self.action is not None and not self.action.is_wait


@dataclass(frozen=True, eq=True)
class BeliefState:
    env: Environment = field(repr=False)
    dfa: Dfa = field(repr=False)
    state: int
    robots: Tuple[Robot, ...]
    history: Tuple[Observation, ...] = ()
    known: Mapping[Tuple[str, str], bool] = field(default_factory=dict)
    time: float = 0.0

    __hash__ = None  # type: ignore[assignment]

    # -- construction -----------------------------------------------------
    @classmethod
    def initial(cls, env: Environment, dfa: Dfa, n_robots: int) -> "BeliefState":
        if not 1 <= n_robots <= len(env.robot_starts):
            raise ValueError(f"team size must be within 1..{len(env.robot_starts)}")
        robots = tuple(Robot(env.robot_starts[i]) for i in range(n_robots))
        return cls(env, dfa, dfa.initial, robots)

    # -- queries ------------------------------------------------------------
    @property
    def accepting(self) -> bool:
        return self.state in self.dfa.accepting

    @property
    def free_robots(self) -> Tuple[int, ...]:
        return tuple(i for i, r in enumerate(self.robots) if r.free)

    @property
    def objects(self) -> Tuple[str, ...]:
        return tuple(sorted({object_of(w) for w in self.dfa.alphabet}))

    def relevant(self) -> Tuple[str, ...]:
        return self.dfa.relevant(self.state)

    def knows(self, cid: str, obj: str) -> Optional[bool]:
        return self.known.get((cid, obj))

    def p_found(self, action: Action, model: LikelihoodModel) -> float:
        """Search success probability, certain for already-resolved containers."""
        k = self.known.get((action.container, action.obj))
        if k is not None:
            return 1.0 if k else 0.0
        return model.p_s(self.env, action.container, action.word)

    def timing(self, robot: int) -> Tuple[float, float]:
        """Total (search-done, interaction-done) times of a robot's action."""
        r = self.robots[robot]
        sk = self.env.skills
        move = self.env.move_time(r.cell, r.action.container) + sk.search_duration
        return move, move + sk.interact_time(r.action.word)

    def position(self, robot: int) -> Cell:
        return position(self.env, self.robots[robot])

    def assign(self, joint: Mapping[int, Action] | Sequence[Optional[Action]]) -> "BeliefState":
        """Give new actions to free robots; busy robots keep theirs."""
        items = joint.items() if isinstance(joint, Mapping) else enumerate(joint)
        robots = list(self.robots)
        for i, a in items:
            if a is None:
                continue
            if not robots[i].free:
                if robots[i].action == a:
                    continue
                raise ValueError(f"robot {i} is busy with {robots[i].action}")
            robots[i] = Robot(robots[i].cell, a)
        return replace(self, robots=tuple(robots))


def position(env: Environment, r: Robot) -> Cell:
    if not r.active:
        return r.cell
    path = env.path_to(r.cell, r.action.container)
    k = min(int(r.elapsed * env.skills.speed + 1e-9), len(path) - 1)
    return path[k]


def cells_moved(env: Environment, r: Robot, t: float) -> int:
    """Grid cells traversed by ``r`` during the next ``t`` time units."""
    if not r.active or t <= 0:
        return 0
    n = env.steps(r.cell, r.action.container)
    sp = env.skills.speed
    before = min(int(r.elapsed * sp + 1e-9), n)
    after = min(int((r.elapsed + t) * sp + 1e-9), n)
    return after - before


# --------------------------------------------------------------------------
# action sets
# --------------------------------------------------------------------------


def available_actions(b: BeliefState, robot: int,
                      partial: Optional[Mapping[int, Action]] = None) -> Tuple[Action, ...]:
    """Candidate actions for free ``robot``: container x relevant word, plus wait.

    ``partial`` holds actions already chosen for other free robots in the
    same decision; they count as active for duplicate pruning and for the
    wait guard. Pairs known to fail are dropped, as are pairs already held by
    another robot. ``wait`` is offered only while some other robot is active.
    """
    r = b.robots[robot]
    if not r.free:
        raise ValueError(f"robot {robot} is busy with {r.action}")
    partial = partial or {}
    words = sorted(b.relevant())
    if not words:
        return ()
    taken = set()
    other_active = False
    for j, rj in enumerate(b.robots):
        if j == robot:
            continue
        a = rj.action if not rj.free else partial.get(j)
        if a is not None and not a.is_wait:
            taken.add(a)
            other_active = True
    known = b.known
    out = []
    for cid in b.env.container_ids:
        for w in words:
            if known.get((cid, object_of(w))) is False:
                continue
            a = Action(cid, w)
            if a not in taken:
                out.append(a)
    if other_active:
        out.append(WAIT)
    return tuple(out)


# --------------------------------------------------------------------------
# event chain
# --------------------------------------------------------------------------


def forward_simulate(b: BeliefState, t: float) -> Tuple[Robot, ...]:
    """Robots after ``t`` more time units; waiting and free robots stay put."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return b.robots
    return tuple(replace(r, elapsed=r.elapsed + t) if r.active else r for r in b.robots)


def probability_from_history(history: Iterable[Observation], likelihood: Callable[[Action], float]) -> float:
    """Product of P_S for found records and 1 - P_S for not-found records."""
    p = 1.0
    for obs in history:
        ps = likelihood(obs.action)
        p *= ps if obs.outcome == FOUND else 1.0 - ps
    return p


@dataclass(frozen=True)
class FreeBranch:
    belief: BeliefState
    probability: float
    elapsed: float
    raw_probability: float = 0.0


class FreeDistribution(Tuple[FreeBranch, ...]):
    """Successor beliefs in which at least one robot is free."""

    @property
    def probabilities(self) -> List[float]:
        return [br.probability for br in self]

    @property
    def raw_total(self) -> float:
        return math.fsum(br.raw_probability for br in self)


@dataclass(frozen=True)
class _Chain:
    """Sorted events and, per emitted branch, what is needed to build it."""

    # (time, robot, kind, found-robots-so-far, raw probability)
    branches: Tuple[Tuple[float, int, int, Tuple[int, ...], float], ...]
    search_times: Mapping[int, float]


def _event_chain(b: BeliefState, model: LikelihoodModel) -> _Chain:
    if b.accepting:
        raise ValueError("task already complete")
    events = []
    search_times: Dict[int, float] = {}
    for i, r in enumerate(b.robots):
        if r.free:
            raise ValueError(f"robot {i} has no assignment")
        if r.action.is_wait:
            continue
        move, done = b.timing(i)
        if not r.searched:
            ts = max(move - r.elapsed, 0.0)
            search_times[i] = ts
            events.append((ts, i, _SEARCH))
        events.append((max(done - r.elapsed, 0.0), i, _DONE))
    if not events:
        raise ValueError("every robot is waiting")
    events.sort()

    branches = []
    found: List[int] = []
    p_chain = 1.0
    for t, i, kind in events:
        if kind == _SEARCH:
            ps = b.p_found(b.robots[i].action, model)
            if ps < 1.0:
                branches.append((t, i, _SEARCH, tuple(found), p_chain * (1.0 - ps)))
            found.append(i)
            p_chain *= ps
        else:
            branches.append((t, i, _DONE, tuple(found), p_chain))
            break
    return _Chain(tuple(branches), search_times)


def _build_branch(b: BeliefState, chain: _Chain, k: int) -> BeliefState:
    t, i, kind, found, _ = chain.branches[k]
    env = b.env
    robots = list(b.robots)
    known = dict(b.known)
    hist = list(b.history)
    for j in found:
        a = robots[j].action
        known[(a.container, a.obj)] = True
        hist.append(Observation(a, FOUND, b.time + chain.search_times[j]))
    found_set = set(found)
    for j, r in enumerate(robots):
        if r.free:
            continue
        if r.action.is_wait:
            robots[j] = Robot(r.cell)
        elif j == i:
            robots[j] = Robot(env.container(r.action.container).cell)
        else:
            robots[j] = Robot(r.cell, r.action, r.elapsed + t, r.searched or j in found_set)
    state = b.state
    a = b.robots[i].action
    if kind == _SEARCH:
        known[(a.container, a.obj)] = False
        hist.append(Observation(a, NOT_FOUND, b.time + t))
    else:
        state = b.dfa.step(state, a.word)
        robots = _cancel_stale(env, b.dfa, state, robots)
    return BeliefState(env, b.dfa, state, tuple(robots), tuple(hist), known, b.time + t)


def _cancel_stale(env: Environment, dfa: Dfa, state: int, robots: List[Robot]) -> List[Robot]:
    """Free robots whose word can no longer advance the task."""
    rel = dfa.relevant(state)
    out = []
    for r in robots:
        if r.active and r.action.word not in rel:
            r = Robot(position(env, r))
        out.append(r)
    return out


def advance_until_free(b: BeliefState, model: LikelihoodModel) -> FreeDistribution:
    """Distribution over the beliefs where some robot next becomes free.

    Walks the time-sorted search and completion events. Every search that may
    fail spawns a branch where that robot is freed empty-handed; the walk then
    continues assuming the search succeeded. The first completion ends the
    walk with the branch in which the automaton advances.
    """
    chain = _event_chain(b, model)
    total = math.fsum(br[4] for br in chain.branches)
    out = []
    for k, (t, _, _, _, p) in enumerate(chain.branches):
        out.append(FreeBranch(_build_branch(b, chain, k), p / total, t, p))
    return FreeDistribution(out)


def sample_successor(b: BeliefState, model: LikelihoodModel, u: float) -> Tuple[BeliefState, float, float]:
    """Draw one branch by inverting the CDF at ``u`` in [0, 1); builds only that branch."""
    chain = _event_chain(b, model)
    k = _invert([br[4] for br in chain.branches], u)
    t, _, _, _, p = chain.branches[k]
    total = math.fsum(br[4] for br in chain.branches)
    return _build_branch(b, chain, k), t, p / total


def _invert(weights: Sequence[float], u: float) -> int:
    total = math.fsum(weights)
    x = u * total
    acc = 0.0
    for k, w in enumerate(weights):
        acc += w
        if x < acc:
            return k
    # u rounding at the top end
    for k in range(len(weights) - 1, -1, -1):
        if weights[k] > 0:
            return k
    return len(weights) - 1


# --------------------------------------------------------------------------
# execution side
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Outcome:
    """A real completion: robot ``robot`` finishes after ``time`` more units."""

    robot: int
    found: bool
    time: float


def next_outcome(b: BeliefState) -> Outcome:
    """Earliest ground-truth completion among active robots; ties go to the lower index."""
    best = None
    for i, r in enumerate(b.robots):
        if not r.active:
            continue
        present = r.action.obj in b.env.reveal(r.action.container)
        move, done = b.timing(i)
        t = (done if present else move) - r.elapsed
        key = (max(t, 0.0), i)
        if best is None or key < best[0]:
            best = (key, Outcome(i, present, max(t, 0.0)))
    if best is None:
        raise ValueError("no robot is active")
    return best[1]


def _reveal(b: BeliefState, cid: str, known: Dict[Tuple[str, str], bool]) -> None:
    contents = b.env.reveal(cid)
    for o in b.objects:
        known[(cid, o)] = o in contents


def apply_outcome(b: BeliefState, event: Outcome) -> BeliefState:
    """Advance the execution belief to a real outcome.

    Every container searched by then (by any robot, tie order respected) has
    its full contents recorded in ``known``.
    """
    i = event.robot
    r = b.robots[i]
    if not r.active:
        raise ValueError(f"robot {i} is not executing an action")
    present = r.action.obj in b.env.reveal(r.action.container)
    if present != event.found:
        raise ValueError(f"outcome for robot {i} contradicts ground truth")
    move, done = b.timing(i)
    expected = (done if present else move) - r.elapsed
    if abs(expected - event.time) > 1e-9:
        raise ValueError(f"robot {i} completes after {expected}, not {event.time}")
    t = event.time

    env = b.env
    known = dict(b.known)
    hist = list(b.history)
    robots = list(b.robots)
    for j, rj in enumerate(robots):
        if rj.free:
            continue
        if rj.action.is_wait:
            robots[j] = Robot(rj.cell)
            continue
        if j == i:
            continue
        searched = rj.searched
        if not searched:
            ts = b.timing(j)[0] - rj.elapsed
            if ts < t or (ts == t and j < i):
                _reveal(b, rj.action.container, known)
                hist.append(Observation(rj.action, FOUND, b.time + max(ts, 0.0)))
                searched = True
        robots[j] = Robot(rj.cell, rj.action, rj.elapsed + t, searched)

    a = r.action
    if not r.searched:
        _reveal(b, a.container, known)
        hist.append(Observation(a, FOUND if present else NOT_FOUND, b.time + max(move - r.elapsed, 0.0)))
    robots[i] = Robot(env.container(a.container).cell)
    state = b.state
    if present:
        state = b.dfa.step(state, a.word)
        robots = _cancel_stale(env, b.dfa, state, robots)
    return BeliefState(env, b.dfa, state, tuple(robots), tuple(hist), known, b.time + t)


def trace_record(before: BeliefState, after: BeliefState, event: Outcome) -> Dict:
    a = before.robots[event.robot].action
    return {
        "time": after.time,
        "robot": event.robot,
        "action": str(a),
        "outcome": FOUND if event.found else NOT_FOUND,
        "dfa_state": after.state,
    }


class UnsatisfiableTask(RuntimeError):
    """No robot has any action that could still make progress."""
