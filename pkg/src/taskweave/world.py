"""Known environment: occupancy grid, containers, skill timings.

Coordinates are ``(x, y)`` cells with ``y`` growing downward; neighbor order
for every search is N, E, S, W so paths are reproducible.
"""

from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import jsonschema

Cell = Tuple[int, int]

NEIGHBORS = ((0, -1), (1, 0), (0, 1), (-1, 0))  # N, E, S, W

SMALL_MAX_AREA = 60.0
MEDIUM_MAX_AREA = 110.0
SIZE_CLASSES = ("small", "medium", "large")


class BlockedCellError(ValueError):
    pass


class UnreachableError(ValueError):
    pass


class InvalidEnvironment(ValueError):
    """Document or invariant violation; ``path`` names the offending field."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


def classify_size(area: float) -> str:
    """Size class of a home from its floor area in square meters."""
    if area <= 0:
        raise ValueError("area must be positive")
    if area < SMALL_MAX_AREA:
        return "small"
    if area <= MEDIUM_MAX_AREA:
        return "medium"
    return "large"


@dataclass(frozen=True)
class GridMap:
    width: int
    height: int
    blocked: FrozenSet[Cell] = frozenset()
    cell_size: float = 0.25

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def is_free(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and cell not in self.blocked

    def neighbors(self, cell: Cell) -> Iterable[Cell]:
        x, y = cell
        for dx, dy in NEIGHBORS:
            c = (x + dx, y + dy)
            if self.is_free(c):
                yield c

    @property
    def area(self) -> float:
        return self.width * self.height * self.cell_size ** 2

    def distance_field(self, target: Cell) -> List[List[int]]:
        """BFS step counts to ``target`` indexed ``[y][x]``; -1 where unreachable."""
        if not self.is_free(target):
            raise BlockedCellError(f"cell {target} is blocked or out of bounds")
        dist = [[-1] * self.width for _ in range(self.height)]
        dist[target[1]][target[0]] = 0
        q = deque([target])
        while q:
            c = q.popleft()
            d = dist[c[1]][c[0]] + 1
            for n in self.neighbors(c):
                if dist[n[1]][n[0]] < 0:
                    dist[n[1]][n[0]] = d
                    q.append(n)
        return dist


def _descend(m: GridMap, dist: List[List[int]], start: Cell) -> List[Cell]:
    path = [start]
    c = start
    d = dist[c[1]][c[0]]
    while d > 0:
        for n in m.neighbors(c):
            if dist[n[1]][n[0]] == d - 1:
                c = n
                break
        d -= 1
        path.append(c)
    return path


def shortest_path(m: GridMap, start: Cell, goal: Cell, speed: float = 1.0) -> Tuple[List[Cell], float]:
    """Minimal 4-connected path and its traversal time at ``speed`` cells per unit."""
    for c in (start, goal):
        if not m.is_free(c):
            raise BlockedCellError(f"cell {c} is blocked or out of bounds")
    dist = m.distance_field(goal)
    if dist[start[1]][start[0]] < 0:
        raise UnreachableError(f"no path from {start} to {goal}")
    path = _descend(m, dist, start)
    return path, (len(path) - 1) / speed


@dataclass(frozen=True)
class Container:
    id: str
    kind: str
    room: str
    cell: Cell


@dataclass(frozen=True)
class SkillProfile:
    speed: float = 1.0
    search_duration: float = 0.0
    interact: Mapping[str, float] = field(default_factory=dict)
    default_interact: float = 5.0

    def __post_init__(self):
        if self.speed <= 0:
            raise ValueError("speed must be positive")
        if self.search_duration < 0 or any(v < 0 for v in self.interact.values()) or self.default_interact < 0:
            raise ValueError("durations must be non-negative")

    def interact_time(self, word: str) -> float:
        skill = word.split("-", 1)[0]
        return self.interact.get(skill, self.default_interact)

    @property
    def min_interact(self) -> float:
        vals = list(self.interact.values()) + [self.default_interact]
        return min(vals)


def object_of(word: str) -> str:
    """Object token targeted by an interaction word (``pick-remote`` -> ``remote``)."""
    parts = word.split("-", 1)
    return parts[1] if len(parts) == 2 else word


class Environment:
    """A known home whose container contents are hidden from planners.

    Ground truth is only reachable through :meth:`reveal`, which belongs to the
    execution side (simulator / harness).
    """

    def __init__(
        self,
        grid: GridMap,
        containers: Sequence[Container],
        robot_starts: Sequence[Cell],
        skills: SkillProfile = SkillProfile(),
        contents: Optional[Mapping[str, Iterable[str]]] = None,
        size_class: Optional[str] = None,
    ):
        self.map = grid
        self.containers: Tuple[Container, ...] = tuple(containers)
        self.robot_starts: Tuple[Cell, ...] = tuple(tuple(c) for c in robot_starts)
        self.skills = skills
        self.size_class = size_class or classify_size(grid.area)
        contents = contents or {}
        self._contents: Dict[str, FrozenSet[str]] = {
            c.id: frozenset(contents.get(c.id, ())) for c in self.containers
        }
        self._by_id = {c.id: c for c in self.containers}
        self._fields: Dict[str, List[List[int]]] = {}
        self._paths: Dict[Tuple[Cell, str], Tuple[Cell, ...]] = {}
        self._validate()

    # -- invariants -------------------------------------------------------
    def _validate(self) -> None:
        if not self.robot_starts:
            raise InvalidEnvironment("at least one robot start is required", "robot_starts")
        if len(self._by_id) != len(self.containers):
            raise InvalidEnvironment("container ids must be unique", "containers")
        if self.size_class not in SIZE_CLASSES:
            raise InvalidEnvironment(f"unknown size class {self.size_class!r}", "size_class")
        for i, c in enumerate(self.containers):
            if not self.map.is_free(c.cell):
                raise InvalidEnvironment(f"container {c.id} sits on a blocked or out-of-bounds cell {c.cell}",
                                         f"containers[{i}].cell")
        for i, s in enumerate(self.robot_starts):
            if not self.map.is_free(s):
                raise InvalidEnvironment(f"robot start {s} is blocked or out of bounds", f"robot_starts[{i}]")
        if self.containers:
            ref = self.distance_field(self.containers[0].id)
            for i, c in enumerate(self.containers):
                if ref[c.cell[1]][c.cell[0]] < 0:
                    raise InvalidEnvironment(f"container {c.id} is disconnected", f"containers[{i}]")
            for i, s in enumerate(self.robot_starts):
                if ref[s[1]][s[0]] < 0:
                    raise InvalidEnvironment(f"robot start {s} is disconnected", f"robot_starts[{i}]")

    # -- queries ----------------------------------------------------------
    def container(self, cid: str) -> Container:
        return self._by_id[cid]

    @property
    def container_ids(self) -> Tuple[str, ...]:
        return tuple(c.id for c in self.containers)

    def distance_field(self, cid: str) -> List[List[int]]:
        f = self._fields.get(cid)
        if f is None:
            f = self._fields[cid] = self.map.distance_field(self._by_id[cid].cell)
        return f

    def steps(self, cell: Cell, cid: str) -> int:
        d = self.distance_field(cid)[cell[1]][cell[0]]
        if d < 0:
            raise UnreachableError(f"container {cid} unreachable from {cell}")
        return d

    def move_time(self, cell: Cell, cid: str) -> float:
        return self.steps(cell, cid) / self.skills.speed

    def path_to(self, cell: Cell, cid: str) -> Tuple[Cell, ...]:
        key = (cell, cid)
        p = self._paths.get(key)
        if p is None:
            self.steps(cell, cid)
            p = self._paths[key] = tuple(_descend(self.map, self.distance_field(cid), cell))
        return p

    def reveal(self, cid: str) -> FrozenSet[str]:
        """Ground-truth contents of a container. Execution side only."""
        return self._contents[cid]

    def objects(self) -> FrozenSet[str]:
        """Every object present somewhere in the home. Execution side only."""
        out: FrozenSet[str] = frozenset()
        for v in self._contents.values():
            out |= v
        return out

    # -- persistence ------------------------------------------------------
    def to_document(self) -> Dict[str, Any]:
        s = self.skills
        return {
            "map": {
                "width": self.map.width,
                "height": self.map.height,
                "cell_size": self.map.cell_size,
                "blocked": [list(c) for c in sorted(self.map.blocked, key=lambda c: (c[1], c[0]))],
            },
            "containers": [
                {"id": c.id, "kind": c.kind, "room": c.room, "cell": list(c.cell),
                 "contents": sorted(self._contents[c.id])}
                for c in self.containers
            ],
            "robot_starts": [list(c) for c in self.robot_starts],
            "skills": {
                "speed": s.speed,
                "search_duration": s.search_duration,
                "default_interact": s.default_interact,
                "interact": dict(sorted(s.interact.items())),
            },
            "size_class": self.size_class,
        }

    def checksum(self) -> str:
        return hashlib.sha256(dumps(self).encode()).hexdigest()[:16]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Environment):
            return NotImplemented
        return self.to_document() == other.to_document()

    def __repr__(self) -> str:
        return (f"Environment({self.map.width}x{self.map.height}, {self.size_class}, "
                f"{len(self.containers)} containers, {len(self.robot_starts)} starts)")


_CELL = {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2}

ENV_SCHEMA = {
    "type": "object",
    "required": ["map", "containers", "robot_starts", "skills"],
    "properties": {
        "map": {
            "type": "object",
            "required": ["width", "height", "blocked"],
            "properties": {
                "width": {"type": "integer", "minimum": 1},
                "height": {"type": "integer", "minimum": 1},
                "cell_size": {"type": "number", "exclusiveMinimum": 0},
                "blocked": {"type": "array", "items": _CELL},
            },
        },
        "containers": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "kind", "room", "cell", "contents"],
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "kind": {"type": "string"},
                    "room": {"type": "string"},
                    "cell": _CELL,
                    "contents": {"type": "array", "items": {"type": "string"}},
                },
            },
        },
        "robot_starts": {"type": "array", "items": _CELL, "minItems": 1},
        "skills": {
            "type": "object",
            "required": ["speed"],
            "properties": {
                "speed": {"type": "number", "exclusiveMinimum": 0},
                "search_duration": {"type": "number", "minimum": 0},
                "default_interact": {"type": "number", "minimum": 0},
                "interact": {"type": "object", "additionalProperties": {"type": "number", "minimum": 0}},
            },
        },
        "size_class": {"enum": list(SIZE_CLASSES)},
    },
}


def _schema_check(doc: Any, schema: Mapping) -> None:
    errors = sorted(jsonschema.Draft7Validator(schema).iter_errors(doc), key=lambda e: list(e.path))
    if errors:
        e = errors[0]
        path = ".".join(str(p) for p in e.path) or "<root>"
        if e.validator == "required":
            missing = e.message.split("'")[1]
            path = f"{path}.{missing}" if e.path else missing
        raise InvalidEnvironment(e.message, path)


def save(env: Environment) -> Dict[str, Any]:
    return env.to_document()


def load(doc: Mapping[str, Any]) -> Environment:
    """Build an environment from a document, validating schema and invariants."""
    _schema_check(doc, ENV_SCHEMA)
    m = doc["map"]
    grid = GridMap(m["width"], m["height"], frozenset(tuple(c) for c in m["blocked"]),
                   m.get("cell_size", 0.25))
    containers = [Container(c["id"], c["kind"], c["room"], tuple(c["cell"])) for c in doc["containers"]]
    contents = {c["id"]: c["contents"] for c in doc["containers"]}
    sk = doc["skills"]
    skills = SkillProfile(sk["speed"], sk.get("search_duration", 0.0), dict(sk.get("interact", {})),
                          sk.get("default_interact", 5.0))
    return Environment(grid, containers, [tuple(c) for c in doc["robot_starts"]], skills, contents,
                       doc.get("size_class"))


def dumps(env: Environment) -> str:
    return json.dumps(save(env), sort_keys=True, separators=(",", ":"))


def loads(text: str) -> Environment:
    return load(json.loads(text))
