"""Procedural homes: rectangular rooms split by walls with doorways.

Rooms are carved by recursive bisection of the house footprint. Each split
leaves a one-cell wall with a doorway, so every room stays reachable.
Container contents are drawn from a catalog of presence weights keyed by
(object, container kind, room type).
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from importlib import resources
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

from .world import (Cell, Container, Environment, GridMap, InvalidEnvironment, SkillProfile,
                    _schema_check, classify_size)

# desk-scale footprint ranges (m^2) and container counts per size class
AREA_RANGE = {"small": (40.0, 56.0), "medium": (72.0, 100.0), "large": (120.0, 150.0)}
CONTAINERS = {"small": (4, 5), "medium": (8, 8), "large": (12, 14)}
ROOMS = {"small": (2, 3), "medium": (4, 4), "large": (5, 5)}
ROOM_ORDER = ("livingroom", "kitchen", "bedroom", "bathroom", "diningroom", "bedroom")

DOOR_WIDTH = 3
MAX_RETRIES = 50


class GenerationError(RuntimeError):
    def __init__(self, seed, message: str):
        super().__init__(f"seed {seed}: {message}")
        self.seed = seed


CATALOG_SCHEMA = {
    "type": "object",
    "required": ["kinds", "rooms", "priors"],
    "properties": {
        "kinds": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "rooms": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "background": {"type": "number", "minimum": 0, "maximum": 1},
        "priors": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["object", "kind", "room", "weight"],
                "properties": {
                    "object": {"type": "string"},
                    "kind": {"type": "string"},
                    "room": {"type": "string"},
                    "weight": {"type": "number", "minimum": 0, "maximum": 1},
                },
            },
        },
    },
}


@dataclass(frozen=True)
class Catalog:
    """Object placement priors; ``weight`` is a per-container presence probability."""

    kinds: Tuple[str, ...]
    rooms: Tuple[str, ...]
    weights: Mapping[Tuple[str, str, str], float]
    background: float = 0.02

    @property
    def objects(self) -> Tuple[str, ...]:
        return tuple(sorted({o for o, _, _ in self.weights}))

    def kinds_in(self, room: str) -> List[str]:
        return sorted({k for _, k, r in self.weights if r == room})

    def weight(self, obj: str, kind: str, room: str) -> float:
        return self.weights.get((obj, kind, room), self.background)

    @classmethod
    def from_document(cls, doc: Mapping) -> "Catalog":
        _schema_check(doc, CATALOG_SCHEMA)
        w = {(p["object"], p["kind"], p["room"]): float(p["weight"]) for p in doc["priors"]}
        return cls(tuple(doc["kinds"]), tuple(doc["rooms"]), w, float(doc.get("background", 0.02)))

    def to_document(self) -> Dict:
        return {
            "kinds": list(self.kinds),
            "rooms": list(self.rooms),
            "background": self.background,
            "priors": [{"object": o, "kind": k, "room": r, "weight": v}
                       for (o, k, r), v in sorted(self.weights.items())],
        }


def default_catalog() -> Catalog:
    text = resources.files("taskweave").joinpath("data/catalog.json").read_text()
    return Catalog.from_document(json.loads(text))


Rect = Tuple[int, int, int, int]  # x0, y0, x1, y1 inclusive


def _split_rooms(rng: random.Random, w: int, h: int, n_rooms: int) -> Tuple[List[Rect], Set[Cell]]:
    rooms: List[Rect] = [(0, 0, w - 1, h - 1)]
    walls: Set[Cell] = set()
    while len(rooms) < n_rooms:
        rooms.sort(key=lambda r: (r[2] - r[0] + 1) * (r[3] - r[1] + 1))
        x0, y0, x1, y1 = rooms.pop()
        rw, rh = x1 - x0 + 1, y1 - y0 + 1
        vertical = rw >= rh
        span = rw if vertical else rh
        if span < 9:
            rooms.append((x0, y0, x1, y1))
            break
        cut = rng.randint(int(span * 0.38), int(span * 0.62))
        if vertical:
            wx = x0 + cut
            line = [(wx, y) for y in range(y0, y1 + 1)]
            a, b = (x0, y0, wx - 1, y1), (wx + 1, y0, x1, y1)
        else:
            wy = y0 + cut
            line = [(x, wy) for x in range(x0, x1 + 1)]
            a, b = (x0, y0, x1, wy - 1), (x0, wy + 1, x1, y1)
        d0 = rng.randint(1, len(line) - DOOR_WIDTH - 1)
        door = set(line[d0:d0 + DOOR_WIDTH])
        walls.update(c for c in line if c not in door)
        rooms += [a, b]
    return rooms, walls


def _container_cells(rng: random.Random, rect: Rect, grid: GridMap, taken: Set[Cell], k: int) -> List[Cell]:
    """Pick ``k`` cells along the room's inner perimeter, away from doorways."""
    x0, y0, x1, y1 = rect
    ring = [(x, y) for x in range(x0, x1 + 1) for y in range(y0, y1 + 1)
            if x in (x0, x1) or y in (y0, y1)]
    rng.shuffle(ring)
    out: List[Cell] = []
    for c in ring:
        if len(out) == k:
            break
        if not grid.is_free(c):
            continue
        if any(abs(c[0] - t[0]) + abs(c[1] - t[1]) < 3 for t in list(taken) + out):
            continue
        # a doorway cell has free cells on both sides of the wall line
        x, y = c
        if sum(grid.is_free(n) for n in ((x, y - 1), (x + 1, y), (x, y + 1), (x - 1, y))) < 2:
            continue
        out.append(c)
    return out


def generate(seed: int, size_class: str = "medium", catalog: Optional[Catalog] = None,
             cell_size: float = 0.25, skills: SkillProfile = SkillProfile(), n_robots: int = 3) -> Environment:
    """Deterministic procedural home for ``seed``."""
    if size_class not in AREA_RANGE:
        raise ValueError(f"unknown size class {size_class!r}")
    catalog = catalog or default_catalog()
    if not catalog.weights:
        raise ValueError("catalog is empty")
    for attempt in range(MAX_RETRIES):
        rng = random.Random(f"{seed}:{size_class}:{attempt}")
        try:
            env = _attempt(rng, size_class, catalog, cell_size, skills, n_robots)
        except (InvalidEnvironment, _Retry):
            continue
        return env
    raise GenerationError(seed, f"no valid {size_class} home after {MAX_RETRIES} attempts")


class _Retry(Exception):
    pass


def _attempt(rng: random.Random, size_class: str, catalog: Catalog, cell_size: float,
             skills: SkillProfile, n_robots: int) -> Environment:
    lo, hi = AREA_RANGE[size_class]
    area = rng.uniform(lo, hi)
    aspect = rng.uniform(1.0, 1.6)
    cells = area / cell_size ** 2
    w = max(8, round(math.sqrt(cells * aspect)))
    h = max(8, round(cells / w))
    grid_area = w * h * cell_size ** 2
    if classify_size(grid_area) != size_class:
        raise _Retry()

    n_rooms = rng.randint(*ROOMS[size_class])
    rects, walls = _split_rooms(rng, w, h, n_rooms)
    grid = GridMap(w, h, frozenset(walls), cell_size)

    rects.sort(key=lambda r: -(r[2] - r[0] + 1) * (r[3] - r[1] + 1))
    room_types = [ROOM_ORDER[i % len(ROOM_ORDER)] for i in range(len(rects))]
    room_types = [t for t in room_types if catalog.kinds_in(t)] or list(catalog.rooms)
    while len(room_types) < len(rects):
        room_types.append(rng.choice(room_types))

    n_containers = rng.randint(*CONTAINERS[size_class])
    sizes = [(r[2] - r[0] + 1) * (r[3] - r[1] + 1) for r in rects]
    quota = [1] * len(rects)
    for _ in range(n_containers - len(rects)):
        # largest remaining area per container gets the next one
        i = max(range(len(rects)), key=lambda j: (sizes[j] / (quota[j] + 1), -j))
        quota[i] += 1

    containers: List[Container] = []
    taken: Set[Cell] = set()
    counters: Dict[str, int] = {}
    for rect, room, k in zip(rects, room_types, quota):
        kinds = catalog.kinds_in(room)
        cells = _container_cells(rng, rect, grid, taken, k)
        if len(cells) < k:
            raise _Retry()
        # distinct kinds first, then repeats
        order = kinds[:]
        rng.shuffle(order)
        for i, cell in enumerate(cells):
            kind = order[i] if i < len(order) else rng.choice(kinds)
            n = counters.get(kind, 0)
            counters[kind] = n + 1
            containers.append(Container(f"{kind}-{n}", kind, room, cell))
            taken.add(cell)

    contents: Dict[str, List[str]] = {}
    for c in containers:
        contents[c.id] = [o for o in catalog.objects if rng.random() < catalog.weight(o, c.kind, c.room)]
    if len({o for v in contents.values() for o in v}) < 4:
        raise _Retry()

    # robots start side by side in the largest room
    x0, y0, x1, y1 = rects[0]
    for _ in range(100):
        s = (rng.randint(x0 + 1, x1 - 2), rng.randint(y0 + 1, y1 - 1))
        starts = [(s[0] + i, s[1]) for i in range(n_robots)]
        if all(grid.is_free(c) and c not in taken for c in starts):
            break
    else:
        raise _Retry()

    return Environment(grid, containers, starts, skills, contents, size_class)
