"""Object-location likelihoods P_S(container, word).

Models answer "how likely is ``obj`` inside container ``cid`` of ``env``".
The count-based :class:`FrequencyModel` conditions on (container kind, room
type) so it transfers across homes; :class:`OracleModel` peeks at ground
truth and exists for tests and upper-bound experiments.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

from .world import Environment, object_of

DEFAULT_ALPHA = 1.0
DEFAULT_EPS = 0.01


class LikelihoodModel:
    """Interface shared by every estimator."""

    eps: float = DEFAULT_EPS

    def probability(self, env: Environment, cid: str, obj: str) -> float:
        raise NotImplementedError

    def p_s(self, env: Environment, cid: str, word: str) -> float:
        return self.probability(env, cid, object_of(word))


def _clamp(p: float, eps: float) -> float:
    return min(max(p, eps), 1.0 - eps)


@dataclass(frozen=True)
class FrequencyModel(LikelihoodModel):
    counts: Mapping[Tuple[str, str, str], Tuple[int, int]]
    alpha: float = DEFAULT_ALPHA
    eps: float = DEFAULT_EPS
    kind_room_totals: Mapping[Tuple[str, str], int] = field(default_factory=dict)

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if not 0 < self.eps < 0.5:
            raise ValueError("eps must lie in (0, 0.5)")

    def estimate(self, kind: str, room: str, obj: str) -> float:
        present, total = self.counts.get((obj, kind, room), (0, self.kind_room_totals.get((kind, room), 0)))
        return _clamp((present + self.alpha) / (total + 2 * self.alpha), self.eps)

    def probability(self, env: Environment, cid: str, obj: str) -> float:
        c = env.container(cid)
        return self.estimate(c.kind, c.room, obj)

    def to_document(self) -> Dict:
        return {
            "alpha": self.alpha,
            "eps": self.eps,
            "totals": [{"kind": k, "room": r, "total": t} for (k, r), t in sorted(self.kind_room_totals.items())],
            "counts": [{"object": o, "kind": k, "room": r, "present": p, "total": t}
                       for (o, k, r), (p, t) in sorted(self.counts.items())],
        }

    @classmethod
    def from_document(cls, doc: Mapping) -> "FrequencyModel":
        counts = {(c["object"], c["kind"], c["room"]): (int(c["present"]), int(c["total"])) for c in doc["counts"]}
        totals = {(t["kind"], t["room"]): int(t["total"]) for t in doc.get("totals", [])}
        return cls(counts, float(doc["alpha"]), float(doc["eps"]), totals)

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_document(), f, indent=1, sort_keys=True)

    @classmethod
    def load(cls, path) -> "FrequencyModel":
        with open(path) as f:
            return cls.from_document(json.load(f))


def train(envs: Sequence[Environment], alpha: float = DEFAULT_ALPHA, eps: float = DEFAULT_EPS,
          vocabulary: Optional[Iterable[str]] = None) -> FrequencyModel:
    """Tally, per (object, kind, room), how many containers held the object."""
    if not envs:
        raise ValueError("need at least one environment")
    vocab = set(vocabulary) if vocabulary is not None else set()
    if vocabulary is None:
        for env in envs:
            vocab |= env.objects()
    if not vocab:
        raise ValueError("empty object vocabulary")
    totals: Dict[Tuple[str, str], int] = {}
    present: Dict[Tuple[str, str, str], int] = {}
    for env in envs:
        for c in env.containers:
            key = (c.kind, c.room)
            totals[key] = totals.get(key, 0) + 1
            for o in env.reveal(c.id):
                if o in vocab:
                    present[(o, c.kind, c.room)] = present.get((o, c.kind, c.room), 0) + 1
    counts = {(o, k, r): (present.get((o, k, r), 0), t) for (k, r), t in totals.items() for o in sorted(vocab)}
    return FrequencyModel(counts, alpha, eps, totals)


@dataclass(frozen=True)
class OracleModel(LikelihoodModel):
    """Ground-truth likelihoods, optionally flipped with probability ``noise``."""

    env: Environment
    noise: float = 0.0
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        if not 0 <= self.noise < 0.5:
            raise ValueError("noise must lie in [0, 0.5)")

    def probability(self, env: Environment, cid: str, obj: str) -> float:
        p = 1.0 - self.eps if obj in self.env.reveal(cid) else self.eps
        return (1.0 - self.noise) * p + self.noise * (1.0 - p)


def oracle_model(env: Environment, noise: float = 0.0, eps: float = DEFAULT_EPS) -> OracleModel:
    return OracleModel(env, noise, eps)


class ConstantModel(LikelihoodModel):
    """Fixed table keyed by (container id, object); fallback for unknown pairs."""

    def __init__(self, table: Mapping[Tuple[str, str], float], default: float = 0.5, eps: float = DEFAULT_EPS):
        self.table = dict(table)
        self.default = default
        self.eps = eps

    def probability(self, env: Environment, cid: str, obj: str) -> float:
        return self.table.get((cid, obj), self.default)


class CachedModel(LikelihoodModel):
    """Memoizes another model for a single environment (planner hot path)."""

    def __init__(self, inner: LikelihoodModel, env: Environment):
        self.inner = inner
        self.env = env
        self.eps = inner.eps
        self._cache: Dict[Tuple[str, str], float] = {}

    def probability(self, env: Environment, cid: str, obj: str) -> float:
        key = (cid, obj)
        p = self._cache.get(key)
        if p is None:
            p = self._cache[key] = self.inner.probability(env, cid, obj)
        return p
