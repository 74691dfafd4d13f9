"""Syntactically co-safe LTL: parsing, formula progression and DFA compilation.

Tasks are written in a small text grammar::

    F pick-remote && F pick-pillow
    (!i-b U i-a) && F i-b

Operators, tightest first: ``!`` (atoms only), ``U``, ``F``, ``&&``, ``||``.
Binary operators are left-associative.

The compiled automaton steps on one atomic proposition at a time: the team
finishes exactly one interaction per event, so the alphabet is the set of
propositions rather than its powerset.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

__all__ = [
    "Atom",
    "Not",
    "And",
    "Or",
    "Eventually",
    "Until",
    "TRUE",
    "FALSE",
    "Formula",
    "Dfa",
    "ParseError",
    "NotCoSafeError",
    "UnsatisfiableError",
    "parse",
    "atoms",
    "progress",
    "normalize",
    "compile_formula",
    "compile_task",
    "advance",
    "relevant_words",
    "distance_to_accept",
    "to_dot",
]

ATOM_RE = re.compile(r"[a-z][a-z0-9-]*")


class ParseError(ValueError):
    """Malformed task string. ``position`` is the 0-based character offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class NotCoSafeError(ParseError):
    """Negation applied to something other than an atomic proposition."""


class UnsatisfiableError(ValueError):
    """No accepting state is reachable from the initial state."""


# --------------------------------------------------------------------------
# Formula AST
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class _Const:
    value: bool

    def __str__(self) -> str:
        return "true" if self.value else "false"


TRUE = _Const(True)
FALSE = _Const(False)


@dataclass(frozen=True)
class Atom:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Not:
    atom: Atom

    def __str__(self) -> str:
        return f"!{self.atom}"


@dataclass(frozen=True)
class And:
    children: Tuple["Formula", ...]

    def __str__(self) -> str:
        return "(" + " && ".join(str(c) for c in self.children) + ")"


@dataclass(frozen=True)
class Or:
    children: Tuple["Formula", ...]

    def __str__(self) -> str:
        return "(" + " || ".join(str(c) for c in self.children) + ")"


@dataclass(frozen=True)
class Eventually:
    child: "Formula"

    def __str__(self) -> str:
        return f"F {_wrap(self.child)}"


@dataclass(frozen=True)
class Until:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return f"({_wrap(self.left)} U {_wrap(self.right)})"


Formula = Union[_Const, Atom, Not, And, Or, Eventually, Until]


def _wrap(f: Formula) -> str:
    s = str(f)
    if isinstance(f, Eventually):
        return f"({s})"
    return s


def atoms(f: Formula) -> FrozenSet[str]:
    """Names of every atomic proposition appearing in ``f``."""
    if isinstance(f, Atom):
        return frozenset([f.name])
    if isinstance(f, Not):
        return frozenset([f.atom.name])
    if isinstance(f, (And, Or)):
        out: FrozenSet[str] = frozenset()
        for c in f.children:
            out |= atoms(c)
        return out
    if isinstance(f, Eventually):
        return atoms(f.child)
    if isinstance(f, Until):
        return atoms(f.left) | atoms(f.right)
    return frozenset()


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(?:(&&)|(\|\|)|([!()])|(F|U)(?![a-zA-Z0-9-])|([a-z][a-z0-9-]*)|(true|false))")


def _tokenize(text: str) -> List[Tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastindex)
        value = m.group(m.lastindex)
        if m.lastindex == 5 and value in ("true", "false"):
            kind = "const"
        else:
            kind = {1: "op", 2: "op", 3: "op", 4: "op", 5: "atom", 6: "const"}[m.lastindex]
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(("eof", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> Tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self) -> Tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str) -> None:
        kind, v, pos = self.take()
        if v != value or kind != "op":
            raise ParseError(f"expected {value!r}, found {v or 'end of input'!r}", pos)

    def parse(self) -> Formula:
        f = self.disjunction()
        kind, v, pos = self.peek()
        if kind != "eof":
            raise ParseError(f"unexpected token {v!r}", pos)
        return f

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.peek()[1] == "||":
            self.take()
            f = Or((f, self.conjunction()))
        return f

    def conjunction(self) -> Formula:
        f = self.eventually()
        while self.peek()[1] == "&&":
            self.take()
            f = And((f, self.eventually()))
        return f

    def eventually(self) -> Formula:
        if self.peek()[1] == "F" and self.peek()[0] == "op":
            self.take()
            return Eventually(self.eventually())
        return self.until()

    def until(self) -> Formula:
        f = self.unary()
        while self.peek()[1] == "U" and self.peek()[0] == "op":
            self.take()
            f = Until(f, self.unary())
        return f

    def unary(self) -> Formula:
        kind, v, pos = self.take()
        if kind == "atom":
            return Atom(v)
        if kind == "const":
            return TRUE if v == "true" else FALSE
        if v == "!":
            nkind, nv, npos = self.peek()
            if nkind != "atom":
                raise NotCoSafeError("negation of a non-atom is not syntactically co-safe", pos)
            self.take()
            return Not(Atom(nv))
        if v == "(":
            f = self.disjunction()
            self.expect(")")
            return f
        if v == "F":
            # `F` inside an until operand: a U F b
            return Eventually(self.unary())
        raise ParseError(f"unexpected token {v or 'end of input'!r}", pos)


def parse(text: str) -> Formula:
    """Parse a task string into a formula AST (binary ``And``/``Or`` nodes)."""
    return _Parser(text).parse()


# --------------------------------------------------------------------------
# Normalization and progression
# --------------------------------------------------------------------------
#
# Progressed formulas are kept as a minimal disjunctive normal form over
# "leaves": literals and temporal subformulas. Negation only sits on atoms, so
# every formula is a monotone function of its leaves and the set of minimal
# terms is a canonical form. Progression only ever produces leaves from the
# original formula's closure, which keeps the reachable state set finite.

Term = FrozenSet[Formula]
Dnf = FrozenSet[Term]

_DNF_TRUE: Dnf = frozenset([frozenset()])
_DNF_FALSE: Dnf = frozenset()


def _minimal(terms: Iterable[Term]) -> Dnf:
    """Drop every term that strictly contains another (absorption)."""
    ts = sorted(set(terms), key=len)
    kept: List[Term] = []
    for t in ts:
        if not any(k <= t for k in kept):
            kept.append(t)
    return frozenset(kept)


def _dnf_or(parts: Iterable[Dnf]) -> Dnf:
    out = set()
    for p in parts:
        if p == _DNF_TRUE:
            return _DNF_TRUE
        out |= p
    return _minimal(out)


def _dnf_and(parts: Iterable[Dnf]) -> Dnf:
    acc = _DNF_TRUE
    for p in parts:
        if not p:
            return _DNF_FALSE
        acc = _minimal(a | b for a in acc for b in p)
    return acc


def _to_dnf(f: Formula) -> Dnf:
    if f == TRUE:
        return _DNF_TRUE
    if f == FALSE:
        return _DNF_FALSE
    if isinstance(f, And):
        return _dnf_and(_to_dnf(c) for c in f.children)
    if isinstance(f, Or):
        return _dnf_or(_to_dnf(c) for c in f.children)
    if isinstance(f, Eventually):
        c = _to_dnf(f.child)
        if c in (_DNF_TRUE, _DNF_FALSE):
            return c
        return frozenset([frozenset([Eventually(_from_dnf(c))])])
    if isinstance(f, Until):
        left, right = _to_dnf(f.left), _to_dnf(f.right)
        if right in (_DNF_TRUE, _DNF_FALSE) or left == _DNF_FALSE:
            return right
        if left == _DNF_TRUE:
            return frozenset([frozenset([Eventually(_from_dnf(right))])])
        return frozenset([frozenset([Until(_from_dnf(left), _from_dnf(right))])])
    return frozenset([frozenset([f])])


def _key(f: Formula) -> str:
    return str(f)


def _from_dnf(d: Dnf) -> Formula:
    if d == _DNF_TRUE:
        return TRUE
    if not d:
        return FALSE
    terms = []
    for t in d:
        leaves = sorted(t, key=_key)
        terms.append(leaves[0] if len(leaves) == 1 else And(tuple(leaves)))
    terms.sort(key=_key)
    return terms[0] if len(terms) == 1 else Or(tuple(terms))


def normalize(f: Formula) -> Formula:
    """Canonical form: minimal DNF with sorted terms; constants folded."""
    return _from_dnf(_to_dnf(f))


def _progress_leaf(f: Formula, word: str) -> Dnf:
    if isinstance(f, Atom):
        return _DNF_TRUE if f.name == word else _DNF_FALSE
    if isinstance(f, Not):
        return _DNF_FALSE if f.atom.name == word else _DNF_TRUE
    if isinstance(f, Eventually):
        return _dnf_or((_progress_dnf(_to_dnf(f.child), word), frozenset([frozenset([f])])))
    if isinstance(f, Until):
        stay = _dnf_and((_progress_dnf(_to_dnf(f.left), word), frozenset([frozenset([f])])))
        return _dnf_or((_progress_dnf(_to_dnf(f.right), word), stay))
    raise TypeError(f"not a formula leaf: {f!r}")


def _progress_dnf(d: Dnf, word: str) -> Dnf:
    return _dnf_or(_dnf_and(_progress_leaf(leaf, word) for leaf in term) for term in d)


def progress(f: Formula, word: str) -> Formula:
    """The obligation left after observing ``word``, in canonical form."""
    if not isinstance(f, (_Const, Atom, Not, And, Or, Eventually, Until)):
        raise TypeError(f"not a formula: {f!r}")
    return _from_dnf(_progress_dnf(_to_dnf(f), word))


# --------------------------------------------------------------------------
# DFA
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Dfa:
    """Minimal task monitor.

    States are integers ``0..n_states-1``; ``0`` is the initial state. Live
    states are numbered in depth-first preorder over alphabetically sorted
    words; the rejecting sink, when present, takes the last index.
    """

    alphabet: Tuple[str, ...]
    n_states: int
    initial: int
    accepting: FrozenSet[int]
    sink: Optional[int]
    table: Tuple[Tuple[int, ...], ...]
    labels: Tuple[str, ...] = ()

    @property
    def states(self) -> range:
        return range(self.n_states)

    def word_index(self, word: str) -> int:
        try:
            return self._index[word]
        except KeyError:
            raise KeyError(f"word {word!r} is not in the alphabet {list(self.alphabet)}") from None

    @property
    def _index(self) -> Dict[str, int]:
        idx = self.__dict__.get("_idx_cache")
        if idx is None:
            idx = {w: i for i, w in enumerate(self.alphabet)}
            object.__setattr__(self, "_idx_cache", idx)
        return idx

    def step(self, state: int, word: str) -> int:
        return self.table[state][self.word_index(word)]

    def is_accepting(self, state: int) -> bool:
        return state in self.accepting

    def is_sink(self, state: int) -> bool:
        return state == self.sink

    def accepts(self, words: Sequence[str]) -> bool:
        z = self.initial
        for w in words:
            z = self.step(z, w)
        return z in self.accepting

    # cached per-state queries; the automaton itself is immutable
    def _cached(self, name: str, build):
        cache = self.__dict__.get("_q_cache")
        if cache is None:
            cache = {}
            object.__setattr__(self, "_q_cache", cache)
        if name not in cache:
            cache[name] = build()
        return cache[name]

    def relevant(self, state: int) -> Tuple[str, ...]:
        return self._cached("relevant", self._all_relevant)[state]

    def distance(self, state: int) -> Optional[int]:
        return self._cached("distance", self._all_distances)[state]

    def _all_distances(self) -> Tuple[Optional[int], ...]:
        rev: List[List[int]] = [[] for _ in self.states]
        for z in self.states:
            for nz in self.table[z]:
                rev[nz].append(z)
        dist: List[Optional[int]] = [None] * self.n_states
        q = deque()
        for z in sorted(self.accepting):
            dist[z] = 0
            q.append(z)
        while q:
            z = q.popleft()
            for pz in rev[z]:
                if dist[pz] is None:
                    dist[pz] = dist[z] + 1
                    q.append(pz)
        return tuple(dist)

    def _all_relevant(self) -> Tuple[Tuple[str, ...], ...]:
        dist = self._cached("distance", self._all_distances)
        out = []
        for z in self.states:
            words = []
            if z != self.sink:
                for w, nz in zip(self.alphabet, self.table[z]):
                    if nz != z and nz != self.sink and dist[nz] is not None:
                        words.append(w)
            out.append(tuple(words))
        return tuple(out)


def compile_formula(formula: Formula, alphabet: Iterable[str]) -> Dfa:
    """Compile a co-safe formula into a minimal single-word DFA.

    Raises ``UnsatisfiableError`` when no word sequence reaches acceptance.
    """
    alphabet = tuple(sorted(set(alphabet)))
    missing = atoms(formula) - set(alphabet)
    if missing:
        raise ValueError(f"alphabet is missing atoms {sorted(missing)}")
    for w in alphabet:
        if not ATOM_RE.fullmatch(w):
            raise ValueError(f"invalid atomic proposition {w!r}")

    # explore progressed formulas
    start = normalize(formula)
    ids: Dict[Formula, int] = {start: 0}
    forms: List[Formula] = [start]
    trans: List[List[int]] = []
    q = deque([0])
    while q:
        i = q.popleft()
        row = []
        for w in alphabet:
            nf = progress(forms[i], w)
            j = ids.get(nf)
            if j is None:
                j = ids[nf] = len(forms)
                forms.append(nf)
                q.append(j)
            row.append(j)
        while len(trans) <= i:
            trans.append([])
        trans[i] = row

    n = len(forms)
    accepting = {i for i, f in enumerate(forms) if f == TRUE}

    # live = can reach acceptance
    rev: List[List[int]] = [[] for _ in range(n)]
    for i in range(n):
        for j in trans[i]:
            rev[j].append(i)
    live = set(accepting)
    q = deque(accepting)
    while q:
        j = q.popleft()
        for i in rev[j]:
            if i not in live:
                live.add(i)
                q.append(i)
    if 0 not in live:
        raise UnsatisfiableError(f"formula {formula} is unsatisfiable over alphabet {list(alphabet)}")

    # Moore refinement; all dead states start in one block
    SINK = -1
    block = [(1 if i in accepting else 0) if i in live else SINK for i in range(n)]
    while True:
        sigs = {}
        new_block = []
        for i in range(n):
            if block[i] == SINK:
                new_block.append(SINK)
                continue
            sig = (block[i], tuple(block[j] for j in trans[i]))
            new_block.append(sigs.setdefault(sig, len(sigs)))
        if len(set(new_block)) == len(set(block)):
            block = new_block
            break
        block = new_block

    # renumber blocks in DFS preorder from the initial state
    rep: Dict[int, int] = {}
    for i in range(n):
        rep.setdefault(block[i], i)
    order: Dict[int, int] = {}
    stack = [block[0]]
    while stack:
        b = stack.pop()
        if b in order or b == SINK:
            continue
        order[b] = len(order)
        succ = [block[j] for j in trans[rep[b]]]
        for nb in reversed(succ):
            if nb not in order and nb != SINK:
                stack.append(nb)
    has_sink = any(b == SINK for b in block)
    sink = len(order) if has_sink else None
    n_states = len(order) + (1 if has_sink else 0)

    def ren(b: int) -> int:
        return sink if b == SINK else order[b]

    table: List[Tuple[int, ...]] = [()] * n_states
    labels: List[str] = [""] * n_states
    for b, k in order.items():
        table[k] = tuple(ren(block[j]) for j in trans[rep[b]])
        labels[k] = str(forms[rep[b]])
    if sink is not None:
        table[sink] = tuple([sink] * len(alphabet))
        labels[sink] = "false"
    acc = frozenset(order[block[i]] for i in accepting)
    return Dfa(alphabet, n_states, 0, acc, sink, tuple(table), tuple(labels))


def compile_task(text: str, alphabet: Optional[Iterable[str]] = None) -> Dfa:
    """Parse and compile; the alphabet defaults to the formula's own atoms."""
    f = parse(text)
    return compile_formula(f, atoms(f) if alphabet is None else alphabet)


def advance(dfa: Dfa, state: int, word: str) -> int:
    """One DFA step. Accepting states and the sink are absorbing."""
    return dfa.step(state, word)


def relevant_words(dfa: Dfa, state: int) -> FrozenSet[str]:
    """Words that move ``state`` to a different, still-live state."""
    return frozenset(dfa.relevant(state))


def distance_to_accept(dfa: Dfa, state: int) -> int:
    """Fewest words from ``state`` to an accepting state."""
    d = dfa.distance(state)
    if d is None:
        raise ValueError(f"state {state} cannot reach acceptance")
    return d


def to_dot(dfa: Dfa, name: str = "task") -> str:
    """Graphviz rendering; self-loops are omitted to keep the graph readable."""
    lines = [f"digraph {name} {{", "  rankdir=LR;", '  init [shape=point];']
    for z in dfa.states:
        shape = "doublecircle" if z in dfa.accepting else "circle"
        style = ", style=dashed" if z == dfa.sink else ""
        label = "sink" if z == dfa.sink else f"Z{z}"
        lines.append(f'  z{z} [shape={shape}, label="{label}"{style}];')
    lines.append(f"  init -> z{dfa.initial};")
    for z in dfa.states:
        edges: Dict[int, List[str]] = {}
        for w, nz in zip(dfa.alphabet, dfa.table[z]):
            if nz != z:
                edges.setdefault(nz, []).append(w)
        for nz, ws in sorted(edges.items()):
            lines.append(f'  z{z} -> z{nz} [label="{", ".join(ws)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
