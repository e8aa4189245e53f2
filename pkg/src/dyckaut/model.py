"""Typed alphabets, Dyck automata, block maps, and structural validation.

An automaton here is a finite labelled directed graph over a tri-partitioned
alphabet (call / return / internal letters) together with a relation of
matched (call edge, return edge) pairs.  Everything is immutable after
construction; operations return new automata.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Hashable, Iterable, Iterator, Mapping, Sequence

Symbol = Hashable
Word = tuple

CALL = "call"
RETURN = "return"
INTERNAL = "internal"
TYPES = (CALL, RETURN, INTERNAL)


class ModelError(ValueError):
    """Raised when a structural precondition is violated."""


@dataclass(frozen=True)
class TriAlphabet:
    """Alphabet split into call, return and internal symbols.

    Parts may be empty; symbols must be pairwise distinct across parts.
    Iteration order is the construction order (call, return, internal).
    """

    call: tuple
    ret: tuple
    internal: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "call", tuple(self.call))
        object.__setattr__(self, "ret", tuple(self.ret))
        object.__setattr__(self, "internal", tuple(self.internal))
        seen: dict[Symbol, str] = {}
        for part, name in ((self.call, CALL), (self.ret, RETURN), (self.internal, INTERNAL)):
            for s in part:
                if s in seen:
                    raise ModelError(f"symbol {s!r} occurs in both {seen[s]} and {name} parts")
                seen[s] = name
        object.__setattr__(self, "_types", seen)

    def type_of(self, symbol: Symbol) -> str:
        try:
            return self._types[symbol]  # type: ignore[attr-defined]
        except KeyError:
            raise ModelError(f"symbol {symbol!r} not in alphabet") from None

    def __contains__(self, symbol: Symbol) -> bool:
        return symbol in self._types  # type: ignore[attr-defined]

    def __iter__(self) -> Iterator[Symbol]:
        yield from self.call
        yield from self.ret
        yield from self.internal

    def __len__(self) -> int:
        return len(self.call) + len(self.ret) + len(self.internal)

    def part(self, kind: str) -> tuple:
        if kind == CALL:
            return self.call
        if kind == RETURN:
            return self.ret
        if kind == INTERNAL:
            return self.internal
        raise ModelError(f"unknown symbol type {kind!r}")


@dataclass(frozen=True)
class Edge:
    """A labelled edge.  ``index`` is its dense position in the edge list."""

    src: str
    label: Symbol
    dst: str
    index: int


class DyckAutomaton:
    """Labelled graph over a TriAlphabet plus a matched-pair relation.

    ``matched`` holds pairs of edge indices (call edge, return edge).
    States are strings; edges carry dense integer indices in list order.
    Instances are immutable; all transformations build new automata.
    """

    __slots__ = ("alphabet", "states", "edges", "matched", "_in", "_out", "_state_set")

    def __init__(
        self,
        alphabet: TriAlphabet,
        states: Sequence[str],
        edges: Iterable[tuple[str, Symbol, str]] | Iterable[Edge],
        matched: Iterable[tuple[int, int]] = (),
    ) -> None:
        self.alphabet = alphabet
        self.states: tuple[str, ...] = tuple(states)
        built = []
        for i, e in enumerate(edges):
            if isinstance(e, Edge):
                built.append(Edge(e.src, e.label, e.dst, i))
            else:
                src, label, dst = e
                built.append(Edge(src, label, dst, i))
        self.edges: tuple[Edge, ...] = tuple(built)
        self.matched: frozenset[tuple[int, int]] = frozenset(
            (int(c), int(r)) for c, r in matched
        )
        self._state_set = frozenset(self.states)
        inn: dict[str, list[Edge]] = {q: [] for q in self.states}
        out: dict[str, list[Edge]] = {q: [] for q in self.states}
        for e in self.edges:
            if e.src in out:
                out[e.src].append(e)
            if e.dst in inn:
                inn[e.dst].append(e)
        self._in = {q: tuple(v) for q, v in inn.items()}
        self._out = {q: tuple(v) for q, v in out.items()}

    # -- basic queries -------------------------------------------------

    def in_edges(self, state: str) -> tuple[Edge, ...]:
        return self._in[state]

    def out_edges(self, state: str) -> tuple[Edge, ...]:
        return self._out[state]

    def edge_type(self, index: int) -> str:
        return self.alphabet.type_of(self.edges[index].label)

    def call_edges(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if self.edge_type(e.index) == CALL)

    def return_edges(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if self.edge_type(e.index) == RETURN)

    def internal_edges(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if self.edge_type(e.index) == INTERNAL)

    def matched_returns(self, call_index: int) -> tuple[int, ...]:
        return tuple(r for c, r in sorted(self.matched) if c == call_index)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DyckAutomaton):
            return NotImplemented
        return (
            self.alphabet == other.alphabet
            and self.states == other.states
            and self.edges == other.edges
            and self.matched == other.matched
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return (
            f"DyckAutomaton({len(self.states)} states, {len(self.edges)} edges, "
            f"{len(self.matched)} matched pairs)"
        )


def validate(aut: DyckAutomaton) -> list[str]:
    """Return a list of structural violations; empty means well-formed.

    Checks: alphabet part disjointness is enforced at construction; here we
    check edge endpoints exist, labels are in the alphabet, matched pairs
    reference a call edge then a return edge, and state names are unique.
    """
    problems: list[str] = []
    seen_states = set()
    for q in aut.states:
        if q in seen_states:
            problems.append(f"duplicate state name {q!r}")
        seen_states.add(q)
    for e in aut.edges:
        if e.src not in seen_states:
            problems.append(f"edge {e.index}: unknown source state {e.src!r}")
        if e.dst not in seen_states:
            problems.append(f"edge {e.index}: unknown target state {e.dst!r}")
        if e.label not in aut.alphabet:
            problems.append(f"edge {e.index}: label {e.label!r} not in alphabet")
    n = len(aut.edges)
    for c, r in sorted(aut.matched):
        if not (0 <= c < n) or not (0 <= r < n):
            problems.append(f"matched pair ({c},{r}): edge index out of range")
            continue
        if aut.edge_type(c) != CALL:
            problems.append(f"matched pair ({c},{r}): edge {c} is not a call edge")
        if aut.edge_type(r) != RETURN:
            problems.append(f"matched pair ({c},{r}): edge {r} is not a return edge")
    return problems


def checked(aut: DyckAutomaton) -> DyckAutomaton:
    problems = validate(aut)
    if problems:
        raise ModelError("; ".join(problems))
    return aut


# -- edge graphs ------------------------------------------------------------


def is_edge_graph(aut: DyckAutomaton) -> bool:
    """True when every edge is labelled by its own index.

    Such an automaton presents an edge-Dyck shift: the alphabet is the edge
    set itself, partitioned by edge type.
    """
    for e in aut.edges:
        if e.label != e.index:
            return False
    parts = {CALL: [], RETURN: [], INTERNAL: []}
    for e in aut.edges:
        parts[aut.alphabet.type_of(e.label)].append(e.index)
    return (
        tuple(parts[CALL]) == aut.alphabet.call
        and tuple(parts[RETURN]) == aut.alphabet.ret
        and tuple(parts[INTERNAL]) == aut.alphabet.internal
    )


def make_edge_graph(
    states: Sequence[str],
    typed_edges: Iterable[tuple[str, str, str]],
    matched: Iterable[tuple[int, int]] = (),
) -> DyckAutomaton:
    """Build a self-labelled automaton from (src, type, dst) triples."""
    typed = list(typed_edges)
    call, ret, internal = [], [], []
    for i, (_, kind, _) in enumerate(typed):
        if kind == CALL:
            call.append(i)
        elif kind == RETURN:
            ret.append(i)
        elif kind == INTERNAL:
            internal.append(i)
        else:
            raise ModelError(f"unknown edge type {kind!r}")
    alphabet = TriAlphabet(tuple(call), tuple(ret), tuple(internal))
    edges = [(src, i, dst) for i, (src, _, dst) in enumerate(typed)]
    return checked(DyckAutomaton(alphabet, states, edges, matched))


def has_parallel_edges(aut: DyckAutomaton) -> bool:
    seen = set()
    for e in aut.edges:
        key = (e.src, e.dst)
        if key in seen:
            return True
        seen.add(key)
    return False


def edge_uniquify(aut: DyckAutomaton) -> DyckAutomaton:
    """Rebuild the automaton so any two states are joined by at most one edge.

    New states are pairs (state, incoming edge); an extra (state, none) copy
    keeps states without in-edges so the admissible-word language is
    preserved exactly.  Returns ``aut`` unchanged when already edge-unique.
    """
    if not has_parallel_edges(aut):
        return aut
    new_states: list[str] = []
    copies: dict[str, list[tuple[str, int | None]]] = {}
    for q in aut.states:
        ins = aut.in_edges(q)
        keys: list[tuple[str, int | None]] = (
            [(q, e.index) for e in ins] if ins else [(q, None)]
        )
        copies[q] = keys
        for q2, k in keys:
            new_states.append(f"{q2}|{k if k is not None else '-'}")

    def name(key: tuple[str, int | None]) -> str:
        q, k = key
        return f"{q}|{k if k is not None else '-'}"

    edges: list[tuple[str, Symbol, str]] = []
    origin: list[int] = []
    for f in aut.edges:
        target = name((f.dst, f.index))
        for key in copies[f.src]:
            edges.append((name(key), f.label, target))
            origin.append(f.index)
    matched = [
        (i, j)
        for i in range(len(edges))
        for j in range(len(edges))
        if (origin[i], origin[j]) in aut.matched
    ]
    return DyckAutomaton(aut.alphabet, new_states, edges, matched)


# -- block maps -------------------------------------------------------------


@dataclass(frozen=True)
class BlockMapSpec:
    """A sliding-window map with memory ``m`` and anticipation ``a``.

    ``table`` sends words of length m+a+1 (tuples of symbols) to single
    output symbols.  ``proper`` records that the output type always equals
    the type of the window's centre symbol.
    """

    m: int
    a: int
    table: Mapping[Word, Symbol]
    proper: bool = True

    def __post_init__(self) -> None:
        if self.m < 0 or self.a < 0:
            raise ModelError("memory and anticipation must be non-negative")
        w = self.m + self.a + 1
        for word in self.table:
            if len(word) != w:
                raise ModelError(
                    f"table key {word!r} has length {len(word)}, expected {w}"
                )
        object.__setattr__(self, "table", dict(self.table))

    @property
    def window(self) -> int:
        return self.m + self.a + 1

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BlockMapSpec):
            return NotImplemented
        return (
            self.m == other.m
            and self.a == other.a
            and self.proper == other.proper
            and dict(self.table) == dict(other.table)
        )


def apply_block_map(spec: BlockMapSpec, word: Sequence[Symbol]) -> Word:
    """Slide the map over ``word``; output has length len(word)-m-a.

    Raises ModelError when a window is missing from the table.
    """
    w = tuple(word)
    out = []
    for i in range(spec.m, len(w) - spec.a):
        window = w[i - spec.m : i + spec.a + 1]
        try:
            out.append(spec.table[window])
        except KeyError:
            raise ModelError(f"window {window!r} not in block map domain") from None
    return tuple(out)


@dataclass(frozen=True)
class Partition:
    """A partition of the in-edges (or out-edges) of one state.

    ``classes`` lists non-empty, disjoint tuples of edge indices whose union
    must be the full in-edge (side="in") or out-edge (side="out") set.
    """

    state: str
    classes: tuple[tuple[int, ...], ...]
    side: str = "in"

    def __post_init__(self) -> None:
        if self.side not in ("in", "out"):
            raise ModelError(f"partition side must be 'in' or 'out', got {self.side!r}")
        object.__setattr__(
            self, "classes", tuple(tuple(int(i) for i in c) for c in self.classes)
        )

    def class_of(self, edge_index: int) -> int:
        for k, cls in enumerate(self.classes):
            if edge_index in cls:
                return k
        raise ModelError(f"edge {edge_index} not in partition of state {self.state!r}")


def check_partition(aut: DyckAutomaton, part: Partition) -> None:
    if part.state not in aut.states:
        raise ModelError(f"unknown state {part.state!r}")
    pool = (
        aut.in_edges(part.state) if part.side == "in" else aut.out_edges(part.state)
    )
    expect = {e.index for e in pool}
    seen: set[int] = set()
    for cls in part.classes:
        if not cls:
            raise ModelError("partition classes must be non-empty")
        for i in cls:
            if i in seen:
                raise ModelError(f"edge {i} occurs in two partition classes")
            if i not in expect:
                raise ModelError(
                    f"edge {i} is not an {part.side}-edge of state {part.state!r}"
                )
            seen.add(i)
    if seen != expect:
        missing = sorted(expect - seen)
        raise ModelError(f"partition misses edges {missing}")
