"""Path reduction in the graph semigroup and Dyck reachability.

Every finite path of an automaton reduces, modulo the relations generated by
the matched-pair structure, to either zero or a normal form: a run of
pending return edges followed by a run of pending call edges.  Dyck
reachability asks which state pairs (p, q) admit a path from p to q whose
normal form has no pending edges at all.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterator, Sequence

from .model import CALL, INTERNAL, RETURN, DyckAutomaton, Edge, ModelError


@dataclass(frozen=True)
class NormalForm:
    """Reduced value of a path: zero, or pending returns then pending calls.

    ``zero`` normal forms carry no other data.  A non-zero form remembers
    the path endpoints and the surviving edge indices.
    """

    zero: bool
    src: str | None = None
    dst: str | None = None
    returns: tuple[int, ...] = ()
    calls: tuple[int, ...] = ()

    @staticmethod
    def unit(state: str) -> "NormalForm":
        return NormalForm(False, state, state)

    @property
    def is_dyck(self) -> bool:
        return not self.zero and not self.returns and not self.calls

    def __repr__(self) -> str:
        if self.zero:
            return "NormalForm(0)"
        return (
            f"NormalForm({self.src}->{self.dst}, returns={list(self.returns)}, "
            f"calls={list(self.calls)})"
        )


ZERO = NormalForm(True)


def is_path(aut: DyckAutomaton, edge_indices: Sequence[int]) -> bool:
    """True when the edges are consecutive in the graph."""
    for i, j in zip(edge_indices, edge_indices[1:]):
        if aut.edges[i].dst != aut.edges[j].src:
            return False
    return True


def reduce_path(aut: DyckAutomaton, edge_indices: Sequence[int]) -> NormalForm:
    """Reduce a path to its semigroup normal form with one stack sweep.

    A return edge cancels the most recent pending call when the pair is
    matched and kills the product when it is not; with no pending call it
    joins the pending-return prefix.  Internal edges vanish.  The empty
    path is not reducible without an anchor state; pass at least one edge.
    """
    if not edge_indices:
        raise ModelError("cannot reduce an empty path; no anchor state")
    if not is_path(aut, edge_indices):
        return ZERO
    src = aut.edges[edge_indices[0]].src
    dst = aut.edges[edge_indices[-1]].dst
    returns: list[int] = []
    calls: list[int] = []
    for i in edge_indices:
        kind = aut.edge_type(i)
        if kind == INTERNAL:
            continue
        if kind == CALL:
            calls.append(i)
            continue
        if calls:
            c = calls.pop()
            if (c, i) not in aut.matched:
                return ZERO
        else:
            returns.append(i)
    return NormalForm(False, src, dst, tuple(returns), tuple(calls))


def compose(aut: DyckAutomaton, x: NormalForm, y: NormalForm) -> NormalForm:
    """Multiply two normal forms; result is again a normal form."""
    if x.zero or y.zero:
        return ZERO
    if x.dst != y.src:
        return ZERO
    calls = list(x.calls)
    returns2 = list(y.returns)
    # cancel the call tail of x against the return head of y
    while calls and returns2:
        c = calls.pop()
        r = returns2.pop(0)
        if (c, r) not in aut.matched:
            return ZERO
    if calls:
        # x's surviving calls precede y's calls; y had no leftover returns
        return NormalForm(False, x.src, y.dst, x.returns, tuple(calls) + y.calls)
    return NormalForm(False, x.src, y.dst, x.returns + tuple(returns2), y.calls)


def is_admissible_path(aut: DyckAutomaton, edge_indices: Sequence[int]) -> bool:
    """A path is admissible when its normal form is non-zero."""
    if not edge_indices:
        return True
    return not reduce_path(aut, edge_indices).zero


def is_dyck_path(aut: DyckAutomaton, edge_indices: Sequence[int]) -> bool:
    """Non-zero reduction with no pending calls or returns."""
    if not edge_indices:
        return True
    return reduce_path(aut, edge_indices).is_dyck


def is_prime_dyck_path(aut: DyckAutomaton, edge_indices: Sequence[int]) -> bool:
    """A Dyck path none of whose proper non-empty prefixes is Dyck."""
    if not edge_indices or not is_dyck_path(aut, edge_indices):
        return False
    return not any(
        is_dyck_path(aut, edge_indices[:k]) for k in range(1, len(edge_indices))
    )


@dataclass
class _Derivation:
    """How a Dyck-reachable pair was first established (for witnesses)."""

    rule: str
    data: tuple = ()


class DyckReachability:
    """Least fixpoint of Dyck reachability with witness extraction.

    ``pairs`` holds all (p, q) joined by some Dyck path (equivalently the
    reflexive-transitive closure of internal steps, matched-wrap steps and
    composition).  ``used_edges(p, q)`` / ``used_pairs(p, q)`` saturate to
    the set of edges / matched pairs lying on at least one Dyck path from p
    to q.
    """

    def __init__(self, aut: DyckAutomaton) -> None:
        self.aut = aut
        self.pairs: set[tuple[str, str]] = set()
        self._first: dict[tuple[str, str], _Derivation] = {}
        self._nontrivial: dict[tuple[str, str], _Derivation] = {}
        self._succs: dict[str, set[str]] = {q: set() for q in aut.states}
        self._preds: dict[str, set[str]] = {q: set() for q in aut.states}
        self._compute()
        self._contexts: dict[tuple[str, str], set[tuple[str, str]]] = {}

    # -- fixpoint --------------------------------------------------------

    def _compute(self) -> None:
        aut = self.aut
        pairs = self.pairs
        first = self._first
        nontrivial = self._nontrivial
        work: deque[tuple[str, str]] = deque()

        def add(p: str, q: str, der: _Derivation) -> None:
            key = (p, q)
            if key not in pairs:
                pairs.add(key)
                first[key] = der
                self._succs[p].add(q)
                self._preds[q].add(p)
                work.append(key)
            if p == q and der.rule != "refl" and key not in nontrivial:
                nontrivial[key] = der

        for q in aut.states:
            add(q, q, _Derivation("refl"))
        for e in aut.internal_edges():
            add(e.src, e.dst, _Derivation("edge", (e.index,)))

        wraps: dict[tuple[str, str], list[tuple[int, int]]] = {}
        for c, r in sorted(aut.matched):
            ec, er = aut.edges[c], aut.edges[r]
            wraps.setdefault((ec.dst, er.src), []).append((c, r))

        while work:
            p, q = work.popleft()
            # wrap: (p,q) is the interior of a matched pair
            for (c, r) in wraps.get((p, q), ()):
                ec, er = self.aut.edges[c], self.aut.edges[r]
                add(ec.src, er.dst, _Derivation("wrap", (c, r, p, q)))
            # compose on the left and on the right
            for x in list(self._preds[p]):
                if (x, q) != (x, p):
                    add(x, q, _Derivation("compose", (x, p, q)))
            for y in list(self._succs[q]):
                if (p, y) != (p, q):
                    add(p, y, _Derivation("compose", (p, q, y)))

    def reachable(self, p: str, q: str) -> bool:
        return (p, q) in self.pairs

    # -- witnesses -------------------------------------------------------

    def witness(self, p: str, q: str) -> list[int] | None:
        """Some Dyck path p -> q as a list of edge indices, or None."""
        if (p, q) not in self.pairs:
            return None
        return self._expand((p, q), self._first[(p, q)])

    def nontrivial_witness(self, q: str) -> list[int] | None:
        """A non-empty Dyck cycle at q, if one exists."""
        der = self._nontrivial.get((q, q))
        if der is None:
            return None
        return self._expand((q, q), der)

    def _expand(self, key: tuple[str, str], der: _Derivation) -> list[int]:
        if der.rule == "refl":
            return []
        if der.rule == "edge":
            return [der.data[0]]
        if der.rule == "wrap":
            c, r, p, q = der.data
            inner = self._expand((p, q), self._first[(p, q)])
            return [c] + inner + [r]
        if der.rule == "compose":
            x, y, z = der.data
            left = self._expand((x, y), self._first[(x, y)])
            right = self._expand((y, z), self._first[(y, z)])
            return left + right
        raise AssertionError(der.rule)

    # -- saturated used-edge / used-pair sets ------------------------------

    def _hole_contexts(self, p: str, q: str) -> set[tuple[str, str]]:
        """All (s, t) such that some Dyck path from p to q can be written
        around a gap running from s to t.

        The gap starts at (p, q) itself, slides right over a Dyck segment at
        either end, and descends into matched wraps whose endpoints meet it.
        """
        key = (p, q)
        hit = self._contexts.get(key)
        if hit is not None:
            return hit
        if key not in self.pairs:
            self._contexts[key] = set()
            return self._contexts[key]
        descend: dict[tuple[str, str], list[tuple[str, str]]] = {}
        for c, r in self.aut.matched:
            ec, er = self.aut.edges[c], self.aut.edges[r]
            if (ec.dst, er.src) in self.pairs:
                descend.setdefault((ec.src, er.dst), []).append((ec.dst, er.src))
        out: set[tuple[str, str]] = {key}
        work = deque([key])
        while work:
            s, t = work.popleft()
            grow = [(s2, t) for s2 in self._succs[s]]
            grow.extend((s, t2) for t2 in self._preds[t])
            grow.extend(descend.get((s, t), ()))
            for k in grow:
                if k not in out:
                    out.add(k)
                    work.append(k)
        self._contexts[key] = out
        return out

    def used_edges(self, p: str, q: str) -> frozenset[int]:
        """Edges lying on at least one Dyck path from p to q."""
        ctx = self._hole_contexts(p, q)
        out: set[int] = set()
        for e in self.aut.internal_edges():
            if (e.src, e.dst) in ctx:
                out.add(e.index)
        for c, r in self.aut.matched:
            ec, er = self.aut.edges[c], self.aut.edges[r]
            if (ec.src, er.dst) in ctx and (ec.dst, er.src) in self.pairs:
                out.add(c)
                out.add(r)
        return frozenset(out)

    def used_pairs(self, p: str, q: str) -> frozenset[tuple[int, int]]:
        """Matched pairs with both members on a single Dyck path p -> q."""
        ctx = self._hole_contexts(p, q)
        out: set[tuple[int, int]] = set()
        for c, r in self.aut.matched:
            ec, er = self.aut.edges[c], self.aut.edges[r]
            if (ec.src, er.dst) in ctx and (ec.dst, er.src) in self.pairs:
                out.add((c, r))
        return frozenset(out)


def all_paths(aut: DyckAutomaton, length: int) -> Iterator[tuple[int, ...]]:
    """Every consecutive edge sequence of exactly the given length."""
    if length == 0:
        yield ()
        return
    by_src: dict[str, list[Edge]] = {}
    for e in aut.edges:
        by_src.setdefault(e.src, []).append(e)

    def extend(prefix: tuple[int, ...], last_dst: str, left: int) -> Iterator[tuple[int, ...]]:
        if left == 0:
            yield prefix
            return
        for e in by_src.get(last_dst, ()):
            yield from extend(prefix + (e.index,), e.dst, left - 1)

    for e in aut.edges:
        yield from extend((e.index,), e.dst, length - 1)


def admissible_paths(aut: DyckAutomaton, length: int) -> Iterator[tuple[int, ...]]:
    """Consecutive edge sequences of the given length with non-zero reduction.

    Prefix-prunes: every prefix of an admissible path is admissible.
    """
    if length == 0:
        yield ()
        return
    by_src: dict[str, list[Edge]] = {}
    for e in aut.edges:
        by_src.setdefault(e.src, []).append(e)

    def extend(prefix: tuple[int, ...], nf: NormalForm, left: int) -> Iterator[tuple[int, ...]]:
        if left == 0:
            yield prefix
            return
        for e in by_src.get(nf.dst, ()):
            step = reduce_path(aut, (e.index,))
            nxt = compose(aut, nf, step)
            if not nxt.zero:
                yield from extend(prefix + (e.index,), nxt, left - 1)

    for e in aut.edges:
        nf = reduce_path(aut, (e.index,))
        if not nf.zero:
            yield from extend((e.index,), nf, length - 1)
