"""Locality and weak locality of Dyck automata.

An automaton is (m, a)-local when any two paths of length m + a carrying the
same label word pass through the same state right after their first m edges.
Weak locality asks this only for admissible paths.  With m = a = 0 the
condition degenerates to having at most one state.
"""

from __future__ import annotations

from typing import Iterator

from .model import DyckAutomaton
from .words import Config, _advance_edge, admissible_words, centered_blocks


def _joint_steps(aut: DyckAutomaton, p: str, q: str) -> Iterator[tuple[str, str]]:
    """Successor state pairs under one step with a shared label."""
    for e in aut.out_edges(p):
        for f in aut.out_edges(q):
            if e.label == f.label:
                yield (e.dst, f.dst)


def is_local(aut: DyckAutomaton, m: int, a: int) -> bool:
    """Label words of length m + a pin down the state after m edges."""
    if m < 0 or a < 0:
        raise ValueError("memory and anticipation must be non-negative")
    pairs = {(p, q) for p in aut.states for q in aut.states}
    for _ in range(m):
        pairs = {nxt for (p, q) in pairs for nxt in _joint_steps(aut, p, q)}
    # pairs now holds anchors of label-equal path pairs of length m;
    # alive holds anchors admitting a label-equal joint continuation of
    # length a
    alive = {(p, q) for p in aut.states for q in aut.states}
    for _ in range(a):
        prev = alive
        alive = {
            (p, q)
            for p in aut.states
            for q in aut.states
            if any(nxt in prev for nxt in _joint_steps(aut, p, q))
        }
    return not any(p != q and (p, q) in alive for (p, q) in pairs)


def _joint_admissible_steps(
    aut: DyckAutomaton, c1: Config, c2: Config
) -> Iterator[tuple[Config, Config]]:
    for e in aut.out_edges(c1[0]):
        n1 = _advance_edge(aut, c1, e)
        if n1 is None:
            continue
        for f in aut.out_edges(c2[0]):
            if f.label != e.label:
                continue
            n2 = _advance_edge(aut, c2, f)
            if n2 is not None:
                yield (n1, n2)


def is_weak_local(aut: DyckAutomaton, m: int, a: int) -> bool:
    """As is_local, but quantified over admissible paths only."""
    if m < 0 or a < 0:
        raise ValueError("memory and anticipation must be non-negative")
    pairs: set[tuple[Config, Config]] = {
        ((p, ()), (q, ())) for p in aut.states for q in aut.states
    }
    for _ in range(m):
        pairs = {
            nxt for (c1, c2) in pairs for nxt in _joint_admissible_steps(aut, c1, c2)
        }
    memo: dict[tuple[Config, Config, int], bool] = {}

    def can_continue(c1: Config, c2: Config, left: int) -> bool:
        if left == 0:
            return True
        key = (c1, c2, left)
        hit = memo.get(key)
        if hit is not None:
            return hit
        memo[key] = False
        ok = any(
            can_continue(n1, n2, left - 1)
            for (n1, n2) in _joint_admissible_steps(aut, c1, c2)
        )
        memo[key] = ok
        return ok

    for (c1, c2) in pairs:
        if c1[0] != c2[0] and can_continue(c1, c2, a):
            return False
    return True


def is_deterministic(aut: DyckAutomaton) -> bool:
    """At most one edge per (source state, label)."""
    seen: set[tuple[str, object]] = set()
    for e in aut.edges:
        key = (e.src, e.label)
        if key in seen:
            return False
        seen.add(key)
    return True


def minimal_locality(
    aut: DyckAutomaton, max_m: int = 6, max_a: int = 6, weak: bool = False
) -> tuple[int, int] | None:
    """Least (m, a) in the order (m + a, m) making the automaton local,
    with m bounded by max_m and a by max_a; None when every candidate
    fails."""
    check = is_weak_local if weak else is_local
    for total in range(max_m + max_a + 1):
        for m in range(min(total, max_m) + 1):
            a = total - m
            if a <= max_a and check(aut, m, a):
                return (m, a)
    return None


def is_essential_automaton(aut: DyckAutomaton) -> bool:
    """Every edge lies on a bi-infinite admissible path and every matched
    pair is exercised by one."""
    from .surgery import essential_parts

    edges, pairs = essential_parts(aut)
    return len(edges) == len(aut.edges) and pairs == aut.matched


def is_normalized_bounded(aut: DyckAutomaton, length: int, margin: int) -> bool:
    """Every admissible word up to the given length already occurs as the
    centre of a longer admissible word (checked with the given margin)."""
    for n in range(length + 1):
        if not admissible_words(aut, n) <= centered_blocks(aut, n, margin):
            return False
    return True
