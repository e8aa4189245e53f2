"""Automaton-level constructions: products, De Bruijn automata, window-set
presentations, edge presentations, block-map images, weak-local conversion,
higher-block presentations and the edge-graph conjugacy."""

from __future__ import annotations

from typing import Sequence

from .model import (
    CALL,
    INTERNAL,
    RETURN,
    BlockMapSpec,
    DyckAutomaton,
    ModelError,
    Symbol,
    TriAlphabet,
    Word,
    edge_uniquify,
    has_parallel_edges,
    make_edge_graph,
)
from .semigroup import admissible_paths, is_admissible_path
from .locality import is_local, is_weak_local, minimal_locality
from .words import (
    SldsSpec,
    admissible_words,
    all_words,
    extend_block_map,
    path_anchor,
)


def product(a1: DyckAutomaton, a2: DyckAutomaton) -> DyckAutomaton:
    """Synchronized product over the paired alphabet.

    Symbols are pairs of same-type letters; a pair of edges steps jointly
    and two product edges are matched exactly when both components are.
    """
    alphabet = TriAlphabet(
        call=tuple(
            (x, y) for x in a1.alphabet.part(CALL) for y in a2.alphabet.part(CALL)
        ),
        ret=tuple(
            (x, y) for x in a1.alphabet.part(RETURN) for y in a2.alphabet.part(RETURN)
        ),
        internal=tuple(
            (x, y)
            for x in a1.alphabet.part(INTERNAL)
            for y in a2.alphabet.part(INTERNAL)
        ),
    )
    states = [f"({p},{q})" for p in a1.states for q in a2.states]
    triples: list[tuple[str, Symbol, str]] = []
    carried: list[tuple[int, int]] = []
    for e1 in a1.edges:
        t1 = a1.edge_type(e1.index)
        for e2 in a2.edges:
            if a2.edge_type(e2.index) != t1:
                continue
            triples.append(
                (
                    f"({e1.src},{e2.src})",
                    (e1.label, e2.label),
                    f"({e1.dst},{e2.dst})",
                )
            )
            carried.append((e1.index, e2.index))
    matched = [
        (i, j)
        for i in range(len(triples))
        for j in range(len(triples))
        if (carried[i][0], carried[j][0]) in a1.matched
        and (carried[i][1], carried[j][1]) in a2.matched
    ]
    return DyckAutomaton(alphabet, states, triples, matched)


def product_intersection(a1: DyckAutomaton, a2: DyckAutomaton) -> DyckAutomaton:
    """Product restricted to the diagonal pairs (x,x) and projected back to
    the shared alphabet, presenting the intersection of the two languages."""
    if a1.alphabet != a2.alphabet:
        raise ModelError("intersection needs a shared alphabet")
    full = product(a1, a2)
    kept = [e for e in full.edges if e.label[0] == e.label[1]]
    index_map = {e.index: i for i, e in enumerate(kept)}
    triples = [(e.src, e.label[0], e.dst) for e in kept]
    matched = [
        (index_map[c], index_map[r])
        for (c, r) in full.matched
        if c in index_map and r in index_map
    ]
    return DyckAutomaton(a1.alphabet, full.states, triples, matched)


def _word_name(w: Word) -> str:
    return ",".join(str(x) for x in w) if w else "e"


def _de_bruijn_parts(
    alphabet: TriAlphabet, m: int, a: int
) -> tuple[list[str], list[tuple[str, Symbol, str]], list[Word]]:
    """States, edge triples and the full window carried by every edge."""
    letters = tuple(alphabet)
    words: list[Word] = [()]
    for _ in range(m + a):
        words = [w + (x,) for w in words for x in letters]

    def name(w: Word) -> str:
        return f"[{_word_name(w[:m])}|{_word_name(w[m:])}]"

    states = [name(w) for w in words]
    triples: list[tuple[str, Symbol, str]] = []
    windows: list[Word] = []
    for w in words:
        for c in letters:
            window = w + (c,)
            label = window[m]
            target = window[1:] if m + a else ()
            triples.append((name(w), label, name(target)))
            windows.append(window)
    return states, triples, windows


def de_bruijn(alphabet: TriAlphabet, m: int, a: int) -> DyckAutomaton:
    """The automaton whose states remember m past and a future letters and
    whose matching allows every call against every return; it accepts every
    properly typed word."""
    if m < 0 or a < 0:
        raise ModelError("memory and anticipation must be non-negative")
    states, triples, windows = _de_bruijn_parts(alphabet, m, a)
    matched = [
        (i, j)
        for i, wi in enumerate(windows)
        if alphabet.type_of(wi[m]) == CALL
        for j, wj in enumerate(windows)
        if alphabet.type_of(wj[m]) == RETURN
    ]
    return DyckAutomaton(alphabet, states, triples, matched)


def slds_automaton(spec: SldsSpec) -> DyckAutomaton:
    """Presentation of the shift cut out by forbidden windows and forbidden
    call/return window pairs: the De Bruijn automaton minus the forbidden
    windows, matched along the allowed pairs."""
    states, triples, windows = _de_bruijn_parts(spec.alphabet, spec.m, spec.a)
    kept = [i for i, w in enumerate(windows) if w not in spec.forbidden_blocks]
    index_map = {old: new for new, old in enumerate(kept)}
    matched = [
        (index_map[i], index_map[j])
        for i in kept
        if spec.alphabet.type_of(windows[i][spec.m]) == CALL
        for j in kept
        if spec.alphabet.type_of(windows[j][spec.m]) == RETURN
        if (windows[i], windows[j]) not in spec.forbidden_pairs
    ]
    return DyckAutomaton(
        spec.alphabet, states, [triples[i] for i in kept], matched
    )


def edge_presentation(
    aut: DyckAutomaton,
) -> tuple[DyckAutomaton, BlockMapSpec]:
    """Self-labelled copy of the automaton together with the labelling map.

    The copy reads edges instead of letters, keeps the matching as-is, and
    is always (1,0)-local; the returned letter-to-letter map projects its
    words back onto the input's."""
    typed = [(e.src, aut.edge_type(e.index), e.dst) for e in aut.edges]
    graph = make_edge_graph(aut.states, typed, aut.matched)
    projection = BlockMapSpec(
        0, 0, {(e.index,): e.label for e in aut.edges}
    )
    return graph, projection


def image_automaton(aut: DyckAutomaton, f: BlockMapSpec) -> DyckAutomaton:
    """Presentation of the image of the automaton's shift under a proper
    sliding map, built through the transducer pairing each read letter with
    the map's output and then discarding the read letter.

    The automaton must be local at the map's window; a weak-local automaton
    is converted first and the map extended to the wider window.
    """
    if not f.proper:
        raise ModelError("image construction needs a proper map")
    m, a = f.m, f.a
    if not is_local(aut, m, a):
        if not is_weak_local(aut, m, a):
            raise ModelError(f"automaton is not ({m}, {a})-local")
        aut = weak_local_to_local(aut, m, a)
        f = extend_block_map(f, aut, 2 * m, 2 * a)
        m, a = 2 * m, 2 * a

    by_type: dict[str, set[Symbol]] = {CALL: set(), RETURN: set(), INTERNAL: set()}
    for window, value in f.table.items():
        by_type[aut.alphabet.type_of(window[m])].add(value)
    overlap = (
        (by_type[CALL] & by_type[RETURN])
        | (by_type[CALL] & by_type[INTERNAL])
        | (by_type[RETURN] & by_type[INTERNAL])
    )
    if overlap:
        raise ModelError(f"map output {sorted(map(str, overlap))[0]!r} is not typed")
    alphabet = TriAlphabet(
        call=tuple(sorted(by_type[CALL], key=repr)),
        ret=tuple(sorted(by_type[RETURN], key=repr)),
        internal=tuple(sorted(by_type[INTERNAL], key=repr)),
    )

    letters = tuple(aut.alphabet)
    contexts: list[Word] = [()]
    for _ in range(m):
        contexts = [u + (x,) for u in contexts for x in letters]
    promises: list[Word] = [()]
    for _ in range(a):
        promises = [v + (x,) for v in promises for x in letters]

    def name(p: str, u: Word, v: Word) -> str:
        return f"({p}|{_word_name(u)}|{_word_name(v)})"

    states = [name(p, u, v) for p in aut.states for u in contexts for v in promises]
    triples: list[tuple[str, Symbol, str]] = []
    carried: list[int] = []
    for p in aut.states:
        for u in contexts:
            for v in promises:
                for e in aut.out_edges(p):
                    if a and e.label != v[0]:
                        continue
                    guesses: Sequence[Word] = (
                        [(c,) for c in letters] if a else [()]
                    )
                    for g in guesses:
                        window = u + (e.label,) + v[1:] + g if a else u + (e.label,)
                        value = f.table.get(window)
                        if value is None:
                            continue
                        u2 = (u + (e.label,))[-m:] if m else ()
                        v2 = v[1:] + g if a else ()
                        triples.append((name(p, u, v), value, name(e.dst, u2, v2)))
                        carried.append(e.index)
    matched = [
        (i, j)
        for i in range(len(triples))
        for j in range(len(triples))
        if (carried[i], carried[j]) in aut.matched
    ]
    return DyckAutomaton(alphabet, states, triples, matched)


def weak_local_to_local(aut: DyckAutomaton, m: int, a: int) -> DyckAutomaton:
    """Path-window presentation of a weak-local automaton.

    States are admissible paths of length m+a; a step slides the window one
    edge and reads the label just past the memory part.  The result is
    (2m,2a)-local and keeps the admissible words.
    """
    if not is_weak_local(aut, m, a):
        raise ModelError(f"automaton is not weakly ({m}, {a})-local")
    if m + a == 0:
        return DyckAutomaton(
            aut.alphabet,
            aut.states,
            [(e.src, e.label, e.dst) for e in aut.edges],
            aut.matched,
        )

    def name(path: tuple[int, ...]) -> str:
        return "~".join(str(i) for i in path)

    paths = [tuple(p) for p in admissible_paths(aut, m + a)]
    states = [name(p) for p in paths]
    known = set(paths)
    triples: list[tuple[str, Symbol, str]] = []
    carried: list[int] = []
    for p in paths:
        tail = aut.edges[p[-1]].dst
        for e in aut.out_edges(tail):
            combined = p + (e.index,)
            if combined[1:] not in known:
                continue
            if not is_admissible_path(aut, combined):
                continue
            consumed = combined[m]
            triples.append((name(p), aut.edges[consumed].label, name(combined[1:])))
            carried.append(consumed)
    matched = [
        (i, j)
        for i in range(len(triples))
        for j in range(len(triples))
        if (carried[i], carried[j]) in aut.matched
    ]
    return DyckAutomaton(aut.alphabet, states, triples, matched)


def higher_block_automaton(
    aut: DyckAutomaton, n: int, typing: str = "first"
) -> DyckAutomaton:
    """Presentation reading overlapping admissible n-blocks of the automaton.

    Block symbols are letter tuples; a block's type is the type of its first
    letter (or last, under ``typing="last"``), and two block edges are
    matched when the underlying edges at the typing coordinate are.
    """
    if n < 1:
        raise ModelError("block order must be at least 1")
    if typing not in ("first", "last"):
        raise ModelError("typing must be 'first' or 'last'")
    coord = 0 if typing == "first" else n - 1

    blocks = [tuple(p) for p in admissible_paths(aut, n)]
    symbols = sorted(
        {tuple(aut.edges[i].label for i in p) for p in blocks}, key=repr
    )
    kinds = {s: aut.alphabet.type_of(s[coord]) for s in symbols}
    alphabet = TriAlphabet(
        call=tuple(s for s in symbols if kinds[s] == CALL),
        ret=tuple(s for s in symbols if kinds[s] == RETURN),
        internal=tuple(s for s in symbols if kinds[s] == INTERNAL),
    )

    if n == 1:
        triples = [(e.src, (e.label,), e.dst) for e in aut.edges]
        carried = [e.index for e in aut.edges]
        states = list(aut.states)
    else:

        def name(path: tuple[int, ...]) -> str:
            return "~".join(str(i) for i in path)

        contexts = [tuple(p) for p in admissible_paths(aut, n - 1)]
        known = set(contexts)
        states = [name(p) for p in contexts]
        triples = []
        carried = []
        for p in blocks:
            if p[:-1] not in known or p[1:] not in known:
                continue
            triples.append(
                (
                    name(p[:-1]),
                    tuple(aut.edges[i].label for i in p),
                    name(p[1:]),
                )
            )
            carried.append(p[coord])
    matched = [
        (i, j)
        for i in range(len(triples))
        for j in range(len(triples))
        if (carried[i], carried[j]) in aut.matched
    ]
    return DyckAutomaton(alphabet, states, triples, matched)


def edge_dyck_of_local(
    aut: DyckAutomaton, m: int, a: int
) -> tuple[DyckAutomaton, BlockMapSpec, BlockMapSpec]:
    """The edge graph of a parallel-free local automaton, with the label
    projection and its sliding inverse.

    The inverse sends an admissible window to its centre edge, pinned down
    by locality (the window forces the states around the centre) and by the
    absence of parallel edges.
    """
    if has_parallel_edges(aut):
        raise ModelError("parallel edges present; apply edge_uniquify first")
    if not is_local(aut, m, a):
        raise ModelError(f"automaton is not ({m}, {a})-local")
    graph, forward = edge_presentation(aut)
    by_pair = {(e.src, e.dst): e.index for e in aut.edges}
    table: dict[tuple, Symbol] = {}
    # plain admissible windows cover every two-sided window; the extra ones
    # carry the same forced centre, so they do no harm in the table
    for w in admissible_words(aut, m + a + 1):
        src = path_anchor(aut, w, m)
        dst = path_anchor(aut, w, m + 1)
        if src is None or dst is None:
            continue
        table[tuple(w)] = by_pair[(src, dst)]
    inverse = BlockMapSpec(m, a, table)
    return graph, forward, inverse


def to_edge_dyck(
    aut: DyckAutomaton, max_m: int = 6, max_a: int = 6
) -> tuple[DyckAutomaton, BlockMapSpec, BlockMapSpec]:
    """Edge-graph conjugacy for an arbitrary automaton: remove parallel
    edges, search for a locality window, then build the edge graph."""
    flat = edge_uniquify(aut)
    loc = minimal_locality(flat, max_m, max_a)
    if loc is None:
        raise ModelError(
            f"no locality window found up to ({max_m}, {max_a})"
        )
    return edge_dyck_of_local(flat, *loc)
