"""Admissible words, centered blocks, and block-map algebra.

A word is admissible when it labels some path whose semigroup reduction is
non-zero.  Membership is decided by simulating configurations (state,
pending-call stack); a return taken on an empty stack is unconstrained, so
words may begin mid-nesting.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

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
    apply_block_map,
)

Config = tuple[str, tuple[int, ...]]


def _advance_edge(aut: DyckAutomaton, cfg: Config, e) -> Config | None:
    """Successor configuration after taking one specific edge, or None."""
    _, stack = cfg
    kind = aut.edge_type(e.index)
    if kind == INTERNAL:
        return (e.dst, stack)
    if kind == CALL:
        return (e.dst, stack + (e.index,))
    if stack:
        if (stack[-1], e.index) in aut.matched:
            return (e.dst, stack[:-1])
        return None
    return (e.dst, ())


def _advance(aut: DyckAutomaton, cfg: Config, letter: Symbol) -> Iterator[Config]:
    """Successor configurations after reading one letter."""
    for e in aut.out_edges(cfg[0]):
        if e.label != letter:
            continue
        nxt = _advance_edge(aut, cfg, e)
        if nxt is not None:
            yield nxt


def is_admissible_word(aut: DyckAutomaton, word: Sequence[Symbol]) -> bool:
    """True when some admissible path is labelled by the word."""
    configs: set[Config] = {(q, ()) for q in aut.states}
    for letter in word:
        configs = {c2 for c in configs for c2 in _advance(aut, c, letter)}
        if not configs:
            return False
    return bool(configs)


def _words_from(
    aut: DyckAutomaton, starts: frozenset[Config], length: int
) -> Iterator[tuple[Word, frozenset[Config]]]:
    """All words of the given length runnable from the start set, with the
    configuration set each word can reach."""

    def rec(word: Word, configs: frozenset[Config]) -> Iterator[tuple[Word, frozenset[Config]]]:
        if len(word) == length:
            yield word, configs
            return
        by_letter: dict[Symbol, set[Config]] = {}
        for cfg in configs:
            q = cfg[0]
            for e in aut.out_edges(q):
                for nxt in _advance(aut, cfg, e.label):
                    by_letter.setdefault(e.label, set()).add(nxt)
        for letter in sorted(by_letter, key=repr):
            yield from rec(word + (letter,), frozenset(by_letter[letter]))

    if starts:
        yield from rec((), starts)


def admissible_words(aut: DyckAutomaton, length: int) -> set[Word]:
    """All admissible words of exactly the given length."""
    starts = frozenset((q, ()) for q in aut.states)
    return {w for w, _ in _words_from(aut, starts, length)}


def default_margin(aut: DyckAutomaton) -> int:
    """Extension margin after which the centered-block language stabilises."""
    n = len(aut.states)
    return 2 * (n * n + 1)


def _can_continue(aut: DyckAutomaton, cfg: Config, steps: int) -> bool:
    """Whether some admissible path of the given length leaves the
    configuration.  Entries below the top ``steps`` of the stack can never
    be popped, so the key is truncated before memoising."""
    q, stack = cfg
    memo: dict[tuple[str, tuple[int, ...], int], bool] = {}

    def rec(state: str, tail: tuple[int, ...], left: int) -> bool:
        if left == 0:
            return True
        key = (state, tail, left)
        hit = memo.get(key)
        if hit is not None:
            return hit
        memo[key] = False
        ok = False
        for nxt in _advance_any(aut, (state, tail)):
            if rec(nxt[0], nxt[1], left - 1):
                ok = True
                break
        memo[key] = ok
        return ok

    return rec(q, stack[-steps:] if steps else (), steps)


def _advance_any(aut: DyckAutomaton, cfg: Config) -> Iterator[Config]:
    seen: set[Config] = set()
    for e in aut.out_edges(cfg[0]):
        nxt = _advance_edge(aut, cfg, e)
        if nxt is not None and nxt not in seen:
            seen.add(nxt)
            yield nxt


def centered_blocks(aut: DyckAutomaton, n: int, margin: int | None = None) -> set[Word]:
    """Words of length n occurring as the centre of an admissible word with
    the given margin on both sides.

    The default margin is generous enough to stabilise; tests and callers
    working at desk scale should pass an explicit small margin.
    """
    if margin is None:
        margin = default_margin(aut)
    if margin == 0:
        return admissible_words(aut, n)
    starts = frozenset((q, ()) for q in aut.states)
    after_margin: set[Config] = set()
    for _, configs in _words_from(aut, starts, margin):
        after_margin |= configs
    out: set[Word] = set()
    for word, configs in _words_from(aut, frozenset(after_margin), n):
        if any(_can_continue(aut, cfg, margin) for cfg in configs):
            out.add(word)
    return out


def all_words(alphabet: TriAlphabet, length: int) -> Iterator[Word]:
    yield from itertools.product(tuple(alphabet), repeat=length)


# -- block-map algebra -------------------------------------------------------


def block_map_from_function(
    m: int, a: int, domain: Iterable[Word], fn, proper: bool = True
) -> BlockMapSpec:
    return BlockMapSpec(m, a, {tuple(w): fn(tuple(w)) for w in domain}, proper)


def extend_block_map(
    spec: BlockMapSpec, aut: DyckAutomaton, m2: int, a2: int
) -> BlockMapSpec:
    """Re-express the map with larger memory/anticipation over the admissible
    windows of ``aut``."""
    if m2 < spec.m or a2 < spec.a:
        raise ModelError("extension must not shrink memory or anticipation")
    if (m2, a2) == (spec.m, spec.a):
        return spec
    table: dict[Word, Symbol] = {}
    lo = m2 - spec.m
    for w in admissible_words(aut, m2 + a2 + 1):
        sub = w[lo : lo + spec.window]
        if sub in spec.table:
            table[w] = spec.table[sub]
    return BlockMapSpec(m2, a2, table, spec.proper)


def shrink_block_map(
    spec: BlockMapSpec, aut: DyckAutomaton, m2: int, a2: int
) -> BlockMapSpec:
    """Re-express the map with smaller memory/anticipation.

    Fails when the output genuinely depends on a trimmed coordinate over the
    admissible windows of ``aut``.
    """
    if m2 > spec.m or a2 > spec.a:
        raise ModelError("shrink must not grow memory or anticipation")
    if (m2, a2) == (spec.m, spec.a):
        return spec
    lo = spec.m - m2
    table: dict[Word, Symbol] = {}
    for w in admissible_words(aut, spec.window):
        if w not in spec.table:
            continue
        sub = w[lo : lo + m2 + a2 + 1]
        val = spec.table[w]
        if sub in table and table[sub] != val:
            raise ModelError(
                f"map depends on trimmed coordinates at window {sub!r}"
            )
        table[sub] = val
    return BlockMapSpec(m2, a2, table, spec.proper)


def compose_block_maps(
    first: BlockMapSpec, second: BlockMapSpec, aut: DyckAutomaton
) -> BlockMapSpec:
    """Table of ``second`` after ``first`` over admissible windows of ``aut``
    (the automaton presenting the domain of ``first``)."""
    m = first.m + second.m
    a = first.a + second.a
    table: dict[Word, Symbol] = {}
    for w in admissible_words(aut, m + a + 1):
        try:
            mid = apply_block_map(first, w)
            table[w] = apply_block_map(second, mid)[0]
        except ModelError:
            continue
    return BlockMapSpec(m, a, table, first.proper and second.proper)


def block_map_equal_on(
    f: BlockMapSpec, g: BlockMapSpec, words: Iterable[Word]
) -> bool:
    """Whether two maps produce identical output on every given word."""
    for w in words:
        w = tuple(w)
        if len(w) < max(f.window, g.window):
            continue
        if apply_block_map(f, w[: f.window]) != apply_block_map(g, w[: g.window]):
            return False
    return True


# -- forbidden blocks and forbidden matched pairs ----------------------------


@dataclass(frozen=True)
class SldsSpec:
    """A shift given by forbidden windows and forbidden matched window pairs.

    Windows have length m + a + 1 with the distinguished letter at offset m.
    ``forbidden_blocks`` rules a window out wherever it occurs;
    ``forbidden_pairs`` rules out a call window whose centre is cancelled by
    the centre of a given return window.
    """

    alphabet: TriAlphabet
    m: int
    a: int
    forbidden_blocks: frozenset[Word]
    forbidden_pairs: frozenset[tuple[Word, Word]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "forbidden_blocks", frozenset(map(tuple, self.forbidden_blocks)))
        object.__setattr__(
            self,
            "forbidden_pairs",
            frozenset((tuple(u), tuple(v)) for u, v in self.forbidden_pairs),
        )
        w = self.m + self.a + 1
        for word in self.forbidden_blocks:
            if len(word) != w:
                raise ModelError(f"forbidden block {word!r} has wrong length")
        for u, v in self.forbidden_pairs:
            if len(u) != w or len(v) != w:
                raise ModelError(f"forbidden pair ({u!r}, {v!r}) has wrong length")

    @property
    def window(self) -> int:
        return self.m + self.a + 1


@dataclass(frozen=True)
class SldsValue:
    """Result of reducing a word's window product: zero, or a survivor
    carrying the windows of unmatched returns and unmatched calls."""

    zero: bool
    returns: tuple[Word, ...] = ()
    calls: tuple[Word, ...] = ()

    def __bool__(self) -> bool:
        return not self.zero


def slds_reduce(spec: SldsSpec, word: Sequence[Symbol]) -> SldsValue:
    """Reduce the product of the word's overlapping windows.

    A window listed among the forbidden blocks kills the product.  Windows
    with an internal centre collapse away, call-centred windows stack up,
    and a return-centred window cancels the most recent call-centred one,
    killing the product when the two windows form a forbidden pair.  A
    return with nothing to cancel is kept as pending.
    """
    w = tuple(word)
    if len(w) < spec.window:
        raise ModelError(
            f"word of length {len(w)} is shorter than the window {spec.window}"
        )
    for letter in w:
        if letter not in spec.alphabet:
            raise ModelError(f"letter {letter!r} outside the alphabet")
    zero = SldsValue(True)
    stack: list[Word] = []
    pending: list[Word] = []
    for i in range(spec.m, len(w) - spec.a):
        win = w[i - spec.m : i + spec.a + 1]
        if win in spec.forbidden_blocks:
            return zero
        kind = spec.alphabet.type_of(w[i])
        if kind == CALL:
            stack.append(win)
        elif kind == RETURN:
            if stack:
                if (stack.pop(), win) in spec.forbidden_pairs:
                    return zero
            else:
                pending.append(win)
    return SldsValue(False, tuple(pending), tuple(stack))


def slds_admissible(spec: SldsSpec, word: Sequence[Symbol]) -> bool:
    """Word-level admissibility: full windows avoid the forbidden blocks and
    every cancelled call/return position pair avoids the forbidden pairs.
    Positions too close to either end have no full window and stay
    unconstrained there.
    """
    w = tuple(word)
    n = len(w)

    def window_at(i: int) -> Word | None:
        if i - spec.m < 0 or i + spec.a + 1 > n:
            return None
        return w[i - spec.m : i + spec.a + 1]

    for i in range(n):
        if w[i] not in spec.alphabet:
            return False
        win = window_at(i)
        if win is not None and win in spec.forbidden_blocks:
            return False
    stack: list[int] = []
    for i in range(n):
        kind = spec.alphabet.type_of(w[i])
        if kind == CALL:
            stack.append(i)
        elif kind == RETURN:
            if stack:
                j = stack.pop()
                wc, wr = window_at(j), window_at(i)
                if wc is not None and wr is not None and (wc, wr) in spec.forbidden_pairs:
                    return False
    return True


def path_anchor(aut: DyckAutomaton, x: Word, m: int) -> str | None:
    """The state every path labelled x visits right after its first m edges.

    Returns None when no path carries the label.  Demands agreement across
    paths, so the automaton must be (m, len(x) - m)-local.
    """
    frontier: set[tuple[str, str | None]] = {
        (q, q if m == 0 else None) for q in aut.states
    }
    for i, letter in enumerate(x):
        nxt: set[tuple[str, str | None]] = set()
        for cur, anchor in frontier:
            for e in aut.out_edges(cur):
                if e.label == letter:
                    nxt.add((e.dst, e.dst if i + 1 == m else anchor))
        frontier = nxt
    anchors = {anchor for _, anchor in frontier}
    if not anchors:
        return None
    if len(anchors) > 1:
        raise ModelError(f"label {x!r} does not force its state at offset {m}")
    return anchors.pop()


def slds_sets_from_local(
    aut: DyckAutomaton, m: int, a: int, margin: int | None = None
) -> SldsSpec:
    """Derive a forbidden-window presentation from an (m, a)-local automaton.

    Blocks: every word of window length that is not a centered block.
    Pairs: call/return windows whose forced centre edges are never matched.
    A window u of length m+a+1 forces the endpoints of its centre edge: the
    source is the anchor of u minus its last letter, the target the anchor
    of u minus its first letter.
    """
    from .locality import is_local

    if not is_local(aut, m, a):
        raise ModelError(f"automaton is not ({m}, {a})-local")
    window = m + a + 1
    good = centered_blocks(aut, window, margin)
    blocks = frozenset(w for w in all_words(aut.alphabet, window) if w not in good)

    def center_edges(w: Word) -> set[int]:
        src = path_anchor(aut, w[:-1], m)
        dst = path_anchor(aut, w[1:], m)
        if src is None or dst is None:
            return set()
        return {
            e.index
            for e in aut.out_edges(src)
            if e.label == w[m] and e.dst == dst
        }

    pairs: set[tuple[Word, Word]] = set()
    calls = [w for w in good if aut.alphabet.type_of(w[m]) == CALL]
    rets = [w for w in good if aut.alphabet.type_of(w[m]) == RETURN]
    centers_cache = {w: center_edges(w) for w in calls + rets}
    for wc in calls:
        for wr in rets:
            cc, rr = centers_cache[wc], centers_cache[wr]
            if not any((c, r) in aut.matched for c in cc for r in rr):
                pairs.add((wc, wr))
    return SldsSpec(aut.alphabet, m, a, blocks, frozenset(pairs))
