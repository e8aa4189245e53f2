"""Decomposition of proper conjugacies between edge shifts into state
splittings and amalgamations.

A conjugacy is carried as a pair of sliding maps over edge labels.  Memory
and anticipation are peeled off one unit at a time: a forward-memory unit
moves into a complete in-split of the source, a forward-anticipation unit
into a complete out-split, and once the forward map reads single edges the
inverse's memory and anticipation move into simultaneous fiber splits of
the source against complete splits of the target.  When both maps read
single edges the two pair graphs must be isomorphic; the isomorphism is the
certificate's final renaming, and a failure there exhibits the input as a
non-conjugacy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .model import (
    BlockMapSpec,
    DyckAutomaton,
    ModelError,
    Symbol,
    Word,
    apply_block_map,
    is_edge_graph,
)
from .semigroup import admissible_paths
from .words import admissible_words, compose_block_maps, is_admissible_word
from .surgery import (
    _mismatch_under,
    complete_in_split,
    complete_out_split,
    trim,
)


@dataclass(frozen=True)
class ProperConjugacy:
    """A two-way sliding-map pair between the edge shifts of two automata."""

    source: DyckAutomaton
    target: DyckAutomaton
    forward: BlockMapSpec
    inverse: BlockMapSpec

    @property
    def default_bound(self) -> int:
        return (
            self.forward.m
            + self.forward.a
            + self.inverse.m
            + self.inverse.a
            + 4
        )


def _slide(spec: BlockMapSpec, word: Word) -> Word | None:
    """Sliding application, None when some window is missing."""
    try:
        return tuple(apply_block_map(spec, word))
    except ModelError:
        return None


def verify_block_conjugacy(
    conj: ProperConjugacy, bound: int | None = None
) -> tuple[bool, list[str]]:
    """Bounded checks that the pair of maps behaves like a conjugacy.

    Checks type preservation of both tables, that images of admissible
    words are admissible, and that the two compositions restore the centre
    of every word up to the bound.  Words hitting windows outside a table
    are skipped and counted; a stage that could not check anything fails.
    """
    lines: list[str] = []
    ok = True
    L = bound if bound is not None else conj.default_bound
    sides = (
        ("forward", conj.forward, conj.source, conj.target),
        ("inverse", conj.inverse, conj.target, conj.source),
    )
    for name, spec, src, dst in sides:
        if not spec.proper:
            lines.append(f"{name}: not flagged proper")
            ok = False
            continue
        bad = [
            w
            for w, v in spec.table.items()
            if dst.alphabet.type_of(v) != src.alphabet.type_of(w[spec.m])
        ]
        if bad:
            lines.append(f"{name}: type not preserved at window {bad[0]!r}")
            ok = False
        else:
            lines.append(f"{name}: proper on {len(spec.table)} windows")

    for name, spec, src, dst in sides:
        checked = skipped = 0
        failure = None
        for n in range(spec.window, L + 1):
            for w in sorted(admissible_words(src, n), key=repr):
                y = _slide(spec, w)
                if y is None:
                    skipped += 1
                    continue
                checked += 1
                if not is_admissible_word(dst, y):
                    failure = (w, y)
                    break
            if failure:
                break
        if failure:
            lines.append(f"{name}: image of {failure[0]!r} is not admissible")
            ok = False
        elif checked == 0:
            lines.append(f"{name}: no image could be checked (all windows missing)")
            ok = False
        else:
            lines.append(
                f"{name}: {checked} images admissible up to length {L}"
                + (f" ({skipped} skipped)" if skipped else "")
            )

    pairs = (
        ("source round-trip", conj.forward, conj.inverse, conj.source),
        ("target round-trip", conj.inverse, conj.forward, conj.target),
    )
    for name, first, second, aut in pairs:
        lo = first.m + second.m
        width = first.m + first.a + second.m + second.a
        checked = skipped = 0
        failure = None
        for n in range(width + 1, L + 1):
            for w in sorted(admissible_words(aut, n), key=repr):
                y = _slide(first, w)
                z = _slide(second, y) if y is not None else None
                if z is None:
                    skipped += 1
                    continue
                checked += 1
                if z != w[lo : lo + len(z)]:
                    failure = w
                    break
            if failure:
                break
        if failure:
            lines.append(f"{name}: centre not restored on {failure!r}")
            ok = False
        elif checked == 0 and width + 1 <= L:
            lines.append(f"{name}: no word could be checked")
            ok = False
        else:
            lines.append(
                f"{name}: centre restored on {checked} words up to length {L}"
                + (f" ({skipped} skipped)" if skipped else "")
            )
    return ok, lines


def _require_edge_graphs(conj: ProperConjugacy) -> None:
    if not is_edge_graph(conj.source) or not is_edge_graph(conj.target):
        raise ModelError("decomposition steps need self-labelled edge graphs")


def reduce_memory_step(
    conj: ProperConjugacy,
) -> tuple[ProperConjugacy, str, dict]:
    """Trade one unit of forward memory for a complete in-split of the
    source.

    Split-graph states remember their last edge, so the new forward map
    recovers the dropped leftmost edge from its first state tag; the new
    inverse is the old one composed with the splitting map.
    """
    _require_edge_graphs(conj)
    m, a = conj.forward.m, conj.forward.a
    if m < 1:
        raise ModelError("forward memory is already zero")
    split, rec = complete_in_split(conj.source)
    table: dict[Word, Symbol] = {}
    for path in admissible_paths(split, m + a):
        window = (int(rec.src_key[path[0]]),) + tuple(
            rec.edge_origin[i] for i in path
        )
        value = conj.forward.table.get(window)
        if value is not None:
            table[tuple(path)] = value
    forward = BlockMapSpec(m - 1, a, table)
    inverse = compose_block_maps(conj.inverse, rec.block_map, conj.target)
    return (
        ProperConjugacy(split, conj.target, forward, inverse),
        "source",
        {"op": "complete_in_split", "trim": False},
    )


def reduce_anticipation_step(
    conj: ProperConjugacy,
) -> tuple[ProperConjugacy, str, dict]:
    """Mirror of reduce_memory_step: one unit of forward anticipation moves
    into a complete out-split, recovering the dropped rightmost edge from
    the last state tag."""
    _require_edge_graphs(conj)
    m, a = conj.forward.m, conj.forward.a
    if a < 1:
        raise ModelError("forward anticipation is already zero")
    split, rec = complete_out_split(conj.source)
    table: dict[Word, Symbol] = {}
    for path in admissible_paths(split, m + a):
        window = tuple(rec.edge_origin[i] for i in path) + (
            int(rec.dst_key[path[-1]]),
        )
        value = conj.forward.table.get(window)
        if value is not None:
            table[tuple(path)] = value
    forward = BlockMapSpec(m, a - 1, table)
    inverse = compose_block_maps(conj.inverse, rec.block_map, conj.target)
    return (
        ProperConjugacy(split, conj.target, forward, inverse),
        "source",
        {"op": "complete_out_split", "trim": False},
    )


def _fiber_classes(
    aut: DyckAutomaton, fwd: BlockMapSpec, side: str
) -> dict[str, list[tuple[str, list[int]]]]:
    """Group each state's in- or out-edges by their single-edge image."""
    out: dict[str, list[tuple[str, list[int]]]] = {}
    for q in aut.states:
        edges = aut.in_edges(q) if side == "in" else aut.out_edges(q)
        slices: dict[str, list[int]] = {}
        for e in edges:
            value = fwd.table.get((e.index,))
            key = str(value) if value is not None else f"u{e.index}"
            slices.setdefault(key, []).append(e.index)
        out[q] = sorted(slices.items())
    return out


def reduce_inverse_memory_step(
    conj: ProperConjugacy,
) -> tuple[ProperConjugacy, str, dict, dict]:
    """Trade one unit of inverse memory for a pair of in-splits: the source
    splits along the fibers of the forward letter map, the target splits
    completely.

    The new forward map sends a source copy to the target copy tagged with
    the same previous letter; the new inverse recovers the dropped leftmost
    target edge from the first state tag, looks the centre up in the old
    inverse, and picks the source copy tagged with the letter one step left
    of the centre.
    """
    _require_edge_graphs(conj)
    if conj.forward.m or conj.forward.a:
        raise ModelError("forward map must read single edges first")
    mi, ai = conj.inverse.m, conj.inverse.a
    if mi < 1:
        raise ModelError("inverse memory is already zero")
    fibers = _fiber_classes(conj.source, conj.forward, "in")
    gsplit, grec = complete_in_split(conj.source, fibers)
    hsplit, hrec = complete_in_split(conj.target)

    fwd_table: dict[Word, Symbol] = {}
    for i in range(len(grec.edge_origin)):
        value = conj.forward.table.get((grec.edge_origin[i],))
        if value is None:
            continue
        hit = hrec.copy_index(value, grec.src_key[i], at_src=True)
        if hit is not None:
            fwd_table[(i,)] = hit
    forward = BlockMapSpec(0, 0, fwd_table)

    inv_table: dict[Word, Symbol] = {}
    for path in admissible_paths(hsplit, mi + ai):
        window = (int(hrec.src_key[path[0]]),) + tuple(
            hrec.edge_origin[i] for i in path
        )
        centre = conj.inverse.table.get(window)
        if centre is None:
            continue
        hit = grec.copy_index(centre, str(window[mi - 1]), at_src=True)
        if hit is not None:
            inv_table[tuple(path)] = hit
    inverse = BlockMapSpec(mi - 1, ai, inv_table)
    classes_json = {
        q: [(k, list(v)) for k, v in slices] for q, slices in fibers.items()
    }
    return (
        ProperConjugacy(gsplit, hsplit, forward, inverse),
        "both",
        {"op": "fiber_in_split", "classes": classes_json},
        {"op": "complete_in_split", "trim": False},
    )


def reduce_inverse_anticipation_step(
    conj: ProperConjugacy,
) -> tuple[ProperConjugacy, str, dict, dict]:
    """Mirror of reduce_inverse_memory_step over out-splits: the dropped
    rightmost target edge comes from the last state tag and the source copy
    is tagged with the letter one step right of the centre."""
    _require_edge_graphs(conj)
    if conj.forward.m or conj.forward.a:
        raise ModelError("forward map must read single edges first")
    mi, ai = conj.inverse.m, conj.inverse.a
    if ai < 1:
        raise ModelError("inverse anticipation is already zero")
    fibers = _fiber_classes(conj.source, conj.forward, "out")
    gsplit, grec = complete_out_split(conj.source, fibers)
    hsplit, hrec = complete_out_split(conj.target)

    fwd_table: dict[Word, Symbol] = {}
    for i in range(len(grec.edge_origin)):
        value = conj.forward.table.get((grec.edge_origin[i],))
        if value is None:
            continue
        hit = hrec.copy_index(value, grec.dst_key[i], at_src=False)
        if hit is not None:
            fwd_table[(i,)] = hit
    forward = BlockMapSpec(0, 0, fwd_table)

    inv_table: dict[Word, Symbol] = {}
    for path in admissible_paths(hsplit, mi + ai):
        window = tuple(hrec.edge_origin[i] for i in path) + (
            int(hrec.dst_key[path[-1]]),
        )
        centre = conj.inverse.table.get(window)
        if centre is None:
            continue
        hit = grec.copy_index(centre, str(window[mi + 1]), at_src=False)
        if hit is not None:
            inv_table[tuple(path)] = hit
    inverse = BlockMapSpec(mi, ai - 1, inv_table)
    classes_json = {
        q: [(k, list(v)) for k, v in slices] for q, slices in fibers.items()
    }
    return (
        ProperConjugacy(gsplit, hsplit, forward, inverse),
        "both",
        {"op": "fiber_out_split", "classes": classes_json},
        {"op": "complete_out_split", "trim": False},
    )


def _pair_graph(
    aut: DyckAutomaton,
) -> tuple[DyckAutomaton, dict[str, str], list[dict]]:
    """Trim in-split then trim out-split, then a trim, with states renamed
    to their (previous edge|next edge) coordinates in the input."""
    s1, r1 = complete_in_split(aut, trim=True)
    s2, r2 = complete_out_split(s1, trim=True)
    in_tag = {
        f"{q}|{k}": int(k) for q, slices in r1.classes.items() for k, _ in slices
    }
    rename: dict[str, str] = {}
    for q, slices in r2.classes.items():
        for k, _ in slices:
            e = in_tag[q]
            f = r1.edge_origin[int(k)]
            rename[f"{q}|{k}"] = f"({e}|{f})"
    s3 = trim(s2)
    renamed = DyckAutomaton(
        s3.alphabet,
        [rename.get(q, q) for q in s3.states],
        [(rename.get(e.src, e.src), e.label, rename.get(e.dst, e.dst)) for e in s3.edges],
        s3.matched,
    )
    ops = [
        {"op": "complete_in_split", "trim": True},
        {"op": "complete_out_split", "trim": True},
        {"op": "trim"},
        {"op": "rename", "map": rename},
    ]
    return renamed, rename, ops


def final_pair_split(
    conj: ProperConjugacy,
) -> tuple[dict[str, str], list[dict], list[dict]]:
    """Close a single-edge two-way map by exhibiting the isomorphism between
    the pair graphs of source and target.

    Both sides split into states (previous edge, next edge); the letter map
    transports source coordinates to target coordinates.  Any failure, a
    missing image, a non-inverse pair, or a structural mismatch between the
    pair graphs, proves the input was not a conjugacy and raises with a
    counterexample.
    """
    _require_edge_graphs(conj)
    if conj.forward.m or conj.forward.a or conj.inverse.m or conj.inverse.a:
        raise ModelError("both maps must read single edges")
    gpair, _, gops = _pair_graph(conj.source)
    hpair, _, hops = _pair_graph(conj.target)

    def delta(e: int) -> int:
        value = conj.forward.table.get((e,))
        if value is None:
            raise ModelError(
                f"not a conjugacy: forward map undefined on essential edge {e}"
            )
        back = conj.inverse.table.get((value,))
        if back != e:
            raise ModelError(
                f"not a conjugacy: edge {e} maps to {value} but returns {back}"
            )
        return value

    rho: dict[str, str] = {}
    for q in gpair.states:
        e, f = q[1:-1].split("|")
        rho[q] = f"({delta(int(e))}|{delta(int(f))})"
    if sorted(rho.values()) != sorted(hpair.states):
        missing = sorted(set(hpair.states) - set(rho.values()))
        extra = sorted(set(rho.values()) - set(hpair.states))
        raise ModelError(
            "not a conjugacy: pair graphs disagree on states "
            f"(unmatched {missing[:2]} / {extra[:2]})"
        )
    mismatch = _mismatch_under(gpair, hpair, rho)
    if mismatch:
        raise ModelError(f"not a conjugacy: {mismatch}")
    return rho, gops, hops


@dataclass(frozen=True)
class DecompositionCertificate:
    """Replayable witness of a decomposition: the operation lists for both
    sides, the final state renaming between the two results, and the log of
    how it was produced."""

    source_ops: tuple[dict, ...]
    target_ops: tuple[dict, ...]
    rho: dict[str, str]
    transcript: tuple[str, ...]


def decompose(
    conj: ProperConjugacy, bound: int | None = None
) -> DecompositionCertificate:
    """Peel the conjugacy down to single-edge maps and close it with the
    pair-graph isomorphism.

    Forward memory goes first, then forward anticipation, then inverse
    memory and anticipation; each step strictly lowers the widths, so the
    loop ends.  The only rejection point for a non-conjugacy is the final
    pair-graph comparison.
    """
    log: list[str] = []
    ok, lines = verify_block_conjugacy(conj, bound)
    log.extend(lines)
    log.append(f"bounded verification: {'ok' if ok else 'FAILED'}")
    source_ops: list[dict] = []
    target_ops: list[dict] = []

    def widths() -> tuple[int, int, int, int]:
        return (
            conj.forward.m,
            conj.forward.a,
            conj.inverse.m,
            conj.inverse.a,
        )

    while conj.forward.m > 0:
        before = widths()
        conj, _, op = reduce_memory_step(conj)
        source_ops.append(op)
        log.append(f"memory step: {before} -> {widths()}")
    while conj.forward.a > 0:
        before = widths()
        conj, _, op = reduce_anticipation_step(conj)
        source_ops.append(op)
        log.append(f"anticipation step: {before} -> {widths()}")
    while conj.inverse.m > 0:
        before = widths()
        conj, _, sop, top = reduce_inverse_memory_step(conj)
        source_ops.append(sop)
        target_ops.append(top)
        log.append(f"inverse memory step: {before} -> {widths()}")
    while conj.inverse.a > 0:
        before = widths()
        conj, _, sop, top = reduce_inverse_anticipation_step(conj)
        source_ops.append(sop)
        target_ops.append(top)
        log.append(f"inverse anticipation step: {before} -> {widths()}")

    rho, gops, hops = final_pair_split(conj)
    source_ops.extend(gops)
    target_ops.extend(hops)
    log.append(f"final pair split: {len(rho)} states identified")
    return DecompositionCertificate(
        source_ops=tuple(source_ops),
        target_ops=tuple(target_ops),
        rho=dict(rho),
        transcript=tuple(log),
    )


def _apply_op(aut: DyckAutomaton, op: Mapping) -> DyckAutomaton:
    kind = op["op"]
    if kind == "complete_in_split":
        return complete_in_split(aut, trim=bool(op.get("trim")))[0]
    if kind == "complete_out_split":
        return complete_out_split(aut, trim=bool(op.get("trim")))[0]
    if kind == "fiber_in_split":
        classes = {q: [(k, tuple(v)) for k, v in sl] for q, sl in op["classes"].items()}
        return complete_in_split(aut, classes)[0]
    if kind == "fiber_out_split":
        classes = {q: [(k, tuple(v)) for k, v in sl] for q, sl in op["classes"].items()}
        return complete_out_split(aut, classes)[0]
    if kind == "trim":
        return trim(aut)
    if kind == "rename":
        table = op["map"]
        return DyckAutomaton(
            aut.alphabet,
            [table.get(q, q) for q in aut.states],
            [
                (table.get(e.src, e.src), e.label, table.get(e.dst, e.dst))
                for e in aut.edges
            ],
            aut.matched,
        )
    raise ModelError(f"unknown operation {kind!r}")


def replay_certificate(
    source: DyckAutomaton,
    target: DyckAutomaton,
    cert: DecompositionCertificate,
) -> tuple[bool, list[str]]:
    """Re-run both operation lists and compare the results under the final
    renaming; reports the first divergence."""
    lines: list[str] = []
    cur_s, cur_t = source, target
    for i, op in enumerate(cert.source_ops):
        try:
            cur_s = _apply_op(cur_s, op)
        except ModelError as ex:
            return False, lines + [f"source op {i} ({op['op']}) failed: {ex}"]
        lines.append(
            f"source op {i}: {op['op']} -> {len(cur_s.states)} states, "
            f"{len(cur_s.edges)} edges"
        )
    for i, op in enumerate(cert.target_ops):
        try:
            cur_t = _apply_op(cur_t, op)
        except ModelError as ex:
            return False, lines + [f"target op {i} ({op['op']}) failed: {ex}"]
        lines.append(
            f"target op {i}: {op['op']} -> {len(cur_t.states)} states, "
            f"{len(cur_t.edges)} edges"
        )
    mismatch = _mismatch_under(cur_s, cur_t, cert.rho)
    if mismatch:
        return False, lines + [f"results differ: {mismatch}"]
    lines.append("results coincide under the final renaming")
    return True, lines
