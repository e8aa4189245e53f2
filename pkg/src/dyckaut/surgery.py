"""Essential edges and matched pairs, trimming, splits and amalgamations.

An edge is essential when some bi-infinite admissible path runs through it;
a matched pair is essential when such a path uses the call and the return
with a balanced interior.  On a bi-infinite admissible path every return
unmatched within the path must precede every call unmatched within the path,
so such paths come in exactly two shapes: a walk arriving from the left
through internal steps, balanced call/return excursions and unmatched
returns, and leaving to the right through internal steps, excursions and
unmatched calls; or an infinite ascending chain of nested matched pairs
covering the whole line.  Both shapes are decided by finite reachability.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

from .model import (
    CALL,
    INTERNAL,
    RETURN,
    BlockMapSpec,
    DyckAutomaton,
    Edge,
    ModelError,
    Partition,
    Symbol,
    check_partition,
    is_edge_graph,
    make_edge_graph,
)
from .semigroup import DyckReachability


class EssentialParts(NamedTuple):
    edges: frozenset[int]
    pairs: frozenset[tuple[int, int]]


def _cycle_states(adj: dict[str, set[str]]) -> set[str]:
    """States lying on a cycle of the given successor relation."""
    out: set[str] = set()
    for v in adj:
        frontier = set(adj[v])
        seen = set(frontier)
        while frontier:
            if v in seen:
                break
            frontier = {w for u in frontier for w in adj[u]} - seen
            seen |= frontier
        if v in seen:
            out.add(v)
    return out


def _forward_closure(adj: dict[str, set[str]], seeds: set[str]) -> set[str]:
    seen = set(seeds)
    frontier = set(seeds)
    while frontier:
        frontier = {w for u in frontier for w in adj[u]} - seen
        seen |= frontier
    return seen


def _reverse(adj: dict[str, set[str]]) -> dict[str, set[str]]:
    rev: dict[str, set[str]] = {v: set() for v in adj}
    for v, ws in adj.items():
        for w in ws:
            rev[w].add(v)
    return rev


def essential_parts(aut: DyckAutomaton) -> EssentialParts:
    """Essential edge indices and essential matched pairs.

    Works on a contracted graph over states whose steps are internal edges,
    balanced excursions (a matched pair around a Dyck interior), unmatched
    calls and unmatched returns.  A step survives when its source can be
    entered from the infinite past and its target can leave to the infinite
    future, with returns allowed only before the phase switch and calls only
    after.  Infinite ascending nests of matched pairs are handled separately
    through the nesting relation between balanced excursions.
    """
    d = DyckReachability(aut)
    edges = {e.index: e for e in aut.edges}
    comp = [
        (c, r)
        for (c, r) in sorted(aut.matched)
        if d.reachable(edges[c].dst, edges[r].src)
    ]

    leftg: dict[str, set[str]] = {q: set() for q in aut.states}
    rightg: dict[str, set[str]] = {q: set() for q in aut.states}
    steps: list[tuple[str, object, str, str]] = []
    for e in aut.edges:
        kind = aut.edge_type(e.index)
        if kind == INTERNAL:
            leftg[e.src].add(e.dst)
            rightg[e.src].add(e.dst)
            steps.append(("int", e.index, e.src, e.dst))
        elif kind == CALL:
            rightg[e.src].add(e.dst)
            steps.append(("call", e.index, e.src, e.dst))
        else:
            leftg[e.src].add(e.dst)
            steps.append(("ret", e.index, e.src, e.dst))
    for (c, r) in comp:
        src, dst = edges[c].src, edges[r].dst
        leftg[src].add(dst)
        rightg[src].add(dst)
        steps.append(("comp", (c, r), src, dst))

    left_cyc = _cycle_states(leftg)
    right_cyc = _cycle_states(rightg)
    # ll: reachable from a left-phase cycle (can arrive from the infinite
    # past while still in the left phase); rr symmetrically for the future.
    ll = _forward_closure(leftg, left_cyc)
    rr = _forward_closure(_reverse(rightg), right_cyc)
    # rgood: the walk can still reach the infinite future from here, either
    # by circling in the left phase forever or by switching into a state
    # that leaves to the future; lgood mirrors it for the past.
    rgood = _forward_closure(_reverse(leftg), rr | left_cyc)
    lgood = _forward_closure(rightg, ll | right_cyc)

    ess_edges: set[int] = set()
    ess_pairs: set[tuple[int, int]] = set()

    def mark_interior(p: str, q: str) -> None:
        ess_edges.update(d.used_edges(p, q))
        ess_pairs.update(d.used_pairs(p, q))

    for kind, payload, src, dst in steps:
        on_left = src in ll and dst in rgood
        on_right = src in lgood and dst in rr
        if kind == "ret":
            ok = on_left
        elif kind == "call":
            ok = on_right
        else:
            ok = on_left or on_right
        if not ok:
            continue
        if kind == "comp":
            c, r = payload  # type: ignore[misc]
            ess_edges.update((c, r))
            ess_pairs.add((c, r))
            mark_interior(edges[c].dst, edges[r].src)
        else:
            ess_edges.add(payload)  # type: ignore[arg-type]

    # Ascending nests: pair j sits directly inside pair i when the gap from
    # i's call to j's call and from j's return to i's return are balanced.
    ng: dict[str, set[str]] = {str(i): set() for i in range(len(comp))}
    for i, (c, r) in enumerate(comp):
        for j, (c2, r2) in enumerate(comp):
            if d.reachable(edges[c].dst, edges[c2].src) and d.reachable(
                edges[r2].dst, edges[r].src
            ):
                ng[str(j)].add(str(i))
    towers = _forward_closure(_reverse(ng), _cycle_states(ng))
    for key in towers:
        c, r = comp[int(key)]
        ess_edges.update((c, r))
        ess_pairs.add((c, r))
        mark_interior(edges[c].dst, edges[r].src)
    for j, outer in ng.items():
        for i in outer:
            if i not in towers:
                continue
            c, r = comp[int(i)]
            c2, r2 = comp[int(j)]
            mark_interior(edges[c].dst, edges[c2].src)
            mark_interior(edges[r2].dst, edges[r].src)

    return EssentialParts(frozenset(ess_edges), frozenset(ess_pairs))


# -- trimming -----------------------------------------------------------------


def _rebuild(
    aut: DyckAutomaton,
    states: Sequence[str],
    triples: Sequence[tuple[str, Symbol, str]],
    origins: Sequence[int],
    matched: Iterable[tuple[int, int]],
) -> DyckAutomaton:
    """Assemble a derived automaton, relabelling when the input was an edge
    graph so the output is self-labelled again."""
    if is_edge_graph(aut):
        typed = [
            (src, aut.edge_type(origins[i]), dst)
            for i, (src, _, dst) in enumerate(triples)
        ]
        return make_edge_graph(states, typed, matched)
    return DyckAutomaton(aut.alphabet, states, triples, matched)


def trim(aut: DyckAutomaton) -> DyckAutomaton:
    """Keep exactly the essential edges and pairs, then drop isolated states."""
    keep_edges, keep_pairs = essential_parts(aut)
    kept = [e for e in aut.edges if e.index in keep_edges]
    index_map = {e.index: i for i, e in enumerate(kept)}
    touched = {e.src for e in kept} | {e.dst for e in kept}
    states = [q for q in aut.states if q in touched]
    triples = [(e.src, e.label, e.dst) for e in kept]
    matched = [(index_map[c], index_map[r]) for (c, r) in sorted(keep_pairs)]
    return _rebuild(aut, states, triples, [e.index for e in kept], matched)


# -- single-state splits ------------------------------------------------------


@dataclass(frozen=True)
class SplitRecord:
    """How one state was split.

    ``renaming`` sends each new state to the state it came from.  The
    ``block_map`` gives the splitting conjugacy over edge indices: windows
    of old edges to the new edge carried by the centre; its inverse is the
    ``quotient`` map forgetting copies.  Trim splits additionally list what
    they removed, in pre-removal indices.
    """

    kind: str
    trim: bool
    state: str
    partition: tuple[tuple[int, ...], ...]
    renaming: dict[str, str]
    edge_origin: tuple[int, ...]
    block_map: BlockMapSpec
    quotient: BlockMapSpec
    removed_edges: tuple[int, ...] = ()
    removed_pairs: tuple[tuple[int, int], ...] = ()


def _fresh_names(aut: DyckAutomaton, p: str, k: int) -> list[str]:
    names = []
    taken = set(aut.states)
    for i in range(k):
        name = f"{p}|{i + 1}"
        while name in taken:
            name += "'"
        taken.add(name)
        names.append(name)
    return names


def in_split(
    aut: DyckAutomaton, part: Partition
) -> tuple[DyckAutomaton, SplitRecord]:
    """Split one state by a partition of its in-edges.

    Each class gets a copy; in-edges are redirected to the copy of their
    class and out-edges are duplicated onto every copy.  The matched
    relation follows the edges they came from.
    """
    if part.side != "in":
        raise ModelError("in_split requires an in-side partition")
    check_partition(aut, part)
    p = part.state
    k = len(part.classes)
    names = _fresh_names(aut, p, k)
    class_of = {i: part.class_of(i) for cls in part.classes for i in cls}

    states: list[str] = []
    for q in aut.states:
        if q == p:
            states.extend(names)
        else:
            states.append(q)

    triples: list[tuple[str, Symbol, str]] = []
    origins: list[int] = []

    def emit(src: str, label: Symbol, dst: str, origin: int) -> None:
        triples.append((src, label, dst))
        origins.append(origin)

    for e in aut.edges:
        if e.src == p and e.dst == p:
            for j in range(k):
                emit(names[j], e.label, names[class_of[e.index]], e.index)
        elif e.dst == p:
            emit(e.src, e.label, names[class_of[e.index]], e.index)
        elif e.src == p:
            for j in range(k):
                emit(names[j], e.label, e.dst, e.index)
        else:
            emit(e.src, e.label, e.dst, e.index)

    matched = [
        (x, y)
        for x in range(len(triples))
        for y in range(len(triples))
        if (origins[x], origins[y]) in aut.matched
    ]
    out = _rebuild(aut, states, triples, origins, matched)

    renaming = {q: q for q in aut.states if q != p}
    renaming.update({name: p for name in names})
    by_origin_src: dict[tuple[int, str], int] = {}
    for i, (src, _, _) in enumerate(triples):
        by_origin_src[(origins[i], src)] = i
    table: dict[tuple, Symbol] = {}
    for f in aut.edges:
        for e in aut.out_edges(f.dst):
            src = names[class_of[f.index]] if e.src == p else e.src
            hit = by_origin_src.get((e.index, src))
            if hit is not None:
                table[(f.index, e.index)] = hit
    record = SplitRecord(
        kind="in",
        trim=False,
        state=p,
        partition=part.classes,
        renaming=renaming,
        edge_origin=tuple(origins),
        block_map=BlockMapSpec(1, 0, table),
        quotient=BlockMapSpec(0, 0, {(i,): origins[i] for i in range(len(origins))}),
    )
    return out, record


def out_split(
    aut: DyckAutomaton, part: Partition
) -> tuple[DyckAutomaton, SplitRecord]:
    """Split one state by a partition of its out-edges (mirror of in_split)."""
    if part.side != "out":
        raise ModelError("out_split requires an out-side partition")
    check_partition(aut, part)
    p = part.state
    k = len(part.classes)
    names = _fresh_names(aut, p, k)
    class_of = {i: part.class_of(i) for cls in part.classes for i in cls}

    states: list[str] = []
    for q in aut.states:
        if q == p:
            states.extend(names)
        else:
            states.append(q)

    triples: list[tuple[str, Symbol, str]] = []
    origins: list[int] = []

    def emit(src: str, label: Symbol, dst: str, origin: int) -> None:
        triples.append((src, label, dst))
        origins.append(origin)

    for e in aut.edges:
        if e.src == p and e.dst == p:
            for j in range(k):
                emit(names[class_of[e.index]], e.label, names[j], e.index)
        elif e.src == p:
            emit(names[class_of[e.index]], e.label, e.dst, e.index)
        elif e.dst == p:
            for j in range(k):
                emit(e.src, e.label, names[j], e.index)
        else:
            emit(e.src, e.label, e.dst, e.index)

    matched = [
        (x, y)
        for x in range(len(triples))
        for y in range(len(triples))
        if (origins[x], origins[y]) in aut.matched
    ]
    out = _rebuild(aut, states, triples, origins, matched)

    renaming = {q: q for q in aut.states if q != p}
    renaming.update({name: p for name in names})
    by_origin_dst: dict[tuple[int, str], int] = {}
    for i, (_, _, dst) in enumerate(triples):
        by_origin_dst[(origins[i], dst)] = i
    table: dict[tuple, Symbol] = {}
    for e in aut.edges:
        for g in aut.out_edges(e.dst):
            dst = names[class_of[g.index]] if e.dst == p else e.dst
            hit = by_origin_dst.get((e.index, dst))
            if hit is not None:
                table[(e.index, g.index)] = hit
    record = SplitRecord(
        kind="out",
        trim=False,
        state=p,
        partition=part.classes,
        renaming=renaming,
        edge_origin=tuple(origins),
        block_map=BlockMapSpec(0, 1, table),
        quotient=BlockMapSpec(0, 0, {(i,): origins[i] for i in range(len(origins))}),
    )
    return out, record


def _strip_split(
    split: DyckAutomaton, record: SplitRecord, at_new_src: bool
) -> tuple[DyckAutomaton, SplitRecord]:
    """Remove non-essential edges attached to the new states (out-edges for
    in-splits, in-edges for out-splits) and non-essential pairs touching
    them, reindexing everything that survives."""
    copies = {q for q, old in record.renaming.items() if old == record.state}
    ess_edges, ess_pairs = essential_parts(split)

    def attached(i: int) -> bool:
        e = split.edges[i]
        return (e.src in copies) if at_new_src else (e.dst in copies)

    removed_edges = tuple(
        e.index for e in split.edges if attached(e.index) and e.index not in ess_edges
    )
    dead = set(removed_edges)
    removed_pairs = tuple(
        (c, r)
        for (c, r) in sorted(split.matched)
        if (c in dead or r in dead)
        or ((c, r) not in ess_pairs and (attached(c) or attached(r)))
    )
    gone_pairs = set(removed_pairs)
    kept = [e for e in split.edges if e.index not in dead]
    index_map = {e.index: i for i, e in enumerate(kept)}
    triples = [(e.src, e.label, e.dst) for e in kept]
    origins = [record.edge_origin[e.index] for e in kept]
    matched = [
        (index_map[c], index_map[r])
        for (c, r) in sorted(split.matched)
        if (c, r) not in gone_pairs
    ]
    out = _rebuild(
        split, list(split.states), triples, [e.index for e in kept], matched
    )
    table = {
        w: index_map[v]
        for w, v in record.block_map.table.items()
        if v not in dead
    }
    new_record = SplitRecord(
        kind=record.kind,
        trim=True,
        state=record.state,
        partition=record.partition,
        renaming=record.renaming,
        edge_origin=tuple(origins),
        block_map=BlockMapSpec(record.block_map.m, record.block_map.a, table),
        quotient=BlockMapSpec(0, 0, {(i,): origins[i] for i in range(len(origins))}),
        removed_edges=removed_edges,
        removed_pairs=removed_pairs,
    )
    return out, new_record


def trim_in_split(
    aut: DyckAutomaton, part: Partition
) -> tuple[DyckAutomaton, SplitRecord]:
    split, record = in_split(aut, part)
    return _strip_split(split, record, at_new_src=True)


def trim_out_split(
    aut: DyckAutomaton, part: Partition
) -> tuple[DyckAutomaton, SplitRecord]:
    split, record = out_split(aut, part)
    return _strip_split(split, record, at_new_src=False)


# -- amalgamations ------------------------------------------------------------


@dataclass(frozen=True)
class AmalgRecord:
    """How states were merged: the classes, the state quotient, and where
    every old edge went."""

    classes: tuple[tuple[str, ...], ...]
    names: tuple[str, ...]
    state_map: dict[str, str]
    edge_map: tuple[int, ...]
    quotient: BlockMapSpec


def _default_merge_name(members: Sequence[str]) -> str:
    bases = {m.split("|")[0] for m in members}
    if len(bases) == 1 and all("|" in m for m in members):
        return bases.pop()
    return "+".join(sorted(members))


def _pi_triple(state_map: Mapping[str, str], e: Edge, label) -> tuple:
    return (state_map.get(e.src, e.src), label, state_map.get(e.dst, e.dst))


def amalgamation_record(
    aut: DyckAutomaton,
    merge: Sequence[Iterable[str]],
    names: Mapping[frozenset, str] | None = None,
) -> tuple[DyckAutomaton, AmalgRecord]:
    """Merge each listed class of states into one, checking the result could
    have been in-split back into the input.

    Class members must carry matching out-edge families (same labels and
    merged targets, with the same matching behaviour); for self-labelled
    graphs they must also draw in-edges from disjoint sources, since the
    quotient of a graph cannot host parallel edges.  The merge is finally
    validated by re-splitting, which is the authoritative check.
    """
    classes = [tuple(dict.fromkeys(c)) for c in merge]
    flat = [q for c in classes for q in c]
    if len(set(flat)) != len(flat):
        raise ModelError("merge classes overlap")
    for c in classes:
        if not c:
            raise ModelError("merge classes must be non-empty")
        for q in c:
            if q not in aut.states:
                raise ModelError(f"unknown state {q!r}")
            if not aut.in_edges(q):
                raise ModelError(
                    f"state {q!r} has no in-edges and cannot arise from an in-split"
                )

    chosen: list[str] = []
    state_map: dict[str, str] = {q: q for q in aut.states}
    untouched = set(aut.states) - set(flat)
    for c in classes:
        name = None
        if names:
            name = names.get(frozenset(c))
        if name is None:
            name = _default_merge_name(c)
        if name in untouched or name in chosen:
            raise ModelError(f"merged name {name!r} collides with an existing state")
        chosen.append(name)
        for q in c:
            state_map[q] = name

    graph = is_edge_graph(aut)
    if graph:
        for c in classes:
            seen_sources: dict[str, str] = {}
            for q in c:
                for e in aut.in_edges(q):
                    if e.src in seen_sources and seen_sources[e.src] != q:
                        raise ModelError(
                            "in-edge sources not disjoint: state "
                            f"{e.src!r} feeds both {seen_sources[e.src]!r} and {q!r}"
                        )
                    seen_sources[e.src] = q

    def label_key(e: Edge):
        return aut.edge_type(e.index) if graph else e.label

    def match_fp(e: Edge) -> tuple:
        left = sorted(
            repr(_pi_triple(state_map, aut.edges[c], label_key(aut.edges[c])))
            for (c, r) in aut.matched
            if r == e.index
        )
        right = sorted(
            repr(_pi_triple(state_map, aut.edges[r], label_key(aut.edges[r])))
            for (c, r) in aut.matched
            if c == e.index
        )
        return (tuple(left), tuple(right))

    # out-edge families must agree across each class; sigma pairs every
    # member out-edge with the representative's copy
    sigma: dict[int, int] = {}
    for c in classes:
        rep = c[0]

        def grouped(q: str) -> dict[tuple, list[Edge]]:
            groups: dict[tuple, list[Edge]] = {}
            for e in aut.out_edges(q):
                groups.setdefault(
                    (label_key(e), state_map.get(e.dst, e.dst)), []
                ).append(e)
            for g in groups.values():
                g.sort(key=match_fp)
            return groups

        rep_groups = grouped(rep)
        for q in c[1:]:
            qg = grouped(q)
            if set(qg) != set(rep_groups) or any(
                len(qg[k]) != len(rep_groups[k]) for k in qg
            ):
                raise ModelError(
                    f"out-edge families differ between {rep!r} and {q!r}"
                )
            for key in qg:
                if [match_fp(e) for e in qg[key]] != [
                    match_fp(e) for e in rep_groups[key]
                ]:
                    raise ModelError(
                        "matching is not class-uniform between "
                        f"{rep!r} and {q!r} on out-edges {key!r}"
                    )
                for mine, theirs in zip(qg[key], rep_groups[key]):
                    sigma[mine.index] = theirs.index

    skip_src = {q for c in classes for q in c[1:]}
    triples: list[tuple[str, Symbol, str]] = []
    origins: list[int] = []
    new_of_old: dict[int, int] = {}
    for e in aut.edges:
        if e.src in skip_src:
            continue
        new_of_old[e.index] = len(triples)
        triples.append((state_map[e.src], e.label, state_map[e.dst]))
        origins.append(e.index)
    edge_map = tuple(
        new_of_old[sigma.get(e.index, e.index)] for e in aut.edges
    )
    matched = sorted({(edge_map[c], edge_map[r]) for (c, r) in aut.matched})
    states = []
    placed: set[str] = set()
    for q in aut.states:
        name = state_map[q]
        if name not in placed:
            placed.add(name)
            states.append(name)
    out = _rebuild(aut, states, triples, origins, matched)

    record = AmalgRecord(
        classes=tuple(classes),
        names=tuple(chosen),
        state_map=state_map,
        edge_map=edge_map,
        quotient=BlockMapSpec(0, 0, {(i,): edge_map[i] for i in range(len(edge_map))}),
    )

    problem = _resplit_mismatch(aut, out, record, trim_split=False)
    if problem:
        raise ModelError(f"merge does not invert an in-split: {problem}")
    return out, record


def in_amalgamate(
    aut: DyckAutomaton,
    merge: Sequence[Iterable[str]],
    names: Mapping[frozenset, str] | None = None,
) -> DyckAutomaton:
    """Quotient automaton merging each class of states into one."""
    out, _ = amalgamation_record(aut, merge, names)
    return out


def _recovered_partition(
    current: DyckAutomaton,
    name: str,
    members: Sequence[str],
    to_input: Sequence[int],
    aut: DyckAutomaton,
) -> Partition:
    """Group the merged state's in-edges by which member they pointed at."""
    classes: list[tuple[int, ...]] = []
    for member in members:
        cls = tuple(
            e.index
            for e in current.in_edges(name)
            if aut.edges[to_input[e.index]].dst == member
        )
        classes.append(cls)
    return Partition(name, tuple(c for c in classes if c), side="in")


def _resplit_mismatch(
    aut: DyckAutomaton,
    quotient: DyckAutomaton,
    record: AmalgRecord,
    trim_split: bool,
) -> str | None:
    """Re-split the quotient along the recovered partition and compare with
    the input; None when they coincide up to the split renaming."""
    current = quotient
    to_input = list(range(len(quotient.edges)))
    for i, e in enumerate(quotient.edges):
        to_input[i] = _origin_in_input(record, i)
    rename: dict[str, str] = {q: q for q in quotient.states}
    splitter = trim_in_split if trim_split else in_split
    for cls, name in zip(record.classes, record.names):
        members = [m for m in cls if any(
            aut.edges[to_input[e.index]].dst == m for e in current.in_edges(name)
        )]
        if set(members) != set(cls):
            return f"member of {cls!r} lost all in-edges in the quotient"
        part = _recovered_partition(current, name, cls, to_input, aut)
        current, rec = splitter(current, part)
        to_input = [to_input[o] for o in rec.edge_origin]
        rename = {
            q: rename[rec.renaming[q]] if rec.renaming.get(q) in rename else q
            for q in current.states
        }
        copies = [q for q in current.states if rec.renaming.get(q) == name]
        for member, copy in zip(cls, copies):
            rename[copy] = member
    # rename maps re-split states to intended input states
    mapping = {q: rename.get(q, q) for q in current.states}
    return _mismatch_under(current, aut, mapping)


def _origin_in_input(record: AmalgRecord, new_index: int) -> int:
    for old, new in enumerate(record.edge_map):
        if new == new_index:
            return old
    raise ModelError(f"no pre-image for quotient edge {new_index}")


def _partner_lists(
    matched: Iterable[tuple[int, int]]
) -> tuple[dict[int, list[int]], dict[int, list[int]]]:
    """Per-edge matched partners: calls keyed by return, returns by call."""
    calls_of: dict[int, list[int]] = {}
    rets_of: dict[int, list[int]] = {}
    for c, r in matched:
        calls_of.setdefault(r, []).append(c)
        rets_of.setdefault(c, []).append(r)
    return calls_of, rets_of


def _joint_codes(
    fa: dict[int, object], fb: dict[int, object]
) -> tuple[dict[int, int], dict[int, int]]:
    """Replace fingerprints by small integers, consistently across both sides."""
    seen = sorted({repr(v) for v in fa.values()} | {repr(v) for v in fb.values()})
    code = {k: i for i, k in enumerate(seen)}
    return (
        {i: code[repr(v)] for i, v in fa.items()},
        {i: code[repr(v)] for i, v in fb.items()},
    )


def _mismatch_under(
    a: DyckAutomaton, b: DyckAutomaton, state_map: Mapping[str, str]
) -> str | None:
    """First structural difference between a (renamed) and b, or None.

    Edges are matched up by (source, label, target) after renaming, using
    edge types instead of labels when both sides are self-labelled graphs;
    ties between parallel twins are broken by their matching fingerprints.
    """
    if sorted(state_map.get(q, q) for q in a.states) != sorted(b.states):
        return (
            f"states {sorted(state_map.get(q, q) for q in a.states)} != "
            f"{sorted(b.states)}"
        )
    typed = is_edge_graph(a) and is_edge_graph(b)

    def key(aut: DyckAutomaton, e: Edge, rename: Mapping[str, str]) -> tuple:
        label = aut.edge_type(e.index) if typed else e.label
        return (rename.get(e.src, e.src), label, rename.get(e.dst, e.dst))

    ident: dict[str, str] = {}
    fp_a: dict[int, object] = {e.index: key(a, e, state_map) for e in a.edges}
    fp_b: dict[int, object] = {e.index: key(b, e, ident) for e in b.edges}
    calls_a, rets_a = _partner_lists(a.matched)
    calls_b, rets_b = _partner_lists(b.matched)
    for _ in range(3):
        ca, cb = _joint_codes(fp_a, fp_b)
        fp_a = {
            i: (
                ca[i],
                tuple(sorted(ca[x] for x in calls_a.get(i, ()))),
                tuple(sorted(ca[x] for x in rets_a.get(i, ()))),
            )
            for i in ca
        }
        fp_b = {
            i: (
                cb[i],
                tuple(sorted(cb[x] for x in calls_b.get(i, ()))),
                tuple(sorted(cb[x] for x in rets_b.get(i, ()))),
            )
            for i in cb
        }
    groups_a: dict[str, list[int]] = {}
    groups_b: dict[str, list[int]] = {}
    for i, fp in fp_a.items():
        groups_a.setdefault(repr(fp), []).append(i)
    for i, fp in fp_b.items():
        groups_b.setdefault(repr(fp), []).append(i)
    if set(groups_a) != set(groups_b) or any(
        len(groups_a[k]) != len(groups_b[k]) for k in groups_a
    ):
        only_a = [k for k in groups_a if len(groups_a.get(k, ())) != len(groups_b.get(k, ()))]
        return f"edge families differ at {sorted(only_a)[:1]}"
    bij: dict[int, int] = {}
    for k in groups_a:
        for x, y in zip(sorted(groups_a[k]), sorted(groups_b[k])):
            bij[x] = y
    image = {(bij[c], bij[r]) for (c, r) in a.matched}
    if image != set(b.matched):
        diff = sorted(image ^ set(b.matched))[0]
        return f"matched relation differs at pair {diff}"
    return None


def trim_in_amalgamate(
    aut: DyckAutomaton,
    merge: Sequence[Iterable[str]],
    names: Mapping[frozenset, str] | None = None,
) -> DyckAutomaton:
    """Merge classes of states whose out-edge families may differ, taking
    the union; valid when trim-splitting the quotient back along the
    recovered partition reproduces the input."""
    classes = [tuple(dict.fromkeys(c)) for c in merge]
    flat = [q for c in classes for q in c]
    if len(set(flat)) != len(flat):
        raise ModelError("merge classes overlap")
    state_map: dict[str, str] = {q: q for q in aut.states}
    chosen = []
    for c in classes:
        if not c:
            raise ModelError("merge classes must be non-empty")
        name = (names or {}).get(frozenset(c)) or _default_merge_name(c)
        chosen.append(name)
        for q in c:
            if q not in aut.states:
                raise ModelError(f"unknown state {q!r}")
            state_map[q] = name

    graph = is_edge_graph(aut)

    def label_key(e: Edge):
        return aut.edge_type(e.index) if graph else e.label

    members_all = set(flat)
    union_rep: dict[tuple, int] = {}
    triples: list[tuple[str, Symbol, str]] = []
    origins: list[int] = []
    edge_map: dict[int, int] = {}
    for e in aut.edges:
        tri = _pi_triple(state_map, e, label_key(e))
        if e.src in members_all:
            seen = union_rep.get(tri)
            if seen is not None:
                edge_map[e.index] = seen
                continue
            union_rep[tri] = len(triples)
        edge_map[e.index] = len(triples)
        triples.append((state_map[e.src], e.label, state_map[e.dst]))
        origins.append(e.index)
    matched = sorted({(edge_map[c], edge_map[r]) for (c, r) in aut.matched})
    states = []
    placed: set[str] = set()
    for q in aut.states:
        name = state_map[q]
        if name not in placed:
            placed.add(name)
            states.append(name)
    out = _rebuild(aut, states, triples, origins, matched)
    record = AmalgRecord(
        classes=tuple(classes),
        names=tuple(chosen),
        state_map=state_map,
        edge_map=tuple(edge_map[i] for i in range(len(aut.edges))),
        quotient=BlockMapSpec(0, 0, {(i,): edge_map[i] for i in range(len(aut.edges))}),
    )
    problem = _resplit_mismatch(aut, out, record, trim_split=True)
    if problem:
        raise ModelError(f"merge does not invert a trim in-split: {problem}")
    return out


def common_amalgamation(
    g1: DyckAutomaton,
    g2: DyckAutomaton,
    g3: DyckAutomaton,
    phi: AmalgRecord,
    psi: AmalgRecord,
) -> tuple[DyckAutomaton, AmalgRecord, AmalgRecord]:
    """A common in-amalgamation g4 of g2 and g3, with the quotient records
    omega (g2 to g4) and theta (g3 to g4) closing the square.

    When the two merge classes are disjoint, g4 merges the image of one
    with the untouched members of the other; when they overlap, only the
    members outside the overlap join in.
    """
    if len(phi.classes) != 1 or len(psi.classes) != 1:
        raise ModelError("common_amalgamation needs single-class merges")
    check2, _ = amalgamation_record(g1, phi.classes, dict(zip(map(frozenset, phi.classes), phi.names)))
    if _mismatch_under(check2, g2, {q: q for q in check2.states}):
        raise ModelError("phi is not an amalgamation of g1 onto g2")
    check3, _ = amalgamation_record(g1, psi.classes, dict(zip(map(frozenset, psi.classes), psi.names)))
    if _mismatch_under(check3, g3, {q: q for q in check3.states}):
        raise ModelError("psi is not an amalgamation of g1 onto g3")

    p_set, q_set = set(phi.classes[0]), set(psi.classes[0])
    n_p, n_q = phi.names[0], psi.names[0]
    overlap = p_set & q_set
    if p_set == q_set:
        name4 = n_p
    else:
        name4 = _default_merge_name(sorted(p_set | q_set))
    omega_class = tuple([n_p] + sorted(q_set - overlap))
    theta_class = tuple([n_q] + sorted(p_set - overlap))
    if len(omega_class) == 1 and n_p == name4:
        g4a, omega = g2, _identity_amalg(g2)
    else:
        g4a, omega = amalgamation_record(
            g2, [omega_class], {frozenset(omega_class): name4}
        )
    if len(theta_class) == 1 and n_q == name4:
        g4b, theta = g3, _identity_amalg(g3)
    else:
        g4b, theta = amalgamation_record(
            g3, [theta_class], {frozenset(theta_class): name4}
        )
    mismatch = _mismatch_under(g4b, g4a, {q: q for q in g4b.states})
    if mismatch:
        raise ModelError(f"common amalgamation does not close: {mismatch}")
    # reconcile theta's edge indices with g4a's through the structural map
    swap = _edge_bijection(g4b, g4a)
    theta = AmalgRecord(
        classes=theta.classes,
        names=theta.names,
        state_map=theta.state_map,
        edge_map=tuple(swap[i] for i in theta.edge_map),
        quotient=BlockMapSpec(
            0, 0, {(i,): swap[theta.edge_map[i]] for i in range(len(theta.edge_map))}
        ),
    )
    for x in range(len(g1.edges)):
        if omega.edge_map[phi.edge_map[x]] != theta.edge_map[psi.edge_map[x]]:
            raise ModelError(f"quotient maps disagree on edge {x}")
    return g4a, omega, theta


def _identity_amalg(aut: DyckAutomaton) -> AmalgRecord:
    n = len(aut.edges)
    return AmalgRecord(
        classes=(),
        names=(),
        state_map={q: q for q in aut.states},
        edge_map=tuple(range(n)),
        quotient=BlockMapSpec(0, 0, {(i,): i for i in range(n)}),
    )


def _edge_bijection(a: DyckAutomaton, b: DyckAutomaton) -> dict[int, int]:
    """Index bijection between structurally equal automata (same states)."""
    typed = is_edge_graph(a) and is_edge_graph(b)

    def key(aut: DyckAutomaton, e: Edge) -> tuple:
        label = aut.edge_type(e.index) if typed else e.label
        return (e.src, label, e.dst)

    groups: dict[tuple, list[int]] = {}
    for e in b.edges:
        groups.setdefault(key(b, e), []).append(e.index)
    out: dict[int, int] = {}
    for e in a.edges:
        pool = groups.get(key(a, e))
        if not pool:
            raise ModelError(f"no counterpart for edge {e.index}")
        out[e.index] = pool.pop(0)
    return out


# -- whole-automaton splits (used by the decomposition driver) ----------------


@dataclass(frozen=True)
class CompleteSplitRecord:
    """A simultaneous split of every state.

    ``classes`` maps each state to its (key, edge indices) partition slices;
    new states are named state|key.  ``edge_origin`` traces new edges back,
    ``src_key``/``dst_key`` give each new edge's copy coordinates, and the
    block maps are the splitting conjugacy over edge indices and its
    inverse, as in SplitRecord.
    """

    kind: str
    trim: bool
    classes: dict[str, tuple[tuple[str, tuple[int, ...]], ...]]
    renaming: dict[str, str]
    edge_origin: tuple[int, ...]
    src_key: tuple[str, ...]
    dst_key: tuple[str, ...]
    block_map: BlockMapSpec
    quotient: BlockMapSpec

    def copy_index(self, origin: int, key: str, at_src: bool) -> int | None:
        pool = self.src_key if at_src else self.dst_key
        for i, o in enumerate(self.edge_origin):
            if o == origin and pool[i] == key:
                return i
        return None


def _singleton_classes(
    edges: Sequence[Edge],
) -> tuple[tuple[str, tuple[int, ...]], ...]:
    return tuple((str(e.index), (e.index,)) for e in edges)


def _junction_ok(aut: DyckAutomaton, f: int, e: int) -> bool:
    """Whether edge f may immediately precede edge e on an admissible path."""
    return not (
        aut.edge_type(f) == CALL
        and aut.edge_type(e) == RETURN
        and (f, e) not in aut.matched
    )


def complete_in_split(
    aut: DyckAutomaton,
    classes: Mapping[str, Sequence[tuple[str, Sequence[int]]]] | None = None,
    *,
    trim: bool = False,
    admissible_junctions: bool = True,
) -> tuple[DyckAutomaton, CompleteSplitRecord]:
    """Split every state at once by a partition of its in-edges (singletons
    by default).  States without in-edges disappear.

    New states are named q|key.  An edge lands in the copy of its own class
    and leaves from every copy of its source; junctions that can never be
    taken (an unmatched call directly into a return) are skipped when
    ``admissible_junctions`` is set.
    """
    resolved: dict[str, tuple[tuple[str, tuple[int, ...]], ...]] = {}
    for q in aut.states:
        if classes is not None and q in classes:
            resolved[q] = tuple((k, tuple(v)) for k, v in classes[q])
        else:
            resolved[q] = _singleton_classes(aut.in_edges(q))
        covered = [i for _, v in resolved[q] for i in v]
        if sorted(covered) != sorted(e.index for e in aut.in_edges(q)):
            raise ModelError(f"classes at {q!r} do not partition the in-edges")
    key_of_edge: dict[int, str] = {}
    for q, slices in resolved.items():
        for k, v in slices:
            for i in v:
                key_of_edge[i] = k

    states: list[str] = []
    renaming: dict[str, str] = {}
    for q in aut.states:
        for k, _ in resolved[q]:
            name = f"{q}|{k}"
            states.append(name)
            renaming[name] = q

    triples: list[tuple[str, Symbol, str]] = []
    origins: list[int] = []
    src_keys: list[str] = []
    dst_keys: list[str] = []
    for e in aut.edges:
        dst = f"{e.dst}|{key_of_edge[e.index]}"
        for k, members in resolved[e.src]:
            if admissible_junctions and not any(
                _junction_ok(aut, f, e.index) for f in members
            ):
                continue
            triples.append((f"{e.src}|{k}", e.label, dst))
            origins.append(e.index)
            src_keys.append(k)
            dst_keys.append(key_of_edge[e.index])
    matched = [
        (x, y)
        for x in range(len(triples))
        for y in range(len(triples))
        if (origins[x], origins[y]) in aut.matched
    ]
    out = _rebuild(aut, states, triples, origins, matched)

    lookup = {(origins[i], src_keys[i]): i for i in range(len(origins))}
    table: dict[tuple, Symbol] = {}
    for f in aut.edges:
        for e in aut.out_edges(f.dst):
            hit = lookup.get((e.index, key_of_edge[f.index]))
            if hit is not None:
                table[(f.index, e.index)] = hit
    record = CompleteSplitRecord(
        kind="in",
        trim=False,
        classes=resolved,
        renaming=renaming,
        edge_origin=tuple(origins),
        src_key=tuple(src_keys),
        dst_key=tuple(dst_keys),
        block_map=BlockMapSpec(1, 0, table),
        quotient=BlockMapSpec(0, 0, {(i,): origins[i] for i in range(len(origins))}),
    )
    if trim:
        return _strip_complete(out, record)
    return out, record


def complete_out_split(
    aut: DyckAutomaton,
    classes: Mapping[str, Sequence[tuple[str, Sequence[int]]]] | None = None,
    *,
    trim: bool = False,
    admissible_junctions: bool = True,
) -> tuple[DyckAutomaton, CompleteSplitRecord]:
    """Mirror of complete_in_split over out-edges; out-edge-less states
    disappear and the conjugacy anticipates one edge instead."""
    resolved: dict[str, tuple[tuple[str, tuple[int, ...]], ...]] = {}
    for q in aut.states:
        if classes is not None and q in classes:
            resolved[q] = tuple((k, tuple(v)) for k, v in classes[q])
        else:
            resolved[q] = _singleton_classes(aut.out_edges(q))
        covered = [i for _, v in resolved[q] for i in v]
        if sorted(covered) != sorted(e.index for e in aut.out_edges(q)):
            raise ModelError(f"classes at {q!r} do not partition the out-edges")
    key_of_edge: dict[int, str] = {}
    for q, slices in resolved.items():
        for k, v in slices:
            for i in v:
                key_of_edge[i] = k

    states: list[str] = []
    renaming: dict[str, str] = {}
    for q in aut.states:
        for k, _ in resolved[q]:
            name = f"{q}|{k}"
            states.append(name)
            renaming[name] = q

    triples: list[tuple[str, Symbol, str]] = []
    origins: list[int] = []
    src_keys: list[str] = []
    dst_keys: list[str] = []
    for e in aut.edges:
        src = f"{e.src}|{key_of_edge[e.index]}"
        for k, members in resolved[e.dst]:
            if admissible_junctions and not any(
                _junction_ok(aut, e.index, g) for g in members
            ):
                continue
            triples.append((src, e.label, f"{e.dst}|{k}"))
            origins.append(e.index)
            src_keys.append(key_of_edge[e.index])
            dst_keys.append(k)
    matched = [
        (x, y)
        for x in range(len(triples))
        for y in range(len(triples))
        if (origins[x], origins[y]) in aut.matched
    ]
    out = _rebuild(aut, states, triples, origins, matched)

    lookup = {(origins[i], dst_keys[i]): i for i in range(len(origins))}
    table: dict[tuple, Symbol] = {}
    for e in aut.edges:
        for g in aut.out_edges(e.dst):
            hit = lookup.get((e.index, key_of_edge[g.index]))
            if hit is not None:
                table[(e.index, g.index)] = hit
    record = CompleteSplitRecord(
        kind="out",
        trim=False,
        classes=resolved,
        renaming=renaming,
        edge_origin=tuple(origins),
        src_key=tuple(src_keys),
        dst_key=tuple(dst_keys),
        block_map=BlockMapSpec(0, 1, table),
        quotient=BlockMapSpec(0, 0, {(i,): origins[i] for i in range(len(origins))}),
    )
    if trim:
        return _strip_complete(out, record)
    return out, record


def _strip_complete(
    split: DyckAutomaton, record: CompleteSplitRecord
) -> tuple[DyckAutomaton, CompleteSplitRecord]:
    """Every state is new in a complete split, so trimming keeps exactly the
    essential edges and pairs; states are kept (isolated ones drop out at
    the next complete split or an explicit trim)."""
    ess_edges, ess_pairs = essential_parts(split)
    kept = [e for e in split.edges if e.index in ess_edges]
    index_map = {e.index: i for i, e in enumerate(kept)}
    triples = [(e.src, e.label, e.dst) for e in kept]
    origins = [record.edge_origin[e.index] for e in kept]
    matched = [
        (index_map[c], index_map[r]) for (c, r) in sorted(ess_pairs)
    ]
    out = _rebuild(
        split, list(split.states), triples, [e.index for e in kept], matched
    )
    table = {
        w: index_map[v]
        for w, v in record.block_map.table.items()
        if v in index_map
    }
    new_record = CompleteSplitRecord(
        kind=record.kind,
        trim=True,
        classes=record.classes,
        renaming=record.renaming,
        edge_origin=tuple(origins),
        src_key=tuple(record.src_key[e.index] for e in kept),
        dst_key=tuple(record.dst_key[e.index] for e in kept),
        block_map=BlockMapSpec(record.block_map.m, record.block_map.a, table),
        quotient=BlockMapSpec(0, 0, {(i,): origins[i] for i in range(len(origins))}),
    )
    return out, new_record
