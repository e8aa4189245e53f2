"""JSON interchange documents, DOT export, and certificate serialization.

One document family covers automata, block maps, and decomposition
certificates.  Serialization is canonical: states sorted, edges in index
order, matched pairs sorted, fixed two-space indentation.  Parsing a
canonical document and serializing the result reproduces it byte for byte.
"""

from __future__ import annotations

import json
from typing import Any, Mapping, Sequence

from .decompose import DecompositionCertificate
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
    is_edge_graph,
    validate,
)


class DocumentError(ValueError):
    """Malformed document; the message names the offending position."""


# -- symbols ---------------------------------------------------------------
# JSON strings and numbers pass through; tuples become arrays and back.


def _encode_symbol(s: Symbol) -> Any:
    if isinstance(s, tuple):
        return [_encode_symbol(x) for x in s]
    if isinstance(s, (str, int, float, bool)) or s is None:
        return s
    raise DocumentError(f"symbol {s!r} has no document encoding")


def _decode_symbol(v: Any) -> Symbol:
    if isinstance(v, list):
        return tuple(_decode_symbol(x) for x in v)
    return v


def _decode_word(v: Any, where: str) -> Word:
    if not isinstance(v, list):
        raise DocumentError(f"{where}: expected an array word, got {v!r}")
    return tuple(_decode_symbol(x) for x in v)


def _expect(obj: Mapping[str, Any], key: str, kind: type, where: str) -> Any:
    if key not in obj:
        raise DocumentError(f"{where}: missing key {key!r}")
    v = obj[key]
    if not isinstance(v, kind):
        raise DocumentError(f"{where}.{key}: expected {kind.__name__}, got {type(v).__name__}")
    return v


def _load(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise DocumentError(f"line {e.lineno} column {e.colno}: {e.msg}") from None


# -- automaton documents ----------------------------------------------------


def automaton_to_doc(aut: DyckAutomaton) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "kind": "edge-graph" if is_edge_graph(aut) else "automaton",
        "alphabet": {
            "call": [_encode_symbol(s) for s in aut.alphabet.call],
            "return": [_encode_symbol(s) for s in aut.alphabet.ret],
            "internal": [_encode_symbol(s) for s in aut.alphabet.internal],
        },
        "states": sorted(aut.states),
        "edges": [
            {"from": e.src, "label": _encode_symbol(e.label), "to": e.dst}
            for e in aut.edges
        ],
        "matched": [list(p) for p in sorted(aut.matched)],
    }
    return doc


def automaton_from_doc(doc: Mapping[str, Any], where: str = "document") -> DyckAutomaton:
    if not isinstance(doc, Mapping):
        raise DocumentError(f"{where}: expected an object")
    alpha = _expect(doc, "alphabet", Mapping, where)
    parts = []
    for part in ("call", "return", "internal"):
        arr = _expect(alpha, part, list, f"{where}.alphabet")
        parts.append(tuple(_decode_symbol(s) for s in arr))
    try:
        alphabet = TriAlphabet(*parts)
    except ModelError as e:
        raise DocumentError(f"{where}.alphabet: {e}") from None
    states = _expect(doc, "states", list, where)
    for i, q in enumerate(states):
        if not isinstance(q, str):
            raise DocumentError(f"{where}.states[{i}]: state names must be strings")
    edges = []
    for i, rec in enumerate(_expect(doc, "edges", list, where)):
        if not isinstance(rec, Mapping):
            raise DocumentError(f"{where}.edges[{i}]: expected an object")
        src = _expect(rec, "from", str, f"{where}.edges[{i}]")
        dst = _expect(rec, "to", str, f"{where}.edges[{i}]")
        if "label" not in rec:
            raise DocumentError(f"{where}.edges[{i}]: missing key 'label'")
        edges.append((src, _decode_symbol(rec["label"]), dst))
    matched = []
    for i, pair in enumerate(doc.get("matched", [])):
        if not (isinstance(pair, list) and len(pair) == 2):
            raise DocumentError(f"{where}.matched[{i}]: expected [call, return]")
        matched.append((pair[0], pair[1]))
    try:
        aut = DyckAutomaton(alphabet, states, edges, matched)
    except (ModelError, KeyError) as e:
        raise DocumentError(f"{where}: {e}") from None
    problems = validate(aut)
    if problems:
        raise DocumentError(f"{where}: " + "; ".join(problems))
    kind = doc.get("kind")
    if kind not in (None, "automaton", "edge-graph"):
        raise DocumentError(f"{where}.kind: unknown kind {kind!r}")
    if kind == "edge-graph" and not is_edge_graph(aut):
        raise DocumentError(f"{where}: document claims an edge graph but is not self-labelled")
    return aut


def parse_automaton(text: str) -> DyckAutomaton:
    return automaton_from_doc(_load(text))


def serialize_automaton(aut: DyckAutomaton) -> str:
    return json.dumps(automaton_to_doc(aut), indent=2) + "\n"


# -- block map documents ----------------------------------------------------


def blockmap_to_doc(spec: BlockMapSpec) -> dict[str, Any]:
    rows = sorted(
        ([_encode_symbol(s) for s in w], _encode_symbol(v))
        for w, v in spec.table.items()
    )
    return {
        "m": spec.m,
        "a": spec.a,
        "proper": spec.proper,
        "table": [[w, v] for w, v in rows],
    }


def blockmap_from_doc(doc: Mapping[str, Any], where: str = "blockmap") -> BlockMapSpec:
    if not isinstance(doc, Mapping):
        raise DocumentError(f"{where}: expected an object")
    m = _expect(doc, "m", int, where)
    a = _expect(doc, "a", int, where)
    proper = doc.get("proper", True)
    if not isinstance(proper, bool):
        raise DocumentError(f"{where}.proper: expected a boolean")
    table: dict[Word, Symbol] = {}
    for i, row in enumerate(_expect(doc, "table", list, where)):
        if not (isinstance(row, list) and len(row) == 2):
            raise DocumentError(f"{where}.table[{i}]: expected [word, symbol]")
        word = _decode_word(row[0], f"{where}.table[{i}]")
        table[word] = _decode_symbol(row[1])
    try:
        return BlockMapSpec(m, a, table, proper)
    except ModelError as e:
        raise DocumentError(f"{where}: {e}") from None


def parse_block_map(text: str) -> BlockMapSpec:
    return blockmap_from_doc(_load(text))


def serialize_block_map(spec: BlockMapSpec) -> str:
    return json.dumps(blockmap_to_doc(spec), indent=2) + "\n"


# -- certificates -----------------------------------------------------------


def certificate_to_doc(cert: DecompositionCertificate) -> dict[str, Any]:
    def enc_ops(ops: Sequence[Mapping[str, Any]]) -> list[dict[str, Any]]:
        out = []
        for op in ops:
            rec = dict(op)
            if "classes" in rec and rec["classes"] is not None:
                rec["classes"] = {
                    q: [[key, list(edges)] for key, edges in classes]
                    for q, classes in rec["classes"].items()
                }
            out.append(rec)
        return out

    return {
        "kind": "certificate",
        "source_ops": enc_ops(cert.source_ops),
        "target_ops": enc_ops(cert.target_ops),
        "rho": blockmap_to_doc(cert.rho),
        "transcript": list(cert.transcript),
    }


def certificate_from_doc(doc: Mapping[str, Any]) -> DecompositionCertificate:
    if not isinstance(doc, Mapping) or doc.get("kind") != "certificate":
        raise DocumentError("certificate: expected an object with kind 'certificate'")

    def dec_ops(rows: Any, where: str) -> tuple[dict[str, Any], ...]:
        if not isinstance(rows, list):
            raise DocumentError(f"{where}: expected an array")
        out = []
        for i, rec in enumerate(rows):
            if not (isinstance(rec, Mapping) and isinstance(rec.get("op"), str)):
                raise DocumentError(f"{where}[{i}]: expected an object with an 'op' name")
            op = dict(rec)
            if "classes" in op and op["classes"] is not None:
                op["classes"] = {
                    q: [(row[0], [int(x) for x in row[1]]) for row in classes]
                    for q, classes in op["classes"].items()
                }
            out.append(op)
        return tuple(out)

    return DecompositionCertificate(
        source_ops=dec_ops(doc.get("source_ops"), "certificate.source_ops"),
        target_ops=dec_ops(doc.get("target_ops"), "certificate.target_ops"),
        rho=blockmap_from_doc(_expect(doc, "rho", Mapping, "certificate"), "certificate.rho"),
        transcript=tuple(doc.get("transcript", [])),
    )


def parse_certificate(text: str) -> DecompositionCertificate:
    return certificate_from_doc(_load(text))


def serialize_certificate(cert: DecompositionCertificate) -> str:
    return json.dumps(certificate_to_doc(cert), indent=2) + "\n"


# -- DOT export --------------------------------------------------------------

_DOT_STYLE = {CALL: "bold", RETURN: "dashed", INTERNAL: "solid"}


def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(aut: DyckAutomaton, name: str = "dyck") -> str:
    """Deterministic DOT text: edges styled by type, matching as comments."""
    lines = [f"digraph {name} {{"]
    for q in sorted(aut.states):
        lines.append(f"  {_dot_quote(q)};")
    for e in aut.edges:
        style = _DOT_STYLE[aut.edge_type(e.index)]
        label = e.label if isinstance(e.label, str) else repr(e.label)
        lines.append(
            f"  {_dot_quote(e.src)} -> {_dot_quote(e.dst)}"
            f" [label={_dot_quote(label)}, style={style}];"
        )
    for c, r in sorted(aut.matched):
        lines.append(f"  // matched {c} {r}")
    lines.append("}")
    return "\n".join(lines) + "\n"
