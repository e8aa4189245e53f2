"""Command line front end.

Automaton arguments take a file path or ``corpus:NAME`` for a bundled
example.  Words and paths are comma separated on the command line; tokens
that parse as integers are read as integers, everything else stays a
string.  Exit status: 0 for success and true answers, 1 for false answers
(not admissible, not local, rejected conjugacy, failed replay), 2 for bad
input or usage.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import corpus
from .build import (
    de_bruijn,
    image_automaton,
    product,
    product_intersection,
    to_edge_dyck,
)
from .decompose import ProperConjugacy, decompose, replay_certificate
from .docio import (
    DocumentError,
    export_dot,
    parse_automaton,
    parse_block_map,
    parse_certificate,
    serialize_automaton,
    serialize_block_map,
    serialize_certificate,
)
from .locality import is_local, is_weak_local, minimal_locality
from .model import DyckAutomaton, ModelError, Partition, Symbol
from .report import write_report
from .semigroup import reduce_path
from .surgery import (
    essential_parts,
    in_amalgamate,
    in_split,
    out_split,
    trim,
    trim_in_amalgamate,
    trim_in_split,
    trim_out_split,
)
from .words import admissible_words, centered_blocks, is_admissible_word

# -- argument decoding ---------------------------------------------------------


def _symbol(token: str) -> Symbol:
    try:
        return int(token)
    except ValueError:
        return token


def _word(text: str) -> tuple[Symbol, ...]:
    return tuple(_symbol(t) for t in text.split(",") if t != "")


def _indices(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(",") if t != "")
    except ValueError:
        raise DocumentError(f"expected comma separated edge indices, got {text!r}")


def _classes(text: str) -> list[list[str]]:
    out = [[t.strip() for t in cls.split(",") if t.strip()] for cls in text.split("|")]
    out = [cls for cls in out if cls]
    if not out:
        raise DocumentError(f"empty class list {text!r}")
    return out


def _load_automaton(ref: str) -> DyckAutomaton:
    if ref.startswith("corpus:"):
        name = ref[len("corpus:") :]
        try:
            return corpus.load(name)
        except KeyError:
            raise DocumentError(
                f"no corpus entry named {name!r}; run 'dyckaut corpus' for the list"
            )
    return parse_automaton(Path(ref).read_text(encoding="utf-8"))


def _load_block_map(ref: str):
    return parse_block_map(Path(ref).read_text(encoding="utf-8"))


def _fmt_symbol(sym: Symbol) -> str:
    return sym if isinstance(sym, str) else repr(sym)


def _fmt_word(word: tuple[Symbol, ...]) -> str:
    return ",".join(_fmt_symbol(s) for s in word)


# -- subcommands ---------------------------------------------------------------


def cmd_corpus(args: argparse.Namespace) -> int:
    if args.name:
        print(serialize_automaton(corpus.load(args.name)), end="")
        return 0
    for name in corpus.names():
        entry = corpus.manifest()["entries"][name]
        print(f"{name}\t{entry['group']}\t{entry['description']}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        aut = _load_automaton(args.automaton)
    except DocumentError as ex:
        print(f"invalid: {ex}")
        return 1
    print(
        f"ok: {len(aut.states)} states, {len(aut.edges)} edges, "
        f"{len(aut.matched)} matched pairs"
    )
    return 0


def cmd_admissible(args: argparse.Namespace) -> int:
    aut = _load_automaton(args.automaton)
    word = _word(args.word)
    if is_admissible_word(aut, word):
        print("admissible")
        return 0
    print("not admissible")
    return 1


def cmd_blocks(args: argparse.Namespace) -> int:
    aut = _load_automaton(args.automaton)
    for n in range(1, args.max_len + 1):
        if args.centered:
            words = centered_blocks(aut, n, args.margin)
        else:
            words = admissible_words(aut, n)
        for word in sorted(words, key=_fmt_word):
            print(_fmt_word(word))
    return 0


def cmd_reduce(args: argparse.Namespace) -> int:
    aut = _load_automaton(args.automaton)
    nf = reduce_path(aut, _indices(args.path))
    print(nf)
    return 0


def cmd_local(args: argparse.Namespace) -> int:
    aut = _load_automaton(args.automaton)
    check = is_weak_local if args.weak else is_local
    if check(aut, args.m, args.a):
        print("yes")
        return 0
    print("no")
    return 1


def cmd_minimal_local(args: argparse.Namespace) -> int:
    aut = _load_automaton(args.automaton)
    found = minimal_locality(aut, args.max_m, args.max_a, weak=args.weak)
    if found is None:
        print("none")
        return 1
    print(f"({found[0]}, {found[1]})")
    return 0


def cmd_product(args: argparse.Namespace) -> int:
    a1 = _load_automaton(args.left)
    a2 = _load_automaton(args.right)
    build = product_intersection if args.intersect else product
    print(serialize_automaton(build(a1, a2)), end="")
    return 0


def cmd_debruijn(args: argparse.Namespace) -> int:
    aut = _load_automaton(args.automaton)
    print(serialize_automaton(de_bruijn(aut.alphabet, args.m, args.a)), end="")
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    aut = _load_automaton(args.automaton)
    classes = tuple(_indices(cls) for cls in args.classes.split("|"))
    part = Partition(args.state, classes, side=args.kind)
    ops = {
        ("in", False): in_split,
        ("in", True): trim_in_split,
        ("out", False): out_split,
        ("out", True): trim_out_split,
    }
    result, _ = ops[(args.kind, args.trim)](aut, part)
    print(serialize_automaton(result), end="")
    return 0


def cmd_amalgamate(args: argparse.Namespace) -> int:
    aut = _load_automaton(args.automaton)
    merge = _classes(args.classes)
    op = trim_in_amalgamate if args.trim else in_amalgamate
    print(serialize_automaton(op(aut, merge)), end="")
    return 0


def cmd_trim(args: argparse.Namespace) -> int:
    aut = _load_automaton(args.automaton)
    print(serialize_automaton(trim(aut)), end="")
    return 0


def cmd_essential(args: argparse.Namespace) -> int:
    aut = _load_automaton(args.automaton)
    ess = essential_parts(aut)
    print("edges: " + (",".join(str(i) for i in sorted(ess.edges)) or "-"))
    print(
        "pairs: "
        + (" ".join(f"({c},{r})" for c, r in sorted(ess.pairs)) or "-")
    )
    dropped = sorted(set(range(len(aut.edges))) - ess.edges)
    print("dropped: " + (",".join(str(i) for i in dropped) or "-"))
    return 0


def cmd_edge_graph(args: argparse.Namespace) -> int:
    aut = _load_automaton(args.automaton)
    graph, fwd, inv = to_edge_dyck(aut, max_m=args.max_m, max_a=args.max_a)
    if args.forward_out:
        Path(args.forward_out).write_text(serialize_block_map(fwd), encoding="utf-8")
    if args.inverse_out:
        Path(args.inverse_out).write_text(serialize_block_map(inv), encoding="utf-8")
    print(serialize_automaton(graph), end="")
    return 0


def cmd_image(args: argparse.Namespace) -> int:
    aut = _load_automaton(args.automaton)
    spec = _load_block_map(args.map)
    print(serialize_automaton(image_automaton(aut, spec)), end="")
    return 0


def cmd_decompose(args: argparse.Namespace) -> int:
    conj = ProperConjugacy(
        _load_automaton(args.source),
        _load_automaton(args.target),
        _load_block_map(args.forward),
        _load_block_map(args.inverse),
    )
    try:
        cert = decompose(conj, args.bound)
    except ModelError as ex:
        print(f"rejected: {ex}")
        return 1
    for line in cert.transcript:
        print(line)
    if args.cert:
        Path(args.cert).write_text(serialize_certificate(cert), encoding="utf-8")
        print(f"certificate written to {args.cert}")
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    source = _load_automaton(args.source)
    target = _load_automaton(args.target)
    cert = parse_certificate(Path(args.cert).read_text(encoding="utf-8"))
    ok, lines = replay_certificate(source, target, cert)
    for line in lines:
        print(line)
    print("replay ok" if ok else "replay FAILED")
    return 0 if ok else 1


def cmd_export_dot(args: argparse.Namespace) -> int:
    aut = _load_automaton(args.automaton)
    print(export_dot(aut, name=args.name), end="")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    aut = _load_automaton(args.automaton)
    for path in write_report(aut, args.out, name=args.name, max_len=args.max_len):
        print(path)
    return 0


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dyckaut",
        description="Dyck automata: admissibility, locality, surgery, "
        "conjugacy decomposition.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, fn, help_: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=fn)
        return p

    p = add("corpus", cmd_corpus, "list bundled examples, or print one as JSON")
    p.add_argument("name", nargs="?", help="entry to print")

    p = add("validate", cmd_validate, "check a document describes a Dyck automaton")
    p.add_argument("automaton")

    p = add("admissible", cmd_admissible, "test a label word for admissibility")
    p.add_argument("automaton")
    p.add_argument("--word", required=True, help="comma separated symbols")

    p = add("blocks", cmd_blocks, "print admissible words up to a length")
    p.add_argument("automaton")
    p.add_argument("--max-len", type=int, default=4)
    p.add_argument(
        "--centered",
        action="store_true",
        help="keep only words that sit centrally in longer admissible words",
    )
    p.add_argument("--margin", type=int, default=None, help="extension margin")

    p = add("reduce", cmd_reduce, "reduce an edge path in the graph semigroup")
    p.add_argument("automaton")
    p.add_argument("--path", required=True, help="comma separated edge indices")

    p = add("local", cmd_local, "test (m, a)-locality")
    p.add_argument("automaton")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--weak", action="store_true")

    p = add("minimal-local", cmd_minimal_local, "search the least locality window")
    p.add_argument("automaton")
    p.add_argument("--max-m", type=int, default=6)
    p.add_argument("--max-a", type=int, default=6)
    p.add_argument("--weak", action="store_true")

    p = add("product", cmd_product, "label product of two automata")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument(
        "--intersect",
        action="store_true",
        help="restrict to diagonal pairs over a shared alphabet, presenting "
        "the intersection of the two languages",
    )

    p = add("debruijn", cmd_debruijn, "full Dyck shift presentation over an alphabet")
    p.add_argument("automaton", help="document supplying the alphabet")
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--a", type=int, default=0)

    p = add("split", cmd_split, "split one state by an edge partition")
    p.add_argument("automaton")
    p.add_argument("--state", required=True)
    p.add_argument("--kind", choices=("in", "out"), default="in")
    p.add_argument(
        "--classes", required=True, help="edge index classes, e.g. '0,1|2'"
    )
    p.add_argument("--trim", action="store_true", help="drop non-essential parts")

    p = add("amalgamate", cmd_amalgamate, "merge classes of states")
    p.add_argument("automaton")
    p.add_argument("--classes", required=True, help="state classes, e.g. 'p,q|r'")
    p.add_argument("--trim", action="store_true", help="allow trim amalgamation")

    p = add("trim", cmd_trim, "restrict to essential edges and pairs")
    p.add_argument("automaton")

    p = add("essential", cmd_essential, "list essential edges and matched pairs")
    p.add_argument("automaton")

    p = add("edge-graph", cmd_edge_graph, "conjugate edge-Dyck presentation")
    p.add_argument("automaton")
    p.add_argument("--max-m", type=int, default=6)
    p.add_argument("--max-a", type=int, default=6)
    p.add_argument("--forward-out", help="write the forward block map here")
    p.add_argument("--inverse-out", help="write the inverse block map here")

    p = add("image", cmd_image, "image presentation under a proper block map")
    p.add_argument("automaton")
    p.add_argument("--map", required=True, help="block map document")

    p = add("decompose", cmd_decompose, "decompose a proper conjugacy")
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("--forward", required=True, help="block map source -> target")
    p.add_argument("--inverse", required=True, help="block map target -> source")
    p.add_argument("--bound", type=int, default=None, help="verification length")
    p.add_argument("--cert", help="write the certificate document here")

    p = add("replay", cmd_replay, "re-run a decomposition certificate")
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("--cert", required=True)

    p = add("export-dot", cmd_export_dot, "emit Graphviz DOT")
    p.add_argument("automaton")
    p.add_argument("--name", default="dyck")

    p = add("report", cmd_report, "write a TSV summary and figures")
    p.add_argument("automaton")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--name", default="automaton", help="file name stem")
    p.add_argument("--max-len", type=int, default=4)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DocumentError, ModelError) as ex:
        print(f"error: {ex}", file=sys.stderr)
        return 2
    except OSError as ex:
        print(f"error: {ex}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
