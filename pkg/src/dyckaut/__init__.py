"""Dyck automata and the shifts they present.

The package models automata over a tri-partitioned alphabet (calls,
returns, internals) with a matched relation between call and return edges,
computes admissible words and Dyck reachability through the graph
semigroup, tests locality, performs state splittings and amalgamations
with their trim variants, and decomposes proper conjugacies between
edge-Dyck shifts into certified sequences of those moves.
"""

from .build import (
    de_bruijn,
    edge_dyck_of_local,
    edge_presentation,
    higher_block_automaton,
    image_automaton,
    product,
    product_intersection,
    slds_automaton,
    to_edge_dyck,
    weak_local_to_local,
)
from .decompose import (
    DecompositionCertificate,
    ProperConjugacy,
    decompose,
    final_pair_split,
    replay_certificate,
    verify_block_conjugacy,
)
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
from .locality import (
    is_deterministic,
    is_essential_automaton,
    is_local,
    is_weak_local,
    minimal_locality,
)
from .model import (
    CALL,
    INTERNAL,
    RETURN,
    BlockMapSpec,
    DyckAutomaton,
    Edge,
    ModelError,
    Partition,
    TriAlphabet,
    apply_block_map,
    check_partition,
    checked,
    edge_uniquify,
    has_parallel_edges,
    is_edge_graph,
    make_edge_graph,
    validate,
)
from .report import write_report
from .semigroup import (
    ZERO,
    DyckReachability,
    NormalForm,
    admissible_paths,
    all_paths,
    compose,
    is_admissible_path,
    is_dyck_path,
    is_path,
    is_prime_dyck_path,
    reduce_path,
)
from .surgery import (
    AmalgRecord,
    EssentialParts,
    SplitRecord,
    amalgamation_record,
    common_amalgamation,
    complete_in_split,
    complete_out_split,
    essential_parts,
    in_amalgamate,
    in_split,
    out_split,
    trim,
    trim_in_amalgamate,
    trim_in_split,
    trim_out_split,
)
from .words import (
    SldsSpec,
    SldsValue,
    admissible_words,
    all_words,
    block_map_equal_on,
    block_map_from_function,
    centered_blocks,
    compose_block_maps,
    default_margin,
    extend_block_map,
    is_admissible_word,
    path_anchor,
    shrink_block_map,
    slds_admissible,
    slds_reduce,
    slds_sets_from_local,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
