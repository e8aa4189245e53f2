"""Render an automaton report: a TSV summary plus matplotlib figures.

Output is deterministic for identical inputs: states are laid out on a
circle in sorted order and figure metadata carries no timestamps.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.patches import FancyArrowPatch

from .locality import minimal_locality
from .model import CALL, INTERNAL, RETURN, DyckAutomaton
from .semigroup import DyckReachability
from .surgery import essential_parts
from .words import admissible_words

_COLORS = {CALL: "#1f4fd0", RETURN: "#c02020", INTERNAL: "#202020"}
_BEND = {CALL: 0.25, RETURN: -0.25, INTERNAL: 0.08}


def _layout(states: tuple[str, ...]) -> dict[str, tuple[float, float]]:
    ordered = sorted(states)
    n = max(len(ordered), 1)
    pos = {}
    for k, q in enumerate(ordered):
        angle = 2 * math.pi * k / n - math.pi / 2
        pos[q] = (math.cos(angle), math.sin(angle))
    return pos


def _draw_graph(aut: DyckAutomaton, path: Path) -> None:
    pos = _layout(aut.states)
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.set_axis_off()
    ax.set_xlim(-1.45, 1.45)
    ax.set_ylim(-1.45, 1.45)
    seen: dict[tuple[str, str], int] = {}
    for e in aut.edges:
        kind = aut.edge_type(e.index)
        color = _COLORS[kind]
        x1, y1 = pos[e.src]
        x2, y2 = pos[e.dst]
        twin = seen.get((e.src, e.dst), 0)
        seen[(e.src, e.dst)] = twin + 1
        if e.src == e.dst:
            # self loop: a small circle pushed outward from the centre
            r = 0.14 + 0.08 * twin
            ax.add_patch(
                plt.Circle(
                    (x1 * (1 + r), y1 * (1 + r)),
                    r,
                    fill=False,
                    color=color,
                    linewidth=1.4,
                )
            )
            lx, ly = x1 * (1 + 2.4 * r), y1 * (1 + 2.4 * r)
        else:
            bend = _BEND[kind] + 0.12 * twin
            arrow = FancyArrowPatch(
                (x1, y1),
                (x2, y2),
                connectionstyle=f"arc3,rad={bend}",
                arrowstyle="-|>",
                mutation_scale=12,
                color=color,
                linewidth=1.4,
                shrinkA=12,
                shrinkB=12,
            )
            ax.add_patch(arrow)
            mx, my = (x1 + x2) / 2, (y1 + y2) / 2
            nx, ny = (y2 - y1), (x1 - x2)
            norm = math.hypot(nx, ny) or 1.0
            lx = mx + nx / norm * bend * 0.9
            ly = my + ny / norm * bend * 0.9
        label = e.label if isinstance(e.label, str) else repr(e.label)
        ax.text(lx, ly, label, fontsize=8, color=color, ha="center", va="center")
    for q, (x, y) in pos.items():
        ax.add_patch(plt.Circle((x, y), 0.09, color="white", ec="black", zorder=3))
        ax.text(x, y, q, fontsize=8, ha="center", va="center", zorder=4)
    fig.savefig(path, dpi=144, metadata={"Software": "dyckaut"})
    plt.close(fig)


def _draw_growth(counts: list[tuple[int, int, int]], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    lengths = [n for n, _, _ in counts]
    ax.bar(
        [n - 0.18 for n in lengths],
        [c for _, c, _ in counts],
        width=0.36,
        label="admissible",
        color="#1f4fd0",
    )
    ax.bar(
        [n + 0.18 for n in lengths],
        [t for _, _, t in counts],
        width=0.36,
        label="all typed",
        color="#bbbbbb",
    )
    ax.set_xlabel("word length")
    ax.set_ylabel("count")
    ax.set_xticks(lengths)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=144, metadata={"Software": "dyckaut"})
    plt.close(fig)


def write_report(
    aut: DyckAutomaton,
    out_dir: str | Path,
    name: str = "automaton",
    max_len: int = 4,
) -> list[Path]:
    """Write <name>_summary.tsv, <name>_graph.png and <name>_growth.png."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ess = essential_parts(aut)
    dr = DyckReachability(aut)
    counts: list[tuple[int, int, int]] = []
    total_syms = len(aut.alphabet)
    for n in range(1, max_len + 1):
        counts.append((n, len(admissible_words(aut, n)), total_syms**n))

    rows: list[tuple[str, str, str]] = [("states", "count", str(len(aut.states)))]
    for kind in (CALL, RETURN, INTERNAL):
        rows.append(
            ("edges", kind, str(sum(1 for e in aut.edges if aut.edge_type(e.index) == kind)))
        )
    rows.append(("matched", "pairs", str(len(aut.matched))))
    rows.append(("essential", "edges", str(len(ess.edges))))
    rows.append(
        (
            "essential",
            "non-essential-edges",
            ",".join(str(i) for i in sorted(set(range(len(aut.edges))) - ess.edges)) or "-",
        )
    )
    rows.append(("essential", "pairs", str(len(ess.pairs))))
    rows.append(("reachability", "dyck-pairs", str(len(dr.pairs))))
    loc = minimal_locality(aut, max_m=2, max_a=2)
    rows.append(("locality", "minimal(m,a)", f"({loc[0]}, {loc[1]})" if loc else "none<=(2,2)"))
    for n, adm, tot in counts:
        rows.append(("words", f"admissible[{n}]", f"{adm}/{tot}"))

    summary = out / f"{name}_summary.tsv"
    with open(summary, "w", encoding="utf-8") as fh:
        fh.write("section\tkey\tvalue\n")
        for row in rows:
            fh.write("\t".join(row) + "\n")
    graph = out / f"{name}_graph.png"
    _draw_graph(aut, graph)
    growth = out / f"{name}_growth.png"
    _draw_growth(counts, growth)
    return [summary, graph, growth]
