"""Bundled example automata.

Entries live as JSON documents next to this module; the manifest records a
description, an alphabet-compatibility group, and reconstruction notes for
each entry.  Groups collect entries over one shared alphabet so callers can
form products and intersections without relabelling.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from typing import Any

from .docio import automaton_from_doc
from .model import DyckAutomaton


def _data_root():
    return resources.files(__package__) / "corpus_data"


@lru_cache(maxsize=1)
def manifest() -> dict[str, Any]:
    text = (_data_root() / "manifest.json").read_text(encoding="utf-8")
    return json.loads(text)


def names() -> tuple[str, ...]:
    return tuple(sorted(manifest()["entries"]))


def describe(name: str) -> str:
    entry = manifest()["entries"].get(name)
    if entry is None:
        raise KeyError(f"no corpus entry named {name!r}")
    return entry["description"]


@lru_cache(maxsize=None)
def load(name: str) -> DyckAutomaton:
    entry = manifest()["entries"].get(name)
    if entry is None:
        raise KeyError(f"no corpus entry named {name!r}")
    text = (_data_root() / entry["file"]).read_text(encoding="utf-8")
    return automaton_from_doc(json.loads(text), where=entry["file"])


def groups() -> dict[str, tuple[str, ...]]:
    """Entry names keyed by alphabet group, each group sorted."""
    out: dict[str, list[str]] = {}
    for name, entry in manifest()["entries"].items():
        out.setdefault(entry["group"], []).append(name)
    return {g: tuple(sorted(ns)) for g, ns in sorted(out.items())}
