"""Multilingual layer: extend interop-resolved leaves across units.

Every leaf that carries a target language names either a file (its main
body is the definition) or a procedure defined in some unit of that
language. The merge grafts a fresh copy of the definition's call subgraph
beneath the leaf; grafted subgraphs come from already-rewritten call
tables, so newly exposed interop leaves keep expanding across languages.

A (unit, root procedure) pair expands at most once per root-to-leaf
ancestry path. A repeat stops expansion; annotate_cycles then flags it
CrossLangCycle when the cycle spans two or more languages (hidden
circularity) or Recursive when it stays within one.
"""

from __future__ import annotations

import heapq
import logging
import os
from dataclasses import dataclass, replace
from typing import Iterable, Optional

from .frontend.facts import call_rows
from .frontend.monocg import build_graph_from_records
from .interop import ApiRegistry, rewrite_rows
from .dataflow import UnitDataflow
from .model import (
    MAIN_SCOPE,
    CallGraph,
    CgNode,
    Codebase,
    Flag,
    GraphBuilder,
    Language,
    SourceUnit,
    Stage,
)
from .tables import CallRow

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnalyzedUnit:
    """One unit after interop rewriting: what the merge stage consumes."""

    unit_id: str
    language: Language
    path: str
    defined_procs: frozenset[str]
    calls: tuple[CallRow, ...]

    @property
    def basename(self) -> str:
        return os.path.basename(self.path) or self.unit_id


@dataclass(frozen=True)
class AnalyzedCodebase:
    units: dict[str, AnalyzedUnit]

    @classmethod
    def from_source_units(
        cls, units: Iterable[SourceUnit], registry: ApiRegistry
    ) -> "AnalyzedCodebase":
        analyzed = {}
        for unit in units:
            ctx = UnitDataflow.from_unit(unit)
            rewritten = rewrite_rows(call_rows(unit), registry, ctx)
            analyzed[unit.unit_id] = AnalyzedUnit(
                unit.unit_id,
                unit.language,
                unit.path,
                unit.defined_procs,
                tuple(rewritten),
            )
        return cls(analyzed)

    @classmethod
    def from_codebase(cls, codebase: Codebase, registry: ApiRegistry) -> "AnalyzedCodebase":
        return cls.from_source_units(codebase.units, registry)


@dataclass(frozen=True)
class DefinitionIndex:
    """(name, language) -> defining units, for files and for procedures.

    File names match a unit's path basename and resolve to its main body;
    procedure names match a unit's defined procedures. Several candidates
    for one key are reported and resolved to the smallest unit_id.
    """

    candidates: dict[tuple[str, str], tuple[tuple[str, str], ...]]
    diagnostics: tuple[str, ...]

    @classmethod
    def build(cls, codebase: AnalyzedCodebase) -> "DefinitionIndex":
        raw: dict[tuple[str, str], list[tuple[str, str]]] = {}
        for unit in sorted(codebase.units.values(), key=lambda u: u.unit_id):
            raw.setdefault((unit.basename, unit.language.tag), []).append(
                (unit.unit_id, MAIN_SCOPE)
            )
            for proc in sorted(unit.defined_procs):
                raw.setdefault((proc, unit.language.tag), []).append(
                    (unit.unit_id, proc)
                )
        diagnostics = []
        for (name, lang), cands in sorted(raw.items()):
            if len(cands) > 1:
                picked = cands[0][0]
                diagnostics.append(
                    f"ambiguous definition of {name!r} in {lang}: "
                    f"{[c[0] for c in cands]}; using {picked!r}"
                )
        return cls({k: tuple(v) for k, v in raw.items()}, tuple(diagnostics))


def find_definition(
    name: str, language: Language, defs: DefinitionIndex
) -> Optional[tuple[str, str]]:
    """The (unit_id, root scope) defining a name, or None.

    Ambiguity resolves to the lexicographically smallest unit_id, with a
    warning; the index carries the full diagnostic.
    """
    cands = defs.candidates.get((name, language.tag))
    if not cands:
        return None
    if len(cands) > 1:
        logger.warning(
            "ambiguous definition of %r in %s; using unit %r",
            name,
            language.tag,
            cands[0][0],
        )
    return cands[0]


def build_unit_graph(
    unit: AnalyzedUnit,
    root_scope: str = MAIN_SCOPE,
    stage: Stage = Stage.INTEROP_REWRITTEN,
) -> CallGraph:
    """Call tree of one analysed unit rooted at a scope's pseudo-node."""
    root_proc = unit.basename if root_scope == MAIN_SCOPE else root_scope
    return build_graph_from_records(
        unit.calls,
        unit.defined_procs,
        unit.unit_id,
        unit.language,
        root_proc=root_proc,
        root_scope=root_scope,
        stage=stage,
    )


def _expandable(node: CgNode) -> bool:
    return node.target_language is not None and node.flag is Flag.NONE


def merge_multilingual(
    cg_m: CallGraph, codebase: AnalyzedCodebase, defs: DefinitionIndex
) -> CallGraph:
    if cg_m.stage is not Stage.INTEROP_REWRITTEN:
        raise ValueError("merge_multilingual expects an interop-rewritten graph")

    builder = GraphBuilder()
    builder.adopt(cg_m)
    subgraph_cache: dict[tuple[str, str], CallGraph] = {}
    resolve_cache: dict[tuple[str, str], Optional[tuple[str, str]]] = {}

    def resolved(name: str, lang: Language) -> Optional[tuple[str, str]]:
        key = (name, lang.tag)
        if key not in resolve_cache:
            resolve_cache[key] = find_definition(name, lang, defs)
        return resolve_cache[key]

    def ancestry_keys(nid: str) -> set[tuple[str, str]]:
        keys = set()
        for node in builder.ancestry(nid):
            if _expandable(node):
                hit = resolved(node.proc, node.target_language)
                if hit is not None:
                    keys.add(hit)
        root_node = builder.node(cg_m.root)
        keys.add((root_node.unit_id, root_node.label.scope))
        return keys

    def subgraph(key: tuple[str, str]) -> CallGraph:
        if key not in subgraph_cache:
            unit_id, root_scope = key
            subgraph_cache[key] = build_unit_graph(codebase.units[unit_id], root_scope)
        return subgraph_cache[key]

    def graft(source: CallGraph, src_id: str, under: str) -> None:
        node = source.node(src_id)
        new_id = builder.add(
            under,
            node.proc,
            node.label,
            node.args,
            node.language,
            node.unit_id,
            node.target_language,
            node.flag,
        )
        if _expandable(builder.node(new_id)):
            heapq.heappush(worklist, new_id)
        for child in source.children(src_id):
            graft(source, child, new_id)

    worklist: list[str] = sorted(
        n.node_id for n in cg_m.walk() if _expandable(n) and not cg_m.children(n.node_id)
    )
    heapq.heapify(worklist)
    while worklist:
        nid = heapq.heappop(worklist)
        node = builder.node(nid)
        if builder.children(nid):
            continue
        hit = resolved(node.proc, node.target_language)
        if hit is None:
            continue  # no definition in the codebase: stays a leaf
        if hit in ancestry_keys(nid):
            continue  # repeat along this path: annotate_cycles flags it
        sub = subgraph(hit)
        for child in sub.children(sub.root):
            graft(sub, child, nid)

    return builder.freeze(Stage.MULTILINGUAL)


def annotate_cycles(cg: CallGraph, defs: Optional[DefinitionIndex] = None) -> CallGraph:
    """Flag ancestry repeats: CrossLangCycle across languages, else Recursive.

    With a DefinitionIndex the repeat test uses resolved (unit, procedure)
    keys, matching the merge exactly; without one it falls back to
    (procedure, target language) pairs, which agree whenever names are
    unambiguous.
    """
    if cg.stage is not Stage.MULTILINGUAL:
        raise ValueError("annotate_cycles expects a multilingual graph")

    def key_of(node: CgNode):
        if node.node_id == cg.root:
            if defs is not None:
                return (node.unit_id, node.label.scope)
            return (node.proc, node.language.tag)
        if not _expandable(node):
            return None
        if defs is not None:
            return find_definition(node.proc, node.target_language, defs)
        return (node.proc, node.target_language.tag)

    flagged: dict[str, Flag] = {}
    path_nodes: list[CgNode] = []
    stack_keys: list[tuple[object, int]] = []  # (key, index into path_nodes)

    def visit(nid: str) -> None:
        node = cg.node(nid)
        path_nodes.append(node)
        key = key_of(node)
        repeat_at = None
        if key is not None:
            for k, pos in stack_keys:
                if k == key:
                    repeat_at = pos
                    break
        if repeat_at is not None and not cg.children(nid):
            segment = path_nodes[repeat_at:]
            langs = {n.language.tag for n in segment}
            flagged[nid] = (
                Flag.CROSS_LANG_CYCLE if len(langs) >= 2 else Flag.RECURSIVE
            )
        else:
            pushed = False
            if key is not None and repeat_at is None:
                stack_keys.append((key, len(path_nodes) - 1))
                pushed = True
            for child in cg.children(nid):
                visit(child)
            if pushed:
                stack_keys.pop()
        path_nodes.pop()

    visit(cg.root)

    if not flagged:
        return cg
    builder = GraphBuilder()

    def rebuild(nid: str, parent: Optional[str]) -> None:
        node = cg.node(nid)
        if nid in flagged:
            node = replace(node, flag=flagged[nid])
        builder.add_exact(parent, node)
        for child in cg.children(nid):
            rebuild(child, nid)

    rebuild(cg.root, None)
    return builder.freeze(Stage.MULTILINGUAL)
