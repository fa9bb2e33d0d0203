"""Call-graph construction from per-unit call records.

The graph is a call tree rooted at a pseudo-node for the selected scope
(the main body, or one procedure when building a definition subgraph).
Calls to procedures defined in the same unit expand through their bodies,
at most once per root-to-leaf ancestry path; a repeat along the path stops
expansion and flags the node Recursive. Call records already rewritten by
the interop layer (target language or dynamic flag set) stay leaves here;
the merge layer extends them across units.
"""

from __future__ import annotations

import os
from collections import defaultdict
from typing import Iterable, Optional

from ..model import (
    MAIN_SCOPE,
    CallGraph,
    Flag,
    GraphBuilder,
    Label,
    Language,
    SourceUnit,
    Stage,
)
from ..tables import CallRow
from .facts import call_rows


def build_graph_from_records(
    records: Iterable[CallRow],
    defined_procs: frozenset[str],
    unit_id: str,
    language: Language,
    root_proc: str,
    root_scope: str = MAIN_SCOPE,
    stage: Stage = Stage.MONOLINGUAL,
    builder: Optional[GraphBuilder] = None,
) -> CallGraph:
    by_scope: dict[str, list[CallRow]] = defaultdict(list)
    for row in records:
        by_scope[row.scope].append(row)
    for rows in by_scope.values():
        rows.sort(key=lambda r: r.index)

    builder = builder or GraphBuilder()
    root = builder.add(
        None, root_proc, Label(root_scope, 0), (), language, unit_id
    )
    _expand(builder, root, root_scope, by_scope, defined_procs, frozenset({root_scope}))
    return builder.freeze(stage)


def _expand(
    builder: GraphBuilder,
    parent_id: str,
    scope: str,
    by_scope: dict[str, list[CallRow]],
    defined: frozenset[str],
    path: frozenset[str],
) -> None:
    for row in by_scope.get(scope, ()):
        local = row.target_language is None and row.flag is Flag.NONE
        expandable = local and row.callee in defined
        recursive = expandable and row.callee in path
        nid = builder.add(
            parent_id,
            row.callee,
            row.label,
            row.args,
            row.language,
            row.unit_id,
            row.target_language,
            Flag.RECURSIVE if recursive else row.flag,
        )
        if expandable and not recursive:
            _expand(builder, nid, row.callee, by_scope, defined, path | {row.callee})


def build_mono_cg(unit: SourceUnit) -> CallGraph:
    """Monolingual call tree rooted at the unit's main body."""
    root_proc = os.path.basename(unit.path) or unit.unit_id
    return build_graph_from_records(
        call_rows(unit),
        unit.defined_procs,
        unit.unit_id,
        unit.language,
        root_proc=root_proc,
        root_scope=MAIN_SCOPE,
    )


def build_proc_cg(unit: SourceUnit, proc: str) -> CallGraph:
    """Call tree for one defined procedure (a definition subgraph)."""
    if proc not in unit.defined_procs:
        raise KeyError(f"{proc!r} is not defined in unit {unit.unit_id}")
    return build_graph_from_records(
        call_rows(unit),
        unit.defined_procs,
        unit.unit_id,
        unit.language,
        root_proc=proc,
        root_scope=proc,
    )
