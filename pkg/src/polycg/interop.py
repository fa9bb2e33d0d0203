"""Interoperability layer: rewrite cross-language API calls.

A registry describes each interoperability API: which argument carries the
payload (code string, file name, or procedure handle), which language it
executes, and - for procedure-based APIs - how handles are bound and
arguments packed. Matching call sites are rewritten:

  * payload statically unresolvable -> sentinel proc plus *-Dynamic flag,
    left for human review;
  * exactly one value -> the call is resolved in place;
  * k values -> k sibling copies, one per value, replacing the original.

Resolved nodes carry the target language and remain leaves; the merge
layer later extends them with the target's definition subgraph.

Rewriting happens per call site, so the same logic serves both the
graph-level filters and the tabular pipeline stage.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .dataflow import ENTRY_DEF, MAX_KNOWN_VALUES, UNKNOWN, StaticValue, UnitDataflow
from .errors import RegistryError
from .model import (
    ANONYMOUS,
    ANONYMOUS_DYNAMIC,
    FILEBASED_DYNAMIC,
    PROCBASED_DYNAMIC,
    CallGraph,
    CallRhs,
    CgNode,
    Dynamic,
    Expr,
    Flag,
    GraphBuilder,
    Language,
    SourceUnit,
    Stage,
    StringLiteral,
    VarRef,
)
from .tables import REGISTRY_SCHEMA, CallRow, read_table

logger = logging.getLogger(__name__)


class ApiClass(Enum):
    ANONYMOUS = "Anonymous"
    FILE_BASED = "FileBased"
    PROCEDURE_BASED = "ProcedureBased"


_DYNAMIC_SENTINEL = {
    ApiClass.ANONYMOUS: (ANONYMOUS_DYNAMIC, Flag.ANONYMOUS_DYNAMIC),
    ApiClass.FILE_BASED: (FILEBASED_DYNAMIC, Flag.FILEBASED_DYNAMIC),
    ApiClass.PROCEDURE_BASED: (PROCBASED_DYNAMIC, Flag.PROCBASED_DYNAMIC),
}

# When one callee name is registered under several classes (PyV8's eval is
# both a string and a file API), the file-based reading wins: it yields the
# deeper analysis, and an unresolvable payload then flags file-based.
_CLASS_PRECEDENCE = {ApiClass.FILE_BASED: 0, ApiClass.PROCEDURE_BASED: 1, ApiClass.ANONYMOUS: 2}


@dataclass(frozen=True)
class ApiEntry:
    api_name: str
    source_language: Language
    target_language: Language
    api_class: ApiClass
    payload_arg_index: int
    binder_api: Optional[str] = None
    binder_name_index: Optional[int] = None
    arg_packer: Optional[str] = None

    def __post_init__(self):
        if not self.api_name:
            raise RegistryError("empty api_name")
        if self.payload_arg_index < 0:
            raise RegistryError(f"{self.api_name}: negative payload_arg_index")
        if self.api_class is not ApiClass.PROCEDURE_BASED:
            if self.binder_api or self.binder_name_index is not None or self.arg_packer:
                raise RegistryError(
                    f"{self.api_name}: binder/packer fields are procedure-based only"
                )
        elif (self.binder_api is None) != (self.binder_name_index is None):
            raise RegistryError(
                f"{self.api_name}: binder_api and binder_name_index go together"
            )


@dataclass(frozen=True)
class ApiRegistry:
    entries: tuple[ApiEntry, ...]

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            key = (e.source_language.tag, e.api_name, e.api_class)
            if key in seen:
                raise RegistryError(f"duplicate registry entry {key}")
            seen.add(key)

    def match(self, language: Language, callee: str) -> tuple[ApiEntry, ...]:
        hits = [
            e
            for e in self.entries
            if e.source_language == language and e.api_name == callee
        ]
        hits.sort(key=lambda e: _CLASS_PRECEDENCE[e.api_class])
        return tuple(hits)

    def best_match(self, language: Language, callee: str) -> Optional[ApiEntry]:
        hits = self.match(language, callee)
        return hits[0] if hits else None

    def api_names(self) -> frozenset[str]:
        return frozenset(e.api_name for e in self.entries)


def load_registry(text: str) -> ApiRegistry:
    rows = read_table(text, REGISTRY_SCHEMA)
    entries = []
    for i, row in enumerate(rows):
        try:
            entries.append(
                ApiEntry(
                    api_name=row[0],
                    source_language=Language(row[1]),
                    target_language=Language(row[2]),
                    api_class=ApiClass(row[3]),
                    payload_arg_index=int(row[4]),
                    binder_api=row[5] or None,
                    binder_name_index=int(row[6]) if row[6] else None,
                    arg_packer=row[7] or None,
                )
            )
        except (RegistryError, ValueError) as exc:
            raise RegistryError(f"registry entry {i}: {exc}") from exc
    return ApiRegistry(tuple(entries))


def load_registry_file(path: Path) -> ApiRegistry:
    return load_registry(Path(path).read_text(encoding="utf-8"))


def default_registry_text() -> str:
    return (
        resources.files("polycg").joinpath("data/default_registry.csv").read_text("utf-8")
    )


def default_registry() -> ApiRegistry:
    return load_registry(default_registry_text())


# ---------------------------------------------------------------------------
# Resolution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Replacement:
    """One rewritten call: new proc, args, and annotation."""

    proc: str
    args: tuple[Expr, ...]
    target_language: Optional[Language]
    flag: Flag


def resolve_handle(
    scope: str,
    handle_var: str,
    at: int,
    entry: ApiEntry,
    ctx: UnitDataflow,
) -> StaticValue:
    """Target names bound to a procedure handle variable.

    Every reaching definition of the handle must be a call to the entry's
    binder API; the binder's name argument is then statically evaluated.
    Any other definition shape makes the handle Unknown.
    """
    defs = ctx.provider.defs(scope, handle_var, at)
    if not defs:
        return UNKNOWN
    names: set[str] = set()
    for d in sorted(defs, key=lambda d: (-1 if d is ENTRY_DEF else d)):
        if d is ENTRY_DEF:
            return UNKNOWN
        rhs = ctx.provider.rhs_at(scope, d)
        if not isinstance(rhs, CallRhs) or rhs.callee != entry.binder_api:
            return UNKNOWN
        if entry.binder_name_index is None or entry.binder_name_index >= len(rhs.args):
            return UNKNOWN
        value = ctx.evaluator.eval_expr(rhs.args[entry.binder_name_index], scope, d)
        if not value.is_known:
            return UNKNOWN
        names |= value.values
        if len(names) > MAX_KNOWN_VALUES:
            return UNKNOWN
    if not names:
        return UNKNOWN
    return StaticValue.known(names)


def _resolve_target(
    callee_args: tuple[Expr, ...],
    scope: str,
    index: int,
    entry: ApiEntry,
    ctx: UnitDataflow,
) -> StaticValue:
    if entry.payload_arg_index >= len(callee_args):
        return UNKNOWN
    payload = callee_args[entry.payload_arg_index]
    if (
        entry.api_class is ApiClass.PROCEDURE_BASED
        and entry.binder_api is not None
        and isinstance(payload, VarRef)
    ):
        return resolve_handle(scope, payload.name, index, entry, ctx)
    return ctx.eval_expr(payload, scope, index)


def _drop_payload(args: tuple[Expr, ...], entry: ApiEntry) -> tuple[Expr, ...]:
    return tuple(a for i, a in enumerate(args) if i != entry.payload_arg_index)


def _unpack_args(
    args: tuple[Expr, ...],
    entry: ApiEntry,
    scope: str,
    at: int,
    ctx: UnitDataflow,
) -> tuple[Expr, ...]:
    """Replace packed-argument variables with the values packed into them.

    A packed variable traces to every arg-packer call on it from which the
    interop call site is reachable; each packer call contributes its last
    argument, in statement order. Untraceable packed variables degrade to
    Dynamic placeholders.
    """
    if entry.arg_packer is None:
        return args
    out: list[Expr] = []
    for arg in args:
        if not isinstance(arg, VarRef):
            out.append(arg)
            continue
        packers = [
            row
            for row in ctx.calls
            if row.scope == scope
            and row.callee == entry.arg_packer
            and row.args
            and row.args[0] == VarRef(arg.name)
            and ctx.reaches(scope, row.index, at)
        ]
        if packers:
            out.extend(row.args[-1] for row in sorted(packers, key=lambda r: r.index))
        else:
            out.append(Dynamic(arg.name))
    return tuple(out)


def resolve_replacements(
    callee_args: tuple[Expr, ...],
    scope: str,
    index: int,
    entry: ApiEntry,
    ctx: UnitDataflow,
) -> list[Replacement]:
    value = _resolve_target(callee_args, scope, index, entry, ctx)
    if not value.is_known:
        sentinel, flag = _DYNAMIC_SENTINEL[entry.api_class]
        return [Replacement(sentinel, callee_args, None, flag)]

    out = []
    for v in sorted(value.values):
        if entry.api_class is ApiClass.ANONYMOUS:
            args = (StringLiteral(v),) + _drop_payload(callee_args, entry)
            out.append(
                Replacement(ANONYMOUS, args, entry.target_language, Flag.ANONYMOUS_RESOLVED)
            )
        elif entry.api_class is ApiClass.FILE_BASED:
            args = _drop_payload(callee_args, entry)
            out.append(Replacement(v, args, entry.target_language, Flag.NONE))
        else:
            args = _unpack_args(
                _drop_payload(callee_args, entry), entry, scope, index, ctx
            )
            out.append(Replacement(v, args, entry.target_language, Flag.NONE))
    return out


# ---------------------------------------------------------------------------
# Tabular rewriting (pipeline stage)
# ---------------------------------------------------------------------------


def rewrite_rows(
    rows: Iterable[CallRow], registry: ApiRegistry, ctx: UnitDataflow
) -> list[CallRow]:
    out = []
    for row in rows:
        if row.flag is not Flag.NONE or row.target_language is not None:
            out.append(row)
            continue
        entry = registry.best_match(row.language, row.callee)
        if entry is None:
            out.append(row)
            continue
        for repl in resolve_replacements(row.args, row.scope, row.index, entry, ctx):
            out.append(
                replace(
                    row,
                    callee=repl.proc,
                    args=repl.args,
                    flag=repl.flag,
                    target_language=repl.target_language,
                )
            )
    return out


# ---------------------------------------------------------------------------
# Graph-level filters
# ---------------------------------------------------------------------------


def _node_eligible(node: CgNode, root_id: str) -> bool:
    return (
        node.node_id != root_id
        and node.flag is Flag.NONE
        and node.target_language is None
    )


def _apply(cg: CallGraph, matcher, ctx: UnitDataflow, stage: Stage) -> CallGraph:
    builder = GraphBuilder()

    def visit(nid: str, parent: Optional[str]) -> None:
        node = cg.node(nid)
        entry = matcher(node) if _node_eligible(node, cg.root) else None
        if entry is None:
            builder.add_exact(parent, node)
            for child in cg.children(nid):
                visit(child, nid)
            return
        repls = resolve_replacements(
            node.args, node.label.scope, node.label.index, entry, ctx
        )
        if len(repls) == 1:
            r = repls[0]
            builder.add_exact(
                parent,
                replace(
                    node,
                    proc=r.proc,
                    args=r.args,
                    target_language=r.target_language,
                    flag=r.flag,
                ),
            )
            for child in cg.children(nid):
                visit(child, nid)
            return
        for r in repls:
            new_id = builder.add(
                parent,
                r.proc,
                node.label,
                r.args,
                node.language,
                node.unit_id,
                r.target_language,
                r.flag,
            )
            for child in cg.children(nid):
                _copy_subtree(builder, cg, child, new_id)

    def _copy_subtree(builder, graph, nid, parent_new):
        node = graph.node(nid)
        new_id = builder.add(
            parent_new,
            node.proc,
            node.label,
            node.args,
            node.language,
            node.unit_id,
            node.target_language,
            node.flag,
        )
        for child in graph.children(nid):
            _copy_subtree(builder, graph, child, new_id)

    visit(cg.root, None)
    return builder.freeze(stage)


def _single_entry_filter(cg, unit, entry, ctx, api_class):
    if entry.api_class is not api_class:
        raise ValueError(f"entry {entry.api_name} is not {api_class.value}")
    ctx = ctx or UnitDataflow.from_unit(unit)

    def matcher(node: CgNode):
        if node.language == entry.source_language and node.proc == entry.api_name:
            return entry
        return None

    return _apply(cg, matcher, ctx, cg.stage)


def filter_anonymous(
    cg: CallGraph, unit: SourceUnit, entry: ApiEntry, ctx: Optional[UnitDataflow] = None
) -> CallGraph:
    return _single_entry_filter(cg, unit, entry, ctx, ApiClass.ANONYMOUS)


def filter_file_based(
    cg: CallGraph, unit: SourceUnit, entry: ApiEntry, ctx: Optional[UnitDataflow] = None
) -> CallGraph:
    return _single_entry_filter(cg, unit, entry, ctx, ApiClass.FILE_BASED)


def filter_procedure_based(
    cg: CallGraph, unit: SourceUnit, entry: ApiEntry, ctx: Optional[UnitDataflow] = None
) -> CallGraph:
    return _single_entry_filter(cg, unit, entry, ctx, ApiClass.PROCEDURE_BASED)


def apply_interop(
    cg: CallGraph,
    unit: SourceUnit,
    registry: ApiRegistry,
    ctx: Optional[UnitDataflow] = None,
) -> CallGraph:
    """Rewrite every registry-matching call in the graph."""
    if cg.stage is not Stage.MONOLINGUAL:
        raise ValueError("apply_interop expects a monolingual graph")
    ctx = ctx or UnitDataflow.from_unit(unit)

    def matcher(node: CgNode):
        return registry.best_match(node.language, node.proc)

    return _apply(cg, matcher, ctx, Stage.INTEROP_REWRITTEN)
