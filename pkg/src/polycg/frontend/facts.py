"""Fact extraction: the three monolingual tables derived from a SourceUnit.

The reverse control-flow graph is the edge-reversal of the forward CFG,
which is rebuilt from the structured condition spans: plain statements fall
through, if/else branches rejoin, while loops branch into their body and
take a back edge from the body's exits to the loop head, and return exits
the scope.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..model import (
    AssignmentRecord,
    BlockKind,
    CallRhs,
    CallSite,
    LabeledBlock,
    SourceUnit,
)
from ..tables import AssignRow, CallRow, FlowRow


@dataclass(frozen=True)
class FlowEdge:
    """One reverse control-flow edge: from_index executes after to_index."""

    scope: str
    from_index: int
    to_index: int


def extract_assignments(unit: SourceUnit) -> list[AssignmentRecord]:
    """All assignments in block order, including call results (x = f())."""
    out = []
    for b in unit.blocks:
        if b.kind is BlockKind.ASSIGNMENT:
            out.append(b.payload)
        elif b.kind is BlockKind.CALL and b.payload.assigns_to is not None:
            site = b.payload
            out.append(
                AssignmentRecord(
                    b.label, site.assigns_to, CallRhs(site.target, site.args)
                )
            )
    return out


def extract_calls(unit: SourceUnit) -> list[CallSite]:
    """One CallSite per Call block, in source (lifted post-) order."""
    return [b.payload for b in unit.blocks if b.kind is BlockKind.CALL]


def forward_edges(blocks: list[LabeledBlock]) -> set[tuple[int, int]]:
    """Forward CFG edges for one scope's blocks."""
    by_index = {b.label.index: b for b in blocks}
    edges: set[tuple[int, int]] = set()

    def walk(lo: int, hi: int) -> set[int]:
        """Process region lo..hi, returning its fallthrough exit indices."""
        pending: set[int] = set()
        i = lo
        while i <= hi:
            block = by_index[i]
            for p in pending:
                edges.add((p, i))
            if block.kind is BlockKind.CONDITION:
                rec = block.payload
                region_end = i
                for span in (rec.body_span, rec.else_span):
                    if span is not None:
                        region_end = max(region_end, span[1])
                if rec.construct == "while":
                    if rec.body_span is not None:
                        b0, b1 = rec.body_span
                        edges.add((i, b0))
                        for e in walk(b0, b1):
                            edges.add((e, i))
                    pending = {i}
                else:
                    exits: set[int] = set()
                    for span in (rec.body_span, rec.else_span):
                        if span is not None:
                            edges.add((i, span[0]))
                            exits |= walk(span[0], span[1])
                        else:
                            exits.add(i)  # branch absent: fall through
                    pending = exits
                i = region_end + 1
            else:
                pending = set() if block.kind is BlockKind.RETURN else {i}
                i += 1
        return pending

    if blocks:
        indices = sorted(by_index)
        walk(indices[0], indices[-1])
    return edges


def extract_reverse_flow(unit: SourceUnit) -> list[FlowEdge]:
    out = []
    for scope in unit.scopes():
        blocks = unit.blocks_in(scope)
        if not blocks:
            continue
        for a, b in sorted(forward_edges(blocks)):
            out.append(FlowEdge(scope, b, a))
    return out


# ---------------------------------------------------------------------------
# Table-row views (what the pipeline writes per unit)
# ---------------------------------------------------------------------------


def call_rows(unit: SourceUnit) -> list[CallRow]:
    return [
        CallRow(
            unit_id=unit.unit_id,
            language=unit.language,
            scope=site.label.scope,
            index=site.label.index,
            callee=site.target,
            args=site.args,
        )
        for site in extract_calls(unit)
    ]


def assign_rows(unit: SourceUnit) -> list[AssignRow]:
    return [
        AssignRow(unit.unit_id, rec.label.scope, rec.label.index, rec.variable, rec.rhs)
        for rec in extract_assignments(unit)
    ]


def rflow_rows(unit: SourceUnit) -> list[FlowRow]:
    return [
        FlowRow(unit.unit_id, e.scope, e.from_index, e.to_index)
        for e in extract_reverse_flow(unit)
    ]
