"""Reaching-definitions analysis and static string evaluation.

Reaching definitions run as the standard gen/kill fixpoint over the
statement-level CFG recovered by reversing the reverse-flow table. A query
returns every (variable, def-index) pair such that some forward execution
path reaches the query point with that assignment as the variable's most
recent, plus the distinguished ENTRY_DEF marker when the variable may
still be unassigned.

Static evaluation computes the possible string values of an expression at
a program point: literals evaluate to themselves, concatenation takes the
cross product of its sides, and a variable reference takes the union over
all of its reaching definitions (recursively, guarded against loops).
Anything else - dynamic expressions, call results, entry defs, value sets
larger than the cap - evaluates to Unknown. Evaluation is intraprocedural:
values never flow through calls or parameters.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .errors import UnknownLabel, UnknownScope
from .model import (
    CallRhs,
    Concat,
    Dynamic,
    Expr,
    Label,
    SourceUnit,
    StringLiteral,
    VarRef,
)
from .tables import AssignRow, CallRow, FlowRow, RdefRow

logger = logging.getLogger(__name__)

MAX_KNOWN_VALUES = 16


class _EntryDef:
    """Marker: the variable may reach the query point unassigned."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "EntryDef"


ENTRY_DEF = _EntryDef()

DefPoint = Union[int, _EntryDef]


@dataclass(frozen=True)
class StaticValue:
    """Result of static evaluation: a finite set of strings, or Unknown."""

    values: Optional[frozenset[str]]

    def __post_init__(self):
        if self.values is not None and not self.values:
            raise ValueError("Known value sets must be non-empty; use unknown()")

    @property
    def is_known(self) -> bool:
        return self.values is not None

    @staticmethod
    def known(values: Iterable[str]) -> "StaticValue":
        return StaticValue(frozenset(values))

    @staticmethod
    def unknown() -> "StaticValue":
        return StaticValue(None)


UNKNOWN = StaticValue.unknown()


@dataclass(frozen=True)
class ReachingDefs:
    scope: str
    at: int
    entries: frozenset[tuple[str, DefPoint]]

    def for_var(self, name: str) -> frozenset[DefPoint]:
        return frozenset(d for v, d in self.entries if v == name)


# ---------------------------------------------------------------------------
# Fact normalisation: accept frontend records or table rows
# ---------------------------------------------------------------------------


def _norm_assigns(assigns) -> dict[str, dict[int, tuple[str, object]]]:
    out: dict[str, dict[int, tuple[str, object]]] = defaultdict(dict)
    for a in assigns:
        if isinstance(a, AssignRow):
            out[a.scope][a.index] = (a.variable, a.rhs)
        else:  # frontend AssignmentRecord
            out[a.label.scope][a.label.index] = (a.variable, a.rhs)
    return out


def _norm_flow(rflow) -> dict[str, set[tuple[int, int]]]:
    """Forward edges per scope (the reverse-flow input, reversed back)."""
    out: dict[str, set[tuple[int, int]]] = defaultdict(set)
    for e in rflow:
        out[e.scope].add((e.to_index, e.from_index))
    return out


class FixpointDefs:
    """Reaching definitions solved by worklist fixpoint, memoised per scope."""

    def __init__(self, assigns, rflow, extra_indices: Optional[dict[str, set[int]]] = None):
        self._defs = _norm_assigns(assigns)
        self._fwd = _norm_flow(rflow)
        self._indices: dict[str, set[int]] = defaultdict(set)
        for scope, d in self._defs.items():
            self._indices[scope].update(d)
        for scope, edges in self._fwd.items():
            for a, b in edges:
                self._indices[scope].update((a, b))
        for scope, idxs in (extra_indices or {}).items():
            self._indices[scope].update(idxs)
        self._solved: dict[str, dict[int, frozenset[tuple[str, DefPoint]]]] = {}
        self._reachable: dict[str, set[int]] = {}
        self._pass_counts: dict[str, int] = {}

    @property
    def scopes(self) -> set[str]:
        return set(self._indices)

    def indices(self, scope: str) -> set[int]:
        return set(self._indices.get(scope, ()))

    def solve_passes(self, scope: str) -> int:
        """Number of worklist pops needed to reach the fixpoint (for tests)."""
        self._solve(scope)
        return self._pass_counts[scope]

    def _solve(self, scope: str) -> dict[int, frozenset[tuple[str, DefPoint]]]:
        if scope in self._solved:
            return self._solved[scope]
        indices = sorted(self._indices.get(scope, ()))
        defs = self._defs.get(scope, {})
        fwd = self._fwd.get(scope, set())
        preds: dict[int, set[int]] = {i: set() for i in indices}
        succs: dict[int, set[int]] = {i: set() for i in indices}
        for a, b in fwd:
            preds[b].add(a)
            succs[a].add(b)

        assigned_vars = {v for v, _ in defs.values()}
        entry = indices[0] if indices else None
        entry_facts = frozenset((v, ENTRY_DEF) for v in assigned_vars)

        reachable: set[int] = set()
        if entry is not None:
            stack = [entry]
            while stack:
                i = stack.pop()
                if i in reachable:
                    continue
                reachable.add(i)
                stack.extend(succs[i])
        self._reachable[scope] = reachable

        in_: dict[int, frozenset] = {i: frozenset() for i in indices}
        out: dict[int, frozenset] = {i: frozenset() for i in indices}
        worklist = list(indices)
        passes = 0
        while worklist:
            i = worklist.pop(0)
            passes += 1
            inval = set()
            if i == entry:
                inval |= entry_facts
            for p in preds[i]:
                inval |= out[p]
            in_[i] = frozenset(inval)
            if i in defs:
                var = defs[i][0]
                outval = {(v, d) for (v, d) in inval if v != var}
                outval.add((var, i))
                outval = frozenset(outval)
            else:
                outval = in_[i]
            if outval != out[i]:
                out[i] = outval
                for s in sorted(succs[i]):
                    if s not in worklist:
                        worklist.append(s)
        self._pass_counts[scope] = passes
        self._solved[scope] = in_
        return in_

    def defs(self, scope: str, variable: str, at: int) -> frozenset[DefPoint]:
        solved = self._solve(scope)
        if at not in solved:
            raise UnknownLabel(f"no statement {at} in scope {scope!r}")
        hits = {d for (v, d) in solved[at] if v == variable}
        if not hits:
            # Never-assigned variable: only the entry marker can reach, and
            # only if the statement is reachable at all.
            if at in self._reachable.get(scope, set()):
                return frozenset({ENTRY_DEF})
            return frozenset()
        return frozenset(hits)

    def rhs_at(self, scope: str, index: int):
        entry = self._defs.get(scope, {}).get(index)
        return entry[1] if entry else None


class TableDefs:
    """Reaching definitions replayed from a precomputed rdefs table."""

    def __init__(self, rows: Iterable[RdefRow], rhs_source: FixpointDefs):
        self._table: dict[tuple[str, int, str], set[DefPoint]] = defaultdict(set)
        for r in rows:
            d = ENTRY_DEF if r.def_index is None else r.def_index
            self._table[(r.scope, r.use_index, r.variable)].add(d)
        self._rhs_source = rhs_source

    def defs(self, scope: str, variable: str, at: int) -> frozenset[DefPoint]:
        key = (scope, at, variable)
        if key not in self._table:
            logger.warning("rdefs table is missing query %s; treating as unknown", key)
            return frozenset()
        return frozenset(self._table[key])

    def rhs_at(self, scope: str, index: int):
        return self._rhs_source.rhs_at(scope, index)


class RecordingDefs:
    """Provider wrapper that records every query for rdefs emission."""

    def __init__(self, inner):
        self._inner = inner
        self.records: dict[tuple[str, int, str], frozenset[DefPoint]] = {}

    def defs(self, scope: str, variable: str, at: int) -> frozenset[DefPoint]:
        result = self._inner.defs(scope, variable, at)
        self.records[(scope, at, variable)] = result
        return result

    def rhs_at(self, scope: str, index: int):
        return self._inner.rhs_at(scope, index)

    def rows(self, unit_id: str) -> list[RdefRow]:
        out = []
        for (scope, use, var), defs in sorted(
            self.records.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2])
        ):
            for d in sorted(defs, key=lambda d: (-1 if d is ENTRY_DEF else d)):
                idx = None if d is ENTRY_DEF else d
                out.append(RdefRow(unit_id, scope, use, var, idx))
        return out


def reaching_definitions(
    proc: str,
    variables: Iterable[str],
    at: int,
    assigns,
    rflow,
    known_indices: Optional[dict[str, set[int]]] = None,
) -> ReachingDefs:
    """The reaching-definitions query over raw fact tables."""
    variables = set(variables)
    if not variables:
        raise ValueError("variable set must be non-empty")
    provider = FixpointDefs(assigns, rflow, known_indices)
    if proc not in provider.scopes:
        raise UnknownScope(f"scope {proc!r} has no recorded facts")
    if at not in provider.indices(proc):
        raise UnknownLabel(f"no statement {at} in scope {proc!r}")
    entries = set()
    for x in variables:
        for d in provider.defs(proc, x, at):
            entries.add((x, d))
    return ReachingDefs(proc, at, frozenset(entries))


# ---------------------------------------------------------------------------
# Static evaluation
# ---------------------------------------------------------------------------


class Evaluator:
    def __init__(self, provider, max_values: int = MAX_KNOWN_VALUES):
        self._provider = provider
        self._max = max_values

    def eval_expr(self, expr: Expr, scope: str, at: Optional[int]) -> StaticValue:
        return self._expr(expr, scope, at, frozenset())

    def eval_definition(self, variable: str, scope: str, def_point: DefPoint) -> StaticValue:
        if def_point is ENTRY_DEF:
            return UNKNOWN
        return self._definition(variable, scope, def_point, frozenset())

    def _expr(self, expr, scope, at, visiting) -> StaticValue:
        if isinstance(expr, StringLiteral):
            return StaticValue.known({expr.value})
        if isinstance(expr, Dynamic):
            return UNKNOWN
        if isinstance(expr, CallRhs):
            return UNKNOWN
        if isinstance(expr, Concat):
            left = self._expr(expr.left, scope, at, visiting)
            if not left.is_known:
                return UNKNOWN
            right = self._expr(expr.right, scope, at, visiting)
            if not right.is_known:
                return UNKNOWN
            product = {a + b for a in left.values for b in right.values}
            if len(product) > self._max:
                return UNKNOWN
            return StaticValue.known(product)
        if isinstance(expr, VarRef):
            if at is None:
                raise ValueError("variable reference requires an evaluation point")
            return self._var(expr.name, scope, at, visiting)
        return UNKNOWN

    def _var(self, name, scope, at, visiting) -> StaticValue:
        defs = self._provider.defs(scope, name, at)
        if not defs:
            return UNKNOWN
        values: set[str] = set()
        for d in sorted(defs, key=lambda d: (-1 if d is ENTRY_DEF else d)):
            if d is ENTRY_DEF:
                return UNKNOWN
            if (name, d) in visiting:
                return UNKNOWN  # definition cycle (loop-carried variable)
            sub = self._definition(name, scope, d, visiting | {(name, d)})
            if not sub.is_known:
                return UNKNOWN
            values |= sub.values
            if len(values) > self._max:
                return UNKNOWN
        return StaticValue.known(values)

    def _definition(self, variable, scope, def_index, visiting) -> StaticValue:
        rhs = self._provider.rhs_at(scope, def_index)
        if rhs is None:
            return UNKNOWN
        return self._expr(rhs, scope, def_index, visiting)


def static_eval(
    target: Union[Expr, tuple[str, DefPoint], tuple[str, Label]],
    proc: str,
    assigns,
    rflow,
    at: Optional[int] = None,
    known_indices: Optional[dict[str, set[int]]] = None,
) -> StaticValue:
    """Evaluate an expression at a point, or a (variable, definition) pair."""
    evaluator = Evaluator(FixpointDefs(assigns, rflow, known_indices))
    if isinstance(target, tuple):
        variable, d = target
        if isinstance(d, Label):
            d = d.index
        return evaluator.eval_definition(variable, proc, d)
    return evaluator.eval_expr(target, proc, at)


# ---------------------------------------------------------------------------
# Per-unit bundle used by the interop layer and the pipeline
# ---------------------------------------------------------------------------


class UnitDataflow:
    """All dataflow facts of one unit plus memoised queries over them."""

    def __init__(
        self,
        unit_id: str,
        assigns,
        rflow,
        calls: Iterable[CallRow],
        provider=None,
    ):
        self.unit_id = unit_id
        self.calls = list(calls)
        extra: dict[str, set[int]] = defaultdict(set)
        for row in self.calls:
            extra[row.scope].add(row.index)
        self._fixpoint = FixpointDefs(assigns, rflow, extra)
        self.provider = provider or self._fixpoint
        self.evaluator = Evaluator(self.provider)
        self._fwd = _norm_flow(rflow)
        self._reach_memo: dict[tuple[str, int], set[int]] = {}

    @classmethod
    def from_unit(cls, unit: SourceUnit) -> "UnitDataflow":
        from .frontend.facts import assign_rows, call_rows, rflow_rows

        return cls(
            unit.unit_id, assign_rows(unit), rflow_rows(unit), call_rows(unit)
        )

    @classmethod
    def from_tables(
        cls,
        unit_id: str,
        assigns: Iterable[AssignRow],
        rflow: Iterable[FlowRow],
        calls: Iterable[CallRow],
        rdefs: Optional[Iterable[RdefRow]] = None,
    ) -> "UnitDataflow":
        assigns = list(assigns)
        rflow = list(rflow)
        ctx = cls(unit_id, assigns, rflow, calls)
        if rdefs is not None:
            ctx.provider = TableDefs(rdefs, ctx._fixpoint)
            ctx.evaluator = Evaluator(ctx.provider)
        return ctx

    def recording(self) -> RecordingDefs:
        """Swap in a recording provider; returns it for rows() extraction."""
        rec = RecordingDefs(self._fixpoint)
        self.provider = rec
        self.evaluator = Evaluator(rec)
        return rec

    def eval_expr(self, expr: Expr, scope: str, at: int) -> StaticValue:
        return self.evaluator.eval_expr(expr, scope, at)

    def reaches(self, scope: str, source: int, target: int) -> bool:
        """Is there a forward control-flow path from source to target?"""
        key = (scope, source)
        if key not in self._reach_memo:
            seen: set[int] = set()
            fwd = self._fwd.get(scope, set())
            succs: dict[int, list[int]] = defaultdict(list)
            for a, b in fwd:
                succs[a].append(b)
            stack = [source]
            while stack:
                i = stack.pop()
                if i in seen:
                    continue
                seen.add(i)
                stack.extend(succs[i])
            self._reach_memo[key] = seen
        return target in self._reach_memo[key]
