"""Lowering from the parser tree to flat labeled blocks.

Statements receive per-scope sequential indices starting at 0, in source
order, with branch bodies flattened behind their condition block (the
condition records the index spans of its bodies). Calls nested inside
expressions are lifted into their own Call blocks ahead of the enclosing
statement, innermost first, and replaced by a Dynamic placeholder in the
surrounding expression.
"""

from __future__ import annotations

from typing import Optional

from ..model import (
    MAIN_SCOPE,
    AssignmentRecord,
    BlockKind,
    CallSite,
    Concat,
    ConditionRecord,
    Dynamic,
    Expr,
    Label,
    LabeledBlock,
    Language,
    OtherRecord,
    ReturnRecord,
    SourceUnit,
    StringLiteral,
    VarRef,
)
from .syntax import (
    SAssign,
    SCall,
    SCallStmt,
    SConcat,
    SDyn,
    SIf,
    SLit,
    SOther,
    SProgram,
    SReturn,
    SVar,
    SWhile,
)


class _ScopeAssembler:
    def __init__(self, scope: str):
        self.scope = scope
        self.blocks: list[Optional[LabeledBlock]] = []

    def _emit(self, kind: BlockKind, payload) -> int:
        idx = len(self.blocks)
        self.blocks.append(LabeledBlock(Label(self.scope, idx), kind, payload))
        return idx

    def _reserve(self) -> int:
        self.blocks.append(None)
        return len(self.blocks) - 1

    def _patch(self, idx: int, payload: ConditionRecord) -> None:
        self.blocks[idx] = LabeledBlock(
            Label(self.scope, idx), BlockKind.CONDITION, payload
        )

    def lower(self, stmts) -> list[LabeledBlock]:
        for s in stmts:
            self._stmt(s)
        assert all(b is not None for b in self.blocks)
        return self.blocks  # type: ignore[return-value]

    # -- expressions --------------------------------------------------------

    def _expr(self, e) -> Expr:
        """Convert an expression, lifting any embedded calls first."""
        if isinstance(e, SLit):
            return StringLiteral(e.value)
        if isinstance(e, SVar):
            return VarRef(e.name)
        if isinstance(e, SDyn):
            return Dynamic(e.text)
        if isinstance(e, SConcat):
            left = self._expr(e.left)
            right = self._expr(e.right)
            if isinstance(left, Dynamic) or isinstance(right, Dynamic):
                return Dynamic(_flatten_text(e))
            return Concat(left, right)
        if isinstance(e, SCall):
            self._call(e)
            return Dynamic(e.text)
        raise TypeError(f"unexpected expression {e!r}")

    def _call(self, call: SCall, assigns_to: Optional[str] = None) -> int:
        args = tuple(self._expr(a) for a in call.args)
        idx = len(self.blocks)
        site = CallSite(call.name, args, Label(self.scope, idx), assigns_to)
        return self._emit(BlockKind.CALL, site)

    # -- statements ---------------------------------------------------------

    def _stmt(self, s) -> None:
        if isinstance(s, SAssign):
            if isinstance(s.rhs, SCall):
                self._call(s.rhs, assigns_to=s.var)
                return
            rhs = self._expr(s.rhs)
            idx = len(self.blocks)
            rec = AssignmentRecord(Label(self.scope, idx), s.var, rhs)
            self._emit(BlockKind.ASSIGNMENT, rec)
            return
        if isinstance(s, SCallStmt):
            self._call(s.call)
            return
        if isinstance(s, SIf):
            test = self._expr(s.test)
            cond = self._reserve()
            body_span = self._body(s.then)
            else_span = self._body(s.orelse)
            self._patch(cond, ConditionRecord(test, "if", body_span, else_span))
            return
        if isinstance(s, SWhile):
            test = self._expr(s.test)
            cond = self._reserve()
            body_span = self._body(s.body)
            self._patch(cond, ConditionRecord(test, "while", body_span, None))
            return
        if isinstance(s, SReturn):
            value = None if s.value is None else self._expr(s.value)
            self._emit(BlockKind.RETURN, ReturnRecord(value))
            return
        if isinstance(s, SOther):
            self._emit(BlockKind.OTHER, OtherRecord(s.text))
            return
        raise TypeError(f"unexpected statement {s!r}")

    def _body(self, stmts) -> Optional[tuple[int, int]]:
        if not stmts:
            return None
        first = len(self.blocks)
        for s in stmts:
            self._stmt(s)
        return (first, len(self.blocks) - 1)


def _flatten_text(e) -> str:
    if isinstance(e, SLit):
        return repr(e.value)
    if isinstance(e, SVar):
        return e.name
    if isinstance(e, SDyn):
        return e.text
    if isinstance(e, SCall):
        return e.text
    if isinstance(e, SConcat):
        return _flatten_text(e.left) + " + " + _flatten_text(e.right)
    return repr(e)


def lower_program(
    program: SProgram, language: Language, unit_id: str, path: str
) -> SourceUnit:
    blocks: list[LabeledBlock] = []
    blocks.extend(_ScopeAssembler(MAIN_SCOPE).lower(program.main))

    defined: dict[str, bool] = {}
    for func in program.funcs:
        if func.name == MAIN_SCOPE:
            program.issues.append(
                f"line {func.line}: function name {MAIN_SCOPE!r} is reserved; skipped"
            )
            continue
        if func.name in defined:
            program.issues.append(
                f"line {func.line}: redefinition of {func.name}(); first wins"
            )
            continue
        defined[func.name] = True
        blocks.extend(_ScopeAssembler(func.name).lower(func.body))

    return SourceUnit(
        unit_id=unit_id,
        language=language,
        path=path,
        blocks=tuple(blocks),
        defined_procs=frozenset(defined),
    )
