"""Python frontend: stdlib ast walk onto the shared statement tree.

Python already ships a full parser, so this frontend only filters the AST
down to the supported subset. Top-level statements form the main body;
non-nested function definitions become procedure scopes; everything else
degrades to Other statements with Dynamic expressions.
"""

from __future__ import annotations

import ast

from ..errors import ParseError
from .syntax import (
    SAssign,
    SCall,
    SCallStmt,
    SConcat,
    SDyn,
    SFunc,
    SIf,
    SLit,
    SOther,
    SProgram,
    SReturn,
    SVar,
    SWhile,
)


def parse_python(text: str) -> SProgram:
    try:
        tree = ast.parse(text)
    except SyntaxError as exc:
        raise ParseError(
            exc.msg or "invalid syntax", exc.lineno or 1, exc.offset or 1,
            (exc.text or "").strip(),
        ) from None
    program = SProgram()
    for stmt in tree.body:
        if isinstance(stmt, ast.FunctionDef):
            program.funcs.append(_convert_func(stmt, program))
        else:
            program.main.append(_convert_stmt(stmt, program))
    return program


def _convert_func(node: ast.FunctionDef, program: SProgram) -> SFunc:
    params = tuple(a.arg for a in node.args.args)
    body = tuple(_convert_stmt(s, program) for s in node.body)
    return SFunc(node.name, params, body, node.lineno)


def _convert_stmt(node: ast.stmt, program: SProgram):
    line = node.lineno
    if isinstance(node, ast.Assign):
        if len(node.targets) == 1 and isinstance(node.targets[0], ast.Name):
            return SAssign(node.targets[0].id, _convert_expr(node.value), line)
        program.issues.append(f"line {line}: unsupported assignment target")
        return SOther(_src(node), line)
    if isinstance(node, ast.Expr):
        if isinstance(node.value, ast.Call):
            call = _convert_call(node.value)
            if call is not None:
                return SCallStmt(call, line)
        return SOther(_src(node), line)
    if isinstance(node, ast.If):
        return SIf(
            _convert_expr(node.test),
            tuple(_convert_stmt(s, program) for s in node.body),
            tuple(_convert_stmt(s, program) for s in node.orelse),
            line,
        )
    if isinstance(node, ast.While):
        if node.orelse:
            program.issues.append(f"line {line}: while/else out of subset")
        return SWhile(
            _convert_expr(node.test),
            tuple(_convert_stmt(s, program) for s in node.body),
            line,
        )
    if isinstance(node, ast.Return):
        value = None if node.value is None else _convert_expr(node.value)
        return SReturn(value, line)
    if isinstance(node, ast.FunctionDef):
        program.issues.append(f"line {line}: nested function definition")
        return SOther(_src(node), line)
    if isinstance(node, (ast.Import, ast.ImportFrom, ast.Pass)):
        return SOther(_src(node), line)
    program.issues.append(f"line {line}: unsupported statement {type(node).__name__}")
    return SOther(_src(node), line)


def _convert_expr(node: ast.expr):
    if isinstance(node, ast.Constant) and isinstance(node.value, str):
        return SLit(node.value)
    if isinstance(node, ast.Name):
        return SVar(node.id)
    if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Add):
        left = _convert_expr(node.left)
        right = _convert_expr(node.right)
        if isinstance(left, (SLit, SVar, SConcat)) and isinstance(
            right, (SLit, SVar, SConcat)
        ):
            return SConcat(left, right)
        return SDyn(_src(node))
    if isinstance(node, ast.Call):
        call = _convert_call(node)
        if call is not None:
            return call
    return SDyn(_src(node))


def _convert_call(node: ast.Call):
    name = _dotted_name(node.func)
    if name is None:
        return None
    args = [_convert_expr(a) for a in node.args]
    args.extend(_convert_expr(kw.value) for kw in node.keywords if kw.value)
    return SCall(name, tuple(args), _src(node))


def _dotted_name(node: ast.expr):
    parts = []
    while isinstance(node, ast.Attribute):
        parts.append(node.attr)
        node = node.value
    if isinstance(node, ast.Name):
        parts.append(node.id)
        return ".".join(reversed(parts))
    return None


def _src(node: ast.AST) -> str:
    try:
        return ast.unparse(node)
    except Exception:  # pragma: no cover - unparse covers the full grammar
        return ast.dump(node)
