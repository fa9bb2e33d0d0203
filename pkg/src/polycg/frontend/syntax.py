"""Parser-internal statement tree, shared by all three language frontends.

Parsers produce this small structured form; lowering flattens it into the
labeled-block representation of the core model. Keeping the two apart means
the per-language parsers only deal with surface syntax.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class SLit:
    value: str


@dataclass(frozen=True)
class SVar:
    name: str


@dataclass(frozen=True)
class SConcat:
    left: "SExpr"
    right: "SExpr"


@dataclass(frozen=True)
class SCall:
    name: str
    args: tuple["SExpr", ...]
    text: str  # raw source of the call expression


@dataclass(frozen=True)
class SDyn:
    text: str


SExpr = Union[SLit, SVar, SConcat, SCall, SDyn]


@dataclass(frozen=True)
class SAssign:
    var: str
    rhs: SExpr
    line: int


@dataclass(frozen=True)
class SCallStmt:
    call: SCall
    line: int


@dataclass(frozen=True)
class SIf:
    test: SExpr
    then: tuple["SStmt", ...]
    orelse: tuple["SStmt", ...]
    line: int


@dataclass(frozen=True)
class SWhile:
    test: SExpr
    body: tuple["SStmt", ...]
    line: int


@dataclass(frozen=True)
class SReturn:
    value: Optional[SExpr]
    line: int


@dataclass(frozen=True)
class SOther:
    text: str
    line: int


SStmt = Union[SAssign, SCallStmt, SIf, SWhile, SReturn, SOther]


@dataclass(frozen=True)
class SFunc:
    name: str
    params: tuple[str, ...]
    body: tuple[SStmt, ...]
    line: int


@dataclass
class SProgram:
    """Top-level parse result: main statements plus function definitions."""

    main: list[SStmt] = field(default_factory=list)
    funcs: list[SFunc] = field(default_factory=list)
    issues: list[str] = field(default_factory=list)
