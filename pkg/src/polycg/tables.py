"""Tabular exchange format between pipeline filters.

Dialect is fixed: RFC-4180 quoting, UTF-8, mandatory header row, LF line
endings. Rows round-trip bit-exactly (read_table(write_table(rows)) == rows)
and are written in input order.

The args columns hold a JSON array of *flat expression* strings:

    "text"      string literal (JSON-quoted)
    name        variable reference (bare identifier, dots allowed)
    A+B+C       concatenation, left-associated
    ?:text      dynamic expression; everything after ?: is raw source text

Assignment right-hand sides use a kind/value column pair; kind "call"
stores ``{"callee": ..., "args": [flat, ...]}`` as JSON so handle-binding
calls stay recognisable downstream.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .errors import MalformedCsv, SchemaMismatch
from .model import (
    CallRhs,
    Concat,
    Dynamic,
    Expr,
    Flag,
    Label,
    Language,
    StringLiteral,
    VarRef,
)


@dataclass(frozen=True)
class Schema:
    name: str
    columns: tuple[str, ...]

    @property
    def header(self) -> str:
        return ",".join(self.columns)


CALLS_SCHEMA = Schema(
    "calls",
    ("unit_id", "language", "scope", "index", "callee", "args", "flag", "target_language"),
)
ASSIGNS_SCHEMA = Schema(
    "assigns", ("unit_id", "scope", "index", "variable", "rhs_kind", "rhs_value")
)
RFLOW_SCHEMA = Schema("rflow", ("unit_id", "scope", "from_index", "to_index"))
RDEFS_SCHEMA = Schema(
    "rdefs", ("unit_id", "scope", "use_index", "variable", "def_index")
)
MCG_SCHEMA = Schema(
    "mcg",
    (
        "node_id",
        "parent_id",
        "proc",
        "unit_id",
        "scope",
        "index",
        "language",
        "target_language",
        "args",
        "flag",
    ),
)
UNITS_SCHEMA = Schema("units", ("unit_id", "language", "path", "defined_procs"))
REGISTRY_SCHEMA = Schema(
    "registry",
    (
        "api_name",
        "source_language",
        "target_language",
        "api_class",
        "payload_arg_index",
        "binder_api",
        "binder_name_index",
        "arg_packer",
    ),
)


def write_table(rows: Iterable[Sequence[str]], schema: Schema) -> str:
    """Serialise rows (already stringified, schema-width) to CSV text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(schema.columns)
    for i, row in enumerate(rows):
        if len(row) != len(schema.columns):
            raise SchemaMismatch(
                f"{schema.name} row {i}: expected {len(schema.columns)} fields, "
                f"got {len(row)}"
            )
        writer.writerow(row)
    return buf.getvalue()


def read_table(text: str, schema: Schema) -> list[tuple[str, ...]]:
    """Parse CSV text, validating the header and per-row width."""
    if text.count('"') % 2 != 0:
        raise MalformedCsv(f"{schema.name}: unbalanced quotes")
    reader = csv.reader(io.StringIO(text), strict=True)
    try:
        rows = [tuple(r) for r in reader]
    except csv.Error as exc:
        raise MalformedCsv(f"{schema.name}: {exc}") from exc
    if not rows:
        raise SchemaMismatch(f"{schema.name}: missing header row")
    if rows[0] != schema.columns:
        raise SchemaMismatch(
            f"{schema.name}: header {','.join(rows[0])!r} != {schema.header!r}"
        )
    for i, row in enumerate(rows[1:]):
        if len(row) != len(schema.columns):
            raise SchemaMismatch(
                f"{schema.name} row {i}: expected {len(schema.columns)} fields, "
                f"got {len(row)}"
            )
    return rows[1:]


def write_table_file(path: Path, rows: Iterable[Sequence[str]], schema: Schema) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(write_table(rows, schema), encoding="utf-8")


def read_table_file(path: Path, schema: Schema) -> list[tuple[str, ...]]:
    return read_table(path.read_text(encoding="utf-8"), schema)


# ---------------------------------------------------------------------------
# Flat expression codec
# ---------------------------------------------------------------------------

_IDENT_RE = re.compile(r"[A-Za-z_$][A-Za-z0-9_$.]*\Z")


def expr_to_flat(expr: Expr) -> str:
    if isinstance(expr, StringLiteral):
        return json.dumps(expr.value, ensure_ascii=False)
    if isinstance(expr, VarRef):
        if not _IDENT_RE.match(expr.name):
            raise ValueError(f"unserialisable variable name {expr.name!r}")
        return expr.name
    if isinstance(expr, Dynamic):
        return "?:" + expr.text
    if isinstance(expr, Concat):
        return expr_to_flat(expr.left) + "+" + expr_to_flat(expr.right)
    raise TypeError(f"not an expression: {expr!r}")


def expr_from_flat(flat: str) -> Expr:
    if flat.startswith("?:"):
        return Dynamic(flat[2:])
    parts = _split_concat(flat)
    exprs = [_atom_from_flat(p) for p in parts]
    out = exprs[0]
    for nxt in exprs[1:]:
        out = Concat(out, nxt)
    return out


def _split_concat(flat: str) -> list[str]:
    parts = []
    cur = []
    in_str = False
    i = 0
    while i < len(flat):
        ch = flat[i]
        if in_str:
            cur.append(ch)
            if ch == "\\" and i + 1 < len(flat):
                cur.append(flat[i + 1])
                i += 2
                continue
            if ch == '"':
                in_str = False
        elif ch == '"':
            in_str = True
            cur.append(ch)
        elif ch == "+":
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
        i += 1
    if in_str:
        raise ValueError(f"unterminated literal in flat expression {flat!r}")
    parts.append("".join(cur))
    return parts


def _atom_from_flat(part: str) -> Expr:
    if part.startswith('"'):
        try:
            value = json.loads(part)
        except json.JSONDecodeError as exc:
            raise ValueError(f"bad literal {part!r}") from exc
        if not isinstance(value, str):
            raise ValueError(f"bad literal {part!r}")
        return StringLiteral(value)
    if _IDENT_RE.match(part):
        return VarRef(part)
    raise ValueError(f"unparsable flat expression part {part!r}")


def args_to_json(args: Sequence[Expr]) -> str:
    return json.dumps([expr_to_flat(a) for a in args], ensure_ascii=False)


def args_from_json(text: str) -> tuple[Expr, ...]:
    flats = json.loads(text)
    if not isinstance(flats, list) or not all(isinstance(f, str) for f in flats):
        raise ValueError(f"args column is not a JSON string array: {text!r}")
    return tuple(expr_from_flat(f) for f in flats)


def rhs_to_fields(rhs: Union[Expr, CallRhs]) -> tuple[str, str]:
    if isinstance(rhs, StringLiteral):
        return "literal", rhs.value
    if isinstance(rhs, VarRef):
        return "varref", rhs.name
    if isinstance(rhs, Concat):
        return "concat", expr_to_flat(rhs)
    if isinstance(rhs, Dynamic):
        return "dynamic", rhs.text
    if isinstance(rhs, CallRhs):
        payload = {"callee": rhs.callee, "args": [expr_to_flat(a) for a in rhs.args]}
        return "call", json.dumps(payload, ensure_ascii=False)
    raise TypeError(f"not an rhs: {rhs!r}")


def rhs_from_fields(kind: str, value: str) -> Union[Expr, CallRhs]:
    if kind == "literal":
        return StringLiteral(value)
    if kind == "varref":
        return VarRef(value)
    if kind == "concat":
        return expr_from_flat(value)
    if kind == "dynamic":
        return Dynamic(value)
    if kind == "call":
        payload = json.loads(value)
        return CallRhs(
            payload["callee"], tuple(expr_from_flat(f) for f in payload["args"])
        )
    raise ValueError(f"unknown rhs kind {kind!r}")


# ---------------------------------------------------------------------------
# Typed rows
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CallRow:
    """One call site as exchanged through calls.csv.

    flag and target_language start empty and are populated by the interop
    rewrite; a rewritten multi-value call occupies several rows that share
    scope and index.
    """

    unit_id: str
    language: Language
    scope: str
    index: int
    callee: str
    args: tuple[Expr, ...]
    flag: Flag = Flag.NONE
    target_language: Optional[Language] = None

    @property
    def label(self) -> Label:
        return Label(self.scope, self.index)

    def to_fields(self) -> tuple[str, ...]:
        return (
            self.unit_id,
            self.language.tag,
            self.scope,
            str(self.index),
            self.callee,
            args_to_json(self.args),
            self.flag.value,
            self.target_language.tag if self.target_language else "",
        )

    @staticmethod
    def from_fields(f: Sequence[str]) -> "CallRow":
        return CallRow(
            unit_id=f[0],
            language=Language(f[1]),
            scope=f[2],
            index=int(f[3]),
            callee=f[4],
            args=args_from_json(f[5]),
            flag=Flag(f[6]),
            target_language=Language(f[7]) if f[7] else None,
        )


@dataclass(frozen=True)
class AssignRow:
    unit_id: str
    scope: str
    index: int
    variable: str
    rhs: Union[Expr, CallRhs]

    def to_fields(self) -> tuple[str, ...]:
        kind, value = rhs_to_fields(self.rhs)
        return (self.unit_id, self.scope, str(self.index), self.variable, kind, value)

    @staticmethod
    def from_fields(f: Sequence[str]) -> "AssignRow":
        return AssignRow(f[0], f[1], int(f[2]), f[3], rhs_from_fields(f[4], f[5]))


@dataclass(frozen=True)
class FlowRow:
    """One reverse control-flow edge (successor -> predecessor)."""

    unit_id: str
    scope: str
    from_index: int
    to_index: int

    def to_fields(self) -> tuple[str, ...]:
        return (self.unit_id, self.scope, str(self.from_index), str(self.to_index))

    @staticmethod
    def from_fields(f: Sequence[str]) -> "FlowRow":
        return FlowRow(f[0], f[1], int(f[2]), int(f[3]))


ENTRY_DEF_FIELD = "entry"


@dataclass(frozen=True)
class RdefRow:
    unit_id: str
    scope: str
    use_index: int
    variable: str
    def_index: Optional[int]  # None encodes the possibly-unassigned entry marker

    def to_fields(self) -> tuple[str, ...]:
        d = ENTRY_DEF_FIELD if self.def_index is None else str(self.def_index)
        return (self.unit_id, self.scope, str(self.use_index), self.variable, d)

    @staticmethod
    def from_fields(f: Sequence[str]) -> "RdefRow":
        d = None if f[4] == ENTRY_DEF_FIELD else int(f[4])
        return RdefRow(f[0], f[1], int(f[2]), f[3], d)


@dataclass(frozen=True)
class McgRow:
    node_id: str
    parent_id: str  # empty for the root
    proc: str
    unit_id: str
    scope: str
    index: int
    language: Language
    target_language: Optional[Language]
    args: tuple[Expr, ...]
    flag: Flag

    def to_fields(self) -> tuple[str, ...]:
        return (
            self.node_id,
            self.parent_id,
            self.proc,
            self.unit_id,
            self.scope,
            str(self.index),
            self.language.tag,
            self.target_language.tag if self.target_language else "",
            args_to_json(self.args),
            self.flag.value,
        )

    @staticmethod
    def from_fields(f: Sequence[str]) -> "McgRow":
        return McgRow(
            node_id=f[0],
            parent_id=f[1],
            proc=f[2],
            unit_id=f[3],
            scope=f[4],
            index=int(f[5]),
            language=Language(f[6]),
            target_language=Language(f[7]) if f[7] else None,
            args=args_from_json(f[8]),
            flag=Flag(f[9]),
        )


@dataclass(frozen=True)
class UnitRow:
    unit_id: str
    language: Language
    path: str
    defined_procs: tuple[str, ...]

    def to_fields(self) -> tuple[str, ...]:
        return (
            self.unit_id,
            self.language.tag,
            self.path,
            json.dumps(sorted(self.defined_procs), ensure_ascii=False),
        )

    @staticmethod
    def from_fields(f: Sequence[str]) -> "UnitRow":
        return UnitRow(f[0], Language(f[1]), f[2], tuple(json.loads(f[3])))


_ROW_SCHEMAS = {
    CallRow: CALLS_SCHEMA,
    AssignRow: ASSIGNS_SCHEMA,
    FlowRow: RFLOW_SCHEMA,
    RdefRow: RDEFS_SCHEMA,
    McgRow: MCG_SCHEMA,
    UnitRow: UNITS_SCHEMA,
}


def write_rows(path: Path, rows: Iterable) -> None:
    rows = list(rows)
    if rows:
        schema = _ROW_SCHEMAS[type(rows[0])]
    else:
        raise ValueError("write_rows needs at least one row; use write_table_file")
    write_table_file(path, [r.to_fields() for r in rows], schema)


def write_rows_as(path: Path, rows: Iterable, row_type: type) -> None:
    schema = _ROW_SCHEMAS[row_type]
    write_table_file(path, [r.to_fields() for r in rows], schema)


def read_rows(path: Path, row_type: type) -> list:
    schema = _ROW_SCHEMAS[row_type]
    return [row_type.from_fields(f) for f in read_table_file(path, schema)]
