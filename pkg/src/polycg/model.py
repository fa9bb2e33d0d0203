"""Core domain model: languages, labeled blocks, source units and call-graphs.

Every later stage (fact extraction, dataflow, interop rewriting, merging)
works on the types defined here. All types are immutable after construction
and safe to share between concurrently running stages.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional, Union

MAIN_SCOPE = "main-body"

# Sentinel procedure names installed by the interop filters.
ANONYMOUS = "Anonymous"
ANONYMOUS_DYNAMIC = "Anonymous-Dynamic"
FILEBASED_DYNAMIC = "FileBased-Dynamic"
PROCBASED_DYNAMIC = "ProcBased-Dynamic"


@dataclass(frozen=True)
class Language:
    """A language tag.

    C, Python and JavaScript have parser support; registry files may
    introduce further tags (e.g. Shell as the target of system()), which
    flow through the graph untouched.
    """

    tag: str

    def __post_init__(self):
        if not self.tag:
            raise ValueError("empty language tag")

    def __str__(self) -> str:
        return self.tag


C = Language("C")
PYTHON = Language("Python")
JAVASCRIPT = Language("JavaScript")

PARSED_LANGUAGES = (C, PYTHON, JAVASCRIPT)


@dataclass(frozen=True)
class Label:
    """Position of a statement: enclosing scope plus sequential index.

    The scope is a procedure name or the distinguished "main-body"; indices
    run 0..n-1 within each scope with no gaps.
    """

    scope: str
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"negative statement index {self.index}")


# ---------------------------------------------------------------------------
# Expressions
#
# The evaluable subset is string literals, variable references and string
# concatenation; Dynamic is the catch-all that carries the raw source text
# of anything else. CallRhs is not an expression: it only ever appears as
# the right-hand side of an assignment (x = f(...)) so that handle-binding
# calls stay recognisable to the procedure-based interop filter.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class StringLiteral(Expr):
    value: str


@dataclass(frozen=True)
class VarRef(Expr):
    name: str


@dataclass(frozen=True)
class Concat(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Dynamic(Expr):
    text: str


@dataclass(frozen=True)
class CallRhs:
    """Assignment right-hand side of the form ``x = callee(args...)``."""

    callee: str
    args: tuple[Expr, ...]


Rhs = Union[Expr, CallRhs]


class BlockKind(Enum):
    ASSIGNMENT = "Assignment"
    CALL = "Call"
    CONDITION = "Condition"
    RETURN = "Return"
    OTHER = "Other"


@dataclass(frozen=True)
class CallSite:
    """One procedure-call statement: target name plus source-order arguments.

    assigns_to is set when the call's result is bound (``x = f(...)``); the
    statement then also contributes an AssignmentRecord.
    """

    target: str
    args: tuple[Expr, ...]
    label: Label
    assigns_to: Optional[str] = None


@dataclass(frozen=True)
class AssignmentRecord:
    """One assignment statement. Compound assignments are out of subset."""

    label: Label
    variable: str
    rhs: Rhs


@dataclass(frozen=True)
class ConditionRecord:
    """An if or while head plus the index spans of its lowered bodies.

    Spans are (first, last) statement indices within the same scope, or
    None for an absent/empty branch. They encode the structured control
    flow needed to rebuild the CFG from the flat block list.
    """

    test: Expr
    construct: str  # "if" | "while"
    body_span: Optional[tuple[int, int]] = None
    else_span: Optional[tuple[int, int]] = None

    def __post_init__(self):
        if self.construct not in ("if", "while"):
            raise ValueError(f"bad construct {self.construct!r}")
        if self.construct == "while" and self.else_span is not None:
            raise ValueError("while cannot carry an else span")


@dataclass(frozen=True)
class ReturnRecord:
    value: Optional[Expr] = None


@dataclass(frozen=True)
class OtherRecord:
    """Out-of-subset statement kept as opaque text."""

    text: str


Payload = Union[CallSite, AssignmentRecord, ConditionRecord, ReturnRecord, OtherRecord]

_PAYLOAD_TYPES = {
    BlockKind.ASSIGNMENT: AssignmentRecord,
    BlockKind.CALL: CallSite,
    BlockKind.CONDITION: ConditionRecord,
    BlockKind.RETURN: ReturnRecord,
    BlockKind.OTHER: OtherRecord,
}


@dataclass(frozen=True)
class LabeledBlock:
    """One elementary statement with its label and kind-specific payload."""

    label: Label
    kind: BlockKind
    payload: Payload

    def __post_init__(self):
        expected = _PAYLOAD_TYPES[self.kind]
        if not isinstance(self.payload, expected):
            raise ValueError(
                f"{self.kind.value} block requires {expected.__name__}, "
                f"got {type(self.payload).__name__}"
            )


@dataclass(frozen=True)
class SourceUnit:
    """One parsed program: labeled blocks plus the procedures it defines."""

    unit_id: str
    language: Language
    path: str
    blocks: tuple[LabeledBlock, ...]
    defined_procs: frozenset[str]

    def __post_init__(self):
        seen = set()
        for b in self.blocks:
            if b.label in seen:
                raise ValueError(f"duplicate label {b.label} in unit {self.unit_id}")
            seen.add(b.label)
            if b.label.scope != MAIN_SCOPE and b.label.scope not in self.defined_procs:
                raise ValueError(
                    f"block scope {b.label.scope!r} not among defined procedures"
                )

    def blocks_in(self, scope: str) -> list[LabeledBlock]:
        return sorted(
            (b for b in self.blocks if b.label.scope == scope),
            key=lambda b: b.label.index,
        )

    def scopes(self) -> list[str]:
        out = [MAIN_SCOPE]
        out.extend(sorted(self.defined_procs))
        return out


def procs(unit: SourceUnit) -> frozenset[str]:
    """Names of all procedures called anywhere in the unit."""
    return frozenset(
        b.payload.target for b in unit.blocks if b.kind is BlockKind.CALL
    )


@dataclass(frozen=True)
class Codebase:
    """The analysed set of programs."""

    units: tuple[SourceUnit, ...]

    def __post_init__(self):
        ids = [u.unit_id for u in self.units]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate unit_id in codebase")

    @property
    def languages(self) -> frozenset[Language]:
        return frozenset(u.language for u in self.units)

    @property
    def count(self) -> int:
        return len(self.units)

    def unit(self, unit_id: str) -> SourceUnit:
        for u in self.units:
            if u.unit_id == unit_id:
                return u
        raise KeyError(unit_id)


# ---------------------------------------------------------------------------
# Call-graphs
# ---------------------------------------------------------------------------


class Flag(Enum):
    NONE = ""
    ANONYMOUS_RESOLVED = "AnonymousResolved"
    ANONYMOUS_DYNAMIC = "AnonymousDynamic"
    FILEBASED_DYNAMIC = "FileBasedDynamic"
    PROCBASED_DYNAMIC = "ProcBasedDynamic"
    CROSS_LANG_CYCLE = "CrossLangCycle"
    RECURSIVE = "Recursive"


DYNAMIC_FLAGS = frozenset(
    {Flag.ANONYMOUS_DYNAMIC, Flag.FILEBASED_DYNAMIC, Flag.PROCBASED_DYNAMIC}
)

_SENTINEL_BY_FLAG = {
    Flag.ANONYMOUS_DYNAMIC: ANONYMOUS_DYNAMIC,
    Flag.FILEBASED_DYNAMIC: FILEBASED_DYNAMIC,
    Flag.PROCBASED_DYNAMIC: PROCBASED_DYNAMIC,
}


class Stage(Enum):
    MONOLINGUAL = "Monolingual"
    INTEROP_REWRITTEN = "InteropRewritten"
    MULTILINGUAL = "Multilingual"


@dataclass(frozen=True)
class CgNode:
    """Call-graph node: a procedure call (or a root pseudo-node).

    target_language is set exactly when an interop filter resolved the call
    into another language; statically-unresolvable interop calls instead
    carry a sentinel proc plus the matching *-Dynamic flag.
    """

    node_id: str
    proc: str
    label: Label
    args: tuple[Expr, ...]
    language: Language
    unit_id: str
    target_language: Optional[Language] = None
    flag: Flag = Flag.NONE

    def __post_init__(self):
        if self.flag in DYNAMIC_FLAGS:
            want = _SENTINEL_BY_FLAG[self.flag]
            if self.proc != want:
                raise ValueError(f"{self.flag.value} node must be named {want!r}")
            if self.target_language is not None:
                raise ValueError("dynamic sentinel nodes carry no target language")


def node_id_for(unit_id: str, proc: str, label: Label, occurrence: int) -> str:
    """Deterministic content id; the occurrence counter separates copies."""
    key = "\x1f".join((unit_id, proc, label.scope, str(label.index), str(occurrence)))
    return hashlib.sha256(key.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class CallGraph:
    """A rooted call tree. Each non-root node has exactly one parent."""

    root: str
    stage: Stage
    nodes: dict[str, CgNode]
    edges: frozenset[tuple[str, str]]
    _children: dict[str, tuple[str, ...]] = field(
        default_factory=dict, repr=False, compare=False
    )
    _parent: dict[str, str] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.root not in self.nodes:
            raise ValueError("root node missing from graph")
        kids: dict[str, list[str]] = {nid: [] for nid in self.nodes}
        for parent, child in self.edges:
            if parent not in self.nodes or child not in self.nodes:
                raise ValueError(f"edge ({parent}, {child}) references unknown node")
            if child in self._parent:
                raise ValueError(f"node {child} has two parents")
            self._parent[child] = parent
            kids[parent].append(child)
        for nid, c in kids.items():
            self._children[nid] = tuple(sorted(c))
        reachable = set()
        stack = [self.root]
        while stack:
            nid = stack.pop()
            if nid in reachable:
                continue
            reachable.add(nid)
            stack.extend(self._children[nid])
        if reachable != set(self.nodes):
            raise ValueError("graph contains nodes unreachable from root")
        if self.stage is Stage.MONOLINGUAL:
            langs = {n.language for n in self.nodes.values()}
            if len(langs) > 1:
                raise ValueError("monolingual graph mixes languages")
            if any(n.target_language for n in self.nodes.values()):
                raise ValueError("monolingual graph has target languages set")

    def node(self, node_id: str) -> CgNode:
        return self.nodes[node_id]

    def children(self, node_id: str) -> tuple[str, ...]:
        return self._children[node_id]

    def parent(self, node_id: str) -> Optional[str]:
        return self._parent.get(node_id)

    def ancestors(self, node_id: str) -> Iterator[CgNode]:
        cur = self._parent.get(node_id)
        while cur is not None:
            yield self.nodes[cur]
            cur = self._parent.get(cur)

    def walk(self) -> Iterator[CgNode]:
        """Depth-first, children in sorted node-id order."""
        stack = [self.root]
        while stack:
            nid = stack.pop()
            yield self.nodes[nid]
            stack.extend(reversed(self._children[nid]))

    def leaves(self) -> list[CgNode]:
        return [n for n in self.walk() if not self._children[n.node_id]]


class GraphBuilder:
    """Mutable builder; freeze() emits an immutable CallGraph.

    Node ids are content hashes with a per-builder occurrence counter, so
    repeated construction over the same input is id-stable.
    """

    def __init__(self):
        self._nodes: dict[str, CgNode] = {}
        self._parent: dict[str, Optional[str]] = {}
        self._children: dict[str, list[str]] = {}
        self._occ: dict[tuple[str, str, str, int], int] = {}
        self._root: Optional[str] = None

    def add(
        self,
        parent_id: Optional[str],
        proc: str,
        label: Label,
        args: tuple[Expr, ...],
        language: Language,
        unit_id: str,
        target_language: Optional[Language] = None,
        flag: Flag = Flag.NONE,
    ) -> str:
        key = (unit_id, proc, label.scope, label.index)
        occ = self._occ.get(key, 0)
        self._occ[key] = occ + 1
        nid = node_id_for(unit_id, proc, label, occ)
        node = CgNode(nid, proc, label, tuple(args), language, unit_id, target_language, flag)
        self._nodes[nid] = node
        self._parent[nid] = parent_id
        self._children[nid] = []
        if parent_id is None:
            if self._root is not None:
                raise ValueError("builder already has a root")
            self._root = nid
        else:
            self._children[parent_id].append(nid)
        return nid

    def add_exact(self, parent_id: Optional[str], node: CgNode) -> str:
        """Insert an existing node keeping its id (graph rebuilds)."""
        if node.node_id in self._nodes:
            raise ValueError(f"node {node.node_id} already present")
        self._nodes[node.node_id] = node
        self._parent[node.node_id] = parent_id
        self._children[node.node_id] = []
        key = (node.unit_id, node.proc, node.label.scope, node.label.index)
        self._occ[key] = self._occ.get(key, 0) + 1
        if parent_id is None:
            if self._root is not None:
                raise ValueError("builder already has a root")
            self._root = node.node_id
        else:
            self._children[parent_id].append(node.node_id)
        return node.node_id

    def adopt(self, graph: CallGraph) -> None:
        """Seed the builder with an existing graph, keeping its node ids."""
        if self._nodes:
            raise ValueError("adopt() requires an empty builder")
        for node in graph.walk():
            self._nodes[node.node_id] = node
            self._parent[node.node_id] = graph.parent(node.node_id)
            self._children[node.node_id] = list(graph.children(node.node_id))
            key = (node.unit_id, node.proc, node.label.scope, node.label.index)
            self._occ[key] = self._occ.get(key, 0) + 1
        self._root = graph.root

    def node(self, node_id: str) -> CgNode:
        return self._nodes[node_id]

    def children(self, node_id: str) -> tuple[str, ...]:
        return tuple(self._children[node_id])

    def replace(self, node: CgNode) -> None:
        if node.node_id not in self._nodes:
            raise KeyError(node.node_id)
        self._nodes[node.node_id] = node

    def remove_subtree(self, node_id: str) -> None:
        parent = self._parent[node_id]
        if parent is None:
            raise ValueError("cannot remove the root")
        self._children[parent].remove(node_id)
        stack = [node_id]
        while stack:
            nid = stack.pop()
            stack.extend(self._children.pop(nid))
            del self._nodes[nid]
            del self._parent[nid]

    def ancestry(self, node_id: str) -> list[CgNode]:
        out = []
        cur = self._parent.get(node_id)
        while cur is not None:
            out.append(self._nodes[cur])
            cur = self._parent.get(cur)
        return out

    def freeze(self, stage: Stage) -> CallGraph:
        edges = frozenset(
            (parent, child)
            for child, parent in self._parent.items()
            if parent is not None
        )
        if self._root is None:
            raise ValueError("builder has no root")
        return CallGraph(self._root, stage, dict(self._nodes), edges)
