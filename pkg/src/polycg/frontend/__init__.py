"""Language frontends: parse source text into SourceUnits and fact tables."""

from __future__ import annotations

import logging
from typing import Callable, Optional

from ..model import C, JAVASCRIPT, PYTHON, Language, SourceUnit
from .clike import parse_clike
from .facts import (
    FlowEdge,
    assign_rows,
    call_rows,
    extract_assignments,
    extract_calls,
    extract_reverse_flow,
    rflow_rows,
)
from .lower import lower_program
from .monocg import build_graph_from_records, build_mono_cg, build_proc_cg
from .pysrc import parse_python

__all__ = [
    "FlowEdge",
    "parse_unit",
    "extract_assignments",
    "extract_calls",
    "extract_reverse_flow",
    "build_mono_cg",
    "build_proc_cg",
    "build_graph_from_records",
    "call_rows",
    "assign_rows",
    "rflow_rows",
]

logger = logging.getLogger(__name__)


def parse_unit(
    text: str,
    language: Language,
    unit_id: str,
    path: str = "",
    on_issue: Optional[Callable[[str], None]] = None,
) -> SourceUnit:
    """Parse one source file into a SourceUnit.

    Out-of-subset constructs are kept as Other blocks and reported through
    on_issue (default: a log warning); only structural syntax damage raises
    ParseError.
    """
    if language == PYTHON:
        program = parse_python(text)
    elif language in (C, JAVASCRIPT):
        program = parse_clike(text, language)
    else:
        raise ValueError(f"no parser for language {language}")
    unit = lower_program(program, language, unit_id, path or unit_id)
    report = on_issue or (lambda msg: logger.warning("%s: %s", unit_id, msg))
    for issue in program.issues:
        report(issue)
    return unit
