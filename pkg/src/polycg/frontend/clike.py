"""Recursive-descent subset parser for C and JavaScript sources.

Both languages share statement shape (function definitions, assignments,
calls, if/else, while, return); the differences are surface syntax:

  * C concatenates strings by literal adjacency, JavaScript by ``+``.
  * C callee names are plain identifiers; JavaScript allows dotted names
    (``JQuery.ajax``). Dotted names outside a call position are dynamic.
  * C declarations with an initialiser (``char *x = "a";``) count as
    assignments; bare declarations and preprocessor lines are skipped or
    kept as opaque statements.

Anything outside the subset degrades to an Other statement (reported as an
issue) rather than failing the parse; only structural damage (unterminated
strings, unbalanced braces) raises ParseError.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ParseError
from ..model import C, JAVASCRIPT, Language
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

_ESCAPES = {
    "n": "\n",
    "t": "\t",
    "r": "\r",
    "0": "\0",
    "\\": "\\",
    '"': '"',
    "'": "'",
}

_TWO_CHAR_PUNCT = {
    "==", "!=", "<=", ">=", "&&", "||", "+=", "-=", "*=", "/=", "%=",
    "++", "--", "->", "<<", ">>", "=>",
}


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT STRING CHAR NUMBER PUNCT EOF
    value: str
    line: int
    col: int
    start: int
    end: int


def _is_ident_start(ch: str) -> bool:
    return ch.isalpha() or ch in "_$"


def _is_ident_char(ch: str) -> bool:
    return ch.isalnum() or ch in "_$"


def tokenize(text: str, language: Language) -> list[Token]:
    toks: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(text)

    def advance(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if i < n and text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    at_line_start = True
    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            if ch == "\n":
                at_line_start = True
            advance(1)
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                advance(1)
            continue
        if text.startswith("/*", i):
            end = text.find("*/", i + 2)
            if end < 0:
                raise ParseError("unterminated block comment", line, col)
            advance(end + 2 - i)
            continue
        if language == C and ch == "#" and at_line_start:
            while i < n and text[i] != "\n":
                advance(1)
            continue
        at_line_start = False
        if ch == '"' or (ch == "'" and language == JAVASCRIPT):
            quote = ch
            start, sline, scol = i, line, col
            advance(1)
            out = []
            while i < n and text[i] != quote:
                if text[i] == "\n":
                    raise ParseError("unterminated string literal", sline, scol)
                if text[i] == "\\" and i + 1 < n:
                    out.append(_ESCAPES.get(text[i + 1], text[i + 1]))
                    advance(2)
                    continue
                out.append(text[i])
                advance(1)
            if i >= n:
                raise ParseError("unterminated string literal", sline, scol)
            advance(1)
            toks.append(Token("STRING", "".join(out), sline, scol, start, i))
            continue
        if ch == "'" and language == C:
            start, sline, scol = i, line, col
            advance(1)
            while i < n and text[i] != "'":
                if text[i] == "\\":
                    advance(1)
                advance(1)
            if i >= n:
                raise ParseError("unterminated character literal", sline, scol)
            advance(1)
            toks.append(Token("CHAR", text[start:i], sline, scol, start, i))
            continue
        if _is_ident_start(ch):
            start, sline, scol = i, line, col
            while i < n and _is_ident_char(text[i]):
                advance(1)
            toks.append(Token("IDENT", text[start:i], sline, scol, start, i))
            continue
        if ch.isdigit():
            start, sline, scol = i, line, col
            while i < n and (text[i].isalnum() or text[i] == "."):
                advance(1)
            toks.append(Token("NUMBER", text[start:i], sline, scol, start, i))
            continue
        two = text[i : i + 2]
        if two in _TWO_CHAR_PUNCT:
            toks.append(Token("PUNCT", two, line, col, i, i + 2))
            advance(2)
            continue
        toks.append(Token("PUNCT", ch, line, col, i, i + 1))
        advance(1)
    toks.append(Token("EOF", "", line, col, n, n))
    return toks


class ClikeParser:
    def __init__(self, text: str, language: Language):
        if language not in (C, JAVASCRIPT):
            raise ValueError(f"unsupported language {language}")
        self.text = text
        self.language = language
        self.toks = tokenize(text, language)
        self.pos = 0
        self.program = SProgram()

    # -- token helpers ------------------------------------------------------

    def _tok(self, offset: int = 0) -> Token:
        return self.toks[min(self.pos + offset, len(self.toks) - 1)]

    def _slice(self, start_tok: Token, end_tok: Token) -> str:
        return self.text[start_tok.start : end_tok.end].strip()

    def _matching(self, open_pos: int) -> int:
        """Index of the token closing the bracket at open_pos."""
        pairs = {"(": ")", "{": "}", "[": "]"}
        opener = self.toks[open_pos]
        closer = pairs[opener.value]
        depth = 0
        for j in range(open_pos, len(self.toks)):
            t = self.toks[j]
            if t.kind == "EOF":
                break
            if t.kind == "PUNCT" and t.value in pairs:
                depth += 1
            elif t.kind == "PUNCT" and t.value in pairs.values():
                depth -= 1
                if depth == 0 and t.value == closer:
                    return j
                if depth < 0:
                    break
        raise ParseError(
            f"unbalanced {opener.value!r}", opener.line, opener.col, opener.value
        )

    def _issue(self, message: str, line: int) -> None:
        self.program.issues.append(f"line {line}: {message}")

    # -- top level ----------------------------------------------------------

    def parse(self) -> SProgram:
        while self._tok().kind != "EOF":
            t = self._tok()
            if t.kind == "PUNCT" and t.value == "}":
                raise ParseError("unexpected '}'", t.line, t.col, "}")
            if self.language == JAVASCRIPT and t.kind == "IDENT" and t.value == "function":
                self.program.funcs.append(self._parse_js_function())
                continue
            if self.language == C:
                func = self._try_parse_c_function()
                if func == "skipped":
                    continue
                if func is not None:
                    self.program.funcs.append(func)
                    continue
            self.program.main.append(self._parse_statement())
        return self.program

    def _parse_js_function(self) -> SFunc:
        start = self._tok()
        self.pos += 1  # function
        name_tok = self._tok()
        if name_tok.kind != "IDENT":
            raise ParseError("expected function name", name_tok.line, name_tok.col)
        self.pos += 1
        if not (self._tok().kind == "PUNCT" and self._tok().value == "("):
            raise ParseError("expected '('", self._tok().line, self._tok().col)
        close = self._matching(self.pos)
        params = self._param_names(self.pos + 1, close)
        self.pos = close + 1
        body = self._parse_block()
        return SFunc(name_tok.value, params, tuple(body), start.line)

    def _try_parse_c_function(self):
        """Parse ``type name(params) { ... }`` or skip a prototype.

        Returns an SFunc, the string "skipped" for prototypes, or None when
        the tokens are not a function definition.
        """
        j = self.pos
        idents = []
        while self.toks[j].kind == "IDENT" or (
            self.toks[j].kind == "PUNCT" and self.toks[j].value == "*"
        ):
            if self.toks[j].kind == "IDENT":
                idents.append(self.toks[j])
            j += 1
        if not idents or not (
            self.toks[j].kind == "PUNCT" and self.toks[j].value == "("
        ):
            return None
        try:
            close = self._matching_from(j)
        except ParseError:
            return None
        after = self.toks[close + 1]
        if after.kind == "PUNCT" and after.value == "{":
            name_tok = idents[-1]
            params = self._param_names(j + 1, close)
            self.pos = close + 1
            body = self._parse_block()
            return SFunc(name_tok.value, params, tuple(body), name_tok.line)
        if after.kind == "PUNCT" and after.value == ";" and len(idents) >= 2:
            self.pos = close + 2  # prototype: declaration only
            return "skipped"
        return None

    def _matching_from(self, open_pos: int) -> int:
        saved = self.pos
        try:
            return self._matching(open_pos)
        finally:
            self.pos = saved

    def _param_names(self, start: int, close: int) -> tuple[str, ...]:
        names = []
        group: list[Token] = []
        for j in range(start, close):
            t = self.toks[j]
            if t.kind == "PUNCT" and t.value == ",":
                if group:
                    names.append(group[-1].value)
                group = []
            elif t.kind == "IDENT":
                group.append(t)
        if group:
            names.append(group[-1].value)
        return tuple(n for n in names if n != "void")

    # -- statements ---------------------------------------------------------

    def _parse_block(self) -> list:
        t = self._tok()
        if not (t.kind == "PUNCT" and t.value == "{"):
            raise ParseError("expected '{'", t.line, t.col, t.value)
        close = self._matching(self.pos)
        self.pos += 1
        stmts = []
        while self.pos < close:
            stmts.append(self._parse_statement())
        self.pos = close + 1
        return stmts

    def _parse_body(self) -> list:
        """A braced block or a single statement (if/while/else bodies)."""
        t = self._tok()
        if t.kind == "PUNCT" and t.value == "{":
            return self._parse_block()
        return [self._parse_statement()]

    def _parse_statement(self):
        t = self._tok()
        if t.kind == "IDENT" and t.value == "if":
            return self._parse_if()
        if t.kind == "IDENT" and t.value == "while":
            return self._parse_while()
        if t.kind == "IDENT" and t.value == "return":
            return self._parse_return()
        if (
            self.language == JAVASCRIPT
            and t.kind == "IDENT"
            and t.value in ("var", "let", "const")
        ):
            return self._parse_js_decl()
        return self._parse_simple_statement()

    def _parse_if(self) -> SIf:
        start = self._tok()
        self.pos += 1
        test = self._parse_parenthesised_test()
        then = self._parse_body()
        orelse: list = []
        t = self._tok()
        if t.kind == "IDENT" and t.value == "else":
            self.pos += 1
            nxt = self._tok()
            if nxt.kind == "IDENT" and nxt.value == "if":
                orelse = [self._parse_if()]
            else:
                orelse = self._parse_body()
        return SIf(test, tuple(then), tuple(orelse), start.line)

    def _parse_while(self) -> SWhile:
        start = self._tok()
        self.pos += 1
        test = self._parse_parenthesised_test()
        body = self._parse_body()
        return SWhile(test, tuple(body), start.line)

    def _parse_parenthesised_test(self):
        t = self._tok()
        if not (t.kind == "PUNCT" and t.value == "("):
            raise ParseError("expected '(' after keyword", t.line, t.col, t.value)
        close = self._matching(self.pos)
        expr = self._parse_expr_span(self.pos + 1, close)
        self.pos = close + 1
        return expr

    def _parse_return(self) -> SReturn:
        start = self._tok()
        self.pos += 1
        lo, hi = self._statement_span()
        value = None if lo >= hi else self._parse_expr_span(lo, hi)
        return SReturn(value, start.line)

    def _parse_js_decl(self):
        start = self._tok()
        self.pos += 1
        name = self._tok()
        if name.kind == "IDENT" and self._tok(1).kind == "PUNCT" and self._tok(1).value == "=":
            self.pos += 2
            lo, hi = self._statement_span()
            rhs = self._parse_expr_span(lo, hi)
            return SAssign(name.value, rhs, start.line)
        lo, hi = self._statement_span()
        raw = self._slice(start, self.toks[max(hi - 1, lo - 2)])
        self._issue(f"unsupported declaration form: {raw!r}", start.line)
        return SOther(raw, start.line)

    def _statement_span(self) -> tuple[int, int]:
        """Consume tokens up to the terminating ';' and return their range.

        Stops (without consuming) at a '}' that would close the enclosing
        block, so a missing semicolon cannot eat the rest of the file.
        """
        lo = self.pos
        depth = 0
        while True:
            t = self._tok()
            if t.kind == "EOF":
                break
            if t.kind == "PUNCT":
                if t.value in "([{":
                    depth += 1
                elif t.value in ")]}":
                    if depth == 0 and t.value == "}":
                        break
                    depth -= 1
                elif t.value == ";" and depth == 0:
                    hi = self.pos
                    self.pos += 1
                    return lo, hi
            self.pos += 1
        return lo, self.pos

    def _parse_simple_statement(self):
        start_tok = self._tok()
        lo, hi = self._statement_span()
        if lo >= hi:
            return SOther(";", start_tok.line)
        raw = self._slice(self.toks[lo], self.toks[hi - 1])

        eq = self._find_toplevel(lo, hi, "=")
        if eq is not None:
            var = self._assignment_target(lo, eq)
            if var is not None and eq + 1 < hi:
                rhs = self._parse_expr_span(eq + 1, hi)
                return SAssign(var, rhs, start_tok.line)
            self._issue(f"unsupported assignment form: {raw!r}", start_tok.line)
            return SOther(raw, start_tok.line)

        call = self._parse_call_exact(lo, hi)
        if call is not None:
            return SCallStmt(call, start_tok.line)

        if self._is_bare_declaration(lo, hi):
            return SOther(raw, start_tok.line)
        self._issue(f"unsupported statement: {raw!r}", start_tok.line)
        return SOther(raw, start_tok.line)

    def _find_toplevel(self, lo: int, hi: int, punct: str):
        depth = 0
        for j in range(lo, hi):
            t = self.toks[j]
            if t.kind != "PUNCT":
                continue
            if t.value in "([{":
                depth += 1
            elif t.value in ")]}":
                depth -= 1
            elif t.value == punct and depth == 0:
                return j
        return None

    def _assignment_target(self, lo: int, eq: int):
        """Identifier being assigned; None when the lhs is out of subset."""
        idents = []
        for j in range(lo, eq):
            t = self.toks[j]
            if t.kind == "IDENT":
                idents.append(t.value)
            elif t.kind == "PUNCT" and t.value == "*" and self.language == C:
                continue
            else:
                return None
        return idents[-1] if idents else None

    def _is_bare_declaration(self, lo: int, hi: int) -> bool:
        if self.language != C:
            return False
        return all(
            self.toks[j].kind == "IDENT"
            or (self.toks[j].kind == "PUNCT" and self.toks[j].value in "*,")
            for j in range(lo, hi)
        )

    # -- expressions --------------------------------------------------------

    def _parse_call_exact(self, lo: int, hi: int):
        """Parse the whole span as ``name(args)``; None when it isn't one."""
        j = lo
        name_parts = []
        while j < hi and self.toks[j].kind == "IDENT":
            name_parts.append(self.toks[j].value)
            if (
                self.language == JAVASCRIPT
                and j + 1 < hi
                and self.toks[j + 1].kind == "PUNCT"
                and self.toks[j + 1].value == "."
            ):
                j += 2
                continue
            j += 1
            break
        if not name_parts or j >= hi:
            return None
        t = self.toks[j]
        if not (t.kind == "PUNCT" and t.value == "("):
            return None
        close = self._matching_from(j)
        if close != hi - 1:
            return None
        args = self._parse_args(j + 1, close)
        raw = self._slice(self.toks[lo], self.toks[close])
        return SCall(".".join(name_parts), tuple(args), raw)

    def _parse_args(self, lo: int, hi: int) -> list:
        if lo >= hi:
            return []
        args = []
        depth = 0
        start = lo
        for j in range(lo, hi):
            t = self.toks[j]
            if t.kind == "PUNCT" and t.value in "([{":
                depth += 1
            elif t.kind == "PUNCT" and t.value in ")]}":
                depth -= 1
            elif t.kind == "PUNCT" and t.value == "," and depth == 0:
                args.append(self._parse_expr_span(start, j))
                start = j + 1
        args.append(self._parse_expr_span(start, hi))
        return args

    def _parse_expr_span(self, lo: int, hi: int):
        if lo >= hi:
            return SDyn("")
        raw = self._slice(self.toks[lo], self.toks[hi - 1])

        if self.language == JAVASCRIPT:
            parts = self._split_toplevel(lo, hi, "+")
            if len(parts) > 1:
                atoms = []
                for a, b in parts:
                    atom = self._parse_atom(a, b)
                    if not isinstance(atom, (SLit, SVar)):
                        return SDyn(raw)
                    atoms.append(atom)
                out = atoms[0]
                for nxt in atoms[1:]:
                    out = SConcat(out, nxt)
                return out
        else:
            if self._find_toplevel(lo, hi, "+") is not None:
                return SDyn(raw)

        return self._parse_atom(lo, hi)

    def _split_toplevel(self, lo: int, hi: int, punct: str) -> list[tuple[int, int]]:
        parts = []
        depth = 0
        start = lo
        for j in range(lo, hi):
            t = self.toks[j]
            if t.kind == "PUNCT" and t.value in "([{":
                depth += 1
            elif t.kind == "PUNCT" and t.value in ")]}":
                depth -= 1
            elif t.kind == "PUNCT" and t.value == punct and depth == 0:
                parts.append((start, j))
                start = j + 1
        parts.append((start, hi))
        return parts

    def _parse_atom(self, lo: int, hi: int):
        raw = self._slice(self.toks[lo], self.toks[hi - 1])
        if hi - lo == 1:
            t = self.toks[lo]
            if t.kind == "STRING":
                return SLit(t.value)
            if t.kind == "IDENT":
                return SVar(t.value)
            return SDyn(raw)
        if self.language == C and all(
            self.toks[j].kind == "STRING" for j in range(lo, hi)
        ):
            out = SLit(self.toks[lo].value)
            for j in range(lo + 1, hi):
                out = SConcat(out, SLit(self.toks[j].value))
            return out
        call = self._parse_call_exact(lo, hi)
        if call is not None:
            return call
        return SDyn(raw)


def parse_clike(text: str, language: Language) -> SProgram:
    parser = ClikeParser(text, language)
    program = parser.parse()
    if language == C:
        program = _hoist_c_main(program)
    return program


def _hoist_c_main(program: SProgram) -> SProgram:
    """Fold the body of main() into the main-body scope.

    C has no top-level statements; the body of main is the program entry,
    so it takes the distinguished main-body scope. Globals parsed before it
    stay in front as prologue statements.
    """
    kept = []
    for func in program.funcs:
        if func.name == "main":
            program.main.extend(func.body)
        else:
            kept.append(func)
    program.funcs = kept
    return program
