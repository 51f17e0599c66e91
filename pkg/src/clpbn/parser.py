"""Reader and printer for the probabilistic logic program syntax.

The concrete syntax is Prolog-like: clauses end with a period, ``%`` starts
a line comment, and probabilistic constraints are written in braces as
``{Var = skolem(Args) with p(Domain, Table, Parents)}``. A small fixed
operator table covers clause necks, arithmetic, comparisons, ``with`` and
``^``. Parsing is precedence climbing over a hand-rolled tokenizer.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .errors import ClpbnSyntaxError
from .terms import (
    NIL,
    Atom,
    FreshVars,
    Struct,
    Term,
    Var,
    list_items,
    mklist,
)

# (priority, type). xfx/xfy/yfx as in standard Prolog.
INFIX_OPS: dict[str, tuple[int, str]] = {
    ":-": (1200, "xfx"),
    ",": (1000, "xfy"),
    "with": (810, "xfx"),
    "=": (700, "xfx"),
    "is": (700, "xfx"),
    "<": (700, "xfx"),
    ">": (700, "xfx"),
    "=<": (700, "xfx"),
    ">=": (700, "xfx"),
    "=:=": (700, "xfx"),
    "=\\=": (700, "xfx"),
    "+": (500, "yfx"),
    "-": (500, "yfx"),
    "*": (400, "yfx"),
    "/": (400, "yfx"),
    "//": (400, "yfx"),
    "mod": (400, "yfx"),
    "^": (200, "xfy"),
}

PREFIX_OPS: dict[str, tuple[int, str]] = {
    ":-": (1200, "fx"),
    "?-": (1200, "fx"),
    "-": (200, "fy"),
}

_SYMBOLIC = (
    "=\\=", "=:=", "=<", ">=", ":-", "?-", "//", "=", "<", ">", "+", "-",
    "*", "/", "^", "!", "|",
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|%[^\n]*)
  | (?P<float>\d+\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)
  | (?P<int>\d+)
  | (?P<name>[a-z][A-Za-z0-9_]*)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<quoted>'(?:[^'\\]|\\.|'')*')
  | (?P<punct>""" + "|".join(re.escape(s) for s in _SYMBOLIC) + r"""|[()\[\]{},.])
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str  # atom var int float punct end eof
    text: str
    line: int
    col: int


def _unquote(s: str) -> str:
    body = s[1:-1].replace("''", "'")
    return (
        body.replace("\\\\", "\x00")
        .replace("\\n", "\n")
        .replace("\\t", "\t")
        .replace("\\'", "'")
        .replace("\x00", "\\")
    )


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            col = pos - line_start + 1
            raise ClpbnSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        col = pos - line_start + 1
        kind = m.lastgroup
        tok = m.group()
        pos = m.end()
        if kind == "ws":
            nl = tok.count("\n")
            if nl:
                line += nl
                line_start = pos - (len(tok) - tok.rfind("\n") - 1)
            continue
        if kind == "punct" and tok == ".":
            # A period ends a clause when followed by layout, a comment, or EOF.
            if pos >= n or text[pos] in " \t\r\n%" :
                tokens.append(Token("end", ".", line, col))
                continue
            raise ClpbnSyntaxError("'.' must end a clause", line, col)
        if kind == "quoted":
            tokens.append(Token("atom", _unquote(tok), line, col))
        elif kind == "name":
            tokens.append(Token("atom", tok, line, col))
        elif kind == "punct":
            tokens.append(Token("punct", tok, line, col))
        else:
            tokens.append(Token(kind, tok, line, col))
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Reader:
    def __init__(self, tokens: list[Token], fresh: FreshVars) -> None:
        self.toks = tokens
        self.i = 0
        self.fresh = fresh
        self.varmap: dict[str, Var] = {}

    def peek(self) -> Token:
        return self.toks[self.i]

    def next(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.next()
        if t.text != text:
            raise ClpbnSyntaxError(f"expected {text!r}, found {t.text!r}", t.line, t.col)
        return t

    def err(self, msg: str) -> ClpbnSyntaxError:
        t = self.peek()
        return ClpbnSyntaxError(msg, t.line, t.col)

    # --- term reading -------------------------------------------------

    def read_term(self, maxp: int) -> Term:
        left, leftp = self.read_primary(maxp)
        while True:
            t = self.peek()
            name = t.text
            if t.kind == "punct" and name == "," and maxp >= 1000:
                op = INFIX_OPS[","]
            elif (t.kind == "atom" or t.kind == "punct") and name in INFIX_OPS and name != ",":
                op = INFIX_OPS[name]
            else:
                break
            p, typ = op
            if p > maxp:
                break
            left_max = p if typ == "yfx" else p - 1
            if leftp > left_max:
                break
            self.next()
            right = self.read_term(p if typ == "xfy" else p - 1)
            left = Struct(name, (left, right))
            leftp = p
        return left

    def read_primary(self, maxp: int) -> tuple[Term, int]:
        t = self.next()
        if t.kind == "int":
            return int(t.text), 0
        if t.kind == "float":
            return float(t.text), 0
        if t.kind == "var":
            if t.text == "_":
                return self.fresh.new("_"), 0
            v = self.varmap.get(t.text)
            if v is None:
                v = self.fresh.new(t.text)
                self.varmap[t.text] = v
            return v, 0
        if t.kind == "punct":
            if t.text == "(":
                inner = self.read_term(1200)
                self.expect(")")
                return inner, 0
            if t.text == "[":
                return self.read_list(), 0
            if t.text == "{":
                if self.peek().text == "}":
                    self.next()
                    return Atom("{}"), 0
                inner = self.read_term(1200)
                self.expect("}")
                return Struct("{}", (inner,)), 0
            if t.text == "!":
                return Atom("!"), 0
            if t.text == "-":
                nxt = self.peek()
                if nxt.kind == "int":
                    self.next()
                    return -int(nxt.text), 0
                if nxt.kind == "float":
                    self.next()
                    return -float(nxt.text), 0
                p, _typ = PREFIX_OPS["-"]
                arg = self.read_term(p)
                return Struct("-", (arg,)), p
            if t.text in PREFIX_OPS:
                p, _typ = PREFIX_OPS[t.text]
                if p <= maxp:
                    arg = self.read_term(p)
                    return Struct(t.text, (arg,)), p
            raise ClpbnSyntaxError(f"unexpected {t.text!r}", t.line, t.col)
        if t.kind == "atom":
            nxt = self.peek()
            if nxt.kind == "punct" and nxt.text == "(":
                self.next()
                args = [self.read_term(999)]
                while self.peek().text == ",":
                    self.next()
                    args.append(self.read_term(999))
                self.expect(")")
                return Struct(t.text, tuple(args)), 0
            return Atom(t.text), 0
        raise ClpbnSyntaxError(f"unexpected {t.text!r}", t.line, t.col)

    def read_list(self) -> Term:
        if self.peek().text == "]":
            self.next()
            return NIL
        items = [self.read_term(999)]
        while self.peek().text == ",":
            self.next()
            items.append(self.read_term(999))
        tail: Term = NIL
        if self.peek().text == "|":
            self.next()
            tail = self.read_term(999)
        self.expect("]")
        return mklist(items, tail)

    def read_clause(self) -> Optional[tuple[Term, int, dict[str, Var]]]:
        """One clause term up to its end period, or None at EOF."""
        if self.peek().kind == "eof":
            return None
        self.varmap = {}
        start = self.peek()
        term = self.read_term(1200)
        t = self.next()
        if t.kind != "end":
            raise ClpbnSyntaxError(
                f"expected '.' to end the clause, found {t.text!r}", t.line, t.col
            )
        return term, start.line, dict(self.varmap)


def read_terms(text: str, fresh: Optional[FreshVars] = None) -> list[tuple[Term, int, dict[str, Var]]]:
    """All clause terms in the text as (term, line, variable names)."""
    reader = _Reader(tokenize(text), fresh or FreshVars())
    out = []
    while True:
        c = reader.read_clause()
        if c is None:
            return out
        out.append(c)


def parse_term(text: str, fresh: Optional[FreshVars] = None) -> Term:
    """A single term (no trailing period required)."""
    reader = _Reader(tokenize(text + " ."), fresh or FreshVars())
    c = reader.read_clause()
    if c is None:
        raise ClpbnSyntaxError("empty term")
    if reader.peek().kind != "eof":
        raise ClpbnSyntaxError("trailing input after term")
    return c[0]


# --- printing ---------------------------------------------------------

_PLAIN_ATOM = re.compile(r"^[a-z][A-Za-z0-9_]*$")


def _atom_text(name: str) -> str:
    if _PLAIN_ATOM.match(name) or name in ("[]", "!", "{}"):
        return name
    escaped = name.replace("\\", "\\\\").replace("'", "\\'").replace("\n", "\\n")
    return f"'{escaped}'"


def _float_text(x: float) -> str:
    s = repr(x)
    if "." not in s and "e" not in s and "E" not in s:
        s += ".0"
    return s


def term_to_text(t: Term) -> str:
    """Canonical text for a term; reparsing yields a structurally equal term."""
    if isinstance(t, Var):
        return t.display()
    if type(t) is int:
        return str(t)
    if type(t) is float:
        return _float_text(t)
    if isinstance(t, Atom):
        return _atom_text(t.name)
    if isinstance(t, Struct):
        items = list_items(t)
        if items is not None:
            return "[" + ", ".join(term_to_text(a) for a in items) + "]"
        if t.functor == "." and t.arity == 2:
            # improper list
            parts = []
            cur: Term = t
            while isinstance(cur, Struct) and cur.functor == "." and cur.arity == 2:
                parts.append(term_to_text(cur.args[0]))
                cur = cur.args[1]
            return "[" + ", ".join(parts) + "|" + term_to_text(cur) + "]"
        if t.functor == "{}" and t.arity == 1:
            return "{" + term_to_text(t.args[0]) + "}"
        if t.arity == 2 and t.functor in INFIX_OPS:
            a, b = t.args
            return f"({term_to_text(a)} {t.functor} {term_to_text(b)})"
        if t.arity == 1 and t.functor == "-":
            return f"-({term_to_text(t.args[0])})"
        args = ", ".join(term_to_text(a) for a in t.args)
        return f"{_atom_text(t.functor)}({args})"
    raise TypeError(f"not a term: {t!r}")
