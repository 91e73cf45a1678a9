"""TPTP first-order ("fof") problem parser with include resolution.

Supports the fof connectives ~ & | => <=> <= <~>, quantifier lists
![X,...]: and ?[X,...]:, infix = and !=, $true/$false, % and /* */ comments,
and include('file') directives.  Uppercase identifiers are variables,
lowercase identifiers are constants/functions/predicates (TPTP convention).
Quantifier lists desugar to nested single-variable quantifiers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from .syntax import (
    And, Application, Atom, Equality, Equiv, Exists, FALSE, Forall, Formula,
    Implies, Not, Or, TRUE, Term, Variable,
)

ROLES = ("axiom", "hypothesis", "conjecture")


class TptpError(Exception):
    """Problem-level input error, carrying file:line for diagnostics."""

    def __init__(self, message: str, path: Optional[str] = None,
                 line: Optional[int] = None, col: Optional[int] = None):
        self.path = path
        self.line = line
        self.col = col
        super().__init__(message)

    def location(self) -> str:
        if self.path is None:
            return "<input>"
        loc = str(self.path)
        if self.line is not None:
            loc += f":{self.line}"
            if self.col is not None:
                loc += f":{self.col}"
        return loc

    def __str__(self):
        return f"{self.location()}: {super().__str__()}"


class TptpSyntaxError(TptpError):
    pass


class ArityError(TptpError):
    pass


class IncludeError(TptpError):
    pass


@dataclass(frozen=True)
class AnnotatedFormula:
    name: str
    role: str
    formula: Formula
    source: tuple = ("<input>", 0)  # (path, line)


@dataclass(frozen=True)
class Include:
    path: str
    source: tuple = ("<input>", 0)


@dataclass(frozen=True)
class Problem:
    items: tuple = ()          # AnnotatedFormula | Include, declaration order
    include_paths: tuple = ()  # extra search directories

    @property
    def formulas(self) -> tuple:
        return tuple(i for i in self.items if isinstance(i, AnnotatedFormula))

    @property
    def includes(self) -> tuple:
        return tuple(i for i in self.items if isinstance(i, Include))

    def conjecture(self) -> Optional[AnnotatedFormula]:
        for af in self.formulas:
            if af.role == "conjecture":
                return af
        return None

    def premises(self) -> tuple:
        return tuple(af for af in self.formulas if af.role != "conjecture")


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<line_comment>%[^\n]*)
  | (?P<block_comment>/\*.*?\*/)
  | (?P<lower>[a-z][A-Za-z0-9_]*)
  | (?P<upper>[A-Z][A-Za-z0-9_]*)
  | (?P<dollar>\$[a-z][A-Za-z0-9_]*)
  | (?P<quoted>'(?:[^'\\]|\\.)*')
  | (?P<punct><=>|<~>|=>|<=|!=|[()\[\],.:&|~!?=])
""", re.VERBOSE | re.DOTALL)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str, path: str) -> list:
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise TptpSyntaxError(
                f"unexpected character {text[pos]!r}", path, line,
                pos - line_start + 1)
        kind = m.lastgroup
        raw = m.group()
        if kind in ("ws", "line_comment", "block_comment"):
            nl = raw.count("\n")
            if nl:
                line += nl
                line_start = m.start() + raw.rfind("\n") + 1
        else:
            tokens.append(Token(kind, raw, line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_ASSOC = ("&", "|")
_NONASSOC = ("=>", "<=>", "<=", "<~>")


class _Parser:
    def __init__(self, text: str, path: str):
        self.path = path
        self.tokens = tokenize(text, path)
        self.i = 0
        # symbol -> (arity, (line, col)); separate namespaces
        self.fun_arity: dict = {}
        self.pred_arity: dict = {}

    # -- token plumbing ----------------------------------------------------
    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def fail(self, message: str, expected=None, tok: Optional[Token] = None):
        tok = tok or self.peek()
        if expected:
            message += f" (expected {', '.join(sorted(expected))})"
        got = tok.text if tok.kind != "eof" else "end of input"
        raise TptpSyntaxError(f"{message}, got {got!r}", self.path,
                              tok.line, tok.col)

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t.text != text:
            self.fail("syntax error", expected={text})
        return self.next()

    # -- grammar -----------------------------------------------------------
    def parse_problem(self) -> Problem:
        items = []
        while self.peek().kind != "eof":
            t = self.peek()
            if t.text == "fof":
                items.append(self.fof())
            elif t.text == "include":
                items.append(self.include())
            else:
                self.fail("expected a declaration", expected={"fof", "include"})
        return Problem(tuple(items))

    def fof(self) -> AnnotatedFormula:
        start = self.expect("fof")
        self.expect("(")
        name_tok = self.next()
        if name_tok.kind not in ("lower", "quoted"):
            self.fail("bad formula name", expected={"lower_word"}, tok=name_tok)
        name = _unquote(name_tok.text)
        self.expect(",")
        role_tok = self.next()
        if role_tok.kind != "lower" or role_tok.text not in ROLES:
            self.fail("unsupported formula role", expected=set(ROLES),
                      tok=role_tok)
        self.expect(",")
        f = self.formula()
        self.expect(")")
        self.expect(".")
        return AnnotatedFormula(name, role_tok.text, f,
                                (self.path, start.line))

    def include(self) -> Include:
        start = self.expect("include")
        self.expect("(")
        tok = self.next()
        if tok.kind != "quoted":
            self.fail("include expects a quoted file name",
                      expected={"'file'"}, tok=tok)
        self.expect(")")
        self.expect(".")
        return Include(_unquote(tok.text), (self.path, start.line))

    def formula(self) -> Formula:
        left = self.unitary()
        op = self.peek().text
        if op in _ASSOC:
            parts = [left]
            while self.peek().text == op:
                self.next()
                parts.append(self.unitary())
            nxt = self.peek().text
            if nxt in _ASSOC or nxt in _NONASSOC:
                self.fail("mixed binary connectives need parentheses")
            node = And if op == "&" else Or
            out = parts[-1]
            for p in reversed(parts[:-1]):
                out = node(p, out)
            return out
        if op in _NONASSOC:
            self.next()
            right = self.unitary()
            nxt = self.peek().text
            if nxt in _ASSOC or nxt in _NONASSOC:
                self.fail("mixed binary connectives need parentheses")
            if op == "=>":
                return Implies(left, right)
            if op == "<=":
                return Implies(right, left)
            if op == "<=>":
                return Equiv(left, right)
            return Not(Equiv(left, right))  # <~>
        return left

    def unitary(self) -> Formula:
        t = self.peek()
        if t.text == "(":
            self.next()
            f = self.formula()
            self.expect(")")
            return self._maybe_equality(f)
        if t.text == "~":
            self.next()
            return Not(self.unitary())
        if t.text in ("!", "?"):
            return self.quantified()
        if t.kind == "dollar":
            self.next()
            if t.text == "$true":
                return TRUE
            if t.text == "$false":
                return FALSE
            self.fail("unsupported defined symbol", expected={"$true", "$false"},
                      tok=t)
        if t.kind in ("lower", "upper", "quoted"):
            return self.atomic()
        self.fail("expected a formula")

    def quantified(self) -> Formula:
        q = self.next().text
        self.expect("[")
        names = [self._bound_var()]
        while self.peek().text == ",":
            self.next()
            names.append(self._bound_var())
        self.expect("]")
        self.expect(":")
        body = self.unitary()
        node = Forall if q == "!" else Exists
        for name in reversed(names):
            body = node(name, body)
        return body

    def _bound_var(self) -> str:
        t = self.next()
        if t.kind != "upper":
            self.fail("bound variables must be uppercase words",
                      expected={"variable"}, tok=t)
        return t.text

    def atomic(self) -> Formula:
        tok = self.peek()
        term = self.term()
        nxt = self.peek().text
        if nxt in ("=", "!="):
            self.next()
            rhs = self.term()
            eq = Equality(term, rhs)
            return eq if nxt == "=" else Not(eq)
        if isinstance(term, Variable):
            self.fail("a bare variable is not a formula", tok=tok)
        assert isinstance(term, Application)
        self._note_arity(self.pred_arity, term.symbol, len(term.args), tok,
                         "predicate")
        # reclassify: the symbol is a predicate, not a function
        self._forget_fun(term.symbol, len(term.args))
        return Atom(term.symbol, term.args)

    def _maybe_equality(self, f: Formula) -> Formula:
        # "(term) = term" never occurs in practice; parenthesized formulas
        # are returned as-is.
        return f

    def term(self) -> Term:
        t = self.next()
        if t.kind == "upper":
            return Variable(t.text)
        if t.kind in ("lower", "quoted"):
            symbol = _unquote(t.text)
            args: tuple = ()
            if self.peek().text == "(":
                self.next()
                parts = [self.term()]
                while self.peek().text == ",":
                    self.next()
                    parts.append(self.term())
                self.expect(")")
                args = tuple(parts)
            self._note_arity(self.fun_arity, symbol, len(args), t, "symbol")
            return Application(symbol, args)
        self.fail("expected a term", tok=t)

    # -- arity bookkeeping ---------------------------------------------------
    def _note_arity(self, table: dict, symbol: str, arity: int, tok: Token,
                    what: str):
        seen = table.get(symbol)
        if seen is None:
            table[symbol] = (arity, (tok.line, tok.col))
        elif seen[0] != arity:
            raise ArityError(
                f"{what} {symbol!r} used with arity {arity} but previously "
                f"with arity {seen[0]}", self.path, tok.line, tok.col)

    def _forget_fun(self, symbol: str, arity: int):
        # a top-level application just parsed as a term turned out to be an atom
        seen = self.fun_arity.get(symbol)
        if seen is not None and seen[0] == arity:
            del self.fun_arity[symbol]


def _unquote(text: str) -> str:
    if text.startswith("'"):
        return text[1:-1].replace("\\'", "'").replace("\\\\", "\\")
    return text


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------

def parse_problem(text: str, origin: str = "<input>",
                  include_paths=()) -> Problem:
    """Parse one fof file; include directives are recorded unresolved."""
    parser = _Parser(text, origin)
    problem = parser.parse_problem()
    problem = replace(problem, include_paths=tuple(include_paths))
    _validate(problem, allow_includes=True)
    return problem


def parse_file(path, include_paths=()) -> Problem:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise IncludeError(f"cannot read {p}: {e.strerror}", str(p)) from e
    return parse_problem(text, str(p), include_paths)


def parse_formula(text: str) -> Formula:
    """Convenience: parse a single bare fof formula."""
    parser = _Parser(text, "<formula>")
    f = parser.formula()
    tok = parser.peek()
    if tok.kind != "eof":
        parser.fail("trailing input after formula")
    return f


def resolve_includes(problem: Problem) -> Problem:
    """Expand include directives depth-first in place of the directive.

    Search order: the directory of the including file, then each configured
    include path in order.  Cycles are rejected.
    """
    out = _splice(problem, active=(), seen_stack=[])
    _validate(out, allow_includes=False)
    _check_arities(out)
    return out


def _splice(problem: Problem, active: tuple, seen_stack: list) -> Problem:
    items = []
    for item in problem.items:
        if isinstance(item, AnnotatedFormula):
            items.append(item)
            continue
        origin_dir = Path(item.source[0]).parent if item.source[0] else Path(".")
        candidates = [origin_dir / item.path]
        candidates += [Path(d) / item.path for d in problem.include_paths]
        target = next((c for c in candidates if c.is_file()), None)
        if target is None:
            searched = ", ".join(str(c.parent) for c in candidates)
            raise IncludeError(
                f"include file {item.path!r} not found (searched: {searched})",
                item.source[0], item.source[1])
        key = str(target.resolve())
        if key in active:
            cycle = " -> ".join(list(active[active.index(key):]) + [key])
            raise IncludeError(f"include cycle: {cycle}",
                               item.source[0], item.source[1])
        sub = parse_file(target, problem.include_paths)
        sub = _splice(sub, active + (key,), seen_stack)
        items.extend(sub.items)
    return Problem(tuple(items), problem.include_paths)


def _validate(problem: Problem, allow_includes: bool):
    names = set()
    conjectures = 0
    for af in problem.formulas:
        if af.name in names:
            raise TptpError(f"duplicate formula name {af.name!r}",
                            af.source[0], af.source[1])
        names.add(af.name)
        if af.role == "conjecture":
            conjectures += 1
            if conjectures > 1:
                raise TptpError("more than one conjecture in problem",
                                af.source[0], af.source[1])
    if not allow_includes and problem.includes:
        raise IncludeError("unresolved include directive")


def _check_arities(problem: Problem):
    funs: dict = {}
    preds: dict = {}

    def walk_term(t: Term, src):
        if isinstance(t, Application):
            seen = funs.get(t.symbol)
            if seen is not None and seen != len(t.args):
                raise ArityError(
                    f"symbol {t.symbol!r} used with arity {len(t.args)} "
                    f"but previously with arity {seen}", src[0], src[1])
            funs[t.symbol] = len(t.args)
            for a in t.args:
                walk_term(a, src)

    def walk(f: Formula, src):
        if isinstance(f, Atom):
            seen = preds.get(f.predicate)
            if seen is not None and seen != len(f.args):
                raise ArityError(
                    f"predicate {f.predicate!r} used with arity {len(f.args)} "
                    f"but previously with arity {seen}", src[0], src[1])
            preds[f.predicate] = len(f.args)
            for a in f.args:
                walk_term(a, src)
        elif isinstance(f, Equality):
            walk_term(f.left, src)
            walk_term(f.right, src)
        elif isinstance(f, Not):
            walk(f.body, src)
        elif isinstance(f, (And, Or, Implies, Equiv)):
            walk(f.left, src)
            walk(f.right, src)
        elif isinstance(f, (Forall, Exists)):
            walk(f.body, src)

    for af in problem.formulas:
        walk(af.formula, af.source)


# ---------------------------------------------------------------------------
# fof rendering (round-trips through the parser)
# ---------------------------------------------------------------------------

def term_to_fof(t: Term) -> str:
    if isinstance(t, Variable):
        return t.name
    if isinstance(t, Application):
        if not t.args:
            return t.symbol
        return f"{t.symbol}({','.join(term_to_fof(a) for a in t.args)})"
    raise TypeError(f"term has no fof syntax: {t!r}")


def formula_to_fof(f: Formula) -> str:
    if isinstance(f, Atom):
        if not f.args:
            return f.predicate
        return f"{f.predicate}({','.join(term_to_fof(a) for a in f.args)})"
    if isinstance(f, Equality):
        return f"{term_to_fof(f.left)} = {term_to_fof(f.right)}"
    if f == TRUE:
        return "$true"
    if f == FALSE:
        return "$false"
    if isinstance(f, Not):
        if isinstance(f.body, Equality):
            return (f"{term_to_fof(f.body.left)} != "
                    f"{term_to_fof(f.body.right)}")
        return f"~ {_wrap(f.body)}"
    if isinstance(f, And):
        return f"({formula_to_fof(f.left)} & {formula_to_fof(f.right)})"
    if isinstance(f, Or):
        return f"({formula_to_fof(f.left)} | {formula_to_fof(f.right)})"
    if isinstance(f, Implies):
        return f"({formula_to_fof(f.left)} => {formula_to_fof(f.right)})"
    if isinstance(f, Equiv):
        return f"({formula_to_fof(f.left)} <=> {formula_to_fof(f.right)})"
    if isinstance(f, (Forall, Exists)):
        mark = "!" if isinstance(f, Forall) else "?"
        names = [f.var]
        body = f.body
        while isinstance(body, type(f)):
            names.append(body.var)
            body = body.body
        return f"{mark} [{','.join(names)}] : {_wrap(body)}"
    raise TypeError(f"formula has no fof syntax: {f!r}")


def _wrap(f: Formula) -> str:
    text = formula_to_fof(f)
    if text.startswith("("):
        return text
    if isinstance(f, (Atom, Equality)) or f == TRUE or f == FALSE:
        return text
    return f"({text})"


def problem_to_fof(problem: Problem) -> str:
    lines = []
    for item in problem.items:
        if isinstance(item, Include):
            lines.append(f"include('{item.path}').")
        else:
            lines.append(
                f"fof({item.name}, {item.role}, {formula_to_fof(item.formula)}).")
    return "\n".join(lines) + "\n"
