"""First-order syntax: terms, formulas, substitution, alpha-equivalence, unification.

Terms are extended with metavariables (placeholders introduced during proof
search, never substituted in place) and Hilbert choice terms ``Epsilon(x, P)``
standing for "some x satisfying P".  All values are immutable; every operation
returns fresh structure and never mutates its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Variable(Term):
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Metavariable(Term):
    """Proof-search placeholder.  Compares and hashes by id only; the origin
    (the branch formula that introduced it) is bookkeeping for instantiation."""

    id: int
    origin: Optional[int] = field(default=None, compare=False, repr=False)

    def __str__(self):
        return f"M{self.id}"


@dataclass(frozen=True)
class Application(Term):
    symbol: str
    args: tuple = ()

    def __str__(self):
        if not self.args:
            return self.symbol
        return f"{self.symbol}({', '.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class Epsilon(Term):
    """Hilbert choice term: some `var` satisfying `body`."""

    var: str
    body: "Formula"

    def __str__(self):
        return f"eps({self.var}).{self.body}"


# ---------------------------------------------------------------------------
# Formulas
# ---------------------------------------------------------------------------

class Formula:
    __slots__ = ()


@dataclass(frozen=True)
class Atom(Formula):
    predicate: str
    args: tuple = ()

    def __str__(self):
        if not self.args:
            return self.predicate
        return f"{self.predicate}({', '.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class Equality(Formula):
    left: Term
    right: Term

    def __str__(self):
        return f"{self.left} = {self.right}"


@dataclass(frozen=True)
class TrueF(Formula):
    def __str__(self):
        return "$true"


@dataclass(frozen=True)
class FalseF(Formula):
    def __str__(self):
        return "$false"


@dataclass(frozen=True)
class Not(Formula):
    body: Formula

    def __str__(self):
        return f"~({self.body})"


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula

    def __str__(self):
        return f"({self.left} & {self.right})"


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula

    def __str__(self):
        return f"({self.left} | {self.right})"


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula

    def __str__(self):
        return f"({self.left} => {self.right})"


@dataclass(frozen=True)
class Equiv(Formula):
    left: Formula
    right: Formula

    def __str__(self):
        return f"({self.left} <=> {self.right})"


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula

    def __str__(self):
        return f"![{self.var}]: {self.body}"


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula

    def __str__(self):
        return f"?[{self.var}]: {self.body}"


TRUE = TrueF()
FALSE = FalseF()

Expr = Union[Term, Formula]

_BINARY = (And, Or, Implies, Equiv)
_QUANT = (Forall, Exists)


def binary_parts(f: Formula) -> tuple:
    return (f.left, f.right)


def is_literal(f: Formula) -> bool:
    """Atoms, equalities, their negations, and the truth constants."""
    if isinstance(f, (Atom, Equality, TrueF, FalseF)):
        return True
    return isinstance(f, Not) and isinstance(f.body, (Atom, Equality, TrueF, FalseF))


def literal_atom(f: Formula):
    """(polarity, atom) for a literal over an Atom or Equality, else None."""
    if isinstance(f, (Atom, Equality)):
        return True, f
    if isinstance(f, Not) and isinstance(f.body, (Atom, Equality)):
        return False, f.body
    return None


def negate(f: Formula) -> Formula:
    """Negate, collapsing a single leading negation."""
    if isinstance(f, Not):
        return f.body
    return Not(f)


# ---------------------------------------------------------------------------
# Traversal: free variables, metavariables, subterm predicates
# ---------------------------------------------------------------------------

def _walk_free(x: Expr, bound: frozenset, names: set, metas: set) -> None:
    if isinstance(x, Variable):
        if x.name not in bound:
            names.add(x.name)
    elif isinstance(x, Metavariable):
        metas.add(x.id)
    elif isinstance(x, Application):
        for a in x.args:
            _walk_free(a, bound, names, metas)
    elif isinstance(x, Epsilon):
        _walk_free(x.body, bound | {x.var}, names, metas)
    elif isinstance(x, (Atom,)):
        for a in x.args:
            _walk_free(a, bound, names, metas)
    elif isinstance(x, Equality):
        _walk_free(x.left, bound, names, metas)
        _walk_free(x.right, bound, names, metas)
    elif isinstance(x, Not):
        _walk_free(x.body, bound, names, metas)
    elif isinstance(x, _BINARY):
        _walk_free(x.left, bound, names, metas)
        _walk_free(x.right, bound, names, metas)
    elif isinstance(x, _QUANT):
        _walk_free(x.body, bound | {x.var}, names, metas)
    # TrueF/FalseF: nothing


def free_variables(x: Expr) -> frozenset:
    """Names with a free occurrence.  Metavariables are reported separately
    by :func:`metavariables`."""
    names: set = set()
    metas: set = set()
    _walk_free(x, frozenset(), names, metas)
    return frozenset(names)


def metavariables(x: Expr) -> frozenset:
    names: set = set()
    metas: set = set()
    _walk_free(x, frozenset(), names, metas)
    return frozenset(metas)


def subterms(x: Expr) -> Iterator[Term]:
    """All term positions, including inside epsilon bodies."""
    if isinstance(x, Term):
        yield x
        if isinstance(x, Application):
            for a in x.args:
                yield from subterms(a)
        elif isinstance(x, Epsilon):
            yield from subterms(x.body)
    elif isinstance(x, Atom):
        for a in x.args:
            yield from subterms(a)
    elif isinstance(x, Equality):
        yield from subterms(x.left)
        yield from subterms(x.right)
    elif isinstance(x, Not):
        yield from subterms(x.body)
    elif isinstance(x, _BINARY):
        yield from subterms(x.left)
        yield from subterms(x.right)
    elif isinstance(x, _QUANT):
        yield from subterms(x.body)


# ---------------------------------------------------------------------------
# Alpha-equivalence via canonical keys
# ---------------------------------------------------------------------------
# Bound identifiers are replaced by binder-traversal indices, so alpha
# comparison is structural equality of the keys; the original names are kept
# on the nodes for rendering.

def _canon(x: Expr, env: dict, depth: int):
    if isinstance(x, Variable):
        idx = env.get(x.name)
        return ("bv", idx) if idx is not None else ("fv", x.name)
    if isinstance(x, Metavariable):
        return ("mv", x.id)
    if isinstance(x, Application):
        return ("ap", x.symbol, tuple(_canon(a, env, depth) for a in x.args))
    if isinstance(x, Epsilon):
        inner = dict(env)
        inner[x.var] = depth
        return ("eps", _canon(x.body, inner, depth + 1))
    if isinstance(x, Atom):
        return ("at", x.predicate, tuple(_canon(a, env, depth) for a in x.args))
    if isinstance(x, Equality):
        return ("eq", _canon(x.left, env, depth), _canon(x.right, env, depth))
    if isinstance(x, TrueF):
        return ("top",)
    if isinstance(x, FalseF):
        return ("bot",)
    if isinstance(x, Not):
        return ("not", _canon(x.body, env, depth))
    if isinstance(x, _BINARY):
        tag = type(x).__name__.lower()
        return (tag, _canon(x.left, env, depth), _canon(x.right, env, depth))
    if isinstance(x, _QUANT):
        inner = dict(env)
        inner[x.var] = depth
        tag = "fa" if isinstance(x, Forall) else "ex"
        return (tag, _canon(x.body, inner, depth + 1))
    raise TypeError(f"not a term or formula: {x!r}")


def canon_key(x: Expr):
    """Hashable key identifying `x` up to bound-name choice."""
    return _canon(x, {}, 0)


def alpha_equal(a: Expr, b: Expr) -> bool:
    return canon_key(a) == canon_key(b)


# ---------------------------------------------------------------------------
# Substitution
# ---------------------------------------------------------------------------

class Substitution:
    """Finite mapping from Variable/Metavariable nodes to terms.

    Kept idempotent by construction in :func:`unify`; `compose` re-resolves
    earlier bindings through later ones.
    """

    __slots__ = ("_m",)

    def __init__(self, mapping=None):
        m = {}
        if mapping:
            for k, v in dict(mapping).items():
                if not isinstance(k, (Variable, Metavariable)):
                    raise TypeError(f"bad substitution key: {k!r}")
                if k != v:
                    m[k] = v
        self._m = m

    def __bool__(self):
        return bool(self._m)

    def __len__(self):
        return len(self._m)

    def __contains__(self, key):
        return key in self._m

    def __eq__(self, other):
        return isinstance(other, Substitution) and self._m == other._m

    def get(self, key):
        return self._m.get(key)

    def items(self):
        return self._m.items()

    def keys(self):
        return self._m.keys()

    def compose(self, later: "Substitution") -> "Substitution":
        """Substitution equivalent to applying self, then `later`."""
        out = {k: substitute(v, later) for k, v in self._m.items()}
        for k, v in later.items():
            if k not in self._m:
                out[k] = v
        return Substitution(out)

    def restrict(self, keys) -> "Substitution":
        return Substitution({k: v for k, v in self._m.items() if k in keys})

    def __repr__(self):
        inner = ", ".join(f"{k}->{v}" for k, v in self._m.items())
        return f"{{{inner}}}"


_EMPTY_SUB = Substitution()


def _fresh_name(base: str, taken: set) -> str:
    i = 1
    while f"{base}_{i}" in taken:
        i += 1
    return f"{base}_{i}"


def _range_free_names(sub_items) -> set:
    names: set = set()
    for _, v in sub_items:
        names |= free_variables(v)
    return names


def _subst(x: Expr, m: dict) -> Expr:
    if not m:
        return x
    if isinstance(x, Variable):
        return m.get(x, x)
    if isinstance(x, Metavariable):
        return m.get(x, x)
    if isinstance(x, Application):
        return Application(x.symbol, tuple(_subst(a, m) for a in x.args))
    if isinstance(x, (Epsilon, Forall, Exists)):
        # Drop bindings shadowed by the binder; rename on capture.
        items = [(k, v) for k, v in m.items()
                 if not (isinstance(k, Variable) and k.name == x.var)]
        if not items:
            return x
        var = x.var
        body = x.body
        clash = _range_free_names(items)
        if var in clash:
            taken = clash | free_variables(body) | {var}
            var = _fresh_name(x.var, taken)
            body = _subst(body, {Variable(x.var): Variable(var)})
        body = _subst(body, dict(items))
        return type(x)(var, body)
    if isinstance(x, Atom):
        return Atom(x.predicate, tuple(_subst(a, m) for a in x.args))
    if isinstance(x, Equality):
        return Equality(_subst(x.left, m), _subst(x.right, m))
    if isinstance(x, (TrueF, FalseF)):
        return x
    if isinstance(x, Not):
        return Not(_subst(x.body, m))
    if isinstance(x, _BINARY):
        return type(x)(_subst(x.left, m), _subst(x.right, m))
    raise TypeError(f"not a term or formula: {x!r}")


def substitute(x: Expr, s: Substitution) -> Expr:
    """Capture-avoiding substitution; epsilon bodies are substituted through."""
    if not s:
        return x
    return _subst(x, dict(s.items()))


def instantiate_binder(f: Formula, t: Term) -> Formula:
    """Replace the bound variable of a quantified formula's body with `t`."""
    if not isinstance(f, (Forall, Exists)):
        raise TypeError(f"not a quantified formula: {f!r}")
    return substitute(f.body, Substitution({Variable(f.var): t}))


# ---------------------------------------------------------------------------
# Unification and one-way matching
# ---------------------------------------------------------------------------

def _resolve(t: Term, bind: dict) -> Term:
    while isinstance(t, (Variable, Metavariable)) and t in bind:
        t = bind[t]
    return t


def _occurs(key: Term, x: Expr, bind: dict) -> bool:
    x = _resolve(x, bind) if isinstance(x, Term) else x
    if isinstance(x, (Variable, Metavariable)):
        return x == key
    if isinstance(x, Application):
        return any(_occurs(key, a, bind) for a in x.args)
    if isinstance(x, Epsilon):
        return _occurs(key, x.body, bind)
    if isinstance(x, Atom):
        return any(_occurs(key, a, bind) for a in x.args)
    if isinstance(x, Equality):
        return _occurs(key, x.left, bind) or _occurs(key, x.right, bind)
    if isinstance(x, Not):
        return _occurs(key, x.body, bind)
    if isinstance(x, _BINARY):
        return _occurs(key, x.left, bind) or _occurs(key, x.right, bind)
    if isinstance(x, _QUANT):
        return _occurs(key, x.body, bind)
    return False


def _deep_apply(x: Expr, bind: dict) -> Expr:
    """Resolve all bindings in `x` to a fixpoint (bindings are acyclic)."""
    out = _subst(x, bind)
    while True:
        nxt = _subst(out, bind)
        if nxt == out:
            return out
        out = nxt


def _unify_pairs(pairs: list, bind: dict, bindable) -> bool:
    while pairs:
        a, b = pairs.pop()
        if isinstance(a, Term) and isinstance(b, Term):
            a = _resolve(a, bind)
            b = _resolve(b, bind)
            if a == b:
                continue
            if isinstance(a, bindable):
                if _occurs(a, b, bind):
                    return False
                bind[a] = b
                continue
            if isinstance(b, bindable):
                if _occurs(b, a, bind):
                    return False
                bind[b] = a
                continue
            if isinstance(a, Application) and isinstance(b, Application):
                if a.symbol != b.symbol or len(a.args) != len(b.args):
                    return False
                pairs.extend(zip(a.args, b.args))
                continue
            if isinstance(a, Epsilon) and isinstance(b, Epsilon):
                # Choice terms unify only up to bound-name renaming.
                if alpha_equal(_deep_apply(a, bind), _deep_apply(b, bind)):
                    continue
                return False
            return False
        # atomic formulas
        if isinstance(a, Atom) and isinstance(b, Atom):
            if a.predicate != b.predicate or len(a.args) != len(b.args):
                return False
            pairs.extend(zip(a.args, b.args))
            continue
        if isinstance(a, Equality) and isinstance(b, Equality):
            pairs.append((a.left, b.left))
            pairs.append((a.right, b.right))
            continue
        return False
    return True


def unify(a: Expr, b: Expr) -> Optional[Substitution]:
    """Most general unifier of two terms or atomic formulas, or None.

    Variables and metavariables both bind (rule-schema parameters are plain
    variables at compile time); the occurs check is enforced; epsilon terms
    unify only when alpha-equal.
    """
    bind: dict = {}
    if not _unify_pairs([(a, b)], bind, (Variable, Metavariable)):
        return None
    return Substitution({k: _deep_apply(v, bind) for k, v in bind.items()})


def match(pattern: Expr, subject: Expr) -> Optional[Substitution]:
    """One-way match: variables in `pattern` bind, `subject` is left fixed.

    Used for trigger matching, where rule parameters bind but branch terms
    (including their metavariables) do not.
    """
    bind: dict = {}
    ok = _match(pattern, subject, bind)
    return Substitution(bind) if ok else None


def _match(p: Expr, s: Expr, bind: dict) -> bool:
    if isinstance(p, Variable):
        seen = bind.get(p)
        if seen is None:
            bind[p] = s
            return True
        return isinstance(s, Term) and seen == s
    if isinstance(p, Metavariable):
        return p == s
    if isinstance(p, Application):
        return (isinstance(s, Application) and p.symbol == s.symbol
                and len(p.args) == len(s.args)
                and all(_match(pa, sa, bind) for pa, sa in zip(p.args, s.args)))
    if isinstance(p, Epsilon):
        return isinstance(s, Epsilon) and alpha_equal(_subst(p, bind), s)
    if isinstance(p, Atom):
        return (isinstance(s, Atom) and p.predicate == s.predicate
                and len(p.args) == len(s.args)
                and all(_match(pa, sa, bind) for pa, sa in zip(p.args, s.args)))
    if isinstance(p, Equality):
        return (isinstance(s, Equality) and _match(p.left, s.left, bind)
                and _match(p.right, s.right, bind))
    if isinstance(p, Not):
        return isinstance(s, Not) and _match(p.body, s.body, bind)
    raise TypeError(f"unsupported match pattern: {p!r}")
