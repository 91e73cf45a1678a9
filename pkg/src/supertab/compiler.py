"""Compilation of theory axioms into custom tableau rules.

Eligible axiom shapes (after stripping the universal prefix):

  P <=> phi   with P atomic      -> rules both ways (positive and negative)
  P => P'     both sides atomic  -> a rule per direction (direct + converse)
  P => phi    with P atomic      -> one left-to-right rule
  phi => P    with P atomic      -> one contrapositive rule
  P           a bare atom        -> a branch-closing rule on ~P

Anything else stays a regular axiom, as does any axiom whose designated
atomic side is an equality (equality keeps its dedicated handling) or whose
compiled trigger unifies with the trigger of an already accepted rule
(first accepted wins; declaration order is the tiebreak).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional

from .calculus import ALPHA, CLOSE, DELTA, GAMMA, decompose
from .syntax import (
    And, Atom, Equality, Equiv, FALSE, Forall, Formula, Implies,
    Metavariable, Not, Substitution, Variable, canon_key, free_variables,
    negate, substitute, unify,
)
from .tptp import AnnotatedFormula, Problem

POSITIVE = "positive"
NEGATIVE = "negative"

SHAPE = "shape"
EQUALITY_LHS = "equality-lhs"
OVERLAP = "overlap"
DISABLED = "disabled"


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

class AxiomClassification:
    __slots__ = ()


@dataclass(frozen=True)
class EquivForm(AxiomClassification):
    lhs: Atom
    rhs: Formula


@dataclass(frozen=True)
class AtomicImplForm(AxiomClassification):
    """Implication between two literals (atoms or negated atoms)."""

    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class ImplFormLeftAtomic(AxiomClassification):
    lhs: Atom
    rhs: Formula


@dataclass(frozen=True)
class ImplFormRightAtomic(AxiomClassification):
    lhs: Formula
    rhs: Atom


@dataclass(frozen=True)
class UniversalAtomForm(AxiomClassification):
    atom: Atom


@dataclass(frozen=True)
class Regular(AxiomClassification):
    reason: str


def _strip_forall(f: Formula) -> Formula:
    while isinstance(f, Forall):
        f = f.body
    return f


def _plain_atom(f: Formula) -> bool:
    return isinstance(f, Atom)


def _literal_over_atom(f: Formula) -> bool:
    if isinstance(f, (Atom, Equality)):
        return True
    return isinstance(f, Not) and isinstance(f.body, (Atom, Equality))


def _literal_core(f: Formula) -> Formula:
    return f.body if isinstance(f, Not) else f


def classify_axiom(f: Formula) -> AxiomClassification:
    """Classify a closed axiom by the shape of its universally stripped matrix."""
    matrix = _strip_forall(f)
    if isinstance(matrix, Equiv):
        lhs, rhs = matrix.left, matrix.right
        if not _plain_atom(lhs) and _plain_atom(rhs):
            lhs, rhs = rhs, lhs  # phi <=> P reads as P <=> phi
        if _plain_atom(lhs):
            return EquivForm(lhs, rhs)
        if isinstance(lhs, Equality) or isinstance(rhs, Equality):
            return Regular(EQUALITY_LHS)
        return Regular(SHAPE)
    if isinstance(matrix, Implies):
        lhs, rhs = matrix.left, matrix.right
        if _literal_over_atom(lhs) and _literal_over_atom(rhs):
            if isinstance(_literal_core(lhs), Equality) or \
                    isinstance(_literal_core(rhs), Equality):
                return Regular(EQUALITY_LHS)
            return AtomicImplForm(lhs, rhs)
        if _plain_atom(lhs):
            return ImplFormLeftAtomic(lhs, rhs)
        if isinstance(lhs, Equality):
            return Regular(EQUALITY_LHS)
        if _plain_atom(rhs):
            return ImplFormRightAtomic(lhs, rhs)
        if isinstance(rhs, Equality):
            return Regular(EQUALITY_LHS)
        return Regular(SHAPE)
    if isinstance(matrix, Atom):
        return UniversalAtomForm(matrix)
    if isinstance(matrix, Equality):
        return Regular(EQUALITY_LHS)
    return Regular(SHAPE)


# ---------------------------------------------------------------------------
# Proposition rewrite rules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PropositionRewriteRule:
    """Oriented axiom ``lhs -> rhs`` with lhs a literal over a non-equality atom.

    `polarity` selects which tableau rule the saturation builds: the positive
    rule decomposes `rhs` under trigger `lhs`, the negative rule decomposes
    ``~rhs`` under trigger ``~lhs``.
    """

    name: str
    polarity: str
    lhs: Formula
    rhs: Formula
    params: tuple = ()

    def __post_init__(self):
        if self.polarity not in (POSITIVE, NEGATIVE):
            raise ValueError(f"bad polarity {self.polarity!r}")


def _params_of(lhs: Formula, rhs: Formula) -> tuple:
    return tuple(sorted(free_variables(lhs) | free_variables(rhs)))


def derive_prrs(c: AxiomClassification, name: str) -> list:
    """Proposition rewrite rules for one classified axiom."""
    if isinstance(c, Regular):
        raise ValueError("regular axioms have no rewrite rules")
    if isinstance(c, EquivForm):
        params = _params_of(c.lhs, c.rhs)
        return [
            PropositionRewriteRule(name, POSITIVE, c.lhs, c.rhs, params),
            PropositionRewriteRule(f"not_{name}", NEGATIVE, c.lhs, c.rhs, params),
        ]
    if isinstance(c, AtomicImplForm):
        if isinstance(c.lhs, Atom) and isinstance(c.rhs, Atom):
            # direct rule plus the converse, which keeps both proof directions
            return [
                PropositionRewriteRule(name, POSITIVE, c.lhs, c.rhs,
                                       _params_of(c.lhs, c.rhs)),
                PropositionRewriteRule(name, POSITIVE, Not(c.rhs), Not(c.lhs),
                                       _params_of(c.lhs, c.rhs)),
            ]
        # A negated side: orient through the contrapositive, whose trigger
        # carries the information the refutation branch actually holds.
        lhs = negate(c.rhs)
        rhs = negate(c.lhs)
        return [PropositionRewriteRule(f"{name}ctrp", POSITIVE, lhs, rhs,
                                       _params_of(lhs, rhs))]
    if isinstance(c, ImplFormLeftAtomic):
        return [PropositionRewriteRule(name, POSITIVE, c.lhs, c.rhs,
                                       _params_of(c.lhs, c.rhs))]
    if isinstance(c, ImplFormRightAtomic):
        return [PropositionRewriteRule(name, POSITIVE, Not(c.rhs), Not(c.lhs),
                                       _params_of(c.lhs, c.rhs))]
    if isinstance(c, UniversalAtomForm):
        return [PropositionRewriteRule(name, POSITIVE, Not(c.atom), FALSE,
                                       _params_of(c.atom, FALSE))]
    raise TypeError(f"unknown classification {c!r}")


# ---------------------------------------------------------------------------
# Rule compilation by saturation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SuperRule:
    """A compiled deduction rule: trigger pattern plus branch schemas."""

    name: str                  # display name (rendered Extension/<tag>/<name>)
    uid: str                   # unique id within a theory
    axiom: str                 # source axiom name
    polarity: str
    trigger: Formula           # Atom or Not(Atom) over params
    branches: tuple            # tuple of tuples of schema formulas
    params: tuple = ()
    metavar_ids: tuple = ()    # schema metavariables minted by saturation
    epsilons: tuple = ()       # choice-term schemas introduced
    seed: Formula = FALSE      # the formula the saturation started from

    @property
    def fresh_metavars(self) -> int:
        return len(self.metavar_ids)

    @property
    def has_inst_variant(self) -> bool:
        return bool(self.metavar_ids)

    @property
    def closing(self) -> bool:
        return self.branches == ((FALSE,),)

    @property
    def branching(self) -> bool:
        return len(self.branches) > 1


class _Leaf:
    __slots__ = ("formulas", "used", "closed")

    def __init__(self, formulas, used=(), closed=False):
        self.formulas = list(formulas)
        self.used = set(used)
        self.closed = closed


def _saturate(seed: Formula, mint: Callable[[], int]):
    """Exhaustively apply the analytic, witness, and metavariable rules.

    Formulas are processed oldest-first; each is decomposed at most once, so
    saturation terminates.  Returns (branch schemas, metavar ids, epsilons).
    """
    minted: list = []
    epsilons: list = []
    queue = [_Leaf([seed])]
    done: list = []
    while queue:
        leaf = queue.pop(0)
        step = None
        for idx, f in enumerate(leaf.formulas):
            if idx in leaf.used:
                continue
            shape = decompose(f)
            if shape is not None:
                step = (idx, shape)
                break
        if step is None:
            done.append(leaf)
            continue
        idx, shape = step
        leaf.used.add(idx)
        if shape.kind == CLOSE:
            leaf.closed = True
            done.append(leaf)
            continue
        if shape.kind == GAMMA:
            mid = mint()
            minted.append(mid)
            leaf.formulas.append(shape.instantiate(Metavariable(mid)))
            queue.insert(0, leaf)
            continue
        if shape.kind == DELTA:
            epsilons.append(shape.witness)
        if shape.kind in (ALPHA, DELTA):
            leaf.formulas.extend(shape.children[0])
            queue.insert(0, leaf)
            continue
        # beta: one leaf per child branch
        for child in reversed(shape.children):
            queue.insert(0, _Leaf(leaf.formulas + list(child), leaf.used,
                                  leaf.closed))
    branches = []
    for leaf in done:
        if leaf.closed:
            branches.append((FALSE,))
            continue
        schema = []
        seen = set()
        for idx, f in enumerate(leaf.formulas):
            if idx in leaf.used:
                continue
            key = canon_key(f)
            if key in seen:
                continue
            seen.add(key)
            schema.append(f)
        branches.append(tuple(schema))
    return tuple(branches), tuple(minted), tuple(epsilons)


def compile_superrule(prr: PropositionRewriteRule,
                      mint: Optional[Callable[[], int]] = None,
                      axiom: Optional[str] = None,
                      uid: Optional[str] = None) -> SuperRule:
    """Build the tableau rule for one rewrite rule and polarity."""
    if mint is None:
        counter = itertools.count()
        mint = lambda: next(counter)
    if prr.polarity == POSITIVE:
        trigger, seed = prr.lhs, prr.rhs
    else:
        trigger, seed = negate(prr.lhs), negate(prr.rhs)
    branches, minted, epsilons = _saturate(seed, mint)
    minted = list(minted)
    # Parameters that the trigger does not bind keep universal strength:
    # they become schema metavariables of the rule.
    unbound = set()
    for branch in branches:
        for f in branch:
            unbound |= free_variables(f)
    unbound -= free_variables(trigger)
    if unbound:
        mapping = {}
        for v in sorted(unbound):
            mid = mint()
            minted.append(mid)
            mapping[Variable(v)] = Metavariable(mid)
        sub = Substitution(mapping)
        branches = tuple(tuple(substitute(f, sub) for f in branch)
                         for branch in branches)
        epsilons = tuple(substitute(e, sub) for e in epsilons)
        seed = substitute(seed, sub)
    return SuperRule(
        name=prr.name,
        uid=uid or prr.name,
        axiom=axiom or prr.name,
        polarity=prr.polarity,
        trigger=trigger,
        branches=branches,
        params=tuple(sorted(free_variables(trigger))),
        metavar_ids=tuple(minted),
        epsilons=tuple(epsilons),
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Relation properties
# ---------------------------------------------------------------------------

REFLEXIVE = "reflexive"
SYMMETRIC = "symmetric"
TRANSITIVE = "transitive"


@dataclass(frozen=True)
class RelationProperties:
    flags: tuple = ()  # ((symbol, frozenset of flags), ...)

    def _get(self, symbol: str) -> frozenset:
        for sym, fl in self.flags:
            if sym == symbol:
                return fl
        return frozenset()

    def reflexive(self, symbol: str) -> bool:
        return REFLEXIVE in self._get(symbol)

    def symmetric(self, symbol: str) -> bool:
        return SYMMETRIC in self._get(symbol)

    def transitive(self, symbol: str) -> bool:
        return TRANSITIVE in self._get(symbol)

    def symbols(self) -> tuple:
        return tuple(sym for sym, _ in self.flags)


def _as_reflexivity(f: Formula) -> Optional[str]:
    if isinstance(f, Forall) and isinstance(f.body, Atom):
        a = f.body
        v = Variable(f.var)
        if len(a.args) == 2 and a.args == (v, v):
            return a.predicate
    return None


def _as_symmetry(f: Formula) -> Optional[str]:
    if (isinstance(f, Forall) and isinstance(f.body, Forall)
            and isinstance(f.body.body, Implies)):
        x, y = Variable(f.var), Variable(f.body.var)
        imp = f.body.body
        if (isinstance(imp.left, Atom) and isinstance(imp.right, Atom)
                and imp.left.predicate == imp.right.predicate
                and imp.left.args == (x, y) and imp.right.args == (y, x)
                and x != y):
            return imp.left.predicate
    return None


def _as_transitivity(f: Formula) -> Optional[str]:
    if (isinstance(f, Forall) and isinstance(f.body, Forall)
            and isinstance(f.body.body, Forall)
            and isinstance(f.body.body.body, Implies)):
        x = Variable(f.var)
        y = Variable(f.body.var)
        z = Variable(f.body.body.var)
        imp = f.body.body.body
        if (isinstance(imp.left, And) and isinstance(imp.right, Atom)
                and isinstance(imp.left.left, Atom)
                and isinstance(imp.left.right, Atom)):
            p = imp.right.predicate
            if (imp.left.left.predicate == p and imp.left.right.predicate == p
                    and imp.left.left.args == (x, y)
                    and imp.left.right.args == (y, z)
                    and imp.right.args == (x, z)
                    and len({x, y, z}) == 3):
                return p
    return None


def detect_relation_properties(residual_formulas) -> RelationProperties:
    found: dict = {}
    for f in residual_formulas:
        for detect, flag in ((_as_reflexivity, REFLEXIVE),
                             (_as_symmetry, SYMMETRIC),
                             (_as_transitivity, TRANSITIVE)):
            sym = detect(f)
            if sym is not None:
                found.setdefault(sym, set()).add(flag)
    return RelationProperties(tuple((s, frozenset(fl))
                                    for s, fl in sorted(found.items())))


# ---------------------------------------------------------------------------
# Theory assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResidualAxiom:
    axiom: AnnotatedFormula
    reason: str


@dataclass(frozen=True)
class Theory:
    tag: str
    rules: tuple = ()            # accepted SuperRules, compilation order
    residual_axioms: tuple = ()  # ResidualAxiom, declaration order
    relations: RelationProperties = RelationProperties()

    def rule_groups(self) -> dict:
        groups: dict = {}
        for r in self.rules:
            groups.setdefault(r.axiom, []).append(r)
        return groups

    def residual_formulas(self) -> tuple:
        return tuple(r.axiom.formula for r in self.residual_axioms)


def _trigger_parts(trigger: Formula):
    if isinstance(trigger, Not):
        return False, trigger.body
    return True, trigger


def _rename_apart(atom: Formula) -> Formula:
    mapping = {Variable(v): Variable(f"{v}#r") for v in free_variables(atom)}
    return substitute(atom, Substitution(mapping))


def triggers_overlap(a: Formula, b: Formula) -> bool:
    """Do two rule triggers unify (same polarity, schema variables renamed apart)?"""
    pol_a, atom_a = _trigger_parts(a)
    pol_b, atom_b = _trigger_parts(b)
    if pol_a != pol_b:
        return False
    return unify(atom_a, _rename_apart(atom_b)) is not None


def build_theory(problem: Problem, tag: str = "szen", *,
                 compile_rules: bool = True,
                 detect_relations: bool = True) -> Theory:
    """Classify, derive, and compile every premise of the problem, in order.

    An axiom whose compiled trigger unifies with the trigger of an already
    accepted rule is demoted whole to the residual set.
    """
    counter = itertools.count(1)
    mint = lambda: next(counter)
    accepted: list = []
    residual: list = []
    for af in problem.premises():
        if not compile_rules:
            residual.append(ResidualAxiom(af, DISABLED))
            continue
        c = classify_axiom(af.formula)
        if isinstance(c, Regular):
            residual.append(ResidualAxiom(af, c.reason))
            continue
        prrs = derive_prrs(c, af.name)
        rules = []
        for k, prr in enumerate(prrs):
            uid = prr.name if k == 0 else f"{prr.name}~{k}"
            rules.append(compile_superrule(prr, mint, axiom=af.name, uid=uid))
        overlap = any(
            triggers_overlap(new.trigger, old.trigger)
            for i, new in enumerate(rules) for old in accepted + rules[:i]
        )
        if overlap:
            residual.append(ResidualAxiom(af, OVERLAP))
        else:
            accepted.extend(rules)
    relations = RelationProperties()
    if detect_relations:
        relations = detect_relation_properties(
            r.axiom.formula for r in residual)
    return Theory(tag, tuple(accepted), tuple(residual), relations)


# ---------------------------------------------------------------------------
# Rule dump
# ---------------------------------------------------------------------------

def _schema_text(f: Formula) -> str:
    return str(f)


def render_rule_dump(theory: Theory) -> str:
    lines = [
        f"% theory '{theory.tag}': {len(theory.rules)} rules, "
        f"{len(theory.residual_axioms)} residual axioms",
        "% overlap check: trigger unification, polarity-respecting",
        "% trans-family: derived negated relation copies stay eligible as principals",
    ]
    for r in theory.rules:
        lines.append(f"rule {r.name} (axiom {r.axiom}, {r.polarity})")
        lines.append(f"  trigger: {_schema_text(r.trigger)}")
        branch_text = " | ".join(
            ", ".join(_schema_text(f) for f in branch) for branch in r.branches)
        lines.append(f"  branches: {branch_text}")
        if r.has_inst_variant:
            lines.append(f"  instantiation variant: {r.name}_inst "
                         f"({r.fresh_metavars} metavariable(s))")
    for res in theory.residual_axioms:
        lines.append(f"residual {res.axiom.name}: {res.reason}")
    for sym in theory.relations.symbols():
        fl = sorted(theory.relations._get(sym))
        lines.append(f"relation {sym}: {', '.join(fl)}")
    return "\n".join(lines) + "\n"
