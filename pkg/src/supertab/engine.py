"""Strict depth-first, non-destructive tableau proof search.

The search never rewrites a branch formula.  Universal formulas are first
expanded with a fresh metavariable; when closing a descendant branch turns
out to need a concrete term for that metavariable, the search backtracks to
the expansion point, re-derives the instance from the origin formula (or
re-fires the compiled rule with the term), and discards the metavariable
scaffolding.  The returned proof therefore contains only concrete steps.
"""

from __future__ import annotations

import itertools
import sys
import time
from dataclasses import dataclass, replace
from typing import Iterator, Optional

from .calculus import ALPHA, BETA, DELTA, GAMMA, decompose, gamma_display
from .compiler import RelationProperties, SuperRule, Theory
from .syntax import (
    Application, Atom, Equality, Formula, Metavariable, Not, Substitution,
    Term, TrueF, FalseF, Variable, alpha_equal, canon_key, free_variables,
    match, metavariables, substitute, unify,
)

# ---------------------------------------------------------------------------
# Configuration and results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SearchConfig:
    max_rule_applications: int = 10000
    timeout: float = 30.0
    cut_enabled: bool = False
    instantiation_limit: int = 8

    def __post_init__(self):
        if self.max_rule_applications <= 0:
            raise ValueError("max_rule_applications must be positive")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.instantiation_limit <= 0:
            raise ValueError("instantiation_limit must be positive")


@dataclass
class SearchStats:
    rule_applications: int = 0
    branches_explored: int = 0
    wall_time: float = 0.0
    restarts: int = 0


@dataclass(frozen=True)
class ProofResult:
    stats: SearchStats

    @property
    def proved(self) -> bool:
        return isinstance(self, Proof)

    @property
    def status(self) -> str:
        if isinstance(self, Proof):
            return "PROOF-FOUND"
        if isinstance(self, Timeout):
            return "TIMEOUT"
        return "NO-PROOF"


@dataclass(frozen=True)
class Proof(ProofResult):
    tree: "ProofNode" = None


@dataclass(frozen=True)
class Exhausted(ProofResult):
    pass


@dataclass(frozen=True)
class Timeout(ProofResult):
    pass


# ---------------------------------------------------------------------------
# Rule instances and proof nodes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RuleInstance:
    """One applicable (or applied) rule: principal formulas plus the formula
    lists its child branches receive."""

    rule_id: tuple                # hashable key for consumption marking
    display: str                  # surface rule name for traces
    principals: tuple             # formula ids consumed
    children: tuple               # tuple of tuples of formulas to add
    closure: bool = False
    instantiation: Optional[Substitution] = None
    ext: Optional[SuperRule] = None
    inst_variant: bool = False
    minted: tuple = ()            # metavariable ids introduced
    gamma_fid: Optional[int] = None
    sigma: Optional[Substitution] = None   # trigger match for compiled rules
    minted_map: tuple = ()        # ((fresh metavar id, schema metavar id), ...)


@dataclass(frozen=True)
class ProofNode:
    """A step of the closed tree: the formulas this step received, the rule
    applied to the step, and the child steps (none for closures)."""

    added: tuple                  # ((fid, Formula), ...) new at this step
    applied: RuleInstance
    children: tuple = ()
    displayed: Optional[frozenset] = None  # set by pruning

    def leaves(self) -> Iterator["ProofNode"]:
        if not self.children:
            yield self
        else:
            for c in self.children:
                yield from c.leaves()

    def walk(self) -> Iterator["ProofNode"]:
        yield self
        for c in self.children:
            yield from c.walk()


# ---------------------------------------------------------------------------
# Metavariable origins
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OriginGamma:
    token: int
    fid: int


@dataclass(frozen=True)
class OriginRule:
    token: int
    rule: SuperRule
    trigger_fid: int
    sigma: Substitution
    minted_map: tuple  # ((fresh id, schema id), ...)


# ---------------------------------------------------------------------------
# Branches
# ---------------------------------------------------------------------------


class Branch:
    """Insertion-ordered formula set with search bookkeeping.

    Immutable: extension returns a new Branch sharing all existing formula
    objects, so sibling branches can never interfere.
    """

    __slots__ = ("entries", "index", "consumed", "metavar_origins",
                 "inst_counts", "tried")

    def __init__(self, entries=(), index=None, consumed=frozenset(),
                 metavar_origins=None, inst_counts=None, tried=frozenset()):
        self.entries = tuple(entries)            # ((fid, Formula), ...)
        if index is None:
            index = {canon_key(f): fid for fid, f in self.entries}
        self.index = index                       # canon key -> fid
        self.consumed = consumed                 # {(rule_id, principals)}
        self.metavar_origins = metavar_origins or {}
        self.inst_counts = inst_counts or {}
        self.tried = tried                       # {(origin fid, canon(term))}

    def get(self, fid: int) -> Formula:
        for i, f in self.entries:
            if i == fid:
                return f
        raise KeyError(fid)

    def has(self, f: Formula) -> bool:
        return canon_key(f) in self.index

    def is_consumed(self, key) -> bool:
        return key in self.consumed

    def extend(self, adds, consume_key=None, origins=None,
               bump_fid=None) -> "Branch":
        entries = self.entries + tuple(adds)
        index = dict(self.index)
        for fid, f in adds:
            index.setdefault(canon_key(f), fid)
        consumed = self.consumed
        if consume_key is not None:
            consumed = consumed | {consume_key}
        metavar_origins = self.metavar_origins
        if origins:
            metavar_origins = {**metavar_origins, **origins}
        inst_counts = self.inst_counts
        if bump_fid is not None:
            inst_counts = dict(inst_counts)
            inst_counts[bump_fid] = inst_counts.get(bump_fid, 0) + 1
        return Branch(entries, index, consumed, metavar_origins,
                      inst_counts, self.tried)

    def with_tried(self, origin_fid: int, term: Term) -> "Branch":
        return Branch(self.entries, self.index, self.consumed,
                      self.metavar_origins, self.inst_counts,
                      self.tried | {(origin_fid, canon_key(term))})

    def was_tried(self, origin_fid: int, term: Term) -> bool:
        return (origin_fid, canon_key(term)) in self.tried

    def inst_count(self, fid: int) -> int:
        return self.inst_counts.get(fid, 0)

    def literals(self):
        """(fid, polarity, atom) for every literal over an atom or equality."""
        out = []
        for fid, f in self.entries:
            if isinstance(f, (Atom, Equality)):
                out.append((fid, True, f))
            elif isinstance(f, Not) and isinstance(f.body, (Atom, Equality)):
                out.append((fid, False, f.body))
        return out


def _pred_key(atom) -> tuple:
    if isinstance(atom, Equality):
        return ("=",)
    return ("p", atom.predicate, len(atom.args))


def _rel_args(atom) -> tuple:
    if isinstance(atom, Equality):
        return (atom.left, atom.right)
    return atom.args


def _make_rel(kind: tuple, args: tuple) -> Formula:
    if kind == ("=",):
        return Equality(args[0], args[1])
    return Atom(kind[1], args)


def _neq(a: Term, b: Term) -> Formula:
    return Not(Equality(a, b))


# ---------------------------------------------------------------------------
# Closure detection
# ---------------------------------------------------------------------------


def detect_closure(b: Branch, relations: Optional[RelationProperties] = None
                   ) -> Optional[RuleInstance]:
    """First applicable closure: contradiction constant, complementary pair,
    reflexivity violation, symmetry violation; oldest formulas first."""
    relations = relations or RelationProperties()
    for fid, f in b.entries:
        if isinstance(f, FalseF):
            return RuleInstance(("close", "False"), "False", (fid,), (),
                                closure=True)
    for fid, f in b.entries:
        if isinstance(f, Not) and isinstance(f.body, TrueF):
            return RuleInstance(("close", "NotTrue"), "NotTrue", (fid,), (),
                                closure=True)
    seen_pos: dict = {}
    seen_neg: dict = {}
    for fid, pol, atom in b.literals():
        key = canon_key(atom)
        if pol:
            if key in seen_neg:
                return RuleInstance(("close", "Axiom"), "Axiom",
                                    (fid, seen_neg[key]), (), closure=True)
            seen_pos.setdefault(key, fid)
        else:
            if key in seen_pos:
                return RuleInstance(("close", "Axiom"), "Axiom",
                                    (seen_pos[key], fid), (), closure=True)
            seen_neg.setdefault(key, fid)
    for fid, pol, atom in b.literals():
        if pol:
            continue
        reflexive = isinstance(atom, Equality) or (
            isinstance(atom, Atom) and len(atom.args) == 2
            and relations.reflexive(atom.predicate))
        if reflexive:
            s, t = _rel_args(atom)
            if alpha_equal(s, t):
                return RuleInstance(("close", "Refl"), "Refl", (fid,), (),
                                    closure=True)
    sym_pos: dict = {}
    for fid, pol, atom in b.literals():
        symmetric = isinstance(atom, Equality) or (
            isinstance(atom, Atom) and len(atom.args) == 2
            and relations.symmetric(atom.predicate))
        if not symmetric:
            continue
        s, t = _rel_args(atom)
        pk = _pred_key(atom)
        if pol:
            sym_pos.setdefault((pk, canon_key(s), canon_key(t)), fid)
        else:
            partner = sym_pos.get((pk, canon_key(t), canon_key(s)))
            if partner is not None:
                return RuleInstance(("close", "Sym"), "Sym", (partner, fid),
                                    (), closure=True)
    return None


# ---------------------------------------------------------------------------
# Candidate generation
# ---------------------------------------------------------------------------


def _adds_something(b: Branch, children: tuple) -> bool:
    return any(not b.has(f) for child in children for f in child)


def _superrule_candidates(b: Branch, theory: Theory, fid: int, f: Formula,
                          mint, branching: bool) -> Iterator[RuleInstance]:
    for rule in theory.rules:
        if rule.branching != branching:
            continue
        key = (("ext", rule.uid), (fid,))
        if b.is_consumed(key):
            continue
        inst = _instantiate_rule(rule, theory.tag, fid, f, mint)
        if inst is not None and (inst.closure or _adds_something(b, inst.children)):
            yield inst


def _instantiate_rule(rule: SuperRule, tag: str, fid: int, f: Formula,
                      mint, bind_extra: Optional[dict] = None,
                      inst_variant: bool = False) -> Optional[RuleInstance]:
    sigma = match(rule.trigger, f)
    if sigma is None:
        return None
    fresh = {}
    minted_map = []
    for schema_id in rule.metavar_ids:
        if bind_extra and schema_id in bind_extra:
            continue
        mid = mint()
        fresh[Metavariable(schema_id)] = Metavariable(mid, origin=fid)
        minted_map.append((mid, schema_id))
    full = dict(sigma.items())
    full.update(fresh)
    if bind_extra:
        full.update({Metavariable(s): t for s, t in bind_extra.items()})
    sub = Substitution(full)
    children = tuple(tuple(substitute(g, sub) for g in branch)
                     for branch in rule.branches)
    closing = rule.closing
    display = f"Extension/{tag}/{rule.name}"
    if inst_variant:
        display += "_inst"
    return RuleInstance(
        rule_id=(("ext", rule.uid) if not inst_variant
                 else ("ext_inst", rule.uid, canon_key(f))),
        display=display,
        principals=(fid,),
        children=() if closing else children,
        closure=closing,
        ext=rule,
        inst_variant=inst_variant,
        minted=tuple(mid for mid, _ in minted_map),
        sigma=sigma,
        minted_map=tuple(minted_map),
    )


def _shape_candidates(b: Branch, kind: str, mint) -> Iterator[RuleInstance]:
    entries = b.entries
    if kind == GAMMA:
        # expand formulas that never yielded an instance before returning to
        # ones already instantiated on this branch
        entries = sorted(enumerate(b.entries),
                         key=lambda e: (b.inst_count(e[1][0]), e[0]))
        entries = tuple(e for _, e in entries)
    for fid, f in entries:
        shape = decompose(f)
        if shape is None or shape.kind != kind:
            continue
        key = ((kind, shape.name), (fid,))
        if b.is_consumed(key):
            continue
        if kind == GAMMA:
            mid = mint()
            product = shape.instantiate(Metavariable(mid, origin=fid))
            yield RuleInstance(key[0], shape.name, (fid,), ((product,),),
                               minted=(mid,), gamma_fid=fid)
            continue
        if _adds_something(b, shape.children):
            yield RuleInstance(key[0], shape.name, (fid,), shape.children)


def _relational_candidates(b: Branch, relations: RelationProperties
                           ) -> Iterator[RuleInstance]:
    lits = b.literals()
    pos = [(fid, a) for fid, pol, a in lits if pol]
    neg = [(fid, a) for fid, pol, a in lits if not pol]

    def fresh(rid, principals, children):
        if b.is_consumed((rid, principals)):
            return None
        if not _adds_something(b, children):
            return None
        display = {"pred": "P-NotP", "fun": "Fun", "notrefl": "NotRefl",
                   "sym": "Sym", "trans": "Trans", "transsym": "Trans",
                   "transeq": "Trans", "transeqsym": "Trans"}[rid[1]]
        return RuleInstance(rid, display, principals, children)

    # pred: complementary predicate pair with clashing arguments
    for fp, ap in pos:
        if not isinstance(ap, Atom) or not ap.args:
            continue
        for fn, an in neg:
            if not isinstance(an, Atom) or an.predicate != ap.predicate \
                    or len(an.args) != len(ap.args):
                continue
            if unify(ap, an) is not None:
                continue
            children = tuple((_neq(t, s),) for t, s in zip(ap.args, an.args))
            inst = fresh(("rel", "pred"), (fp, fn), children)
            if inst:
                yield inst
    # fun: clashing negated equality over one function symbol
    for fn, an in neg:
        if not isinstance(an, Equality):
            continue
        l, r = an.left, an.right
        if (isinstance(l, Application) and isinstance(r, Application)
                and l.symbol == r.symbol and len(l.args) == len(r.args)
                and l.args and unify(l, r) is None):
            children = tuple((_neq(t, s),) for t, s in zip(l.args, r.args))
            inst = fresh(("rel", "fun"), (fn,), children)
            if inst:
                yield inst
    # notrefl: negated reflexive relation decays to a disequality
    for fn, an in neg:
        if (isinstance(an, Atom) and len(an.args) == 2
                and relations.reflexive(an.predicate)):
            s, t = an.args
            if not alpha_equal(s, t):
                inst = fresh(("rel", "notrefl"), (fn,), ((_neq(s, t),),))
                if inst:
                    yield inst

    def rel_kind(atom, flag) -> bool:
        if isinstance(atom, Equality):
            return True  # equality carries every flag
        return (isinstance(atom, Atom) and len(atom.args) == 2
                and flag(atom.predicate))

    # sym
    for fp, ap in pos:
        if not rel_kind(ap, relations.symmetric):
            continue
        s, t = _rel_args(ap)
        for fn, an in neg:
            if _pred_key(an) != _pred_key(ap):
                continue
            u, v = _rel_args(an)
            children = ((_neq(t, u),), (_neq(s, v),))
            inst = fresh(("rel", "sym"), (fp, fn), children)
            if inst:
                yield inst
    # trans family
    for fp, ap in pos:
        p_is_eq = isinstance(ap, Equality)
        for fn, an in neg:
            nk = _pred_key(an)
            n_ts = rel_kind(an, relations.symmetric) and \
                rel_kind(an, relations.transitive)
            n_t = rel_kind(an, relations.transitive) and not n_ts
            if not (n_ts or n_t):
                continue
            u, v = _rel_args(an)
            if _pred_key(ap) == nk:
                s, t = _rel_args(ap)
                if n_t:
                    children = ((_neq(u, s), Not(_make_rel(nk, (u, s)))),
                                (_neq(t, v), Not(_make_rel(nk, (t, v)))))
                    inst = fresh(("rel", "trans"), (fp, fn), children)
                else:
                    children = ((_neq(v, s), Not(_make_rel(nk, (v, s)))),
                                (_neq(t, u), Not(_make_rel(nk, (t, u)))))
                    inst = fresh(("rel", "transsym"), (fp, fn), children)
                if inst:
                    yield inst
            elif p_is_eq and nk != ("=",):
                s, t = _rel_args(ap)
                if n_t:
                    children = ((_neq(u, s), Not(_make_rel(nk, (u, s)))),
                                (Not(_make_rel(nk, (u, s))),
                                 Not(_make_rel(nk, (t, v)))),
                                (_neq(t, v), Not(_make_rel(nk, (t, v)))))
                    inst = fresh(("rel", "transeq"), (fp, fn), children)
                else:
                    children = ((_neq(v, s), Not(_make_rel(nk, (v, s)))),
                                (Not(_make_rel(nk, (v, s))),
                                 Not(_make_rel(nk, (t, u)))),
                                (_neq(t, u), Not(_make_rel(nk, (t, u)))))
                    inst = fresh(("rel", "transeqsym"), (fp, fn), children)
                if inst:
                    yield inst


def _cut_candidates(b: Branch, theory: Theory) -> Iterator[RuleInstance]:
    # atoms on the branch, plus ground trigger atoms of branch-closing rules
    # (compiled facts): cutting on those reconnects a fact with literals it
    # only relates to through equality
    seen = set()
    pool = [sub for _, f in b.entries for sub in _atomic_subformulas(f)]
    for rule in theory.rules:
        if rule.closing:
            atom = rule.trigger.body if isinstance(rule.trigger, Not) \
                else rule.trigger
            if not free_variables(atom):
                pool.append(atom)
    for sub in pool:
        key = canon_key(sub)
        if key in seen:
            continue
        seen.add(key)
        if b.has(sub) or b.has(Not(sub)):
            continue
        rid = ("cut", key)
        if b.is_consumed((rid, ())):
            continue
        yield RuleInstance(rid, "Cut", (), ((sub,), (Not(sub),)))


def _atomic_subformulas(f: Formula) -> Iterator[Formula]:
    if isinstance(f, (Atom, Equality)):
        yield f
    elif isinstance(f, Not):
        yield from _atomic_subformulas(f.body)
    elif hasattr(f, "left"):
        yield from _atomic_subformulas(f.left)
        yield from _atomic_subformulas(f.right)
    elif hasattr(f, "body"):
        yield from _atomic_subformulas(f.body)


def applicable_rules(b: Branch, theory: Theory,
                     cfg: Optional[SearchConfig] = None) -> list:
    """Applicable rules in priority order: non-branching work first, then
    witnesses, splits, relational reasoning, and metavariable expansion."""
    cfg = cfg or SearchConfig()
    counter = itertools.count(10**9)
    return list(_iter_candidates(b, theory, cfg, lambda: next(counter)))


def _iter_candidates(b: Branch, theory: Theory, cfg: SearchConfig,
                     mint) -> Iterator[RuleInstance]:
    # class 1: alpha rules and non-branching compiled rules
    for fid, f in b.entries:
        shape = decompose(f)
        if shape is not None and shape.kind == ALPHA:
            key = ((ALPHA, shape.name), (fid,))
            if not b.is_consumed(key) and _adds_something(b, shape.children):
                yield RuleInstance(key[0], shape.name, (fid,), shape.children)
        yield from _superrule_candidates(b, theory, fid, f, mint,
                                         branching=False)
    # class 2: witness rules
    yield from _shape_candidates(b, DELTA, mint)
    # class 3: beta rules and branching compiled rules
    for fid, f in b.entries:
        shape = decompose(f)
        if shape is not None and shape.kind == BETA:
            key = ((BETA, shape.name), (fid,))
            if not b.is_consumed(key) and _adds_something(b, shape.children):
                yield RuleInstance(key[0], shape.name, (fid,), shape.children)
        yield from _superrule_candidates(b, theory, fid, f, mint,
                                         branching=True)
    # class 4: relational rules
    yield from _relational_candidates(b, theory.relations)
    # class 5: universal expansion with a fresh metavariable
    yield from _shape_candidates(b, GAMMA, mint)


# ---------------------------------------------------------------------------
# Instantiation proposals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Proposal:
    origin_fid: int
    term: Term
    metavar: int

    def as_pair(self):
        return (self.origin_fid, self.term)


def propose_instantiations(b: Branch, theory: Optional[Theory] = None) -> list:
    """Terms that would let a metavariable close this branch, paired with the
    origin formula to re-derive from.  The branch itself is never rewritten."""
    theory = theory or Theory("t")
    out = []
    seen = set()
    lits = b.literals()

    def offer(mv: int, term: Term):
        origin = b.metavar_origins.get(mv)
        if origin is None or free_variables(term):
            return
        # metavariables inside the term must outlive the re-derivation
        # point, i.e. stem from strictly earlier expansions
        for m in metavariables(term):
            other = b.metavar_origins.get(m)
            if other is None or other.token >= origin.token:
                return
        fid = origin.fid if isinstance(origin, OriginGamma) else origin.trigger_fid
        key = (fid, canon_key(term))
        if key in seen or b.was_tried(fid, term):
            return
        seen.add(key)
        out.append(Proposal(fid, term, mv))

    closing_triggers = []
    for rule in theory.rules:
        if rule.closing:
            trig = rule.trigger
            pol = not isinstance(trig, Not)
            atom = trig.body if isinstance(trig, Not) else trig
            closing_triggers.append((pol, atom))

    for mv in b.metavar_origins:
        mterm = Metavariable(mv)
        for fid1, pol1, a1 in lits:
            if mv not in metavariables(a1):
                continue
            # complementary literal pairs
            for fid2, pol2, a2 in lits:
                if pol2 == pol1 or _pred_key(a1) != _pred_key(a2):
                    continue
                sigma = unify(a1, a2)
                if sigma is None:
                    continue
                t = sigma.get(mterm)
                if t is not None:
                    offer(mv, t)
            # a negated reflexive atom closes when its sides unify
            if not pol1:
                reflexive = isinstance(a1, Equality) or (
                    isinstance(a1, Atom) and len(a1.args) == 2
                    and theory.relations.reflexive(a1.predicate))
                if reflexive:
                    s, t0 = _rel_args(a1)
                    sigma = unify(s, t0)
                    if sigma is not None:
                        t = sigma.get(mterm)
                        if t is not None:
                            offer(mv, t)
            # triggers of branch-closing compiled rules act as theory literals
            for pol_t, atom_t in closing_triggers:
                if pol_t != pol1 or _pred_key(atom_t) != _pred_key(a1):
                    continue
                renamed = substitute(atom_t, Substitution(
                    {Variable(v): Variable(f"{v}#t")
                     for v in free_variables(atom_t)}))
                sigma = unify(a1, renamed)
                if sigma is None:
                    continue
                t = sigma.get(mterm)
                if t is not None:
                    offer(mv, t)
    return out


# ---------------------------------------------------------------------------
# The searcher
# ---------------------------------------------------------------------------


class _BudgetHit(Exception):
    pass


class _TimeUp(Exception):
    pass


_BLOCKED = object()


@dataclass(frozen=True)
class _Closed:
    applied: RuleInstance
    children: tuple


@dataclass(frozen=True)
class _Request:
    token: int
    proposal: Proposal


class _Searcher:
    def __init__(self, theory: Theory, cfg: SearchConfig):
        self.theory = theory
        self.cfg = cfg
        self.stats = SearchStats()
        self._fid = itertools.count()
        self._meta = itertools.count(1)
        self._token = itertools.count(1)
        self._budget = 0
        self._spent = 0
        self._deadline = 0.0

    def mint_meta(self) -> int:
        return next(self._meta)

    def _spend(self):
        self.stats.rule_applications += 1
        self._spent += 1
        if self._spent > self._budget:
            raise _BudgetHit()
        if time.monotonic() > self._deadline:
            raise _TimeUp()

    def run(self, conjecture: Formula) -> ProofResult:
        start = time.monotonic()
        self._deadline = start + self.cfg.timeout
        adds = [(next(self._fid), Not(conjecture))]
        for f in self.theory.residual_formulas():
            adds.append((next(self._fid), f))
        root = Branch().extend(adds)
        cap = self.cfg.max_rule_applications
        budget = min(512, cap)
        result: Optional[ProofResult] = None
        while True:
            self._budget = budget
            self._spent = 0
            try:
                out = self._close(root)
            except _BudgetHit:
                if budget >= cap:
                    result = Exhausted(self.stats)
                    break
                budget = min(budget * 2, cap)
                self.stats.restarts += 1
                continue
            except _TimeUp:
                result = Timeout(self.stats)
                break
            except RecursionError:
                # pathological depth counts as resource exhaustion
                result = Exhausted(self.stats)
                break
            if isinstance(out, _Closed):
                tree = ProofNode(tuple(adds), out.applied, out.children)
                result = Proof(self.stats, tree)
                break
            # fully explored without hitting the budget: no proof exists
            # within this calculus and limit structure
            result = Exhausted(self.stats)
            break
        self.stats.wall_time = time.monotonic() - start
        return result

    # -- core recursion ----------------------------------------------------

    def _close(self, b: Branch):
        self.stats.branches_explored += 1
        cl = detect_closure(b, self.theory.relations)
        if cl is not None:
            self._spend()
            return _Closed(cl, ())
        # Rule application is monotone (extra formulas never disable other
        # rules), so the first applicable candidate is as good as any: a
        # blocked subtree means the branch has no closed extension at all.
        cand = next(_iter_candidates(b, self.theory, self.cfg,
                                     self.mint_meta), None)
        if cand is not None:
            return self._apply(b, cand)
        for prop in propose_instantiations(b, self.theory):
            if b.inst_count(prop.origin_fid) >= self.cfg.instantiation_limit:
                continue
            origin = b.metavar_origins[prop.metavar]
            return _Request(origin.token, prop)
        if self.cfg.cut_enabled:
            for cand in _cut_candidates(b, self.theory):
                out = self._apply(b, cand)
                if out is not _BLOCKED:
                    return out
        return _BLOCKED

    def _apply(self, b: Branch, cand: RuleInstance):
        self._spend()
        token = next(self._token)
        if cand.closure:
            return _Closed(cand, ())
        origins = self._origins_for(cand, token)
        consume = (cand.rule_id, cand.principals)
        child_branches = []
        adds_lists = []
        for child in cand.children:
            adds = []
            taken = set()
            for f in child:
                key = canon_key(f)
                if b.has(f) or key in taken:
                    continue
                taken.add(key)
                adds.append((next(self._fid), f))
            child_branches.append(b.extend(adds, consume, origins))
            adds_lists.append(tuple(adds))
        nodes = []
        for child_b, adds in zip(child_branches, adds_lists):
            out = self._close(child_b)
            if out is _BLOCKED:
                return _BLOCKED
            if isinstance(out, _Request):
                if out.token == token:
                    return self._replay(b, cand, out.proposal)
                return out
            nodes.append(ProofNode(adds, out.applied, out.children))
        return _Closed(cand, tuple(nodes))

    def _origins_for(self, cand: RuleInstance, token: int) -> dict:
        if not cand.minted:
            return {}
        if cand.ext is not None:
            origin = OriginRule(token, cand.ext, cand.principals[0],
                                cand.sigma, cand.minted_map)
            return {mid: origin for mid in cand.minted}
        return {mid: OriginGamma(token, cand.gamma_fid) for mid in cand.minted}

    def _replay(self, b: Branch, cand: RuleInstance, prop: Proposal):
        """A descendant asked to instantiate a metavariable this application
        minted: re-derive the instance here and drop the scaffolding."""
        b2 = b.with_tried(prop.origin_fid, prop.term)
        inst = self._make_inst(b2, cand, prop)
        if inst is not None and b2.inst_count(prop.origin_fid) < \
                self.cfg.instantiation_limit:
            b3 = b2.extend((), bump_fid=prop.origin_fid)
            out = self._apply(b3, inst)
            if out is not _BLOCKED:
                return out
        # instantiation failed to close: retry the expansion, letting
        # descendants propose something else
        return self._apply(b2, cand)

    def _make_inst(self, b: Branch, cand: RuleInstance,
                   prop: Proposal) -> Optional[RuleInstance]:
        """Concrete replacement for the metavariable expansion `cand` minted:
        either a direct instantiation of the quantified formula, or the
        compiled rule re-fired with the proposed term bound."""
        if cand.ext is None:
            fid = cand.gamma_fid
            f = b.get(fid)
            shape = decompose(f)
            if shape is None or shape.kind != GAMMA:
                return None
            product = shape.instantiate(prop.term)
            if b.has(product):
                return None
            sub = Substitution({Metavariable(prop.metavar): prop.term})
            return RuleInstance(
                rule_id=("gamma_inst", canon_key(prop.term)),
                display=gamma_display(f),
                principals=(fid,),
                children=((product,),),
                instantiation=sub,
                gamma_fid=fid,
            )
        # compiled-rule instantiation variant
        rule = cand.ext
        schema_id = None
        for mid, sid in cand.minted_map:
            if mid == prop.metavar:
                schema_id = sid
                break
        if schema_id is None:
            return None
        trigger_fid = cand.principals[0]
        f = b.get(trigger_fid)
        inst = _instantiate_rule(rule, self.theory.tag, trigger_fid, f,
                                 self.mint_meta,
                                 bind_extra={schema_id: prop.term},
                                 inst_variant=True)
        if inst is None:
            return None
        if not _adds_something(b, inst.children) and not inst.closure:
            return None
        return replace(inst, instantiation=Substitution(
            {Metavariable(prop.metavar): prop.term}))


# ---------------------------------------------------------------------------
# Entry point and validation
# ---------------------------------------------------------------------------


def prove(theory: Theory, conjecture: Formula,
          cfg: Optional[SearchConfig] = None) -> ProofResult:
    """Refute the negated conjecture against the theory.

    The initial branch holds the negated conjecture followed by every
    residual axiom; failure is a value (Exhausted or Timeout), never an
    exception.
    """
    cfg = cfg or SearchConfig()
    # deep enough for desk-scale proofs, low enough that runaway depth
    # raises RecursionError (reported as Exhausted) instead of crashing
    if sys.getrecursionlimit() < 20000:
        sys.setrecursionlimit(20000)
    return _Searcher(theory, cfg).run(conjecture)


def validate_proof(tree: ProofNode,
                   relations: Optional[RelationProperties] = None) -> None:
    """Structural soundness check: every leaf satisfies its closure rule's
    precondition and every step's children extend the parent state exactly
    by the rule's additions.  Raises AssertionError on violation."""
    relations = relations or RelationProperties()

    def check(node: ProofNode, formulas: dict):
        formulas = dict(formulas)
        for fid, f in node.added:
            assert fid not in formulas, f"duplicate formula id {fid}"
            formulas[fid] = f
        rule = node.applied
        for fid in rule.principals:
            assert fid in formulas, f"principal {fid} not on branch"
        if rule.closure:
            assert not node.children, "closure step with children"
            _check_closure(rule, formulas, relations)
            return
        assert node.children, "open step without children"
        assert len(node.children) == len(rule.children)
        for child, schema in zip(node.children, rule.children):
            for fid, f in child.added:
                assert any(alpha_equal(f, g) for g in schema), \
                    f"added formula {f} not produced by rule {rule.display}"
            check(child, formulas)

    check(tree, {})


def _check_closure(rule: RuleInstance, formulas: dict,
                   relations: RelationProperties) -> None:
    name = rule.display
    if rule.ext is not None:
        assert rule.ext.closing, "extension closure on a non-closing rule"
        f = formulas[rule.principals[0]]
        assert match(rule.ext.trigger, f) is not None
        return
    if name == "False":
        assert isinstance(formulas[rule.principals[0]], FalseF)
        return
    if name == "NotTrue":
        f = formulas[rule.principals[0]]
        assert isinstance(f, Not) and isinstance(f.body, TrueF)
        return
    if name == "Axiom":
        a, bfid = rule.principals
        fa, fb = formulas[a], formulas[bfid]
        assert isinstance(fb, Not) and alpha_equal(fa, fb.body)
        return
    if name == "Refl":
        f = formulas[rule.principals[0]]
        assert isinstance(f, Not)
        atom = f.body
        s, t = _rel_args(atom)
        ok = isinstance(atom, Equality) or relations.reflexive(atom.predicate)
        assert ok and alpha_equal(s, t)
        return
    if name == "Sym":
        a, bfid = rule.principals
        fa, fb = formulas[a], formulas[bfid]
        assert isinstance(fb, Not)
        s, t = _rel_args(fa)
        u, v = _rel_args(fb.body)
        assert alpha_equal(s, v) and alpha_equal(t, u)
        return
    raise AssertionError(f"unknown closure rule {name}")
