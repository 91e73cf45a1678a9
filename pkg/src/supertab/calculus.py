"""Decomposition shapes of the tableau calculus.

Every non-literal formula matches exactly one rule: a non-branching (alpha)
or branching (beta) propositional rule, a witness-producing (delta) rule
realized with Hilbert choice terms, or a universal-strength (gamma) rule.
The same table drives rule compilation and proof search.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .syntax import (
    And, Epsilon, Equiv, Exists, FalseF, Forall, Formula, Implies, Not, Or,
    Term, TrueF, instantiate_binder, substitute, Substitution, Variable,
)

ALPHA = "alpha"
BETA = "beta"
DELTA = "delta"
GAMMA = "gamma"
CLOSE = "close"


@dataclass(frozen=True)
class Shape:
    kind: str
    name: str                     # display name of the rule
    children: Optional[tuple]     # tuple of formula tuples (alpha/beta/delta)
    instantiate: Optional[Callable[[Term], Formula]] = None  # gamma only
    witness: Optional[Epsilon] = None                        # delta only


def decompose(f: Formula) -> Optional[Shape]:
    """Shape of `f` under the calculus, or None for literals."""
    if isinstance(f, FalseF):
        return Shape(CLOSE, "False", ())
    if isinstance(f, And):
        return Shape(ALPHA, "And", ((f.left, f.right),))
    if isinstance(f, Or):
        return Shape(BETA, "Or", ((f.left,), (f.right,)))
    if isinstance(f, Implies):
        return Shape(BETA, "Imply", ((Not(f.left),), (f.right,)))
    if isinstance(f, Equiv):
        return Shape(BETA, "Equiv",
                     ((Not(f.left), Not(f.right)), (f.left, f.right)))
    if isinstance(f, Exists):
        eps = Epsilon(f.var, f.body)
        return Shape(DELTA, "Ex", ((instantiate_binder(f, eps),),), witness=eps)
    if isinstance(f, Forall):
        return Shape(GAMMA, "All", None,
                     instantiate=lambda t, _f=f: instantiate_binder(_f, t))
    if isinstance(f, Not):
        g = f.body
        if isinstance(g, TrueF):
            return Shape(CLOSE, "NotTrue", ())
        if isinstance(g, Not):
            return Shape(ALPHA, "NotNot", ((g.body,),))
        if isinstance(g, Or):
            return Shape(ALPHA, "NotOr", ((Not(g.left), Not(g.right)),))
        if isinstance(g, Implies):
            return Shape(ALPHA, "NotImply", ((g.left, Not(g.right)),))
        if isinstance(g, And):
            return Shape(BETA, "NotAnd", ((Not(g.left),), (Not(g.right),)))
        if isinstance(g, Equiv):
            return Shape(BETA, "NotEquiv",
                         ((Not(g.left), g.right), (g.left, Not(g.right))))
        if isinstance(g, Forall):
            eps = Epsilon(g.var, Not(g.body))
            inst = substitute(g.body, Substitution({Variable(g.var): eps}))
            return Shape(DELTA, "NotAll", ((Not(inst),),), witness=eps)
        if isinstance(g, Exists):
            return Shape(GAMMA, "NotEx", None,
                         instantiate=lambda t, _g=g: Not(instantiate_binder(_g, t)))
    return None


def gamma_display(f: Formula) -> str:
    """Trace name shared by the metavariable and instantiation variants."""
    return "NotEx" if isinstance(f, Not) else "All"
