"""Rendering of closed proof trees as numbered, pruned textual traces.

Each step shows the hypotheses it received that some later rule actually
consumes; everything else stays in the underlying tree but is not printed.
Step numbers are handed out when a rule creates its children, then the first
child's subtree is numbered before the second's.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from .engine import ProofNode
from .syntax import (
    And, Application, Atom, Epsilon, Equality, Equiv, Exists, FalseF, Forall,
    Formula, Implies, Metavariable, Not, Or, Term, TrueF, Variable, canon_key,
)
from .tptp import AnnotatedFormula, formula_to_fof

_PREFIX_RULES = {"NotAll", "Ex", "And", "NotOr", "NotImply", "NotNot"}
_SPLIT_RULES = {"Imply", "Or", "NotAnd"}


@dataclass(frozen=True)
class RenderOptions:
    compress_prefix: bool = True
    flatten_min: int = 3
    epsilon_legend: bool = False


# ---------------------------------------------------------------------------
# Pruning
# ---------------------------------------------------------------------------

def used_hypotheses(t: ProofNode) -> frozenset:
    """Ids consumed by some rule application in the subtree."""
    used = set(t.applied.principals)
    for c in t.children:
        used |= used_hypotheses(c)
    return frozenset(used)


def prune(t: ProofNode) -> ProofNode:
    """Annotate every step with the hypotheses worth displaying: those among
    its new formulas that some rule in its own subtree consumes.  The tree
    structure itself is never changed."""
    used = used_hypotheses(t)
    shown = frozenset(fid for fid, _ in t.added if fid in used)
    return replace(t, displayed=shown,
                   children=tuple(prune(c) for c in t.children))


# ---------------------------------------------------------------------------
# Display tree
# ---------------------------------------------------------------------------

@dataclass
class DisplayStep:
    shown: list                  # [(fid, Formula)] hypotheses to print
    rule_display: str
    rule_ids: list               # ids printed on the rule line
    children: list
    compressed: bool = False     # child arrow rendered as "[...] k"
    closure: bool = False
    number: int = 0


def _rule_line_ids(node: ProofNode) -> list:
    ids = list(node.applied.principals)
    if node.applied.display.startswith("Extension/"):
        for c in node.children:
            ids.extend(fid for fid, _ in c.added)
    return ids


def _shown(node: ProofNode) -> list:
    if node.displayed is None:
        return list(node.added)
    return [(fid, f) for fid, f in node.added if fid in node.displayed]


def _build(node: ProofNode, opts: RenderOptions) -> DisplayStep:
    leaves = _flatten_split(node, opts)
    if leaves is not None:
        return DisplayStep(
            shown=_shown(node),
            rule_display="DisjTree",
            rule_ids=list(node.applied.principals),
            children=[_build(c, opts) for c in leaves],
        )
    return DisplayStep(
        shown=_shown(node),
        rule_display=node.applied.display,
        rule_ids=_rule_line_ids(node),
        children=[_build(c, opts) for c in node.children],
        closure=node.applied.closure,
    )


def _flatten_split(node: ProofNode, opts: RenderOptions):
    """Collect the leaf branches of a cascade of two-way splits hanging off
    one principal; returns None unless the cascade fans out wide enough."""
    if node.applied.display not in _SPLIT_RULES:
        return None
    leaves = _cascade_leaves(node)
    if leaves is None or len(leaves) < opts.flatten_min:
        return None
    return leaves


def _cascade_leaves(node: ProofNode):
    if node.applied.display not in _SPLIT_RULES:
        return None
    leaves = []
    for child in node.children:
        sub = None
        if (len(child.added) == 1
                and child.applied.display in _SPLIT_RULES
                and child.applied.principals == (child.added[0][0],)
                and not _used_beyond_first_rule(child)):
            sub = _cascade_leaves(child)
        if sub:
            leaves.extend(sub)
        else:
            leaves.append(child)
    return leaves


def _used_beyond_first_rule(node: ProofNode) -> bool:
    """Is the single formula this step received consumed anywhere besides the
    step's own rule?  (If so, merging the step away would hide it.)"""
    fid = node.added[0][0]
    for c in node.children:
        if fid in used_hypotheses(c):
            return True
    return False


def _compress_prefix(root: ProofNode, opts: RenderOptions):
    """Merge an initial run of witness/unpacking steps into one display step.

    Returns (continuation node, formulas it should show) or None.
    """
    if not opts.compress_prefix:
        return None
    if root.applied.display != "NotAll":
        return None
    chain = []
    node = root
    while (node.applied.display in _PREFIX_RULES and len(node.children) == 1
           and not node.applied.closure):
        child = node.children[0]
        chain.append(child)
        node = child
    if len(chain) < 2:
        return None
    # formulas produced along the run, minus the run's own intermediates
    continuation = chain[-1]
    consumed_inside = set()
    for n in chain[:-1]:
        consumed_inside |= set(n.applied.principals)
    used_after = used_hypotheses(continuation)
    gathered = []
    for n in chain:
        for fid, f in n.added:
            if fid in consumed_inside:
                continue
            if fid in used_after:
                gathered.append((fid, f))
    return continuation, gathered


def build_display_tree(t: ProofNode, opts: RenderOptions) -> DisplayStep:
    pruned = t if t.displayed is not None else prune(t)
    compressed = _compress_prefix(pruned, opts)
    if compressed is not None:
        continuation, gathered = compressed
        cont_step = _build(continuation, opts)
        cont_step.shown = gathered
        root = DisplayStep(
            shown=_shown(pruned),
            rule_display="NotAllEx",
            rule_ids=list(pruned.applied.principals),
            children=[cont_step],
            compressed=True,
        )
        return root
    return _build(pruned, opts)


def _number(root: DisplayStep) -> None:
    counter = [1]
    root.number = 1

    def assign(step: DisplayStep):
        for c in step.children:
            counter[0] += 1
            c.number = counter[0]
        for c in step.children:
            assign(c)

    assign(root)


def skeleton(t: ProofNode, opts: Optional[RenderOptions] = None) -> list:
    """(rule name, child count) for every displayed step, in step order."""
    opts = opts or RenderOptions()
    root = build_display_tree(t, opts)
    _number(root)
    out = []

    def walk(step: DisplayStep):
        out.append((step.rule_display, len(step.children)))
        for c in step.children:
            walk(c)

    walk(root)
    return out


# ---------------------------------------------------------------------------
# Formula rendering (trace syntax)
# ---------------------------------------------------------------------------

class _Namer:
    """Assigns opaque T_n names to metavariables and choice terms."""

    def __init__(self):
        self.names: dict = {}
        self.legend: list = []
        self.counter = 0

    def name_for(self, t: Term) -> str:
        key = canon_key(t)
        got = self.names.get(key)
        if got is None:
            self.counter += 1
            got = f"T_{self.counter}"
            self.names[key] = got
            self.legend.append((got, t))
        return got


def _term_text(t: Term, namer: _Namer) -> str:
    if isinstance(t, Variable):
        return t.name
    if isinstance(t, (Metavariable, Epsilon)):
        return namer.name_for(t)
    if isinstance(t, Application):
        if not t.args:
            return f"({t.symbol})"
        inner = " ".join(_term_text(a, namer) for a in t.args)
        return f"({t.symbol} {inner})"
    raise TypeError(f"cannot render term {t!r}")


def formula_text(f: Formula, namer: Optional[_Namer] = None) -> str:
    namer = namer or _Namer()
    return _ftext(f, namer)


def _ftext(f: Formula, namer: _Namer) -> str:
    if isinstance(f, Atom):
        if not f.args:
            return f.predicate
        inner = " ".join(_term_text(a, namer) for a in f.args)
        return f"({f.predicate} {inner})"
    if isinstance(f, Equality):
        return f"({_term_text(f.left, namer)} = {_term_text(f.right, namer)})"
    if isinstance(f, TrueF):
        return "True"
    if isinstance(f, FalseF):
        return "False"
    if isinstance(f, Not):
        if isinstance(f.body, Equality):
            eq = f.body
            return (f"({_term_text(eq.left, namer)} != "
                    f"{_term_text(eq.right, namer)})")
        return f"(-. {_ftext(f.body, namer)})"
    if isinstance(f, And):
        return f"({_ftext(f.left, namer)} /\\ {_ftext(f.right, namer)})"
    if isinstance(f, Or):
        return f"({_ftext(f.left, namer)} \\/ {_ftext(f.right, namer)})"
    if isinstance(f, Implies):
        return f"({_ftext(f.left, namer)} => {_ftext(f.right, namer)})"
    if isinstance(f, Equiv):
        return f"({_ftext(f.left, namer)} <=> {_ftext(f.right, namer)})"
    if isinstance(f, Forall):
        return f"(All {f.var}, {_ftext(f.body, namer)})"
    if isinstance(f, Exists):
        return f"(Ex {f.var}, {_ftext(f.body, namer)})"
    raise TypeError(f"cannot render formula {f!r}")


def _hyp_text(f: Formula, namer: _Namer) -> str:
    text = _ftext(f, namer)
    if not text.startswith("("):
        text = f"({text})"
    return text


# ---------------------------------------------------------------------------
# Full trace
# ---------------------------------------------------------------------------

def render(t: ProofNode, problem=None,
           opts: Optional[RenderOptions] = None) -> str:
    """Numbered trace of a closed proof tree, in the prover's text format.

    `problem` may be a Problem (its conjecture is restated in the header),
    a single AnnotatedFormula, or None for a bare trace.
    """
    opts = opts or RenderOptions()
    conjecture = problem
    if problem is not None and not isinstance(problem, AnnotatedFormula):
        conjecture = problem.conjecture()
    root = build_display_tree(t, opts)
    _number(root)

    # dense display numbering of hypothesis ids, in creation order
    all_fids: set = set()

    def collect(step: DisplayStep):
        all_fids.update(fid for fid, _ in step.shown)
        all_fids.update(step.rule_ids)
        for c in step.children:
            collect(c)

    collect(root)
    hyp_no = {fid: k for k, fid in enumerate(sorted(all_fids))}

    namer = _Namer()
    lines: list = []
    if conjecture is not None:
        lines.append(f"fof({conjecture.name}, conjecture,")
        lines.append(f"  {formula_to_fof(conjecture.formula)}).")
    lines.append("(* PROOF-FOUND *)")

    def emit(step: DisplayStep):
        first = True
        for fid, f in step.shown:
            head = f"{step.number:4d}. " if first else "      "
            lines.append(f"{head}H{hyp_no[fid]}: {_hyp_text(f, namer)}")
            first = False
        head = f"{step.number:4d}. " if first else "      "
        ids = " ".join(f"H{hyp_no[i]}" for i in step.rule_ids)
        rule = f"### [{step.rule_display}{' ' + ids if ids else ''}]"
        if step.children:
            marker = "[...] " if step.compressed else ""
            targets = " ".join(str(c.number) for c in step.children)
            rule += f" --> {marker}{targets}"
        lines.append(f"{head}{rule}")
        for c in step.children:
            emit(c)

    emit(root)
    if opts.epsilon_legend and namer.legend:
        lines.append("")
        for name, term in namer.legend:
            if isinstance(term, Epsilon):
                body = formula_text(term.body, namer)
                lines.append(f"% {name} = (eps {term.var}, {body})")
            else:
                lines.append(f"% {name} = metavariable")
    return "\n".join(lines) + "\n"


def render_skeleton(t: ProofNode, opts: Optional[RenderOptions] = None) -> str:
    opts = opts or RenderOptions()
    root = build_display_tree(t, opts)
    _number(root)
    lines: list = []

    def emit(step: DisplayStep):
        arrow = ""
        if step.children:
            marker = "[...] " if step.compressed else ""
            arrow = " --> " + marker + " ".join(
                str(c.number) for c in step.children)
        lines.append(f"{step.number:4d}. {step.rule_display}{arrow}")
        for c in step.children:
            emit(c)

    emit(root)
    return "\n".join(lines) + "\n"
