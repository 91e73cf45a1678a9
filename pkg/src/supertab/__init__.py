"""First-order tableau prover with superdeduction-compiled theory rules."""

from .compiler import (
    AtomicImplForm, AxiomClassification, EquivForm, ImplFormLeftAtomic,
    ImplFormRightAtomic, PropositionRewriteRule, Regular, RelationProperties,
    ResidualAxiom, SuperRule, Theory, UniversalAtomForm, build_theory,
    classify_axiom, compile_superrule, derive_prrs, render_rule_dump,
)
from .engine import (
    Branch, Exhausted, Proof, ProofNode, ProofResult, RuleInstance,
    SearchConfig, SearchStats, Timeout, applicable_rules, detect_closure,
    propose_instantiations, prove, validate_proof,
)
from .render import (
    RenderOptions, formula_text, prune, render, render_skeleton, skeleton,
)
from .syntax import (
    And, Application, Atom, Epsilon, Equality, Equiv, Exists, FALSE, FalseF,
    Forall, Formula, Implies, Metavariable, Not, Or, Substitution, TRUE, Term,
    TrueF, Variable, alpha_equal, free_variables, match, metavariables,
    substitute, unify,
)
from .tptp import (
    AnnotatedFormula, ArityError, Include, IncludeError, Problem, TptpError,
    TptpSyntaxError, formula_to_fof, parse_file, parse_formula, parse_problem,
    problem_to_fof, resolve_includes,
)

__version__ = "0.1.0"
