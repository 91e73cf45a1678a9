from hypothesis import given
from hypothesis import strategies as st

from generators import atoms, formulas, substitutions, terms
from oracles import eval_fo, interpretations
from supertab.syntax import (
    And, Application, Atom, Epsilon, Forall, Implies, Metavariable, Not,
    Substitution, TRUE, Variable, alpha_equal, free_variables,
    instantiate_binder, match, metavariables, substitute, unify,
)


def _in(x, s):
    return Atom("member", (x, s))


X, Y = Variable("X"), Variable("Y")
A, B = Variable("A"), Variable("B")
c = Application("c")
d = Application("d")


class TestFreeVariables:
    def test_inclusion_body(self):
        f = Forall("X", Implies(_in(X, A), _in(X, B)))
        assert free_variables(f) == {"A", "B"}

    def test_closed(self):
        assert free_variables(TRUE) == frozenset()

    def test_shadowing(self):
        f = And(Atom("p", (X,)), Forall("X", Atom("q", (X,))))
        assert free_variables(f) == {"X"}

    def test_metavariables_reported_separately(self):
        f = Atom("p", (Metavariable(7), X))
        assert free_variables(f) == {"X"}
        assert metavariables(f) == {7}

    def test_epsilon_body_contributes(self):
        eps = Epsilon("X", _in(X, A))
        assert free_variables(Atom("p", (eps,))) == {"A"}


class TestSubstitute:
    def test_universal_instantiation(self):
        f = Forall("X", Atom("p", (X,)))
        assert instantiate_binder(f, c) == Atom("p", (c,))

    def test_empty_substitution_is_identity(self):
        f = Forall("X", Implies(_in(X, A), _in(X, B)))
        assert substitute(f, Substitution()) is f

    def test_capture_avoided(self):
        # All Y. p(X, Y) under X -> g(Y): the binder must be renamed
        f = Forall("Y", Atom("p", (X, Y)))
        g_y = Application("g", (Y,))
        out = substitute(f, Substitution({X: g_y}))
        assert isinstance(out, Forall)
        assert out.var != "Y"
        assert free_variables(out) == {"Y"}
        # semantic check in all two-element interpretations
        domain = (0, 1)
        for interp in interpretations(domain, [("p", 2)], [("g", 1)]):
            for y_val in domain:
                direct = eval_fo(out, domain, interp, {"Y": y_val})
                expected = all(
                    ((interp[("fun", "g")][(y_val,)], yy)
                     in interp[("pred", "p")])
                    for yy in domain)
                assert direct == expected

    def test_epsilon_bodies_substituted(self):
        eps = Epsilon("X", _in(X, A))
        out = substitute(Atom("p", (eps,)), Substitution({A: c}))
        assert out == Atom("p", (Epsilon("X", _in(X, c)),))


class TestAlphaEqual:
    def test_epsilon_renaming(self):
        e1 = Epsilon("X", Not(Implies(_in(X, A), _in(X, B))))
        e2 = Epsilon("Y", Not(Implies(_in(Y, A), _in(Y, B))))
        assert alpha_equal(e1, e2)

    def test_reflexive_ground(self):
        assert alpha_equal(Atom("p", (c,)), Atom("p", (c,)))

    def test_differing_constants(self):
        f = Forall("X", Atom("p", (X, c)))
        g = Forall("X", Atom("p", (X, d)))
        assert not alpha_equal(f, g)

    def test_metavariables_compare_by_id(self):
        assert alpha_equal(Metavariable(1), Metavariable(1, origin=5))
        assert not alpha_equal(Metavariable(1), Metavariable(2))


class TestUnify:
    def test_binds_variable_to_constant(self):
        s = unify(Application("capital_city", (X,)),
                  Application("capital_city", (Application("usa"),)))
        assert s is not None
        assert s.get(X) == Application("usa")

    def test_identical_terms(self):
        t = Application("f", (c,))
        s = unify(t, t)
        assert s is not None and len(s) == 0

    def test_occurs_check(self):
        assert unify(X, Application("f", (X,))) is None

    def test_symbol_clash(self):
        assert unify(c, d) is None

    def test_epsilon_only_alpha_equal(self):
        e1 = Epsilon("X", Atom("p", (X,)))
        e2 = Epsilon("Y", Atom("p", (Y,)))
        e3 = Epsilon("Y", Atom("q", (Y,)))
        assert unify(e1, e2) is not None
        assert unify(e1, e3) is None

    def test_metavariable_may_take_epsilon(self):
        e = Epsilon("X", Atom("p", (X,)))
        s = unify(Metavariable(1), e)
        assert s is not None and s.get(Metavariable(1)) == e

    def test_atoms(self):
        s = unify(Atom("q", (X, c)), Atom("q", (d, Y)))
        assert s is not None
        assert s.get(X) == d and s.get(Y) == c


class TestMatch:
    def test_pattern_variables_bind(self):
        s = match(Atom("p", (X,)), Atom("p", (c,)))
        assert s is not None and s.get(X) == c

    def test_subject_metavariables_do_not_bind(self):
        assert match(Atom("p", (c,)), Atom("p", (Metavariable(1),))) is None

    def test_pattern_variable_may_take_metavariable(self):
        s = match(Atom("p", (X,)), Atom("p", (Metavariable(1),)))
        assert s is not None and s.get(X) == Metavariable(1)

    def test_nonlinear_pattern(self):
        assert match(Atom("q", (X, X)), Atom("q", (c, d))) is None
        assert match(Atom("q", (X, X)), Atom("q", (c, c))) is not None


# ---------------------------------------------------------------------------
# Property tests (the acceptance suite re-runs these at 1000 examples)
# ---------------------------------------------------------------------------

@given(a=atoms(), b=atoms())
def test_unifier_is_sound_and_idempotent(a, b):
    s = unify(a, b)
    if s is None:
        return
    assert alpha_equal(substitute(a, s), substitute(b, s))
    for _, v in s.items():
        assert alpha_equal(substitute(v, s), v)


@given(f=formulas(), s1=substitutions(), s2=substitutions())
def test_substitution_composes(f, s1, s2):
    once = substitute(substitute(f, s1), s2)
    composed = substitute(f, s1.compose(s2))
    assert alpha_equal(once, composed)


@given(f=formulas())
def test_alpha_reflexive(f):
    assert alpha_equal(f, f)


@given(f=formulas(), g=formulas(), h=formulas())
def test_alpha_symmetric_transitive(f, g, h):
    if alpha_equal(f, g):
        assert alpha_equal(g, f)
    if alpha_equal(f, g) and alpha_equal(g, h):
        assert alpha_equal(f, h)


@given(f=formulas(), v=st.sampled_from(("X", "Y", "Z")), t=terms())
def test_free_variables_after_substitution(f, v, t):
    if v not in free_variables(f):
        return
    if v in free_variables(t):
        return
    out = substitute(f, Substitution({Variable(v): t}))
    assert free_variables(out) == \
        (free_variables(f) - {v}) | free_variables(t)
