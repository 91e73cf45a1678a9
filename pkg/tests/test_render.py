from supertab.compiler import build_theory
from supertab.engine import Proof, SearchConfig, prove, validate_proof
from supertab.render import (
    RenderOptions, formula_text, prune, render, render_skeleton, skeleton,
    used_hypotheses,
)
from supertab.syntax import Application, Atom, Metavariable, Not
from supertab.tptp import parse_file, parse_problem


def proof_of(text: str, **cfg) -> tuple:
    problem = parse_problem(text)
    theory = build_theory(problem)
    result = prove(theory, problem.conjecture().formula,
                   SearchConfig(**cfg) if cfg else None)
    assert isinstance(result, Proof)
    return result, problem, theory


class TestPrune:
    def test_conjunct_not_used_is_hidden(self):
        # proving p from p & q leaves q undisplayed
        result, problem, _ = proof_of(
            "fof(pq, axiom, (p & q)). fof(g, conjecture, p).")
        tree = prune(result.tree)
        texts = render(tree, problem)
        assert "H" in texts
        assert "(q)" not in texts

    def test_everything_used_stays(self):
        result, problem, _ = proof_of(
            "fof(ab, axiom, a = b). fof(g, conjecture, b = a).")
        tree = prune(result.tree)
        shown = [fid for n in tree.walk() for fid in (n.displayed or ())]
        added = [fid for n in tree.walk() for fid, _ in n.added]
        assert set(shown) == set(added) & set(used_hypotheses(tree))

    def test_pruning_preserves_closure(self):
        result, _, theory = proof_of(
            "fof(pq, axiom, (p & q)). fof(g, conjecture, p).")
        validate_proof(prune(result.tree), theory.relations)

    def test_structure_unchanged(self):
        result, _, _ = proof_of(
            "fof(pq, axiom, (p & q)). fof(g, conjecture, p).")
        pruned = prune(result.tree)

        def shape(n):
            return (n.applied.display, [shape(c) for c in n.children])

        assert shape(pruned) == shape(result.tree)


class TestRenderBasics:
    def test_reflexivity_single_step(self):
        result, problem, _ = proof_of("fof(g, conjecture, t = t).")
        text = render(result.tree, problem)
        assert "(* PROOF-FOUND *)" in text
        assert "fof(g, conjecture," in text
        assert "### [Refl H0]" in text
        assert "-->" not in text

    def test_negated_equality_renders_infix(self):
        result, problem, _ = proof_of(
            "fof(ab, axiom, a = b). fof(g, conjecture, b = a).")
        text = render(result.tree, problem)
        assert "!=" in text or "[Sym" in text

    def test_byte_deterministic(self):
        result, problem, _ = proof_of(
            "fof(pq, axiom, (p & q)). fof(g, conjecture, p).")
        a = render(result.tree, problem)
        b = render(result.tree, problem)
        assert a == b

    def test_every_arrow_target_exists_once(self):
        result, problem, _ = proof_of(
            "fof(or, axiom, (p | q)). fof(np, axiom, ~p). "
            "fof(nq, axiom, ~q). fof(g, conjecture, $false | p | q).")
        text = render(result.tree, problem)
        import re
        targets = []
        for m in re.finditer(r"--> (.+)$", text, re.M):
            targets.extend(int(x) for x in m.group(1).replace("[...]", "").split())
        steps = [int(m.group(1)) for m in re.finditer(r"^\s*(\d+)\. ", text, re.M)]
        assert sorted(targets) == sorted(set(targets))
        assert set(targets) == set(steps) - {1}

    def test_curried_application_rendering(self):
        f = Atom("b_in", (Application("t"),
                          Application("b_drest",
                                      (Application("b_empty"),
                                       Application("a")))))
        assert formula_text(f) == "(b_in (t) (b_drest (b_empty) (a)))"

    def test_metavariables_render_as_t_names(self):
        f = Atom("p", (Metavariable(3),))
        assert formula_text(f) == "(p T_1)"


class TestTraceShapes:
    def test_puzzle_skeleton(self, fixtures_dir):
        problem = parse_file(fixtures_dir / "puzzle132.p")
        theory = build_theory(problem)
        result = prove(theory, problem.conjecture().formula)
        assert isinstance(result, Proof)
        names = [name for name, _ in skeleton(result.tree)]
        assert names.count("NotAnd") == 1
        assert names.count("Imply") == 1
        assert names.count("P-NotP") == 1
        assert "Extension/szen/usa_type" in names

    def test_prefix_compression(self, fixtures_dir):
        problem = parse_file(fixtures_dir / "geometry170.p")
        theory = build_theory(problem)
        result = prove(theory, problem.conjecture().formula,
                       SearchConfig(timeout=60))
        text = render(result.tree, problem)
        assert "### [NotAllEx H0] --> [...] 2" in text
        # the intermediate strip steps do not appear
        assert "[NotAll " not in text

    def test_compression_can_be_disabled(self, fixtures_dir):
        problem = parse_file(fixtures_dir / "geometry170.p")
        theory = build_theory(problem)
        result = prove(theory, problem.conjecture().formula,
                       SearchConfig(timeout=60))
        text = render(result.tree, problem, RenderOptions(compress_prefix=False))
        assert "NotAllEx" not in text
        assert "[NotAll H0]" in text

    def test_disjtree_flattening(self, fixtures_dir):
        problem = parse_file(fixtures_dir / "geometry170.p")
        theory = build_theory(problem)
        result = prove(theory, problem.conjecture().formula,
                       SearchConfig(timeout=60))
        steps = skeleton(result.tree)
        six_way = [s for s in steps if s[0] == "DisjTree"]
        assert six_way and six_way[0][1] == 6

    def test_two_way_splits_not_flattened(self):
        result, _, _ = proof_of(
            "fof(imp, axiom, (p => q)). fof(p_holds, axiom, p). "
            "fof(g, conjecture, q).")
        names = [name for name, _ in skeleton(result.tree)]
        assert "DisjTree" not in names

    def test_epsilon_legend(self, fixtures_dir):
        problem = parse_file(fixtures_dir / "b_drest.p")
        theory = build_theory(problem, tag="b")
        result = prove(theory, problem.conjecture().formula)
        text = render(result.tree, problem, RenderOptions(epsilon_legend=True))
        assert "% T_1 = (eps" in text

    def test_skeleton_text(self):
        result, _, _ = proof_of(
            "fof(pq, axiom, (p & q)). fof(g, conjecture, p).")
        text = render_skeleton(result.tree)
        assert text.splitlines()[0].strip().startswith("1. ")
