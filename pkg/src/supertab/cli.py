"""Command-line entry point: parse, compile the theory, prove, render.

Exit codes: 0 proof found, 1 no proof or timeout, 2 input errors.
Traces go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import sys

from .compiler import build_theory, render_rule_dump
from .engine import Proof, SearchConfig, prove
from .render import RenderOptions, render, render_skeleton
from .tptp import TptpError, parse_file, resolve_includes


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def build_arg_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="supertab",
        description="First-order tableau prover with theory axioms compiled "
                    "into custom deduction rules.")
    p.add_argument("input", help="TPTP fof problem file")
    p.add_argument("--include-dir", action="append", default=[],
                   metavar="DIR", help="extra include search directory "
                   "(repeatable, searched in order)")
    p.add_argument("--timeout", type=_positive_float, default=30.0,
                   metavar="SECONDS", help="wall-clock limit (default 30)")
    p.add_argument("--max-steps", type=_positive_int, default=10000,
                   metavar="N",
                   help="rule application budget (default 10000)")
    p.add_argument("--instantiation-limit", type=_positive_int, default=8,
                   metavar="N",
                   help="instantiations per quantified formula (default 8)")
    p.add_argument("--cut", action="store_true",
                   help="enable the cut rule on branch atoms")
    p.add_argument("--trace-level", choices=("trace", "skeleton", "status"),
                   default="trace", help="output detail (default trace)")
    p.add_argument("--list-rules", action="store_true",
                   help="print the compiled rule set before proving")
    p.add_argument("--stats", action="store_true",
                   help="print search statistics")
    p.add_argument("--no-relation-detection", action="store_true",
                   help="skip reflexivity/symmetry/transitivity detection")
    p.add_argument("--theory-tag", default="szen", metavar="TAG",
                   help="tag used in Extension/<tag>/<rule> names "
                   "(default szen)")
    return p


def run(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        problem = parse_file(args.input, include_paths=args.include_dir)
        problem = resolve_includes(problem)
    except TptpError as e:
        print(str(e), file=sys.stderr)
        return 2
    conjecture = problem.conjecture()
    if conjecture is None:
        print(f"{args.input}: no conjecture to prove", file=sys.stderr)
        return 2

    theory = build_theory(problem, tag=args.theory_tag,
                          detect_relations=not args.no_relation_detection)
    if args.list_rules:
        print(render_rule_dump(theory), end="")

    cfg = SearchConfig(max_rule_applications=args.max_steps,
                       timeout=args.timeout,
                       cut_enabled=args.cut,
                       instantiation_limit=args.instantiation_limit)
    result = prove(theory, conjecture.formula, cfg)

    if isinstance(result, Proof):
        if args.trace_level == "trace":
            print(render(result.tree, problem, RenderOptions()), end="")
        elif args.trace_level == "skeleton":
            print("(* PROOF-FOUND *)")
            print(render_skeleton(result.tree), end="")
        else:
            print("PROOF-FOUND")
        code = 0
    else:
        if args.trace_level == "status":
            print(result.status)
        else:
            print(f"(* {result.status} *)")
        code = 1
    if args.stats:
        s = result.stats
        print(f"% steps={s.rule_applications} branches={s.branches_explored} "
              f"restarts={s.restarts} time={s.wall_time:.3f}s")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
