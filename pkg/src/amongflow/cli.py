"""Command-line interface.

Exit codes: 0 a result was produced (an infeasible instance is a result),
2 input or precondition error, 3 tree verification failure, 4 oracle budget
exceeded.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from . import __version__, io
from .boolenc import ENCODINGS, booleanize, default_encoding
from .builders import FAMILY_TAGS, build_family, builder_encoding
from .errors import (
    AmongFlowError,
    InputError,
    OracleBudgetError,
    TreeMismatchError,
)
from .filtering import (
    PropagatorSpec,
    _prepare_user_tree,
    filter_domains,
    solve,
)
from .hypergraph import verify_defines, booleanized_hypergraph
from .model import oracle_supports

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_TREE = 3
EXIT_ORACLE = 4


def _add_common(p: argparse.ArgumentParser, tree_or_builder: bool = True) -> None:
    p.add_argument("-i", "--instance", required=True, help="instance JSON file")
    if tree_or_builder:
        group = p.add_mutually_exclusive_group()
        group.add_argument("-t", "--tree", help="tree JSON file")
        group.add_argument("-b", "--builder", choices=FAMILY_TAGS)
    p.add_argument("--encoding", choices=ENCODINGS)
    p.add_argument("--range", nargs="+", metavar="VALUE", dest="range_values",
                   help="projection range values")


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _parse_propagator(spec: str) -> PropagatorSpec:
    fields: dict[str, str] = {}
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise InputError(f"propagator field {part!r} is not key=value")
        key, value = part.split("=", 1)
        fields[key.strip()] = value.strip()
    unknown = set(fields) - {"builder", "constraints", "range", "encoding"}
    if unknown:
        raise InputError(f"propagator spec has unknown fields {sorted(unknown)}")
    if "builder" not in fields:
        raise InputError("propagator spec needs builder=<tag>")
    if fields["builder"] not in FAMILY_TAGS:
        raise InputError(f"unknown builder {fields['builder']!r} in propagator spec")
    keys = tuple(k.strip() for k in fields["constraints"].split(",")) \
        if "constraints" in fields else None
    rng = frozenset(v.strip() for v in fields["range"].split(",")) \
        if "range" in fields else None
    return PropagatorSpec(builder=fields["builder"], encoding=fields.get("encoding"),
                          projection_range=rng, constraint_keys=keys)


def cmd_filter(args: argparse.Namespace) -> int:
    inst = io.load_instance(args.instance)
    tree = io.load_tree(args.tree) if args.tree else None
    if tree is None and args.builder is None:
        raise InputError("filter needs a tree (-t) or a builder (-b)")
    result = filter_domains(inst, tree=tree, builder=args.builder,
                            encoding=args.encoding,
                            projection_range=args.range_values)
    _write(io.to_json(io.result_to_dict(result, inst)), args.output)
    return EXIT_OK


def cmd_build_tree(args: argparse.Namespace) -> int:
    inst = io.load_instance(args.instance)
    _, tree = build_family(inst, args.builder, args.range_values)
    _write(io.to_json(io.dump_tree(tree)), args.output)
    return EXIT_OK


def _booleanize_for(args: argparse.Namespace, inst) -> object:
    encoding = args.encoding or default_encoding(inst)
    return booleanize(inst, encoding, args.range_values)


def cmd_check_tree(args: argparse.Namespace) -> int:
    inst = io.load_instance(args.instance)
    tree = io.load_tree(args.tree)
    binst = _booleanize_for(args, inst)
    try:
        prepared = _prepare_user_tree(tree, binst)
    except TreeMismatchError as exc:
        _write(io.to_json({"verified": False, "diagnostics": exc.diagnostics}),
               args.output)
        return EXIT_TREE
    ok, diags = verify_defines(prepared, booleanized_hypergraph(binst))
    _write(io.to_json({"verified": ok, "diagnostics": diags}), args.output)
    return EXIT_OK if ok else EXIT_TREE


def cmd_matrices(args: argparse.Namespace) -> int:
    inst = io.load_instance(args.instance)
    tree = io.load_tree(args.tree)
    binst = _booleanize_for(args, inst)
    prepared = _prepare_user_tree(tree, binst)
    _write(io.matrices_text(binst, prepared), args.output)
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    inst = io.load_instance(args.instance)
    result = oracle_supports(inst, budget=args.budget)
    _write(io.to_json(io.oracle_to_dict(result, inst)), args.output)
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    inst = io.load_instance(args.instance)
    propagators = [_parse_propagator(s) for s in args.propagator] \
        if args.propagator else None
    tree = io.load_tree(args.tree) if getattr(args, "tree", None) else None
    if propagators is None and tree is None and args.builder is None:
        raise InputError("solve needs propagators (--propagator) or a tree/builder")
    result = solve(inst, propagators=propagators, tree=tree, builder=args.builder,
                   encoding=args.encoding, projection_range=args.range_values)
    doc = {"status": result.status, "solution": result.assignment, "nodes": result.nodes}
    _write(io.to_json(doc), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amongflow",
        description="Flow-based complete domain filtering for conjunctions of "
                    "among constraints.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter", help="filter all domains")
    _add_common(p)
    p.add_argument("-o", "--output", help="output file (default stdout)")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("build-tree", help="construct a defining tree for a family")
    p.add_argument("-i", "--instance", required=True)
    p.add_argument("-b", "--builder", required=True, choices=FAMILY_TAGS)
    p.add_argument("--range", nargs="+", metavar="VALUE", dest="range_values")
    p.add_argument("-o", "--output", help="output file (default stdout)")
    p.set_defaults(func=cmd_build_tree)

    p = sub.add_parser("check-tree", help="verify a tree against an instance")
    p.add_argument("-i", "--instance", required=True)
    p.add_argument("-t", "--tree", required=True)
    p.add_argument("--encoding", choices=ENCODINGS)
    p.add_argument("--range", nargs="+", metavar="VALUE", dest="range_values")
    p.add_argument("-o", "--output", help="output file (default stdout)")
    p.set_defaults(func=cmd_check_tree)

    p = sub.add_parser("matrices", help="dump M, a, c, P, N, b for golden comparison")
    p.add_argument("-i", "--instance", required=True)
    p.add_argument("-t", "--tree", required=True)
    p.add_argument("--encoding", choices=ENCODINGS)
    p.add_argument("--range", nargs="+", metavar="VALUE", dest="range_values")
    p.add_argument("-o", "--output", help="output file (default stdout)")
    p.set_defaults(func=cmd_matrices)

    p = sub.add_parser("oracle", help="brute-force supports (small instances only)")
    p.add_argument("-i", "--instance", required=True)
    p.add_argument("--budget", type=int, default=10**7)
    p.add_argument("-o", "--output", help="output file (default stdout)")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("solve", help="search for a solution with filtering")
    _add_common(p)
    p.add_argument("--propagator", action="append", metavar="SPEC",
                   help="builder=<tag>[;constraints=c0,c3][;range=a,b], repeatable")
    p.add_argument("-o", "--output", help="output file (default stdout)")
    p.set_defaults(func=cmd_solve)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OracleBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except TreeMismatchError as exc:
        for line in exc.diagnostics:
            print(f"error: {line}", file=sys.stderr)
        return EXIT_TREE
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AmongFlowError as exc:  # pragma: no cover - internal invariants
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main_entry() -> None:  # console-script entry point
    raise SystemExit(main())


if __name__ == "__main__":
    main_entry()
