"""Command line interface: ``mdlc <command> ...``.

Exit codes for ``contain``: 0 contained, 1 not contained, 2 error or cap reached.
"""

import argparse
import os
import sys

from . import normal_forms as nf
from .ata import build_2ata, build_a_yes
from .containment import (CONTAINMENT_SCHEMAS, DEFAULT_MAX_STATES, bounded_oracle,
                          PipelineError, compile_query, decide_containment)
from .datalog import BOOLEAN, DatalogError, eval_query, parse_query
from .nbta import AutomatonError, TooLarge
from .schema import SCHEMAS, SchemaError, is_label, label_symbol
from .tpct import TpctError, build_queries, eliminate_root_leaf_pair, parse_tpct, solve_game
from .trees import Alphabet, TreeError, parse_binary_tree, parse_tree

EXIT_CONTAINED, EXIT_NOT_CONTAINED, EXIT_ERROR = 0, 1, 2

REWRITES = ("unary-to-boolean", "tmnf", "binary", "acyclic", "decompose", "desc", "root-leaf")


class UsageError(Exception):
    pass


def _read(path):
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as e:
        raise UsageError("cannot read %s: %s" % (path, e.strerror)) from None


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def _positive(s):
    v = int(s)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _load_query(path, schema=None, mode=None):
    return parse_query(_read(path), schema, mode)


def _alphabet(args, *queries):
    if args.alphabet:
        return Alphabet([s.strip() for s in args.alphabet.split(",") if s.strip()])
    syms = []
    for q in queries:
        for p in sorted(q.program.relations()):
            if is_label(p) and label_symbol(p) not in syms:
                syms.append(label_symbol(p))
    return Alphabet(syms or ["a"])


def _load_tree(path, schema):
    text = _read(path).strip()
    if schema == "tau_b":
        return parse_binary_tree(text)
    return parse_tree(text, ordered=not schema.startswith("tau_u"))


def cmd_eval(args, out):
    q = _load_query(args.query, args.schema)
    tree = _load_tree(args.tree, args.schema)
    res = eval_query(q, tree)
    if q.mode == BOOLEAN:
        print("YES" if res else "NO", file=out)
    else:
        print(" ".join(str(v) for v in sorted(res)), file=out)
    return 0


def cmd_normalize(args, out):
    q = _load_query(args.query, args.schema)
    log = []
    r = args.rewrite
    if r == "unary-to-boolean":
        q, sigma = nf.unary_to_boolean(q, _alphabet(args, q), log)
        log.append("alphabet " + " ".join(sigma.symbols))
    elif r == "tmnf":
        q = nf.to_tmnf(q, log)
    elif r == "binary":
        q = nf.to_binary_query(q, log)
    elif r == "acyclic":
        q = nf.make_acyclic(q, log)
    elif r == "decompose":
        q = nf.decompose_program(q, log)
    elif r == "desc":
        q = nf.eliminate_desc(q, log)
    else:
        if not args.second:
            raise UsageError("root-leaf needs --second Q2")
        q2 = _load_query(args.second, args.schema)
        sigma, q, q2 = nf.eliminate_root_leaf(q, q2, _alphabet(args, q, q2), log)
        log.append("alphabet " + " ".join(sigma.symbols))
        if args.second_out:
            _write(args.second_out, q2.to_text())
    out.write(q.to_text())
    for line in log:
        print("% " + line, file=out)
    return 0


def cmd_compile(args, out):
    q = _load_query(args.query, args.schema)
    sigma = _alphabet(args, q)
    stats = {}
    qb, bsigma = compile_query(q, sigma, stats=stats)
    ata = build_2ata(qb, bsigma)
    os.makedirs(args.out_dir, exist_ok=True)
    base = os.path.join(args.out_dir, os.path.splitext(os.path.basename(args.query))[0])
    _write(base + ".ata", ata.to_text())
    print("wrote %s.ata (%d states)" % (base, len(ata.states)), file=out)
    if not args.no_nbta:
        a = build_a_yes(qb, bsigma, ata, explicit=True, max_states=args.max_states)
        _write(base + ".nbta", a.to_text())
        print("wrote %s.nbta (%d states)" % (base, a.num_states), file=out)
    return 0


def cmd_contain(args, out):
    q1 = _load_query(args.q1, args.schema)
    q2 = _load_query(args.q2, args.schema)
    sigma = _alphabet(args, q1, q2)
    res = decide_containment(sigma, q1, q2, schema=args.schema, route=args.route,
                             both_routes=args.both_routes, max_states=args.max_states)
    print(res.verdict, file=out)
    if res.witness is not None:
        res.stats["witness"] = res.witness.to_text()
        if res.node is not None:
            res.stats["witness_node"] = res.node
    out.write(res.stats_text())
    if args.witness_out and res.witness is not None:
        _write(args.witness_out, res.witness.to_text() + "\n")
    if args.stats_out:
        _write(args.stats_out, res.verdict + "\n" + res.stats_text())
    return EXIT_CONTAINED if res.contained else EXIT_NOT_CONTAINED


def cmd_oracle(args, out):
    q1 = _load_query(args.q1, args.schema)
    q2 = _load_query(args.q2, args.schema)
    res = bounded_oracle(_alphabet(args, q1, q2), q1, q2, args.max_nodes, args.schema)
    if res.found:
        print("COUNTEREXAMPLE " + res.counterexample.to_text(), file=out)
        if res.node is not None:
            print("node=%d" % res.node, file=out)
        print("checked=%d" % res.checked, file=out)
        return EXIT_NOT_CONTAINED
    print("NONE max_nodes=%d checked=%d" % (res.max_nodes, res.checked), file=out)
    return EXIT_CONTAINED


def cmd_tpct_gen(args, out):
    inst = parse_tpct(_read(args.instance))
    if args.no_root_leaf:
        sigma, q1, q2 = eliminate_root_leaf_pair(inst)
    else:
        sigma, q1, q2 = build_queries(inst)
    os.makedirs(args.out_dir, exist_ok=True)
    p1 = os.path.join(args.out_dir, "q1.mdl")
    p2 = os.path.join(args.out_dir, "q2.mdl")
    _write(p1, q1.to_text())
    _write(p2, q2.to_text())
    _write(os.path.join(args.out_dir, "alphabet.txt"), ",".join(sigma.symbols) + "\n")
    v = solve_game(inst, args.max_positions)
    print("wrote %s %s" % (p1, p2), file=out)
    print("winner=%d expected=%s" % (v.winner, "NOT_CONTAINED" if v.player1_wins else "CONTAINED"),
          file=out)
    return 0


def cmd_tpct_check(args, out):
    ok = True
    for path in args.instances:
        inst = parse_tpct(_read(path))
        v = solve_game(inst, args.max_positions)
        sigma, q1, q2 = build_queries(inst)
        res = decide_containment(sigma, q1, q2, schema="tau_u_root_leaf",
                                 max_states=args.max_states)
        agree = v.player1_wins == (not res.contained)
        ok = ok and agree
        print("%s winner=%d verdict=%s agree=%s" % (path, v.winner, res.verdict,
                                                    "yes" if agree else "NO"), file=out)
    return 0 if ok else 1


def build_parser():
    p = argparse.ArgumentParser(prog="mdlc", description="Monadic datalog on trees: "
                                "evaluation, normal forms and containment via tree automata.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, schema_default="tau_gk_child"):
        sp.add_argument("--schema", default=schema_default, choices=sorted(SCHEMAS))
        sp.add_argument("--alphabet", help="comma separated labels (default: labels used)")

    sp = sub.add_parser("eval", help="evaluate a query on a tree")
    sp.add_argument("query")
    sp.add_argument("tree")
    common(sp)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("normalize", help="apply one rewriting and print the result")
    sp.add_argument("query")
    sp.add_argument("--rewrite", required=True, choices=REWRITES)
    sp.add_argument("--second", help="second query (root-leaf only)")
    sp.add_argument("--second-out", help="where to write the rewritten second query")
    common(sp)
    sp.set_defaults(func=cmd_normalize)

    sp = sub.add_parser("compile", help="write the 2ATA and bottom-up automaton of a query")
    sp.add_argument("query")
    sp.add_argument("--out-dir", default=".")
    sp.add_argument("--max-states", type=_positive, default=DEFAULT_MAX_STATES)
    sp.add_argument("--no-nbta", action="store_true", help="only write the 2ATA")
    common(sp)
    sp.set_defaults(func=cmd_compile)

    sp = sub.add_parser("contain", help="decide whether Q1 is contained in Q2")
    sp.add_argument("q1")
    sp.add_argument("q2")
    sp.add_argument("--max-states", type=_positive, default=DEFAULT_MAX_STATES)
    sp.add_argument("--route", choices=("ata", "mso"), default="ata")
    sp.add_argument("--both-routes", action="store_true",
                    help="build the no-automaton both ways and check they agree")
    sp.add_argument("--witness-out")
    sp.add_argument("--stats-out")
    common(sp)
    sp.set_defaults(func=cmd_contain)

    sp = sub.add_parser("oracle", help="search small trees for a counterexample")
    sp.add_argument("q1")
    sp.add_argument("q2")
    sp.add_argument("--max-nodes", type=_positive, default=5)
    common(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("tpct-gen", help="write the query pair of a tiling game instance")
    sp.add_argument("instance")
    sp.add_argument("--out-dir", default=".")
    sp.add_argument("--no-root-leaf", action="store_true",
                    help="encode Root/Leaf in the labels instead")
    sp.add_argument("--max-positions", type=_positive, default=10 ** 6)
    sp.set_defaults(func=cmd_tpct_gen)

    sp = sub.add_parser("tpct-check", help="compare the game solver with the containment check")
    sp.add_argument("instances", nargs="+")
    sp.add_argument("--max-states", type=_positive, default=DEFAULT_MAX_STATES)
    sp.add_argument("--max-positions", type=_positive, default=10 ** 6)
    sp.set_defaults(func=cmd_tpct_check)
    return p


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    if getattr(args, "schema", None) and args.command in ("contain", "oracle") \
            and args.schema not in CONTAINMENT_SCHEMAS:
        print("mdlc: schema %s is not supported for containment" % args.schema, file=sys.stderr)
        return EXIT_ERROR
    try:
        return args.func(args, out)
    except TooLarge as e:
        print("mdlc: cap reached: %s" % e, file=sys.stderr)
    except (UsageError, DatalogError, SchemaError, TreeError, TpctError, AutomatonError,
            PipelineError, ValueError) as e:
        print("mdlc: %s" % e, file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
