"""Containment of monadic datalog queries on trees, decided with tree automata."""

import time
from dataclasses import dataclass, field

from .ata import build_2ata, build_a_no_from_ata, build_a_yes
from .datalog import BOOLEAN, UNARY, DatalogError, eval_boolean, eval_unary
from .mso import DEFAULT_MAX_BITS, DEFAULT_MAX_SYMBOLS, build_a_no
from .nbta import LazyComplement, LazyIntersect, TooLarge, materialize, trim, witness
from .normal_forms import eliminate_desc, to_binary_query, to_tmnf, unary_to_boolean
from .schema import SCHEMAS, SchemaError, check_relations, is_label, label_symbol
from .trees import Tree, as_alphabet, enumerate_trees, from_binary, unmark

DEFAULT_MAX_STATES = 2_000_000

CONTAINMENT_SCHEMAS = ("tau_u", "tau_u_root_leaf", "tau_u_root_leaf_desc", "tau_o",
                       "tau_o_child", "tau_gk", "tau_gk_child", "tau_gk_child_desc")


class PipelineError(RuntimeError):
    """A produced witness failed direct re-evaluation; indicates a bug, not bad input."""


@dataclass
class ContainmentVerdict:
    contained: bool
    witness: object = None
    node: object = None
    stats: dict = field(default_factory=dict)
    log: list = field(default_factory=list)

    @property
    def verdict(self):
        return "CONTAINED" if self.contained else "NOT_CONTAINED"

    def stats_text(self):
        return "".join("%s=%s\n" % (k, self.stats[k]) for k in sorted(self.stats))


def _check_inputs(alphabet, q1, q2, schema):
    if schema not in CONTAINMENT_SCHEMAS:
        raise SchemaError("unsupported schema %r for containment" % schema)
    if q1.mode != q2.mode:
        raise SchemaError("queries must both be unary or both Boolean")
    for q in (q1, q2):
        check_relations(q.program.relations(), schema)
        for p in q.program.relations():
            if is_label(p) and label_symbol(p) not in alphabet:
                raise SchemaError("label %s not in alphabet" % label_symbol(p))


def compile_query(q, alphabet, log=None, stats=None, prefix=""):
    """Rewrite a query over unranked trees into a Boolean TMNF query on binary trees.

    Returns (binary query, alphabet it reads).
    """
    alphabet = as_alphabet(alphabet)
    st = {} if stats is None else stats
    if any(a.pred == "Desc" for r in q.program.rules for a in r.body):
        q = eliminate_desc(q, log)
        st[prefix + "after_desc_rules"] = len(q.program)
    if q.mode == UNARY:
        q, alphabet = unary_to_boolean(q, alphabet, log)
        st[prefix + "boolean_rules"] = len(q.program)
    q = to_tmnf(q, log)
    st[prefix + "tmnf_rules"] = len(q.program)
    st[prefix + "tmnf_idb"] = len(q.program.idb)
    qb = to_binary_query(q, log)
    return qb, alphabet


def _decode(btree, mode, unordered):
    tree = from_binary(btree)
    node = None
    if mode == UNARY:
        tree, node = unmark(tree)
    if unordered:
        tree = Tree(tree.labels, tree.children, ordered=False)
    return tree, node


def _holds(q, tree, node):
    if q.mode == UNARY:
        return node in eval_unary(q, tree)
    return eval_boolean(q, tree)


def verify_witness(q1, q2, tree, node=None):
    return _holds(q1, tree, node) and not _holds(q2, tree, node)


A1_EXPLICIT_CAP = 5000


def _small_trimmed(a, stats):
    """Explicit trimmed copy of a lazy automaton when it is small; dead states then
    never enter the product."""
    try:
        m = materialize(a, A1_EXPLICIT_CAP)
    except TooLarge:
        return a
    t = trim(m)
    stats["q1_yes_states"] = m.num_states
    stats["q1_yes_trimmed_states"] = t.num_states
    return t


def decide_containment(alphabet, q1, q2, schema="tau_gk_child", route="ata", both_routes=False,
                       max_states=DEFAULT_MAX_STATES, max_bits=DEFAULT_MAX_BITS,
                       max_symbols=DEFAULT_MAX_SYMBOLS):
    """Is q1(T) a subset of q2(T) for every tree T?

    ``route`` picks how the automaton for "q2 fails" is obtained: "ata" flips the
    acceptance of the deterministic summary automaton of q2's 2ATA, "mso" uses the
    explicit set-quantifier construction.  ``both_routes`` runs both and checks they agree.
    """
    alphabet = as_alphabet(alphabet)
    _check_inputs(alphabet, q1, q2, schema)
    if route not in ("ata", "mso"):
        raise ValueError("route must be 'ata' or 'mso'")
    log, stats = [], {}
    t0 = time.perf_counter()
    b1, sigma = compile_query(q1, alphabet, log, stats, "q1_")
    b2, _ = compile_query(q2, alphabet, log, stats, "q2_")
    stats["pipeline_alphabet"] = len(sigma)
    stats["compile_seconds"] = round(time.perf_counter() - t0, 4)
    ata1 = build_2ata(b1, sigma)
    ata2 = build_2ata(b2, sigma)
    stats["q1_ata_states"] = len(ata1.states)
    stats["q2_ata_states"] = len(ata2.states)
    a1_yes = _small_trimmed(build_a_yes(b1, sigma, ata1), stats)

    routes = ["ata", "mso"] if both_routes else [route]
    results = {}
    for rt in routes:
        t1 = time.perf_counter()
        if rt == "ata":
            a2_no = build_a_no_from_ata(b2, sigma, ata2)
            a1 = a1_yes
        else:
            ms = {}
            a2_no = build_a_no(b2, sigma, max_bits, max_symbols, max_states, ms)
            stats.update({"q2_" + k: v for k, v in ms.items()})
            a1 = a1_yes
            if both_routes:
                # differential: also obtain q1's automaton as the complement of its explicit no-automaton
                m1 = {}
                a1 = LazyComplement(build_a_no(b1, sigma, max_bits, max_symbols, max_states, m1))
                stats.update({"q1_" + k: v for k, v in m1.items()})
        prod = LazyIntersect(a1, a2_no)
        es = {}
        w = witness(prod, max_states, es)
        stats["%s_product_states" % rt] = es["explored_states"]
        stats["%s_pruned_states" % rt] = es["pruned_states"]
        stats["%s_seconds" % rt] = round(time.perf_counter() - t1, 4)
        results[rt] = w
        log.append("%s route: product explored %d states, %s" % (
            rt, es["explored_states"], "empty" if w is None else "non-empty"))
    if both_routes and (results["ata"] is None) != (results["mso"] is None):
        raise PipelineError("routes disagree on emptiness")
    w = results[routes[0]]
    stats["total_seconds"] = round(time.perf_counter() - t0, 4)
    if w is None:
        return ContainmentVerdict(True, stats=stats, log=log)
    unordered = schema.startswith("tau_u")
    tree, node = _decode(w, q1.mode, unordered)
    if not verify_witness(q1, q2, tree, node):
        raise PipelineError("witness %s failed direct evaluation" % tree.to_text())
    stats["witness_nodes"] = len(tree)
    return ContainmentVerdict(False, tree, node, stats, log)


@dataclass
class OracleResult:
    counterexample: object = None
    node: object = None
    max_nodes: int = 0
    checked: int = 0

    @property
    def found(self):
        return self.counterexample is not None


def bounded_oracle(alphabet, q1, q2, max_nodes, schema="tau_gk_child"):
    """Search every tree up to ``max_nodes`` nodes for a counterexample."""
    if max_nodes < 1:
        raise ValueError("max_nodes must be positive")
    alphabet = as_alphabet(alphabet)
    _check_inputs(alphabet, q1, q2, schema)
    flavor = "unordered" if schema.startswith("tau_u") else "ordered"
    checked = 0
    for t in enumerate_trees(alphabet, max_nodes, flavor):
        checked += 1
        if q1.mode == BOOLEAN:
            if eval_boolean(q1, t) and not eval_boolean(q2, t):
                return OracleResult(t, None, max_nodes, checked)
        else:
            diff = eval_unary(q1, t) - eval_unary(q2, t)
            if diff:
                return OracleResult(t, min(diff), max_nodes, checked)
    return OracleResult(None, None, max_nodes, checked)


__all__ = ["ContainmentVerdict", "OracleResult", "PipelineError", "TooLarge", "DatalogError",
           "decide_containment", "bounded_oracle", "compile_query", "verify_witness",
           "CONTAINMENT_SCHEMAS", "DEFAULT_MAX_STATES", "SCHEMAS"]
