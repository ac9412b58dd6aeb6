import itertools

import pytest

from mdlc.containment import (PipelineError, bounded_oracle, compile_query, decide_containment,
                              verify_witness)
from mdlc.datalog import eval_boolean, eval_unary, parse_query
from mdlc.normal_forms import eliminate_desc, to_tmnf
from mdlc.schema import SchemaError
from mdlc.trees import Tree

AB = ["a", "b"]


def Q(text, mode="UNARY"):
    return parse_query(text + "\nQUERY P " + mode)


def test_reflexive():
    q = Q("P(x) :- child(x,y), label_b(y).")
    assert decide_containment(AB, q, q).contained
    assert not bounded_oracle(AB, q, q, 4).found


def test_label_a_not_in_label_b():
    q1, q2 = Q("P(x) :- label_a(x)."), Q("P(x) :- label_b(x).")
    res = decide_containment(AB, q1, q2)
    assert not res.contained
    assert res.witness.to_text() == "a" and res.node == 0
    assert res.verdict == "NOT_CONTAINED"
    o = bounded_oracle(AB, q1, q2, 3)
    assert o.found and len(o.counterexample) == 1 and o.node == 0


def test_desc_pair():
    q1 = Q("P(x) :- label_a(x).")
    q2 = Q("P(x) :- desc(y,x), label_a(y).")
    res = decide_containment(AB, q1, q2, "tau_gk_child_desc")
    assert not res.contained
    assert res.witness.labels[0] == "a"
    assert verify_witness(q1, q2, res.witness, res.node)
    assert decide_containment(AB, q2, Q("P(x) :- desc(y,x)."), "tau_gk_child_desc").contained


def test_boolean_unordered_pairs():
    child = Q("P(x) :- child(x,y), label_b(y).", "BOOLEAN")
    desc = Q("P(x) :- desc(x,y), label_b(y).", "BOOLEAN")
    assert decide_containment(AB, child, desc, "tau_u_root_leaf_desc").contained
    res = decide_containment(AB, desc, child, "tau_u_root_leaf_desc")
    assert not res.contained
    assert len(res.witness) == 3 and not res.witness.ordered


def test_recursive_pair():
    q1 = Q("P(x) :- child(x,y), P(y).\nP(x) :- label_b(x).")
    q2 = Q("P(x) :- label_b(x).\nP(x) :- child(x,y), P(y).")
    assert decide_containment(AB, q1, q2, "tau_u").contained


def test_leaf_pair():
    q1 = Q("P(x) :- child(x,y), leaf(y), label_a(y).", "BOOLEAN")
    q2 = Q("P(x) :- child(x,y), label_a(y).", "BOOLEAN")
    assert decide_containment(AB, q1, q2, "tau_u_root_leaf").contained
    assert not decide_containment(AB, q2, q1, "tau_u_root_leaf").contained


def test_stats_reported():
    res = decide_containment(AB, Q("P(x) :- label_a(x)."), Q("P(x) :- label_a(x)."))
    for key in ("q1_tmnf_rules", "q2_ata_states", "ata_product_states", "total_seconds"):
        assert key in res.stats
    assert "ata_product_states=" in res.stats_text()


def test_both_routes_agree():
    q1 = Q("P(x) :- root(x), label_a(x).", "BOOLEAN")
    q2 = Q("P(x) :- label_a(x), label_a(x).", "BOOLEAN")
    res = decide_containment(["a"], q1, q2, "tau_gk", both_routes=True)
    assert res.contained
    assert "mso_product_states" in res.stats and "ata_product_states" in res.stats


def test_mso_route_too_large():
    from mdlc.nbta import TooLarge
    q = Q("P(x) :- child(x,y), child(y,z), label_b(z).")
    with pytest.raises(TooLarge):
        decide_containment(AB, q, q, route="mso")


def test_input_errors():
    q = Q("P(x) :- label_a(x).")
    with pytest.raises(SchemaError):
        decide_containment(AB, q, Q("P(x) :- label_a(x).", "BOOLEAN"))
    with pytest.raises(SchemaError):
        decide_containment(AB, q, q, schema="tau_b")
    with pytest.raises(SchemaError):
        decide_containment(AB, Q("P(x) :- fc(x,y)."), q, schema="tau_u")
    with pytest.raises(SchemaError):
        decide_containment(["b"], q, q)
    with pytest.raises(ValueError):
        bounded_oracle(AB, q, q, 0)


def test_unordered_witness_permutation_invariant():
    q1 = Q("P(x) :- child(x,y), label_a(y), child(x,z), label_b(z).", "BOOLEAN")
    q2 = Q("P(x) :- child(x,y), child(y,z).", "BOOLEAN")
    res = decide_containment(AB, q1, q2, "tau_u")
    assert not res.contained
    w = res.witness
    for perm in itertools.permutations(w.children[0]):
        nested = (w.labels[0], tuple(w.to_nested(c) for c in perm))
        t = Tree.from_nested(nested, ordered=False)
        assert eval_boolean(q1, t) and not eval_boolean(q2, t)


def test_stagewise_answers_preserved():
    pairs = [
        (Q("P(x) :- desc(x,y), label_b(y).", "BOOLEAN"),
         Q("P(x) :- child(x,y), P1(y).\nP1(x) :- label_b(x).\nP1(x) :- child(x,y), P1(y).",
           "BOOLEAN")),
        (Q("P(x) :- child(x,y), child(y,z), label_b(z).", "BOOLEAN"),
         Q("P(x) :- desc(x,y), label_a(y).", "BOOLEAN")),
    ]
    for q1, q2 in pairs:
        base = bounded_oracle(AB, q1, q2, 5, "tau_gk_child_desc").found
        d1, d2 = eliminate_desc(q1), eliminate_desc(q2)
        assert bounded_oracle(AB, d1, d2, 5, "tau_gk_child").found == base
        t1, t2 = to_tmnf(d1), to_tmnf(d2)
        assert bounded_oracle(AB, t1, t2, 5, "tau_gk").found == base
        assert decide_containment(AB, q1, q2, "tau_gk_child_desc").contained == (not base)


def test_compile_query_output():
    st = {}
    qb, sigma = compile_query(Q("P(x) :- child(x,y), label_a(y)."), AB, stats=st)
    assert qb.mode == "boolean"
    assert len(sigma) == 4
    assert st["tmnf_rules"] > 0
