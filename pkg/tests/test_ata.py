import random

import pytest

from corpus import tmnf_corpus
from mdlc.ata import (ACCEPT, REJECT, AtaError, TwoWayAta, ata_accepts, ata_to_nbta, atom,
                      build_2ata, build_a_no_from_ata, build_a_yes, build_hat_checker, formula_text, parse_ata,
                      parse_formula, to_dnf, winning_configurations, STAY)
from mdlc.datalog import BOOLEAN, eval_boolean, parse_query, proof_tree
from mdlc.mso import build_a_no
from mdlc.nbta import LazyComplement, is_empty, materialize
from mdlc.normal_forms import tmnf_form
from mdlc.trees import (enumerate_binary_trees, extend_hat, facts_of, hat_alphabet,
                        hat_symbol, parse_binary_tree, project_hat)

AB = ["a", "b"]
TREES4 = list(enumerate_binary_trees(AB, 4))
TREES5 = list(enumerate_binary_trees(AB, 5))
CORPUS = tmnf_corpus(31, 20, AB, max_idb=3, max_rules=5)


def Q(text):
    return parse_query(text + "\nQUERY P BOOLEAN")


def test_formula_parse_and_dnf():
    f = parse_formula("(P,Stay) & ((Q,Up) | (R,DownLeft))")
    assert to_dnf(f) == {frozenset({("P", "Stay"), ("Q", "Up")}),
                         frozenset({("P", "Stay"), ("R", "DownLeft")})}
    assert to_dnf(parse_formula(formula_text(f))) == to_dnf(f)


def test_state_set_size():
    for q in CORPUS:
        ata = build_2ata(q, AB)
        assert len(ata.states) == len(q.program.idb) + len(AB) + 7


def test_theta_for_intersection_rule():
    ata = build_2ata(Q("P(x) :- Y(x), Z(x).\nY(x) :- root(x), root(x).\nZ(x) :- hnlc(x), hnlc(x)."), AB)
    sym = hat_symbol("a", {"Root"})
    assert to_dnf(ata.formula("P", sym)) == {frozenset({("Y", "Stay"), ("Z", "Stay")})}


def test_theta_for_left_child_rule():
    ata = build_2ata(Q("P(x) :- lc(x,y), Y(y).\nY(x) :- label_a(x), label_a(x)."), AB)
    sym = hat_symbol("b", {"Root"})
    assert to_dnf(ata.formula("P", sym)) == {frozenset({("Islc", "DownLeft"), ("Y", "DownLeft")})}


def test_theta_for_upward_rule():
    ata = build_2ata(Q("P(x) :- rc(y,x), Y(y).\nY(x) :- root(x), root(x)."), AB)
    sym = hat_symbol("a", {"Isrc"})
    assert to_dnf(ata.formula("P", sym)) == {frozenset({("Isrc", "Stay"), ("Y", "Up")})}


def test_accept_and_reject_states():
    ata = build_2ata(Q("P(x) :- root(x), label_a(x)."), AB)
    t = extend_hat(parse_binary_tree("a(b,#)"))
    win = winning_configurations(ata, t)
    assert all((ACCEPT, v) in win for v in t.nodes)
    assert not any((REJECT, v) in win for v in t.nodes)
    assert ata_accepts(ata, extend_hat(parse_binary_tree("a")))
    assert not ata_accepts(ata, extend_hat(parse_binary_tree("b")))


def test_build_2ata_requires_tmnf():
    with pytest.raises(AtaError):
        build_2ata(Q("P(x) :- lc(x,y), lc(y,z)."), AB)
    with pytest.raises(AtaError):
        build_2ata(parse_query("P(x) :- root(x).\nQUERY P"), AB)


def test_ata_accepts_matches_eval():
    for q in CORPUS:
        ata = build_2ata(q, AB)
        for t in TREES5:
            assert ata_accepts(ata, extend_hat(t)) == eval_boolean(q, t)


def test_ata_text_roundtrip():
    ata = build_2ata(CORPUS[2], AB)
    again = parse_ata(ata.to_text())
    assert again.states == ata.states and again.initial == ata.initial
    for t in TREES4[::5]:
        assert ata_accepts(again, extend_hat(t)) == ata_accepts(ata, extend_hat(t))


def test_accept_everything_ata():
    ata = TwoWayAta(AB, [ACCEPT], ACCEPT, [ACCEPT], {(ACCEPT, s): atom(ACCEPT, STAY) for s in AB})
    nb = ata_to_nbta(ata)
    assert nb.num_states > 0
    assert all(nb.accepts(t) for t in TREES5)


def _random_hat_trees(rng, count):
    hat = hat_alphabet(AB).symbols
    out = []
    for _ in range(count):
        t = rng.choice(TREES5)
        out.append(t.relabel(rng.choice(hat) for _ in t.labels))
    return out


def test_ata_to_nbta_language():
    rng = random.Random(4)
    noise = _random_hat_trees(rng, 150)
    for q in CORPUS[:10]:
        ata = build_2ata(q, AB)
        nb = ata_to_nbta(ata)
        lazy = ata_to_nbta(ata, explicit=False)
        for t in [extend_hat(t) for t in TREES5[::3]] + noise:
            expected = ata_accepts(ata, t)
            assert nb.accepts(t) == expected
            assert lazy.accepts(t) == expected


def test_hat_checker():
    hc = build_hat_checker(AB)
    assert hc.num_states == 3
    for t in TREES5:
        assert hc.accepts(extend_hat(t))
    bad = extend_hat(parse_binary_tree("a")).relabel([hat_symbol("a", {"Hnlc", "Hnrc"})])
    assert not hc.accepts(bad)
    rng = random.Random(5)
    for t in _random_hat_trees(rng, 300):
        assert hc.accepts(t) == (extend_hat(project_hat(t)) == t)


def test_a_yes_and_a_no_are_complementary():
    for q in CORPUS[:12]:
        if len(q.program.idb) > 2:
            continue
        yes = build_a_yes(q, AB, explicit=True)
        no = build_a_no(q, AB)
        for t in TREES5:
            v = eval_boolean(q, t)
            assert yes.accepts(t) == v
            assert no.accepts(t) != v


def test_flipped_no_automaton_matches_subset_complement():
    # the summary automaton is deterministic, so flipping acceptance complements it
    for q in CORPUS[:10]:
        flipped = materialize(build_a_no_from_ata(q, AB))
        subset = materialize(LazyComplement(build_a_yes(q, AB)))
        for t in TREES4:
            v = eval_boolean(q, t)
            assert flipped.accepts(t) != v
            assert subset.accepts(t) != v


def test_always_false_query_gives_empty_automaton():
    q = Q("P(x) :- lc(x,y), Y(y).\nY(x) :- root(x), root(x).")
    assert is_empty(build_a_yes(q, AB))
    assert is_empty(build_a_yes(q, AB, explicit=True))


def _check_proof(node, facts, program):
    pred, args = node.fact
    if pred not in program.idb:
        assert node.children == ()
        assert (pred, args) in facts
        return
    # TMNF rules have two body atoms, so derivations branch in two
    assert len(node.children) == 2
    assert any(r.head.pred == pred and tuple(a.pred for a in r.body) ==
               tuple(c.fact[0] for c in node.children) and tmnf_form(r) for r in program.rules)
    for c in node.children:
        _check_proof(c, facts, program)


def test_proof_trees_match_runs():
    for q in CORPUS[:10]:
        ata = build_2ata(q, AB)
        for t in TREES4:
            pt = proof_tree(q.program, t, q.pred, 0)
            assert (pt is not None) == eval_boolean(q, t)
            if pt is not None:
                assert ata_accepts(ata, extend_hat(t))
                _check_proof(pt, facts_of(t), q.program)
