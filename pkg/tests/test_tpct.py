import pytest
from hypothesis import given, settings, strategies as st

from mdlc.containment import decide_containment
from mdlc.datalog import eval_boolean
from mdlc.tpct import (TpctError, TpctInstance, build_queries, cross_check, eliminate_root_leaf_pair,
                       parse_tpct, query_verdicts, relevant_by_query, relevant_nodes,
                       relevant_part_is_good, solve_game, split_strategy_symbol,
                       strategy_alphabet, strategy_tree, violated_conditions)
from mdlc.trees import enumerate_trees, parse_tree


def inst(text):
    return parse_tpct(text.replace(";", "\n"))


WIN = inst("tiles: d;H: d d;V: d d;n: 2;f: d d;l: d d")
LOSS = inst("tiles: d;H: ;V: ;n: 2;f: d d;l: d d")
UNREACHABLE = inst("tiles: d e;H: d d;V: d d;n: 2;f: d d;l: e e")
SWAP = inst("tiles: d e;H: d e, e d;V: d e, e d;n: 2;f: d e;l: e d")


def test_parse_roundtrip():
    assert parse_tpct(SWAP.to_text()) == SWAP
    assert SWAP.H == {("d", "e"), ("e", "d")}


@pytest.mark.parametrize("text", [
    "tiles: d;H: ;V: ;n: 1;f: d;l: d",
    "tiles: d;H: d x;V: ;n: 2;f: d d;l: d d",
    "tiles: d;H: ;V: ;n: 2;f: d;l: d d",
    "tiles: d;H: d;V: ;n: 2;f: d d;l: d d",
    "tiles: d;H: ;n: 2;f: d d;l: d d",
])
def test_parse_errors(text):
    with pytest.raises(TpctError):
        inst(text)


def test_strategy_symbols():
    assert split_strategy_symbol("d|bang") == ("d", "bang")
    assert len(strategy_alphabet(SWAP)) == 8
    with pytest.raises(TpctError):
        split_strategy_symbol("d|3")


def test_solver_examples():
    assert solve_game(WIN).winner == 1
    assert solve_game(LOSS).winner == 2
    assert solve_game(UNREACHABLE).winner == 2
    assert solve_game(SWAP).winner == 1
    # every tile fits everywhere, so player 2 can keep e out of the second column
    free = inst("tiles: d e;H: d d, d e, e d, e e;V: d d, d e, e d, e e;n: 2;f: d d;l: e e")
    assert solve_game(free).winner == 2


def test_trivial_win_strategy_tree():
    t = strategy_tree(WIN)
    assert t.to_text() == "d|2(d|bang)"
    assert violated_conditions(WIN, t) == []
    assert query_verdicts(WIN, t) == (True, False)
    assert strategy_tree(LOSS) is None


def test_strategy_tree_of_larger_game():
    t = strategy_tree(SWAP)
    assert violated_conditions(SWAP, t) == []
    assert relevant_nodes(SWAP, t) == set(t.nodes)
    assert query_verdicts(SWAP, t) == (True, False)


def test_bang_at_wrong_depth_is_rejected():
    # a ! leaf in the middle of a row
    t = parse_tree("d|2(d|1(d|bang))", ordered=False)
    assert 7 in violated_conditions(WIN, t)
    q1, q2 = query_verdicts(WIN, t)
    assert q2 or not q1


def test_bot_leaf_that_fits_is_rejected():
    t = parse_tree("d|2(d|bang,d|bot)", ordered=False)
    assert 9 in violated_conditions(WIN, t)
    assert query_verdicts(WIN, t) == (True, True)


def test_candidate_rule_at_bot_leaf():
    # bot leaves count as candidates, but a node whose children are all bot does not
    inst1 = inst("tiles: d e;H: ;V: ;n: 2;f: d d;l: e e")
    t = parse_tree("e|2(d|bot,e|bang)", ordered=False)
    assert relevant_by_query(inst1, t) == {0, 1, 2}
    t = parse_tree("e|2(d|bot,e|bot)", ordered=False)
    assert relevant_by_query(inst1, t) == set()


def _agree_on(instance, trees):
    for t in trees:
        q1, q2 = query_verdicts(instance, t)
        assert (q1 and not q2) == relevant_part_is_good(instance, t), t.to_text()
        assert relevant_by_query(instance, t) == relevant_nodes(instance, t), t.to_text()


@pytest.mark.parametrize("instance", [WIN, LOSS])
def test_queries_match_direct_check_small_trees(instance):
    _agree_on(instance, enumerate_trees(strategy_alphabet(instance), 4, "unordered"))


def test_queries_match_direct_check_two_tiles():
    _agree_on(SWAP, enumerate_trees(strategy_alphabet(SWAP), 3, "unordered"))


PAIRS = [("d", "d"), ("d", "e"), ("e", "d"), ("e", "e")]


@settings(max_examples=25, deadline=None)
@given(st.sets(st.sampled_from(PAIRS)), st.sets(st.sampled_from(PAIRS)),
       st.tuples(st.sampled_from("de"), st.sampled_from("de")),
       st.tuples(st.sampled_from("de"), st.sampled_from("de")))
def test_winning_strategy_tree_separates_queries(H, V, f, l):
    g = TpctInstance(("d", "e"), H, V, 2, f, l)
    verdict = solve_game(g)
    t = strategy_tree(g, verdict)
    if verdict.player1_wins:
        assert violated_conditions(g, t) == []
        assert query_verdicts(g, t) == (True, False)
    else:
        assert t is None


def test_root_leaf_elimination_flags():
    _, q1, q2 = eliminate_root_leaf_pair(WIN)
    cases = {
        "(d|2,{Root})((d|bang,{Leaf}))": (True, False),
        "(d|2,{Root})((d|bang,{Root,Leaf}))": (True, True),
        "(d|2,{Root,Leaf})((d|bang,{Leaf}))": (True, True),
        "(d|2,{})((d|bang,{Leaf}))": (False, False),
    }
    for text, want in cases.items():
        t = parse_tree(text, ordered=False)
        assert (eval_boolean(q1, t), eval_boolean(q2, t)) == want


def test_containment_on_trivial_pairs():
    for g, contained in ((WIN, False), (LOSS, True)):
        sigma, q1, q2 = build_queries(g)
        res = decide_containment(sigma, q1, q2, schema="tau_u_root_leaf")
        assert res.contained == contained
        if not contained:
            assert relevant_part_is_good(g, res.witness)
    assert cross_check(WIN) and cross_check(LOSS)


def test_containment_after_root_leaf_elimination():
    sigma, q1, q2 = eliminate_root_leaf_pair(WIN)
    res = decide_containment(sigma, q1, q2, schema="tau_u")
    assert not res.contained
