"""Two-person corridor tiling games and the query pairs that encode them.

A game instance yields two Boolean queries over unordered trees with Root and
Leaf such that the first is not contained in the second exactly when the
constructor (player 1) has a winning strategy.  An exact attractor solver gives
the ground truth.
"""

import re
from collections import deque
from dataclasses import dataclass, field

from .datalog import BOOLEAN, UNARY, Atom, Rule, eval_boolean, eval_unary, query_from_rules
from .nbta import TooLarge
from .normal_forms import eliminate_root_leaf
from .trees import Alphabet, Tree, as_alphabet

TURNS = ("1", "2", "bot", "bang")
DEFAULT_MAX_POSITIONS = 10 ** 6
_TILE = re.compile(r"^[A-Za-z0-9]+$")


class TpctError(ValueError):
    pass


@dataclass(frozen=True)
class TpctInstance:
    tiles: tuple
    H: frozenset
    V: frozenset
    n: int
    first: tuple
    last: tuple

    def __post_init__(self):
        object.__setattr__(self, "tiles", tuple(self.tiles))
        object.__setattr__(self, "H", frozenset(map(tuple, self.H)))
        object.__setattr__(self, "V", frozenset(map(tuple, self.V)))
        object.__setattr__(self, "first", tuple(self.first))
        object.__setattr__(self, "last", tuple(self.last))
        if not self.tiles:
            raise TpctError("at least one tile is needed")
        if len(set(self.tiles)) != len(self.tiles):
            raise TpctError("duplicate tile")
        for d in self.tiles:
            if not _TILE.match(d):
                raise TpctError("tile names must be alphanumeric: %r" % d)
        if self.n < 2:
            raise TpctError("corridor width must be at least 2")
        if len(self.first) != self.n or len(self.last) != self.n:
            raise TpctError("first and last rows must have length n")
        known = set(self.tiles)
        used = set(self.first) | set(self.last) | {d for p in self.H | self.V for d in p}
        if not used <= known:
            raise TpctError("unknown tiles: %s" % ", ".join(sorted(used - known)))

    def to_text(self):
        def pairs(s):
            return ", ".join("%s %s" % p for p in sorted(s))
        return ("tiles: %s\nH: %s\nV: %s\nn: %d\nf: %s\nl: %s\n" % (
            " ".join(self.tiles), pairs(self.H), pairs(self.V), self.n,
            " ".join(self.first), " ".join(self.last)))


def parse_tpct(text):
    fields = {}
    for line in text.splitlines():
        line = line.split("%", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise TpctError("expected 'key: value', got %r" % line)
        fields[key.strip()] = value.strip()
    missing = {"tiles", "H", "V", "n", "f", "l"} - set(fields)
    if missing:
        raise TpctError("missing fields: %s" % ", ".join(sorted(missing)))

    def pairs(s):
        out = []
        for chunk in s.split(","):
            parts = chunk.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise TpctError("constraint pairs are two tiles: %r" % chunk)
            out.append(tuple(parts))
        return out

    try:
        n = int(fields["n"])
    except ValueError:
        raise TpctError("n must be an integer") from None
    return TpctInstance(fields["tiles"].split(), pairs(fields["H"]), pairs(fields["V"]), n,
                        fields["f"].split(), fields["l"].split())


def strategy_symbol(tile, turn):
    return "%s|%s" % (tile, turn)


def split_strategy_symbol(sym):
    tile, sep, turn = sym.rpartition("|")
    if not sep or turn not in TURNS:
        raise TpctError("not a strategy label: %r" % sym)
    return tile, turn


def strategy_alphabet(inst):
    return Alphabet([strategy_symbol(d, i) for d in inst.tiles for i in TURNS])


# -- queries -----------------------------------------------------------------

def _a(pred, *args):
    return Atom(pred, tuple(args))


def _chain(vs):
    return [_a("Child", vs[k], vs[k + 1]) for k in range(len(vs) - 1)]


def _prune_undefined(rules):
    """Drop rules that mention an intensional predicate with no rules; they never fire."""
    rules = list(rules)
    while True:
        heads = {r.head.pred for r in rules}
        keep = [r for r in rules if all(a.pred in heads or _is_edb(a.pred) for a in r.body)]
        if len(keep) == len(rules):
            return keep
        rules = keep


_EDB = {"Child", "Root", "Leaf"}


def _is_edb(pred):
    return pred in _EDB or pred.startswith("Label_")


def relevance_rules(inst):
    """Rules computing Candidate and Relevant nodes of a strategy tree."""
    D = inst.tiles
    rules = []
    for d in D:
        for i in TURNS:
            lab = _a("Label_" + strategy_symbol(d, i), "x")
            rules.append(Rule(_a("Tile_" + d, "x"), (lab,)))
            rules.append(Rule(_a("Turn_" + i, "x"), (lab,)))
    for d in D:
        for d2 in D:
            if d != d2:
                rules.append(Rule(_a("NotTile_" + d, "x"), (_a("Tile_" + d2, "x"),)))
    for i in TURNS:
        for i2 in TURNS:
            if i != i2:
                rules.append(Rule(_a("NotTurn_" + i, "x"), (_a("Turn_" + i2, "x"),)))
    rules.append(Rule(_a("Candidate", "x"), (_a("Leaf", "x"), _a("Turn_bot", "x"))))
    rules.append(Rule(_a("Candidate", "x"), (_a("Leaf", "x"), _a("Turn_bang", "x"))))
    rules.append(Rule(_a("Candidate", "x"), (
        _a("Turn_1", "x"), _a("Child", "x", "y"), _a("Candidate", "y"), _a("NotTurn_bot", "y"))))
    body = [_a("Turn_2", "x")]
    ys = ["y%d" % k for k in range(1, len(D) + 1)]
    body += [_a("Child", "x", y) for y in ys]
    body += [_a("Candidate", y) for y in ys]
    body += [_a("Tile_" + d, y) for d, y in zip(D, ys)]
    body += [_a("Child", "x", "y"), _a("Candidate", "y"), _a("NotTurn_bot", "y")]
    rules.append(Rule(_a("Candidate", "x"), tuple(body)))
    rules.append(Rule(_a("Relevant", "x"), (_a("Root", "x"), _a("Candidate", "x"), _a("Turn_2", "x"))))
    rules.append(Rule(_a("Relevant", "x"), (
        _a("Candidate", "x"), _a("Child", "y", "x"), _a("Relevant", "y"))))
    return rules


def _column_rules(inst):
    n = inst.n
    rules = [Rule(_a("Column_1", "x"), (_a("Root", "x"), _a("Relevant", "x"))),
             Rule(_a("Column_1", "x"), (_a("Child", "y", "x"), _a("Column_%d" % n, "y"),
                                        _a("Relevant", "y"), _a("Relevant", "x")))]
    for j in range(2, n + 1):
        rules.append(Rule(_a("Column_%d" % j, "x"), (
            _a("Child", "y", "x"), _a("Column_%d" % (j - 1), "y"),
            _a("Relevant", "y"), _a("Relevant", "x"))))
    for j in range(1, n):
        rules.append(Rule(_a("ColumnNotLast", "x"), (_a("Column_%d" % j, "x"),)))
    for j in range(2, n + 1):
        rules.append(Rule(_a("ColumnNotFirst", "x"), (_a("Column_%d" % j, "x"),)))
    return rules


def reject_rules(inst):
    """Rules deriving Reject at the root when the relevant part breaks a game rule."""
    D, n, H, V = inst.tiles, inst.n, inst.H, inst.V
    root = _a("Root", "z")
    rules = []
    for t in ("1", "2"):
        rules.append(Rule(_a("Reject6", "z"), (
            _a("Relevant", "x"), _a("Relevant", "y"), _a("Child", "x", "y"),
            _a("Turn_" + t, "x"), _a("Turn_" + t, "y"), root)))
    rules += _column_rules(inst)

    rules.append(Rule(_a("Reject7", "z"), (
        _a("Turn_bang", "x"), _a("ColumnNotLast", "x"), _a("Relevant", "x"), root)))
    xs = ["x%d" % k for k in range(1, n + 1)]
    for j in range(n):
        body = [_a("Turn_bang", xs[-1])] + _chain(xs) + [_a("NotTile_" + inst.last[j], xs[j])]
        body += [_a("Relevant", x) for x in xs] + [root]
        rules.append(Rule(_a("Reject7", "z"), tuple(body)))

    ys = ["y%d" % k for k in range(1, n + 1)]
    for dh in D:
        for d in D:
            if (dh, d) not in H:
                rules.append(Rule(_a("BuggyH", "x"), (
                    _a("ColumnNotFirst", "x"), _a("Child", "y", "x"), _a("Tile_" + dh, "y"),
                    _a("Tile_" + d, "x"), _a("Relevant", "y"), _a("Relevant", "x"))))
            if (dh, d) not in V:
                body = _chain(ys + ["x"]) + [_a("Tile_" + dh, ys[0]), _a("Tile_" + d, "x")]
                body += [_a("Relevant", y) for y in ys] + [_a("Relevant", "x")]
                rules.append(Rule(_a("BuggyV", "x"), tuple(body)))
    # nodes of the second row are checked against the given first row; the chain
    # stops at the node itself so that leaves above depth n are covered too
    for j in range(1, n + 1):
        path = xs[:j]
        for d in D:
            fits = (inst.first[j - 1], d) in V
            body = [_a("Root", xs[0])] + _chain(path) + [_a("Tile_" + d, path[-1])]
            if fits:
                rules.append(Rule(_a("OkayV", path[-1]), tuple(body)))
            else:
                body += [_a("Relevant", x) for x in path]
                rules.append(Rule(_a("BuggyV", path[-1]), tuple(body)))
    for pred in ("BuggyH", "BuggyV"):
        rules.append(Rule(_a("Reject8", "z"), (
            _a("NotTurn_bot", "x"), _a(pred, "x"), _a("Relevant", "x"), root)))

    rules.append(Rule(_a("OkayH", "x"), (_a("Column_1", "x"),)))
    for dh, d in sorted(H):
        rules.append(Rule(_a("OkayH", "x"), (
            _a("ColumnNotFirst", "x"), _a("Child", "y", "x"), _a("Tile_" + dh, "y"),
            _a("Tile_" + d, "x"))))
    for dv, d in sorted(V):
        body = _chain(ys + ["x"]) + [_a("Tile_" + dv, ys[0]), _a("Tile_" + d, "x")]
        rules.append(Rule(_a("OkayV", "x"), tuple(body)))
    rules.append(Rule(_a("Reject9", "z"), (
        _a("Turn_bot", "x"), _a("OkayH", "x"), _a("OkayV", "x"), _a("Relevant", "x"), root)))
    for c in (6, 7, 8, 9):
        rules.append(Rule(_a("Reject", "z"), (_a("Reject%d" % c, "z"),)))
    return rules


def relevance_query(inst):
    """Unary query selecting the relevant nodes."""
    return query_from_rules(_prune_undefined(relevance_rules(inst)), "Relevant", UNARY)


def build_queries(inst):
    """(alphabet, q1, q2): q1 says the root is relevant, q2 that the relevant part is flawed."""
    base = relevance_rules(inst)
    q1 = base + [Rule(_a("Accept", "x"), (_a("Root", "x"), _a("Relevant", "x")))]
    q2 = base + reject_rules(inst)
    return (strategy_alphabet(inst),
            query_from_rules(_prune_undefined(q1), "Accept", BOOLEAN),
            query_from_rules(_prune_undefined(q2), "Reject", BOOLEAN))


def eliminate_root_leaf_pair(inst, log=None):
    """The same pair rewritten to use Child only, over labels flagged with Root/Leaf."""
    sigma, q1, q2 = build_queries(inst)
    return eliminate_root_leaf(q1, q2, sigma, log)


# -- the game ----------------------------------------------------------------

@dataclass
class GameVerdict:
    winner: int
    positions: int = 0
    strategy: dict = field(default_factory=dict, repr=False)
    rank: dict = field(default_factory=dict, repr=False)

    @property
    def player1_wins(self):
        return self.winner == 1


def _moves(inst, pos):
    """Yield (tile, next position or None when the move wins) for fitting tiles."""
    window, col, player = pos
    for d in inst.tiles:
        if (window[0], d) not in inst.V:
            continue
        if col > 0 and (window[-1], d) not in inst.H:
            continue
        nw = window[1:] + (d,)
        if col == inst.n - 1 and nw == inst.last:
            yield d, None
        else:
            yield d, (nw, (col + 1) % inst.n, 3 - player)


def initial_position(inst):
    return (inst.first, 0, 1)


def solve_game(inst, max_positions=DEFAULT_MAX_POSITIONS):
    """Exact winner of the tiling game by a backward attractor computation.

    A position is (last n tiles placed, column of the next tile, player to move).
    """
    start = initial_position(inst)
    succ, seen, todo = {}, {start}, deque([start])
    while todo:
        p = todo.popleft()
        succ[p] = list(_moves(inst, p))
        for _, q in succ[p]:
            if q is not None and q not in seen:
                seen.add(q)
                if len(seen) > max_positions:
                    raise TooLarge("game arena", max_positions, "use a smaller instance")
                todo.append(q)
    preds = {p: [] for p in succ}
    for p, ms in succ.items():
        for _, q in ms:
            if q is not None:
                preds[q].append(p)
    # rank = number of moves player 1 needs to force a win
    rank, strategy = {}, {}
    pending = {p: len(ms) for p, ms in succ.items()}
    queue = deque()
    for p, ms in succ.items():
        if p[2] == 1:
            for d, q in ms:
                if q is None:
                    rank[p], strategy[p] = 1, d
                    queue.append(p)
                    break
        else:
            wins = sum(1 for _, q in ms if q is None)
            pending[p] -= wins
            if ms and pending[p] == 0:
                rank[p] = 1
                queue.append(p)
    while queue:
        q = queue.popleft()
        for p in preds[q]:
            if p in rank:
                continue
            if p[2] == 1:
                rank[p] = rank[q] + 1
                strategy[p] = next(d for d, t in succ[p] if t == q)
                queue.append(p)
            else:
                pending[p] -= sum(1 for _, t in succ[p] if t == q)
                if pending[p] == 0:
                    rank[p] = 1 + max(rank[t] for _, t in succ[p] if t is not None)
                    queue.append(p)
    return GameVerdict(1 if start in rank else 2, len(succ), strategy, rank)


def strategy_tree(inst, verdict=None):
    """A good strategy tree built from player 1's winning strategy, or None if player 2 wins."""
    verdict = verdict or solve_game(inst)
    if not verdict.player1_wins:
        return None
    succ = dict()

    def moves(p):
        if p not in succ:
            succ[p] = dict(_moves(inst, p))
        return succ[p]

    def placed(d, q):
        # label of the node recording tile d that leads to position q
        if q is None:
            return (strategy_symbol(d, "bang"), ())
        return (strategy_symbol(d, str(q[2])), expand(q))

    def expand(p):
        if p[2] == 1:
            d = verdict.strategy[p]
            return (placed(d, moves(p)[d]),)
        kids = []
        fitting = moves(p)
        for d in inst.tiles:
            if d in fitting:
                kids.append(placed(d, fitting[d]))
            else:
                kids.append((strategy_symbol(d, "bot"), ()))
        return tuple(kids)

    start = initial_position(inst)
    d = verdict.strategy[start]
    return Tree.from_nested(placed(d, moves(start)[d]), ordered=False)


# -- checking strategy trees directly ----------------------------------------

def candidate_nodes(inst, tree):
    """Candidates, computed bottom-up without datalog."""
    parts = [split_strategy_symbol(s) for s in tree.labels]
    cand = set()
    for v in reversed(tree.nodes):
        tile, turn = parts[v]
        kids = tree.children[v]
        good_kid = any(c in cand and parts[c][1] != "bot" for c in kids)
        if turn in ("bot", "bang"):
            ok = not kids
        elif turn == "1":
            ok = good_kid
        else:
            ok = good_kid and all(any(c in cand and parts[c][0] == d for c in kids)
                                  for d in inst.tiles)
        if ok:
            cand.add(v)
    return cand


def relevant_nodes(inst, tree):
    parts = [split_strategy_symbol(s) for s in tree.labels]
    cand = candidate_nodes(inst, tree)
    rel = set()
    for v in tree.nodes:
        p = tree.parent[v]
        if v in cand and ((p is None and parts[v][1] == "2") or (p is not None and p in rel)):
            rel.add(v)
    return rel


def subtree_on(tree, keep):
    """The subtree induced by ``keep`` (which must contain the root and be parent-closed)."""
    def walk(v):
        return (tree.labels[v], tuple(walk(c) for c in tree.children[v] if c in keep))
    return Tree.from_nested(walk(0), ordered=tree.ordered)


def violated_conditions(inst, tree):
    """Numbers of the strategy-tree conditions (1)-(9) that ``tree`` breaks."""
    n, D = inst.n, inst.tiles
    parts = [split_strategy_symbol(s) for s in tree.labels]
    bad = set()
    if parts[0][1] != "2":
        bad.add(1)
    for v in tree.nodes:
        tile, turn = parts[v]
        kids = tree.children[v]
        depth = tree.depth(v)
        if turn in ("bot", "bang") and kids:
            bad.add(2)
        if turn == "1" and not kids:
            bad.add(3)
        if turn == "2" and not all(any(parts[c][0] == d for c in kids) for d in D):
            bad.add(4)
        if turn in ("1", "2") and kids and all(parts[c][1] == "bot" for c in kids):
            bad.add(5)
        if turn in ("1", "2") and any(parts[c][1] == turn for c in kids):
            bad.add(6)
        path = [v]
        while tree.parent[path[-1]] is not None and len(path) < n + 1:
            path.append(tree.parent[path[-1]])
        if turn == "bang":
            row = [parts[u][0] for u in reversed(path[:n])]
            if depth % n != 0 or tuple(row) != inst.last:
                bad.add(7)
        h_ok = depth % n == 1 or (parts[tree.parent[v]][0], tile) in inst.H
        if depth <= n:
            v_ok = (inst.first[depth - 1], tile) in inst.V
        else:
            v_ok = (parts[path[n]][0], tile) in inst.V
        if turn != "bot" and not (h_ok and v_ok):
            bad.add(8)
        if turn == "bot" and h_ok and v_ok:
            bad.add(9)
    return sorted(bad)


def is_good(inst, tree):
    return not violated_conditions(inst, tree)


def relevant_part_is_good(inst, tree):
    """Root relevant and the relevant subtree satisfies every condition."""
    rel = relevant_nodes(inst, tree)
    return 0 in rel and is_good(inst, subtree_on(tree, rel))


def query_verdicts(inst, tree):
    """(q1, q2) on ``tree``."""
    _, q1, q2 = build_queries(inst)
    return eval_boolean(q1, tree), eval_boolean(q2, tree)


def relevant_by_query(inst, tree):
    return eval_unary(relevance_query(inst), tree)


def cross_check(inst, max_positions=DEFAULT_MAX_POSITIONS, **containment_args):
    """Does the game solver agree with the containment decision on the encoded pair?"""
    from .containment import decide_containment
    verdict = solve_game(inst, max_positions)
    sigma, q1, q2 = build_queries(inst)
    res = decide_containment(sigma, q1, q2, schema="tau_u_root_leaf", **containment_args)
    return verdict.player1_wins == (not res.contained)


__all__ = ["TpctInstance", "TpctError", "GameVerdict", "parse_tpct", "strategy_alphabet",
           "strategy_symbol", "split_strategy_symbol", "build_queries", "relevance_query",
           "eliminate_root_leaf_pair", "solve_game", "strategy_tree", "candidate_nodes",
           "relevant_nodes", "violated_conditions", "is_good", "relevant_part_is_good",
           "subtree_on", "query_verdicts", "relevant_by_query", "cross_check",
           "DEFAULT_MAX_POSITIONS", "TURNS"]
