"""Monadic datalog over trees: syntax, validation and least-fixpoint evaluation."""

import re
from collections import namedtuple

from .schema import (BINARY_BUILTINS, LABEL_PREFIX, SchemaError, arity, canonical_builtin,
                     check_relations, is_builtin, is_label, label_symbol)
from .trees import FactSet, facts_of, tree_flavor
from .schema import FLAVOR_RELATIONS

Atom = namedtuple("Atom", "pred args")
Rule = namedtuple("Rule", "head body")

BOOLEAN = "boolean"
UNARY = "unary"


class DatalogError(ValueError):
    pass


class DatalogSyntaxError(DatalogError):
    pass


def atom_text(atom):
    p = atom.pred
    if is_label(p):
        name = "label_" + label_symbol(p)
    elif is_builtin(p):
        name = p.lower()
    else:
        name = p
    return "%s(%s)" % (name, ",".join(atom.args))


def rule_text(rule):
    return "%s :- %s." % (atom_text(rule.head), ", ".join(atom_text(a) for a in rule.body))


def rule_vars(rule):
    seen = []
    for a in (rule.head,) + tuple(rule.body):
        for v in a.args:
            if v not in seen:
                seen.append(v)
    return seen


class Program:
    """A set of safe rules with unary heads."""

    def __init__(self, rules):
        self.rules = tuple(Rule(Atom(r.head.pred, tuple(r.head.args)),
                                tuple(Atom(a.pred, tuple(a.args)) for a in r.body)) for r in rules)
        self.idb = frozenset(r.head.pred for r in self.rules)
        preds = {a.pred for r in self.rules for a in r.body}
        self.edb = frozenset(p for p in preds if p not in self.idb)

    def __iter__(self):
        return iter(self.rules)

    def __len__(self):
        return len(self.rules)

    def __eq__(self, other):
        return isinstance(other, Program) and set(self.rules) == set(other.rules)

    def __hash__(self):
        return hash(frozenset(self.rules))

    def size(self):
        """Number of atom occurrences, heads included."""
        return sum(1 + len(r.body) for r in self.rules)

    def relations(self):
        return frozenset(p for p in self.edb if is_builtin(p))

    def to_text(self):
        return "".join(rule_text(r) + "\n" for r in self.rules)

    def __repr__(self):
        return "Program(%d rules)" % len(self.rules)


class DatalogQuery:
    def __init__(self, program, pred, mode=UNARY):
        if not isinstance(program, Program):
            program = Program(program)
        if mode not in (BOOLEAN, UNARY):
            raise DatalogError("mode must be boolean or unary")
        if pred not in program.idb:
            raise DatalogError("query predicate %r is not intensional" % pred)
        self.program = program
        self.pred = pred
        self.mode = mode

    @property
    def rules(self):
        return self.program.rules

    def with_program(self, program, pred=None, mode=None):
        return DatalogQuery(program, pred or self.pred, mode or self.mode)

    def to_text(self):
        return self.program.to_text() + "QUERY %s %s\n" % (self.pred, self.mode.upper())

    def __repr__(self):
        return "DatalogQuery(%s, %d rules, %s)" % (self.pred, len(self.program), self.mode)


# -- parsing -----------------------------------------------------------------

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_SYM = re.compile(r"[A-Za-z0-9_|!\-]+")


class _Scanner:
    def __init__(self, text):
        self.text = text
        self.i = 0

    def ws(self):
        t = self.text
        while self.i < len(t):
            if t[self.i].isspace():
                self.i += 1
            elif t[self.i] == "%":
                while self.i < len(t) and t[self.i] != "\n":
                    self.i += 1
            else:
                break

    def peek(self, s):
        self.ws()
        return self.text.startswith(s, self.i)

    def expect(self, s):
        if not self.peek(s):
            raise DatalogSyntaxError("expected %r at position %d" % (s, self.i))
        self.i += len(s)

    def at_end(self):
        self.ws()
        return self.i >= len(self.text)

    def name(self):
        self.ws()
        m = _NAME.match(self.text, self.i)
        if not m:
            raise DatalogSyntaxError("identifier expected at position %d" % self.i)
        self.i = m.end()
        return m.group()

    def symbol(self):
        t = self.text
        if self.i < len(t) and t[self.i] == "(":
            depth, j = 0, self.i
            while j < len(t):
                if t[j] in "({":
                    depth += 1
                elif t[j] in ")}":
                    depth -= 1
                    if depth == 0:
                        break
                j += 1
            if j >= len(t):
                raise DatalogSyntaxError("unbalanced label at position %d" % self.i)
            s = t[self.i:j + 1]
            self.i = j + 1
            return s
        m = _SYM.match(t, self.i)
        if not m:
            raise DatalogSyntaxError("label expected at position %d" % self.i)
        self.i = m.end()
        return m.group()


def _parse_atom(sc):
    sc.ws()
    start = sc.i
    if sc.text[start:start + 6].lower() == "label_":
        sc.i += 6
        pred = LABEL_PREFIX + sc.symbol()
    else:
        raw = sc.name()
        pred = canonical_builtin(raw) or raw
    sc.expect("(")
    args = [sc.name()]
    while sc.peek(","):
        sc.expect(",")
        args.append(sc.name())
    sc.expect(")")
    return Atom(pred, tuple(args))


def _parse_rules(text):
    sc = _Scanner(text)
    rules = []
    while not sc.at_end():
        head = _parse_atom(sc)
        sc.expect(":-")
        body = [_parse_atom(sc)]
        while sc.peek(","):
            sc.expect(",")
            body.append(_parse_atom(sc))
        sc.expect(".")
        rules.append(Rule(head, tuple(body)))
    return rules


def validate_rules(rules, schema=None):
    idb = {r.head.pred for r in rules}
    for r in rules:
        h = r.head
        if is_builtin(h.pred):
            raise DatalogError("built-in relation %s cannot be a rule head" % h.pred)
        if len(h.args) != 1:
            raise DatalogError("non-monadic head %s" % atom_text(h))
        if not r.body:
            raise DatalogError("empty rule body for %s" % atom_text(h))
        for a in r.body:
            if is_builtin(a.pred):
                if len(a.args) != arity(a.pred):
                    raise DatalogError("wrong arity in %s" % atom_text(a))
            elif a.pred in idb:
                if len(a.args) != 1:
                    raise DatalogError("wrong arity in %s" % atom_text(a))
            else:
                raise DatalogError("unknown predicate %s" % a.pred)
        body_vars = {v for a in r.body for v in a.args}
        if not set(h.args) <= body_vars:
            raise DatalogError("unsafe rule: %s" % rule_text(r))
    for p in idb:
        if canonical_builtin(p) is not None:
            raise DatalogError("intensional name %s clashes with a built-in" % p)
    if schema is not None:
        used = {a.pred for r in rules for a in r.body if is_builtin(a.pred)}
        check_relations(used, schema)


def parse_program(text, schema=None):
    rules = _parse_rules(text)
    validate_rules(rules, schema)
    return Program(rules)


def parse_query(text, schema=None, mode=None, pred=None):
    """Parse a program whose last directive is ``QUERY <pred> [BOOLEAN|UNARY]``."""
    body, qline = [], None
    for line in text.splitlines():
        s = line.strip()
        if s.upper().startswith("QUERY"):
            qline = s.split()
        else:
            body.append(line)
    program = parse_program("\n".join(body), schema)
    if qline is not None:
        if len(qline) < 2:
            raise DatalogSyntaxError("QUERY line needs a predicate")
        pred = pred or qline[1]
        if len(qline) > 2:
            mode = mode or qline[2].lower()
    if pred is None:
        raise DatalogSyntaxError("missing QUERY line")
    return DatalogQuery(program, pred, mode or UNARY)


def query_from_rules(rules, pred, mode=UNARY):
    rules = list(rules)
    validate_rules(rules)
    return DatalogQuery(Program(rules), pred, mode)


# -- evaluation ----------------------------------------------------------------

class _Db:
    def __init__(self, facts):
        self.un = {p: set(s) for p, s in facts.unary.items()}
        self.fwd, self.bwd, self.pairs = {}, {}, {}
        for p, s in facts.binary.items():
            f, b = {}, {}
            for x, y in s:
                f.setdefault(x, []).append(y)
                b.setdefault(y, []).append(x)
            self.fwd[p], self.bwd[p], self.pairs[p] = f, b, list(s)

    def add(self, pred, node):
        s = self.un.setdefault(pred, set())
        if node in s:
            return False
        s.add(node)
        return True

    def to_facts(self):
        binary = {p: set(v) for p, v in self.pairs.items()}
        return FactSet(self.un, binary)


def _order(body, first=None):
    rest = list(range(len(body)))
    out, bound = [], set()
    if first is not None:
        rest.remove(first)
        out.append(first)
        bound.update(body[first].args)
    while rest:
        def score(i):
            a = body[i]
            nb = sum(1 for v in a.args if v in bound)
            return (nb == len(a.args), nb, len(a.args) == 1, -i)
        best = max(rest, key=score)
        rest.remove(best)
        out.append(best)
        bound.update(body[best].args)
    return out


def _matches(body, order, db, delta_pos=None, delta=None):
    """All variable bindings satisfying ``body`` (delta_pos atom read from ``delta``)."""
    atoms = [body[i] for i in order]
    use_delta = [i == delta_pos for i in order]
    n = len(atoms)

    def rec(k, env):
        if k == n:
            yield env
            return
        a = atoms[k]
        if len(a.args) == 1:
            v = a.args[0]
            src = delta if use_delta[k] else db.un.get(a.pred, ())
            if v in env:
                if env[v] in src:
                    yield from rec(k + 1, env)
            else:
                for node in list(src):
                    env[v] = node
                    yield from rec(k + 1, env)
                    del env[v]
            return
        x, y = a.args
        p = a.pred
        if x in env and y in env:
            if env[y] in db.fwd.get(p, {}).get(env[x], ()):
                yield from rec(k + 1, env)
        elif x in env:
            for t in db.fwd.get(p, {}).get(env[x], ()):
                if x == y and t != env[x]:
                    continue
                env[y] = t
                yield from rec(k + 1, env)
                del env[y]
        elif y in env:
            for s in db.bwd.get(p, {}).get(env[y], ()):
                env[x] = s
                yield from rec(k + 1, env)
                del env[x]
        else:
            for s, t in db.pairs.get(p, ()):
                if x == y:
                    if s != t:
                        continue
                    env[x] = s
                    yield from rec(k + 1, env)
                    del env[x]
                else:
                    env[x], env[y] = s, t
                    yield from rec(k + 1, env)
                    del env[x], env[y]

    return rec(0, {})


class _Compiled:
    def __init__(self, program):
        self.program = program
        self.full = [_order(r.body) for r in program.rules]
        self.delta = []
        for r in program.rules:
            plans = []
            for i, a in enumerate(r.body):
                if a.pred in program.idb:
                    plans.append((i, _order(r.body, i)))
            self.delta.append(plans)


_COMPILED = {}


def _compiled(program):
    c = _COMPILED.get(id(program))
    if c is None or c.program is not program:
        if len(_COMPILED) > 256:
            _COMPILED.clear()
        c = _Compiled(program)
        _COMPILED[id(program)] = c
    return c


def _check_binary_idb(program, facts):
    for p in program.idb:
        if p in facts.binary:
            raise DatalogError("intensional predicate %s given binary facts" % p)


def immediate_consequence(program, facts):
    """One application of T_P: facts plus every head derivable in one step."""
    _check_binary_idb(program, facts)
    db = _Db(facts)
    comp = _compiled(program)
    new = []
    for r, order in zip(program.rules, comp.full):
        hv = r.head.args[0]
        for env in _matches(r.body, order, db):
            new.append((r.head.pred, env[hv]))
    out = facts.copy()
    for p, v in new:
        out.add(p, v)
    return out


def naive_fixpoint(program, facts, stats=None):
    """Iterate T_P from ``facts`` until nothing changes."""
    cur = facts.copy()
    rounds = 0
    while True:
        nxt = immediate_consequence(program, cur)
        rounds += 1
        if len(nxt) == len(cur):
            break
        cur = nxt
    if stats is not None:
        stats["rounds"] = rounds
    return cur


def fixpoint(program, facts, stats=None):
    """Least fixpoint containing ``facts`` by semi-naive iteration."""
    _check_binary_idb(program, facts)
    db = _Db(facts)
    comp = _compiled(program)
    delta = {}
    for r, order in zip(program.rules, comp.full):
        hp, hv = r.head.pred, r.head.args[0]
        for env in _matches(r.body, order, db):
            delta.setdefault(hp, set()).add(env[hv])
    for p in list(delta):
        delta[p] = {v for v in delta[p] if v not in db.un.get(p, ())}
    rounds = 1
    while any(delta.values()):
        for p, s in delta.items():
            for v in s:
                db.add(p, v)
        new = {}
        for r, plans in zip(program.rules, comp.delta):
            hp, hv = r.head.pred, r.head.args[0]
            have = db.un.get(hp, ())
            for pos, order in plans:
                d = delta.get(r.body[pos].pred)
                if not d:
                    continue
                for env in _matches(r.body, order, db, pos, d):
                    node = env[hv]
                    if node not in have:
                        new.setdefault(hp, set()).add(node)
        delta = new
        rounds += 1
    if stats is not None:
        stats["rounds"] = rounds
    return db.to_facts()


ProofNode = namedtuple("ProofNode", "fact children")


def proof_tree(program, tree, pred, node):
    """A derivation of pred(node), or None if the fact is not derived.

    Internal nodes are idb facts whose children instantiate the body of one
    rule; leaves are facts of the tree.  Every idb child was derived at an
    earlier stage than its parent, so the derivation is finite.
    """
    facts = facts_of(tree, _relations_for(program, tree))
    stage, cur, k = {}, facts, 0
    while True:
        k += 1
        nxt = immediate_consequence(program, cur)
        for p in program.idb:
            for v in nxt.nodes_with(p):
                stage.setdefault((p, v), k)
        if len(nxt) == len(cur):
            break
        cur = nxt
    if (pred, node) not in stage:
        return None
    db = _Db(cur)

    def build(p, v):
        for r in program.rules:
            if r.head.pred != p:
                continue
            for env in _matches(r.body, _order(r.body), db):
                if env[r.head.args[0]] != v:
                    continue
                if all(stage[(a.pred, env[a.args[0]])] < stage[(p, v)]
                       for a in r.body if a.pred in program.idb):
                    kids = []
                    for a in r.body:
                        args = tuple(env[x] for x in a.args)
                        if a.pred in program.idb:
                            kids.append(build(a.pred, args[0]))
                        else:
                            kids.append(ProofNode((a.pred, args), ()))
                    return ProofNode((p, (v,)), tuple(kids))
        raise AssertionError("no derivation for %s(%s)" % (p, v))
    return build(pred, node)


def _relations_for(program, tree):
    flavor = tree_flavor(tree)
    rels = {p for p in program.edb if is_builtin(p) and not is_label(p)}
    bad = sorted(rels - FLAVOR_RELATIONS[flavor])
    if bad:
        raise SchemaError("query uses %s, unavailable on %s trees" % (bad, flavor))
    return rels


def evaluate(program, tree, naive=False):
    facts = facts_of(tree, _relations_for(program, tree))
    return (naive_fixpoint if naive else fixpoint)(program, facts)


def eval_unary(query, tree, naive=False):
    return evaluate(query.program, tree, naive).nodes_with(query.pred)


def eval_boolean(query, tree, naive=False):
    return 0 in eval_unary(query, tree, naive)


def eval_query(query, tree, naive=False):
    """Node set for unary queries, truth value for Boolean ones."""
    nodes = eval_unary(query, tree, naive)
    return (0 in nodes) if query.mode == BOOLEAN else nodes


__all__ = [
    "Atom", "Rule", "Program", "DatalogQuery", "DatalogError", "DatalogSyntaxError",
    "BOOLEAN", "UNARY", "parse_program", "parse_query", "validate_rules", "query_from_rules",
    "immediate_consequence", "fixpoint", "naive_fixpoint", "eval_unary", "eval_boolean",
    "eval_query", "evaluate", "atom_text", "rule_text", "rule_vars", "proof_tree", "ProofNode", "BINARY_BUILTINS",
]
