"""Query rewritings: unary to Boolean, acyclic rewriting, rule decomposition,
descendant and child elimination, TMNF, binary-tree renaming and Root/Leaf removal."""

import re
from collections import defaultdict

from .datalog import (Atom, DatalogError, DatalogQuery, Program, Rule, BOOLEAN, UNARY,
                      rule_text, validate_rules)
from .schema import (UNARY_BUILTINS, canonical_builtin, is_builtin, is_label, label_pred,
                     label_symbol)
from .trees import as_alphabet, marked_alphabet, marked_symbol, root_leaf_alphabet, split_flag_symbol

MAX_ACYCLIC_STEPS = 200000


class RewriteError(DatalogError):
    pass


class NameSupply:
    """Hands out identifiers that avoid a set of taken names and built-ins."""

    def __init__(self, taken=()):
        self.taken = set(taken)

    def fresh(self, base):
        base = re.sub(r"[^A-Za-z0-9_]", "_", base).strip("_") or "P"
        if not base[0].isalpha():
            base = "P" + base
        if canonical_builtin(base) is not None:
            base = "I" + base
        name, k = base, 0
        while name in self.taken or canonical_builtin(name) is not None:
            k += 1
            name = "%s_%d" % (base, k)
        self.taken.add(name)
        return name


def _as_program(q):
    return q.program if isinstance(q, DatalogQuery) else q


def _rewrap(q, rules):
    rules = _dedupe(rules)
    if isinstance(q, DatalogQuery):
        return DatalogQuery(Program(rules), q.pred, q.mode)
    return Program(rules)


def _dedupe(rules):
    seen, out = set(), []
    for r in rules:
        if r not in seen:
            seen.add(r)
            out.append(r)
    return out


def _log(log, msg):
    if log is not None:
        log.append(msg)


def _unary(p, v):
    return Atom(p, (v,))


def _rule(head, *body):
    return Rule(head, tuple(body))


def rename_predicates(rules, mapping):
    def ren(a):
        return Atom(mapping.get(a.pred, a.pred), a.args)
    return [Rule(ren(r.head), tuple(ren(a) for a in r.body)) for r in rules]


# -- TMNF forms ----------------------------------------------------------------

def tmnf_form(rule, allow_remote=False):
    """1: X(x)<-R(x,y),Y(y); 2: X(x)<-R(y,x),Y(y); 3: X(x)<-Y(x),Z(x). None otherwise.

    With ``allow_remote`` the third form may use a second variable, X(x)<-Y(x),Z(z).
    """
    h, b = rule.head, rule.body
    if len(b) != 2 or len(h.args) != 1:
        return None
    x = h.args[0]
    a1, a2 = b
    if len(a1.args) == 2 and len(a2.args) == 1:
        r, y = a1.args, a2.args[0]
        if y == x:
            return None
        if r == (x, y):
            return 1
        if r == (y, x):
            return 2
        return None
    if len(a1.args) == 1 and len(a2.args) == 1 and a1.args[0] == x:
        if a2.args[0] == x or allow_remote:
            return 3
    return None


def tmnf_certificate(q):
    """Per-rule form tags, or raise if some rule is not in TMNF."""
    cert = []
    for r in _as_program(q).rules:
        f = tmnf_form(r)
        if f is None:
            raise RewriteError("rule not in TMNF: %s" % rule_text(r))
        cert.append(f)
    return tuple(cert)


def is_tmnf(q):
    return all(tmnf_form(r) is not None for r in _as_program(q).rules)


# -- unary to Boolean -------------------------------------------------------------

def unary_to_boolean(q, alphabet, log=None):
    """Boolean query over the marked alphabet that holds on T'_v iff v is in q(T)."""
    alphabet = as_alphabet(alphabet)
    prog = q.program
    names = NameSupply(prog.idb)
    lab = {a: names.fresh("Lab_" + a) for a in alphabet.symbols}
    x0, x1 = names.fresh("X0"), names.fresh("X1")
    c0, c1 = names.fresh("C0"), names.fresh("C1")
    top = names.fresh(q.pred + "_marked")
    x, y, z = "x", "y", "z"
    rules = []
    for a in alphabet.symbols:
        m0, m1 = label_pred(marked_symbol(a, 0)), label_pred(marked_symbol(a, 1))
        rules += [_rule(_unary(lab[a], x), _unary(m0, x)),
                  _rule(_unary(lab[a], x), _unary(m1, x)),
                  _rule(_unary(x0, x), _unary(m0, x)),
                  _rule(_unary(x1, x), _unary(m1, x))]
    mapping = {label_pred(a): lab[a] for a in alphabet.symbols}
    for r in prog.rules:
        for a in r.body:
            if is_label(a.pred) and label_symbol(a.pred) not in alphabet.symbols:
                raise RewriteError("label %s not in alphabet" % label_symbol(a.pred))
    rules += rename_predicates(prog.rules, mapping)

    def C(i, v):
        return _unary(c1 if i else c0, v)

    def X(i, v):
        return _unary(x1 if i else x0, v)

    leaf, ls = _unary("Leaf", x), _unary("Ls", x)
    fc, ns_y, ns_z = Atom("Fc", (x, y)), Atom("Ns", (x, y)), Atom("Ns", (x, z))
    rules += [
        _rule(C(0, x), leaf, ls, X(0, x)),
        _rule(C(1, x), leaf, ls, X(1, x)),
        _rule(C(0, x), leaf, ns_y, X(0, x), C(0, y)),
        _rule(C(1, x), leaf, ns_y, X(0, x), C(1, y)),
        _rule(C(1, x), leaf, ns_y, X(1, x), C(0, y)),
        _rule(C(0, x), ls, fc, X(0, x), C(0, y)),
        _rule(C(1, x), ls, fc, X(0, x), C(1, y)),
        _rule(C(1, x), ls, fc, X(1, x), C(0, y)),
        _rule(C(0, x), fc, ns_z, X(0, x), C(0, y), C(0, z)),
        _rule(C(1, x), fc, ns_z, X(0, x), C(0, y), C(1, z)),
        _rule(C(1, x), fc, ns_z, X(0, x), C(1, y), C(0, z)),
        _rule(C(1, x), fc, ns_z, X(1, x), C(0, y), C(0, z)),
        _rule(_unary(top, x), _unary("Root", x), C(1, x), _unary(q.pred, y), X(1, y)),
    ]
    _log(log, "unary_to_boolean: %d rules -> %d rules, query %s" % (len(prog), len(rules), top))
    return DatalogQuery(Program(rules), top, BOOLEAN), marked_alphabet(alphabet)


# -- rule graphs -----------------------------------------------------------------

def _binary_atoms(rule):
    return [a for a in rule.body if len(a.args) == 2]


def _reachable(edges, start):
    seen, stack = {start}, [start]
    while stack:
        v = stack.pop()
        for s, t in edges:
            if s == v and t not in seen:
                seen.add(t)
                stack.append(t)
    return seen


def has_directed_cycle(rule):
    edges = [a.args for a in _binary_atoms(rule)]
    for s, t in edges:
        if s == t or s in _reachable(edges, t):
            return True
    return False


def _connected(edges, u, v):
    adj = defaultdict(set)
    for s, t in edges:
        adj[s].add(t)
        adj[t].add(s)
    seen, stack = {u}, [u]
    while stack:
        w = stack.pop()
        if w == v:
            return True
        for n in adj[w] - seen:
            seen.add(n)
            stack.append(n)
    return u == v


def cycle_edges(rule):
    """Indices (into the body) of binary atoms lying on an undirected cycle of the shadow."""
    bins = [(i, a.args) for i, a in enumerate(rule.body) if len(a.args) == 2]
    out = []
    for k, (i, (s, t)) in enumerate(bins):
        rest = [e for j, (_, e) in enumerate(bins) if j != k]
        if s == t or _connected(rest, s, t):
            out.append(i)
    return out


def is_acyclic_rule(rule):
    return not cycle_edges(rule)


def _subst(rule, old, new):
    def f(a):
        return Atom(a.pred, tuple(new if v == old else v for v in a.args))
    body = []
    for a in rule.body:
        a2 = f(a)
        if a2 not in body:
            body.append(a2)
    return Rule(f(rule.head), tuple(body))


def _clean(rule):
    body = []
    for a in rule.body:
        if a not in body:
            body.append(a)
    return Rule(rule.head, tuple(body))


def _canonical(rule):
    order = [rule.head.args[0]]
    body = sorted(rule.body)
    for _ in range(3):
        ren = {}
        for v in order + [v for a in body for v in a.args]:
            ren.setdefault(v, "v%d" % len(ren))
        body2 = sorted(Atom(a.pred, tuple(ren[v] for v in a.args)) for a in rule.body)
        if body2 == body:
            break
        body = body2
        order = [rule.head.args[0]]
        inv = {b: a for a, b in ren.items()}
        for a in body:
            for v in a.args:
                if inv[v] not in order:
                    order.append(inv[v])
    return (rule.head.pred, tuple(body))


_AXES = {"Fc", "Ns", "Child", "Desc"}


def _split_cycle(rule):
    """One case-analysis step on a rule whose shadow has a cycle but no directed cycle."""
    cyc = cycle_edges(rule)
    body = rule.body
    cyc_vars = set()
    for i in cyc:
        cyc_vars.update(body[i].args)
    edges = [a.args for a in _binary_atoms(rule)]
    order = []
    for a in (rule.head,) + body:
        for v in a.args:
            if v not in order:
                order.append(v)
    z = None
    for v in order:
        if v in cyc_vars and not ((_reachable(edges, v) - {v}) & cyc_vars):
            z = v
            break
    if z is None:
        raise RewriteError("no sink variable on a cycle in %s" % rule_text(rule))
    ins = [i for i in cyc if body[i].args[1] == z]
    if len(ins) < 2:
        raise RewriteError("expected two cycle edges into %s in %s" % (z, rule_text(rule)))
    i, j = ins[0], ins[1]
    A, B = body[i], body[j]
    for a in (A, B):
        if a.pred not in _AXES:
            raise RewriteError("unsupported relation %s in cyclic rule" % a.pred)
    R, S = A.pred, B.pred
    # normalise orientation so that the table below lists each unordered pair once
    rank = {"Fc": 0, "Ns": 1, "Child": 2, "Desc": 3}
    if rank[R] > rank[S]:
        i, j, A, B, R, S = j, i, B, A, S, R
    x, y = A.args[0], B.args[0]
    rest = tuple(a for k, a in enumerate(body) if k not in (i, j))

    def with_atoms(*atoms):
        return _clean(Rule(rule.head, rest + atoms))

    if (R, S) == ("Fc", "Ns"):
        return "drop (first child and next sibling into %s)" % z, []
    if R == S and R in ("Fc", "Ns", "Child"):
        return "merge %s into %s" % (y, x), [_subst(with_atoms(A), y, x)]
    if R == S == "Desc":
        return "split descendant pair into %s" % z, [
            with_atoms(Atom("Desc", (x, y)), Atom("Desc", (y, z))),
            with_atoms(Atom("Desc", (y, x)), Atom("Desc", (x, z))),
            _subst(with_atoms(A), y, x),
        ]
    if (R, S) == ("Fc", "Child"):
        return "merge %s into %s" % (y, x), [_subst(with_atoms(A), y, x)]
    if R == "Ns":
        return "move %s edge from %s to %s" % (S, z, x), [with_atoms(A, Atom(S, (y, x)))]
    if S == "Desc":
        return "split %s/Desc pair into %s" % (R, z), [
            with_atoms(A, Atom("Desc", (y, x))),
            _subst(with_atoms(A), y, x),
        ]
    raise RewriteError("unhandled pair %s/%s" % (R, S))


def make_acyclic(q, log=None, stats=None):
    """Equivalent program in which every rule body has a cycle-free shadow."""
    prog = _as_program(q)
    work = [_clean(r) for r in prog.rules]
    seen = {_canonical(r) for r in work}
    out, steps = [], 0
    while work:
        r = work.pop(0)
        if has_directed_cycle(r):
            _log(log, "make_acyclic: drop directed cycle: %s" % rule_text(r))
            steps += 1
            continue
        if is_acyclic_rule(r):
            out.append(r)
            continue
        steps += 1
        if steps > MAX_ACYCLIC_STEPS:
            raise RewriteError("acyclic rewriting exceeded %d steps" % MAX_ACYCLIC_STEPS)
        why, new = _split_cycle(r)
        _log(log, "make_acyclic: %s: %s" % (why, rule_text(r)))
        for n in new:
            key = _canonical(n)
            if key not in seen:
                seen.add(key)
                work.append(n)
    if stats is not None:
        stats["acyclic_steps"] = steps
        stats["acyclic_rules"] = len(out)
    _check_heads(prog, out, log)
    return _rewrap(q, out)


def _check_heads(prog, rules, log):
    # a predicate whose every rule was unsatisfiable keeps no rule; keep it defined
    missing = prog.idb - {r.head.pred for r in rules}
    for p in sorted(missing):
        _log(log, "note: %s has no satisfiable rule" % p)
        rules.append(_rule(_unary(p, "x"), _unary(p, "x")))


# -- decomposition of acyclic rules --------------------------------------------------

class _Decomposer:
    def __init__(self, names, top_provider):
        self.names = names
        self.top = top_provider
        self.rules = []

    def fresh(self, base):
        return self.names.fresh(base)

    def decompose(self, rule):
        if not is_acyclic_rule(rule):
            raise RewriteError("rule is not acyclic: %s" % rule_text(rule))
        if has_directed_cycle(rule):
            raise RewriteError("rule is not acyclic: %s" % rule_text(rule))
        self.base = rule.head.pred
        order = []
        for a in (rule.head,) + rule.body:
            for v in a.args:
                if v not in order:
                    order.append(v)
        unary = defaultdict(list)
        adj = defaultdict(list)
        for a in rule.body:
            if len(a.args) == 1:
                if a.pred not in unary[a.args[0]]:
                    unary[a.args[0]].append(a.pred)
            else:
                s, t = a.args
                adj[s].append((a.pred, s, t, t))
                adj[t].append((a.pred, s, t, s))
        self.unary, self.adj = unary, adj
        h = rule.head.args[0]
        visited = {h}
        self._visit_order(h, visited)
        comps = []
        for v in order:
            if v not in visited:
                before = set(visited)
                visited.add(v)
                self._visit_order(v, visited)
                members = [w for w in order if w in visited and w not in before]
                # root a detached component at a topmost variable so its helpers look downward
                sources = [w for w in members if not any(t == w for _, s, t, _o in adj[w])]
                comps.append(sources[0] if sources else v)
        local = self._items(h, None)
        remote = [self._conj(w, None) for w in comps]
        self._chain(local, remote, rule.head.pred)

    def _visit_order(self, v, visited):
        stack = [v]
        while stack:
            w = stack.pop()
            for _, s, t, other in self.adj[w]:
                if other not in visited:
                    visited.add(other)
                    stack.append(other)

    def _items(self, v, parent):
        items = [("pred", p) for p in self.unary[v]]
        for pred, s, t, other in self.adj[v]:
            if other == parent:
                continue
            sub = self._conj(other, v)
            items.append(("edge", pred, 1 if s == v else 2, sub))
        return items

    def _conj(self, v, parent):
        """Name of a unary predicate equivalent to the subtree conjunction at v."""
        items = self._items(v, parent)
        if not items:
            return self.top()
        if len(items) == 1 and items[0][0] == "pred":
            return items[0][1]
        target = self.fresh(self.base)
        self._chain(items, [], target)
        return target

    def _emit_edge(self, item, head):
        _, pred, form, sub = item
        if form == 1:
            self.rules.append(_rule(_unary(head, "x"), Atom(pred, ("x", "y")), _unary(sub, "y")))
        else:
            self.rules.append(_rule(_unary(head, "x"), Atom(pred, ("y", "x")), _unary(sub, "y")))

    def _as_pred(self, item):
        if item[0] == "pred":
            return item[1]
        name = self.fresh(self.base)
        self._emit_edge(item, name)
        return name

    def _chain(self, items, remote, target):
        if len(items) == 1 and not remote and items[0][0] == "edge":
            self._emit_edge(items[0], target)
            return
        if len(items) == 1 and not remote:
            p = items[0][1]
            self.rules.append(_rule(_unary(target, "x"), _unary(p, "x"), _unary(p, "x")))
            return
        cur = self._as_pred(items[0])
        steps = [(self._as_pred(it), "x") for it in items[1:]] + [(p, "y") for p in remote]
        for k, (p, var) in enumerate(steps):
            head = target if k == len(steps) - 1 else self.fresh(self.base)
            self.rules.append(_rule(_unary(head, "x"), _unary(cur, "x"), _unary(p, var)))
            cur = head


class _Top:
    """Lazily defined predicate that holds at every node (needs Root, Fc, Ns)."""

    def __init__(self, names, sink):
        self.names, self.sink, self.name = names, sink, None

    def __call__(self):
        if self.name is None:
            t = self.name = self.names.fresh("Top")
            self.sink += [
                _rule(_unary(t, "x"), _unary("Root", "x"), _unary("Root", "x")),
                _rule(_unary(t, "x"), Atom("Fc", ("y", "x")), _unary(t, "y")),
                _rule(_unary(t, "x"), Atom("Ns", ("y", "x")), _unary(t, "y")),
            ]
        return self.name


def decompose_acyclic_rule(rule, names=None, top=None):
    """Split an acyclic rule into rules of the forms X(x)<-R(x,y),Y(y),
    X(x)<-R(y,x),Y(y) and X(x)<-Y(x),Z(z)."""
    names = names or NameSupply({rule.head.pred} | {a.pred for a in rule.body})
    extra = []
    d = _Decomposer(names, top or _Top(names, extra))
    d.decompose(rule)
    return d.rules + extra


def decompose_program(q, log=None):
    prog = _as_program(q)
    names = NameSupply(prog.idb)
    extra = []
    top = _Top(names, extra)
    out = []
    for r in prog.rules:
        if tmnf_form(r, allow_remote=True) is not None:
            out.append(r)
            continue
        new = decompose_acyclic_rule(r, names, top)
        _log(log, "decompose: %s -> %d rules" % (rule_text(r), len(new)))
        out += new
    if extra:
        _log(log, "decompose: added everywhere-true predicate %s" % top.name)
    return _rewrap(q, out + extra)


# -- axis elimination ----------------------------------------------------------------

def _desc_to_child(prog_rules, names, log):
    out, cache = [], {}
    for r in prog_rules:
        f = tmnf_form(r)
        if f in (1, 2) and r.body[0].pred == "Desc":
            X, Y = r.head.pred, r.body[1].pred
            key = (f, Y)
            if key not in cache:
                D = cache[key] = names.fresh("%s_%s" % ("Below" if f == 1 else "Above", Y))
                e = ("x", "y") if f == 1 else ("y", "x")
                out += [_rule(_unary(D, "x"), Atom("Child", e), _unary(Y, "y")),
                        _rule(_unary(D, "x"), Atom("Child", e), _unary(D, "y"))]
            D = cache[key]
            out.append(_rule(_unary(X, "x"), _unary(D, "x"), _unary(D, "x")))
            _log(log, "desc_to_child: %s via %s" % (rule_text(r), D))
        else:
            out.append(r)
    return out


def eliminate_desc(q, log=None, stats=None):
    """Equivalent program without Desc: acyclic rewriting, decomposition, then
    Desc(x,y) recursion over Child."""
    uses_desc = any(a.pred == "Desc" for r in _as_program(q).rules for a in r.body)
    if not uses_desc:
        _log(log, "eliminate_desc: no Desc atoms")
        return q
    q1 = make_acyclic(q, log, stats)
    q2 = decompose_program(q1, log)
    names = NameSupply(_as_program(q2).idb)
    rules = _desc_to_child(_as_program(q2).rules, names, log)
    return _rewrap(q, rules)


def _child_to_fcns(rules, names, log):
    out, down, up = [], {}, {}
    for r in rules:
        f = tmnf_form(r)
        if f in (1, 2) and r.body[0].pred == "Child":
            X, Y = r.head.pred, r.body[1].pred
            if f == 1:
                if Y not in down:
                    S = down[Y] = names.fresh("Sib_" + Y)
                    out += [_rule(_unary(S, "x"), _unary(Y, "x"), _unary(Y, "x")),
                            _rule(_unary(S, "x"), Atom("Ns", ("x", "y")), _unary(S, "y"))]
                out.append(_rule(_unary(X, "x"), Atom("Fc", ("x", "y")), _unary(down[Y], "y")))
            else:
                if Y not in up:
                    U = up[Y] = names.fresh("From_" + Y)
                    out += [_rule(_unary(U, "x"), Atom("Fc", ("y", "x")), _unary(Y, "y")),
                            _rule(_unary(U, "x"), Atom("Ns", ("y", "x")), _unary(U, "y"))]
                out.append(_rule(_unary(X, "x"), _unary(up[Y], "x"), _unary(up[Y], "x")))
            _log(log, "child_to_fcns: %s" % rule_text(r))
        else:
            out.append(r)
    return out


def _remote_to_local(rules, names, log):
    out, some, anywhere = [], {}, {}

    def some_of(Z):
        # Z somewhere in the first-child/next-sibling subtree of x
        if Z not in some:
            E = some[Z] = names.fresh("Some_" + Z)
            out.extend([
                _rule(_unary(E, "x"), _unary(Z, "x"), _unary(Z, "x")),
                _rule(_unary(E, "x"), Atom("Fc", ("x", "y")), _unary(E, "y")),
                _rule(_unary(E, "x"), Atom("Ns", ("x", "y")), _unary(E, "y")),
            ])
        return some[Z]

    for r in rules:
        if tmnf_form(r) is None and tmnf_form(r, allow_remote=True) == 3:
            X, Y, Z = r.head.pred, r.body[0].pred, r.body[1].pred
            if Y == "Root":
                # at the root the subtree is the whole tree
                out.append(_rule(_unary(X, "x"), _unary("Root", "x"), _unary(some_of(Z), "x")))
                _log(log, "remote_to_local: %s (at the root)" % rule_text(r))
                continue
            if Z not in anywhere:
                E = some_of(Z)
                A = anywhere[Z] = names.fresh("Anywhere_" + Z)
                out.extend([
                    _rule(_unary(A, "x"), _unary("Root", "x"), _unary(E, "x")),
                    _rule(_unary(A, "x"), Atom("Fc", ("y", "x")), _unary(A, "y")),
                    _rule(_unary(A, "x"), Atom("Ns", ("y", "x")), _unary(A, "y")),
                ])
            out.append(_rule(_unary(X, "x"), _unary(Y, "x"), _unary(anywhere[Z], "x")))
            _log(log, "remote_to_local: %s" % rule_text(r))
        else:
            out.append(r)
    return out


def to_tmnf(q, log=None, stats=None):
    """Equivalent TMNF program over first-child/next-sibling (plus Root, Leaf, Ls)."""
    prog = _as_program(q)
    for r in prog.rules:
        for a in r.body:
            if a.pred in ("Lc", "Rc", "Hnlc", "Hnrc"):
                raise RewriteError("to_tmnf expects an unranked-tree program, found %s" % a.pred)
    q1 = make_acyclic(q, log, stats)
    q2 = decompose_program(q1, log)
    names = NameSupply(_as_program(q2).idb)
    rules = _desc_to_child(_as_program(q2).rules, names, log)
    rules = _child_to_fcns(rules, names, log)
    rules = _remote_to_local(rules, names, log)
    out = _rewrap(q, rules)
    tmnf_certificate(out)
    if stats is not None:
        stats["tmnf_input_size"] = prog.size()
        stats["tmnf_output_size"] = _as_program(out).size()
    _log(log, "to_tmnf: size %d -> %d" % (prog.size(), _as_program(out).size()))
    return out


# -- binary trees ------------------------------------------------------------------

_TO_BINARY = {"Fc": "Lc", "Ns": "Rc", "Leaf": "Hnlc", "Ls": "Hnrc"}


def to_binary_query(q, log=None):
    """Boolean query on first-child/next-sibling encodings."""
    if q.mode != BOOLEAN:
        raise RewriteError("to_binary_query expects a Boolean query")
    for r in q.program.rules:
        for a in r.body:
            if a.pred in ("Child", "Desc"):
                raise RewriteError("to_binary_query: %s must be eliminated first" % a.pred)
            if a.pred in ("Lc", "Rc", "Hnlc", "Hnrc"):
                raise RewriteError("to_binary_query: query already uses %s" % a.pred)
    rules = rename_predicates(q.program.rules, _TO_BINARY)
    top = NameSupply(q.program.idb).fresh(q.pred + "_bin")
    rules.append(_rule(_unary(top, "x"), _unary(q.pred, "x"), _unary("Hnrc", "x")))
    _log(log, "to_binary_query: renamed Fc/Ns/Leaf/Ls, query %s" % top)
    return DatalogQuery(Program(rules), top, BOOLEAN)


# -- Root/Leaf removal ------------------------------------------------------------------

def eliminate_root_leaf(q1, q2, alphabet, log=None):
    """Boolean queries over Child only, on labels carrying Root/Leaf flags.

    Returns (alphabet, q1', q2'). q2' also accepts trees whose flags are
    detectably inconsistent (a Root flag below a parent, a Leaf flag above a child).
    """
    alphabet = as_alphabet(alphabet)
    for q in (q1, q2):
        if q.mode != BOOLEAN:
            raise RewriteError("eliminate_root_leaf expects Boolean queries")
    flagged = root_leaf_alphabet(alphabet)
    taken = set(q1.program.idb) | set(q2.program.idb)
    names = NameSupply(taken)
    lab = {a: names.fresh("Lab_" + a) for a in alphabet.symbols}
    root_p, leaf_p = names.fresh("IsRoot"), names.fresh("IsLeaf")
    incons, acc = names.fresh("Incons"), names.fresh("Accept")
    labels = []
    for s in flagged.symbols:
        a, flags = split_flag_symbol(s)
        labels.append(_rule(_unary(lab[a], "x"), _unary(label_pred(s), "x")))
        if "Root" in flags:
            labels.append(_rule(_unary(root_p, "x"), _unary(label_pred(s), "x")))
        if "Leaf" in flags:
            labels.append(_rule(_unary(leaf_p, "x"), _unary(label_pred(s), "x")))
    mapping = {label_pred(a): lab[a] for a in alphabet.symbols}
    mapping.update({"Root": root_p, "Leaf": leaf_p})
    inc = [
        _rule(_unary(incons, "x"), _unary(root_p, "x"), Atom("Child", ("y", "x"))),
        _rule(_unary(incons, "x"), _unary(leaf_p, "x"), Atom("Child", ("x", "y"))),
        _rule(_unary(incons, "x"), Atom("Child", ("x", "y")), _unary(incons, "y")),
    ]
    for q in (q1, q2):
        bad = {a.pred for r in q.program.rules for a in r.body
               if is_builtin(a.pred) and not is_label(a.pred)} - {"Child", "Root", "Leaf"}
        if bad:
            raise RewriteError("eliminate_root_leaf: unexpected relations %s" % sorted(bad))
    r1 = labels + rename_predicates(q1.program.rules, mapping)
    # q1 and q2 may share idb names; keep q2's apart from the helper names only
    r2 = labels + inc + rename_predicates(q2.program.rules, mapping) + [
        _rule(_unary(acc, "x"), _unary(incons, "x")),
        _rule(_unary(acc, "x"), _unary(q2.pred, "x")),
    ]
    validate_rules(r1)
    validate_rules(r2)
    _log(log, "eliminate_root_leaf: alphabet of %d flagged labels" % len(flagged))
    return (flagged, DatalogQuery(Program(r1), q1.pred, BOOLEAN),
            DatalogQuery(Program(r2), acc, BOOLEAN))


__all__ = [
    "NameSupply", "RewriteError", "tmnf_form", "tmnf_certificate", "is_tmnf",
    "unary_to_boolean", "make_acyclic", "decompose_acyclic_rule", "decompose_program",
    "eliminate_desc", "to_tmnf", "to_binary_query", "eliminate_root_leaf",
    "has_directed_cycle", "is_acyclic_rule", "cycle_edges", "rename_predicates", "UNARY_BUILTINS",
    "UNARY",
]
