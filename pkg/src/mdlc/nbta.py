"""Nondeterministic bottom-up tree automata over binary trees.

Transitions are keyed by (left, right, symbol) where an absent child is
``None`` (written ``#`` in text).  Besides explicit automata there is a small
lazy interface (``step`` / ``is_accepting``) so that products, projections and
subset constructions can be explored on the fly.
"""

import heapq
import itertools
from collections import defaultdict

from .trees import Alphabet, BinaryTree, as_alphabet

PAD = None


class AutomatonError(ValueError):
    pass


class TooLarge(RuntimeError):
    """Raised when a construction would exceed a configured cap."""

    def __init__(self, what, limit, hint=""):
        self.what, self.limit = what, limit
        msg = "instance too large for desk scale: %s exceeds %s" % (what, limit)
        if hint:
            msg += " (%s)" % hint
        super().__init__(msg)


class LazyAutomaton:
    """Interface: ``alphabet``, ``step(l, r, sym)`` and ``is_accepting(q)``."""

    alphabet = None

    def step(self, l, r, sym):
        raise NotImplementedError

    def is_accepting(self, q):
        raise NotImplementedError

    def subsumed(self, new, old):
        """True only if every context accepting from ``new`` also accepts from ``old``."""
        return new == old

    def run_sets(self, tree):
        """Reachable state sets per node, bottom-up."""
        sets = [None] * len(tree.labels)
        for v in reversed(range(len(tree.labels))):
            lc, rc = tree.left[v], tree.right[v]
            ls = [PAD] if lc is None else sets[lc]
            rs = [PAD] if rc is None else sets[rc]
            out = set()
            sym = tree.labels[v]
            for l in ls:
                for r in rs:
                    out.update(self.step(l, r, sym))
            sets[v] = out
        return sets

    def accepts(self, tree):
        if not isinstance(tree, BinaryTree):
            raise AutomatonError("automata read binary trees")
        for s in tree.labels:
            if s not in self.alphabet:
                raise AutomatonError("symbol %r not in automaton alphabet" % s)
        return any(self.is_accepting(q) for q in self.run_sets(tree)[0])


class Nbta(LazyAutomaton):
    """Explicit automaton with states 0..k-1."""

    def __init__(self, alphabet, num_states, transitions, accepting, names=None):
        self.alphabet = as_alphabet(alphabet)
        self.num_states = int(num_states)
        trans = {}
        for (l, r, sym), targets in transitions.items():
            for q in (l, r):
                if q is not None and not 0 <= q < self.num_states:
                    raise AutomatonError("unknown state %r" % (q,))
            if sym not in self.alphabet:
                raise AutomatonError("symbol %r not in alphabet" % sym)
            ts = frozenset(targets)
            for t in ts:
                if not 0 <= t < self.num_states:
                    raise AutomatonError("unknown state %r" % (t,))
            if ts:
                trans[(l, r, sym)] = ts
        self.transitions = trans
        self.accepting = frozenset(accepting)
        for q in self.accepting:
            if not 0 <= q < self.num_states:
                raise AutomatonError("unknown accepting state %r" % (q,))
        if names is None:
            names = ["q%d" % i for i in range(self.num_states)]
        if len(names) != self.num_states or len(set(names)) != len(names):
            raise AutomatonError("state names must be distinct, one per state")
        self.names = tuple(str(n) for n in names)

    @property
    def states(self):
        return range(self.num_states)

    def step(self, l, r, sym):
        return self.transitions.get((l, r, sym), frozenset())

    def is_accepting(self, q):
        return q in self.accepting

    def num_transitions(self):
        return sum(len(t) for t in self.transitions.values())

    def count_runs(self, tree):
        """Number of runs (accepting or not) on ``tree``."""
        counts = [None] * len(tree.labels)
        for v in reversed(range(len(tree.labels))):
            lc, rc = tree.left[v], tree.right[v]
            ls = {PAD: 1} if lc is None else counts[lc]
            rs = {PAD: 1} if rc is None else counts[rc]
            out = defaultdict(int)
            for l, nl in ls.items():
                for r, nr in rs.items():
                    for t in self.step(l, r, tree.labels[v]):
                        out[t] += nl * nr
            counts[v] = dict(out)
        return sum(counts[0].values())

    def to_text(self):
        n = self.names
        lines = ["alphabet: " + " ".join(self.alphabet.symbols),
                 "states: " + " ".join(n),
                 "accepting: " + " ".join(n[q] for q in sorted(self.accepting))]

        def s(q):
            return "#" if q is None else n[q]
        for (l, r, sym) in sorted(self.transitions, key=_trans_key):
            for t in sorted(self.transitions[(l, r, sym)]):
                lines.append("%s %s %s -> %s" % (s(l), s(r), sym, n[t]))
        return "\n".join(lines) + "\n"

    def __repr__(self):
        return "Nbta(%d states, %d transitions, |F|=%d)" % (
            self.num_states, self.num_transitions(), len(self.accepting))


def _trans_key(k):
    l, r, sym = k
    return (-1 if l is None else l, -1 if r is None else r, sym)


def parse_nbta(text):
    header, trans = {}, []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if "->" in line:
            lhs, tgt = line.split("->")
            parts = lhs.split()
            if len(parts) != 3:
                raise AutomatonError("bad transition line: %r" % raw)
            trans.append((parts[0], parts[1], parts[2], tgt.strip()))
        elif ":" in line:
            key, val = line.split(":", 1)
            header[key.strip().lower()] = val.split()
        else:
            raise AutomatonError("bad line: %r" % raw)
    for key in ("alphabet", "states", "accepting"):
        if key not in header:
            raise AutomatonError("missing %s: line" % key)
    names = header["states"]
    idx = {n: i for i, n in enumerate(names)}

    def st(n):
        if n == "#":
            return None
        if n not in idx:
            raise AutomatonError("unknown state %r" % n)
        return idx[n]
    table = defaultdict(set)
    for l, r, sym, t in trans:
        table[(st(l), st(r), sym)].add(st(t))
    return Nbta(Alphabet(header["alphabet"]), len(names), table,
                {st(n) for n in header["accepting"]}, names)


def _check_same_alphabet(a1, a2):
    if a1.alphabet.symbols != a2.alphabet.symbols:
        raise AutomatonError("alphabet mismatch")


def union(a1, a2):
    """Disjoint union; k1 + k2 states."""
    _check_same_alphabet(a1, a2)
    k1 = a1.num_states
    table = {}
    for (l, r, s), t in a1.transitions.items():
        table[(l, r, s)] = set(t)
    for (l, r, s), t in a2.transitions.items():
        key = (None if l is None else l + k1, None if r is None else r + k1, s)
        table.setdefault(key, set()).update(q + k1 for q in t)
    acc = set(a1.accepting) | {q + k1 for q in a2.accepting}
    names = ["1." + n for n in a1.names] + ["2." + n for n in a2.names]
    return Nbta(a1.alphabet, k1 + a2.num_states, table, acc, names)


def intersect(a1, a2):
    """Product automaton; k1 * k2 states."""
    _check_same_alphabet(a1, a2)
    k2 = a2.num_states

    def pair(p, q):
        if p is None and q is None:
            return None
        return p * k2 + q
    by_sym = defaultdict(list)
    for (l, r, s), t in a2.transitions.items():
        by_sym[s].append((l, r, t))
    table = {}
    for (l1, r1, s), t1 in a1.transitions.items():
        for l2, r2, t2 in by_sym[s]:
            if (l1 is None) != (l2 is None) or (r1 is None) != (r2 is None):
                continue
            table[(pair(l1, l2), pair(r1, r2), s)] = {p * k2 + q for p in t1 for q in t2}
    acc = {p * k2 + q for p in a1.accepting for q in a2.accepting}
    names = ["(%s,%s)" % (m, n) for m in a1.names for n in a2.names]
    return Nbta(a1.alphabet, a1.num_states * k2, table, acc, names)


def complement(a, max_states=None):
    """Full subset construction: 2^k states, deterministic and complete."""
    k = a.num_states
    if max_states is not None and 2 ** k > max_states:
        raise TooLarge("complement of a %d-state automaton" % k, max_states)
    subsets = list(range(2 ** k))

    def members(m):
        return [q for q in range(k) if m >> q & 1]
    mem = [members(m) for m in subsets]
    table = {}
    for s in a.alphabet.symbols:
        for L in [None] + subsets:
            ls = [None] if L is None else mem[L]
            for R in [None] + subsets:
                rs = [None] if R is None else mem[R]
                tgt = 0
                for l in ls:
                    for r in rs:
                        for t in a.step(l, r, s):
                            tgt |= 1 << t
                table[(L, R, s)] = {tgt}
    acc = {m for m in subsets if not any(q in a.accepting for q in mem[m])}
    names = ["{%s}" % ",".join(a.names[q] for q in mem[m]) for m in subsets]
    return Nbta(a.alphabet, 2 ** k, table, acc, names)


def project(a, mapping, alphabet=None):
    """Relabel symbols through ``mapping`` (symbol -> projected symbol); same states."""
    if alphabet is None:
        seen = []
        for s in a.alphabet.symbols:
            p = mapping[s]
            if p not in seen:
                seen.append(p)
        alphabet = Alphabet(seen)
    table = defaultdict(set)
    for (l, r, s), t in a.transitions.items():
        table[(l, r, mapping[s])].update(t)
    return Nbta(alphabet, a.num_states, table, a.accepting, a.names)


def trim(a):
    """Drop states that are unreachable bottom-up or cannot lead to acceptance."""
    reach = _reachable_states(a)
    useful = set(q for q in a.accepting if q in reach)
    changed = True
    while changed:
        changed = False
        for (l, r, s), ts in a.transitions.items():
            if not (ts & useful):
                continue
            if (l is None or l in reach) and (r is None or r in reach):
                for q in (l, r):
                    if q is not None and q not in useful:
                        useful.add(q)
                        changed = True
    keep = sorted(useful)
    ren = {q: i for i, q in enumerate(keep)}
    table = {}
    for (l, r, s), ts in a.transitions.items():
        if (l is None or l in ren) and (r is None or r in ren):
            t = {ren[q] for q in ts if q in ren}
            if t:
                table[(None if l is None else ren[l], None if r is None else ren[r], s)] = t
    return Nbta(a.alphabet, len(keep), table, {ren[q] for q in a.accepting if q in ren},
                [a.names[q] for q in keep])


def _reachable_states(a):
    reach = set()
    changed = True
    while changed:
        changed = False
        for (l, r, s), ts in a.transitions.items():
            if (l is None or l in reach) and (r is None or r in reach):
                new = ts - reach
                if new:
                    reach |= new
                    changed = True
    return reach


def universal(alphabet):
    alphabet = as_alphabet(alphabet)
    table = {}
    for s in alphabet.symbols:
        for l in (None, 0):
            for r in (None, 0):
                table[(l, r, s)] = {0}
    return Nbta(alphabet, 1, table, {0})


def empty_automaton(alphabet):
    return Nbta(as_alphabet(alphabet), 0, {}, set())


# -- lazy constructions ----------------------------------------------------------------

class LazyIntersect(LazyAutomaton):
    def __init__(self, a, b):
        if a.alphabet.symbols != b.alphabet.symbols:
            raise AutomatonError("alphabet mismatch")
        self.a, self.b, self.alphabet = a, b, a.alphabet

    def step(self, l, r, sym):
        l1, l2 = (None, None) if l is None else l
        r1, r2 = (None, None) if r is None else r
        ta = self.a.step(l1, r1, sym)
        if not ta:
            return ()
        tb = self.b.step(l2, r2, sym)
        return [(p, q) for p in ta for q in tb]

    def is_accepting(self, q):
        return self.a.is_accepting(q[0]) and self.b.is_accepting(q[1])

    def subsumed(self, new, old):
        return self.a.subsumed(new[0], old[0]) and self.b.subsumed(new[1], old[1])


class LazyProject(LazyAutomaton):
    """Projection through ``mapping`` (source symbol -> target symbol)."""

    def __init__(self, a, mapping, alphabet=None):
        self.a = a
        pre = defaultdict(list)
        for s in a.alphabet.symbols:
            pre[mapping[s]].append(s)
        self.pre = dict(pre)
        self.alphabet = as_alphabet(alphabet) if alphabet is not None else Alphabet(list(pre))
        self._cache = {}

    def step(self, l, r, sym):
        key = (l, r, sym)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        out = set()
        for s in self.pre.get(sym, ()):
            out.update(self.a.step(l, r, s))
        out = frozenset(out)
        if len(self._cache) < 2000000:
            self._cache[key] = out
        return out

    def is_accepting(self, q):
        return self.a.is_accepting(q)

    def subsumed(self, new, old):
        return self.a.subsumed(new, old)


class LazyComplement(LazyAutomaton):
    """Reachable part of the subset construction, states are frozensets."""

    def __init__(self, a):
        self.a, self.alphabet = a, a.alphabet
        self._cache = {}
        self._rows = {}
        self._subsets = {}
        self._by_left = None
        if isinstance(a, Nbta):
            by_left = defaultdict(dict)
            for (l, r, sym), ts in a.transitions.items():
                by_left[(l, sym)][r] = ts
            self._by_left = dict(by_left)

    def _row(self, L, sym):
        """For an explicit automaton: right state -> bitmask of targets over left states in L."""
        key = (L, sym)
        row = self._rows.get(key)
        if row is None:
            row = defaultdict(int)
            for x in ((None,) if L is None else L):
                for y, ts in self._by_left.get((x, sym), {}).items():
                    row[y] |= self._mask(ts)
            row = self._rows[key] = dict(row)
        return row

    def _mask(self, ts):
        m = 0
        for t in ts:
            m |= 1 << t
        return m

    def _subset(self, m):
        fs = self._subsets.get(m)
        if fs is None:
            fs = self._subsets[m] = (frozenset(i for i in range(m.bit_length()) if m >> i & 1),)
        return fs

    def step(self, l, r, sym):
        key = (l, r, sym)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if self._by_left is not None:
            row = self._row(l, sym)
            m = 0
            for y in ((None,) if r is None else r):
                m |= row.get(y, 0)
            res = self._subset(m)
        else:
            out = set()
            for x in ((None,) if l is None else l):
                for y in ((None,) if r is None else r):
                    out.update(self.a.step(x, y, sym))
            res = (frozenset(out),)
        if len(self._cache) < 2000000:
            self._cache[key] = res
        return res

    def is_accepting(self, q):
        return not any(self.a.is_accepting(s) for s in q)

    def subsumed(self, new, old):
        # every inner state of old must be dominated by one of new
        sub = self.a.subsumed
        return all(any(sub(o, n) for n in new) for o in old)


class LazyFlip(LazyAutomaton):
    """Complement of a deterministic, complete automaton: same runs, flipped acceptance.

    The caller guarantees that ``a.step`` always returns exactly one state.
    """

    def __init__(self, a):
        self.a, self.alphabet = a, a.alphabet

    def step(self, l, r, sym):
        return self.a.step(l, r, sym)

    def is_accepting(self, q):
        return not self.a.is_accepting(q)

    def subsumed(self, new, old):
        # accepting contexts of the flip are the rejecting contexts of the original
        return self.a.subsumed(old, new)


# -- exploration ---------------------------------------------------------------------

class _Search:
    """Saturation over reachable states in order of smallest witness size."""

    def __init__(self, a, max_states=None, stop_on_accept=False, record=False, prune=False):
        self.a = a
        self.prune = prune
        self.pruned = 0
        self.record = {} if record else None
        self.max_states = max_states
        self.stop = stop_on_accept
        self.best = {}      # state -> (size, witness)
        self.order = []
        self.found = None
        self.explored_pairs = 0

    def run(self):
        a, syms = self.a, self.a.alphabet.symbols
        heap, counter = [], itertools.count()
        for s in syms:
            ts = a.step(None, None, s)
            if self.record is not None and ts:
                self.record[(None, None, s)] = ts
            for q in ts:
                heapq.heappush(heap, (1, next(counter), q, (s, None, None)))
        while heap:
            size, _, q, w = heapq.heappop(heap)
            if q in self.best:
                continue
            if self.prune and any(a.subsumed(q, p) for p in self.order):
                # a state explored earlier (so with a witness no larger) does at least as well
                self.best[q] = None
                self.pruned += 1
                continue
            self.best[q] = (size, w)
            self.order.append(q)
            if self.max_states is not None and len(self.order) > self.max_states:
                raise TooLarge("explored automaton states", self.max_states)
            if a.is_accepting(q) and self.found is None:
                self.found = q
                if self.stop:
                    return self
            for p in [None] + self.order:
                if p is None:
                    combos = [(q, None), (None, q)]
                elif p == q:
                    combos = [(q, q)]
                else:
                    combos = [(q, p), (p, q)]
                for l, r in combos:
                    lsz, lw = (0, None) if l is None else self.best[l]
                    rsz, rw = (0, None) if r is None else self.best[r]
                    n = 1 + lsz + rsz
                    for s in syms:
                        self.explored_pairs += 1
                        ts = a.step(l, r, s)
                        if self.record is not None and ts:
                            self.record[(l, r, s)] = ts
                        for t in ts:
                            if t not in self.best:
                                heapq.heappush(heap, (n, next(counter), t, (s, lw, rw)))
        return self


def _witness_tree(w):
    labels, left, right = [], [], []

    def build(node):
        s, lw, rw = node
        v = len(labels)
        labels.append(s)
        left.append(None)
        right.append(None)
        if lw is not None:
            left[v] = build(lw)
        if rw is not None:
            right[v] = build(rw)
        return v
    # iterative depth is bounded by tree size; witnesses are small
    build(w)
    return BinaryTree(labels, left, right)


def witness(a, max_states=None, stats=None, prune=True):
    """A smallest accepted tree, or None if the language is empty."""
    srch = _Search(a, max_states, stop_on_accept=True, prune=prune).run()
    if stats is not None:
        stats["explored_states"] = len(srch.order)
        stats["explored_pairs"] = srch.explored_pairs
        stats["pruned_states"] = srch.pruned
    if srch.found is None:
        return None
    return _witness_tree(srch.best[srch.found][1])


def is_empty(a, max_states=None, stats=None):
    return witness(a, max_states, stats) is None


def reachable_states(a, max_states=None):
    return list(_Search(a, max_states).run().order)


def materialize(a, max_states=None, names=None):
    """Explicit automaton on the reachable states of a lazy automaton."""
    srch = _Search(a, max_states, record=True).run()
    states = srch.order
    idx = {q: i for i, q in enumerate(states)}
    table = defaultdict(set)
    for (l, r, s), ts in srch.record.items():
        table[(None if l is None else idx[l], None if r is None else idx[r], s)].update(
            idx[t] for t in ts)
    acc = {idx[q] for q in states if a.is_accepting(q)}
    return Nbta(a.alphabet, len(states), table, acc, names)


__all__ = [
    "PAD", "Nbta", "LazyAutomaton", "LazyIntersect", "LazyProject", "LazyComplement", "LazyFlip",
    "AutomatonError", "TooLarge", "parse_nbta", "union", "intersect", "complement", "project",
    "trim", "universal", "empty_automaton", "witness", "is_empty", "materialize",
    "reachable_states",
]
