"""Automaton for the trees on which a Boolean TMNF query fails.

The query is read as the sentence "there are sets X_1..X_n closed under every
rule with the query predicate not holding at the root".  Trees are annotated with
one bit per intensional predicate and two assignment bits z1, z2; small automata
check assignments and atoms, and unions, projections and a subset construction
assemble the result.
"""

from itertools import product

from .datalog import BOOLEAN
from .nbta import (LazyComplement, Nbta, TooLarge, intersect, materialize, project, trim,
                   union)
from .normal_forms import tmnf_form
from .schema import is_label, label_symbol
from .trees import Alphabet, as_alphabet, compose, split_composite

DEFAULT_MAX_BITS = 8
DEFAULT_MAX_SYMBOLS = 4096


class AnnotatedAlphabet:
    """Symbols (alpha, X-bits, z-bits), optionally without the z part."""

    def __init__(self, alphabet, n, with_z=True):
        self.base = as_alphabet(alphabet)
        self.n = n
        self.with_z = with_z
        syms, info = [], {}
        zs = list(product((0, 1), repeat=2)) if with_z else [None]
        for a in self.base.symbols:
            for bits in product((0, 1), repeat=n):
                for z in zs:
                    parts = [a, "".join(map(str, bits)) or "-"]
                    if z is not None:
                        parts.append("%d%d" % z)
                    s = compose(*parts)
                    syms.append(s)
                    info[s] = (a, bits, z)
        self.alphabet = Alphabet(syms)
        self.info = info

    def __len__(self):
        return len(self.alphabet)


def annotated_size(alphabet, n):
    return len(as_alphabet(alphabet)) * (2 ** n) * 4


def _flagged(info, sym, j):
    return info[sym][2][j - 1] == 1


def build_assignment_automaton(j, sig):
    """Exactly one node carries a 1 in its z_j component."""
    S0, S1 = 0, 1
    table = {}
    for s in sig.alphabet.symbols:
        nu = 1 if _flagged(sig.info, s, j) else 0
        for l, r in ((None, None), (S0, S0), (S0, None), (None, S0)):
            table[(l, r, s)] = {nu}
        if nu == 0:
            for l, r in ((S1, None), (None, S1), (S1, S0), (S0, S1)):
                table[(l, r, s)] = {S1}
    return Nbta(sig.alphabet, 2, table, {S1}, ["s0", "s1"])


def _unary_holds(chi, info, sym, l, r):
    kind = chi[0]
    a, bits, _ = info[sym]
    if kind == "Label":
        return a == chi[1]
    if kind == "Hnlc":
        return l is None
    if kind == "Hnrc":
        return r is None
    if kind == "X":
        return bits[chi[1]] == (1 if chi[3] else 0)
    raise ValueError(kind)


def build_atom_automaton(chi, sig):
    """Automaton for a (possibly negated) atom over the assignment variables.

    Atom shapes: ("Label", alpha, j), ("Root", j), ("Hnlc", j), ("Hnrc", j),
    ("X", i, j, positive), ("Lc", a, b) meaning Lc(z_a, z_b), ("Rc", a, b), and
    ("XRoot", i) for X_i at the root.
    """
    info = sig.info
    kind = chi[0]
    table = {}
    syms = sig.alphabet.symbols
    low = (None, 0)
    if kind == "XRoot":
        i = chi[1]
        for s in syms:
            for l in low:
                for r in low:
                    t = {0}
                    if info[s][1][i] == 1:
                        t.add(1)
                    table[(l, r, s)] = t
        return Nbta(sig.alphabet, 2, table, {1}, ["s0", "s1"])
    if kind in ("Lc", "Rc"):
        za, zb = chi[1], chi[2]
        for s in syms:
            for l in (None, 0, 1, 2):
                for r in (None, 0, 1, 2):
                    t = set()
                    if l in low and r in low:
                        t.add(0)
                        if _flagged(info, s, zb):
                            t.add(1)
                    if _flagged(info, s, za):
                        if kind == "Lc" and l == 1 and r in low:
                            t.add(2)
                        if kind == "Rc" and r == 1 and l in low:
                            t.add(2)
                    if (l == 2 and r in low) or (r == 2 and l in low):
                        t.add(2)
                    if t:
                        table[(l, r, s)] = t
        return Nbta(sig.alphabet, 3, table, {2}, ["s0", "s1", "s2"])
    j = chi[-2] if kind == "X" else chi[-1]
    for s in syms:
        for l in (None, 0, 1):
            for r in (None, 0, 1):
                t = set()
                if l in low and r in low:
                    t.add(0)
                    if _flagged(info, s, j):
                        if kind == "Root" or _unary_holds(chi, info, s, l, r):
                            t.add(1)
                elif kind != "Root" and ((l == 1 and r in low) or (r == 1 and l in low)):
                    t.add(1)
                if t:
                    table[(l, r, s)] = t
    return Nbta(sig.alphabet, 2, table, {1}, ["s0", "s1"])


def _unary_atom(pred, j, idx, alphabet, positive=True):
    if pred in idx:
        return ("X", idx[pred], j, positive)
    if not positive:
        raise ValueError("only intensional atoms are negated")
    if is_label(pred):
        if label_symbol(pred) not in alphabet:
            raise ValueError("label %s not in alphabet" % label_symbol(pred))
        return ("Label", label_symbol(pred), j)
    if pred in ("Root", "Hnlc", "Hnrc"):
        return (pred, j)
    raise ValueError("unsupported unary relation %s" % pred)


def rule_atoms(rule, idx, alphabet):
    """The three atoms b1, b2 and not-head of a TMNF rule, with x as z1 and y as z2."""
    form = tmnf_form(rule)
    if form is None:
        raise ValueError("rule not in TMNF")
    b = rule.body
    neg = ("X", idx[rule.head.pred], 1, False)
    if form == 3:
        return [_unary_atom(b[0].pred, 1, idx, alphabet), _unary_atom(b[1].pred, 1, idx, alphabet), neg]
    R = b[0].pred
    if R not in ("Lc", "Rc"):
        raise ValueError("binary relation %s is not a binary-tree axis" % R)
    edge = (R, 1, 2) if form == 1 else (R, 2, 1)
    return [edge, _unary_atom(b[1].pred, 2, idx, alphabet), neg]


def build_a_no(q, alphabet, max_bits=DEFAULT_MAX_BITS, max_symbols=DEFAULT_MAX_SYMBOLS,
               max_states=None, stats=None):
    """Explicit automaton accepting exactly the binary trees where q is false."""
    alphabet = as_alphabet(alphabet)
    if q.mode != BOOLEAN:
        raise ValueError("build_a_no expects a Boolean query")
    idb = sorted(q.program.idb, key=lambda p: (p != q.pred, p))
    n = len(idb)
    size = annotated_size(alphabet, n)
    if n > max_bits or size > max_symbols:
        raise TooLarge("annotated alphabet for %d intensional predicates (%d symbols)" % (n, size),
                       "%d bits / %d symbols" % (max_bits, max_symbols),
                       "shrink the query or raise the cap")
    idx = {p: i for i, p in enumerate(idb)}
    sig = AnnotatedAlphabet(alphabet, n)
    z1 = build_assignment_automaton(1, sig)
    z2 = build_assignment_automaton(2, sig)
    qf = build_atom_automaton(("XRoot", 0), sig)
    largest_zeta = 0
    for r in q.program.rules:
        zeta = trim(intersect(z1, z2))
        for chi in rule_atoms(r, idx, alphabet):
            zeta = trim(intersect(zeta, build_atom_automaton(chi, sig)))
        largest_zeta = max(largest_zeta, zeta.num_states)
        qf = trim(union(qf, zeta))
    sig_x = AnnotatedAlphabet(alphabet, n, with_z=False)
    drop_z = {s: compose(*split_composite(s)[:2]) for s in sig.alphabet.symbols}
    ex = trim(project(qf, drop_z, sig_x.alphabet))
    neg = trim(materialize(LazyComplement(ex), max_states))
    drop_x = {s: split_composite(s)[0] for s in sig_x.alphabet.symbols}
    a_no = trim(project(neg, drop_x, alphabet))
    if stats is not None:
        stats.update({"mso_bits": n, "mso_symbols": len(sig), "mso_zeta_max": largest_zeta,
                      "mso_qf_states": qf.num_states, "mso_exists_states": ex.num_states,
                      "mso_complement_states": neg.num_states, "a_no_states": a_no.num_states})
    return a_no


__all__ = ["AnnotatedAlphabet", "build_assignment_automaton", "build_atom_automaton",
           "build_a_no", "rule_atoms", "annotated_size", "DEFAULT_MAX_BITS",
           "DEFAULT_MAX_SYMBOLS"]
