"""Labeled trees (unordered, ordered, binary), their fact views and encodings."""

import itertools
import re
from functools import lru_cache

from .schema import FLAVOR_RELATIONS, SchemaError, arity, label_pred, schema_relations

HAT_FLAGS = ("Root", "Hnlc", "Hnrc", "Islc", "Isrc")
ROOT_LEAF_FLAGS = ("Root", "Leaf")

_LABEL_RE = re.compile(r"^[A-Za-z0-9_,()!|{}\-]+$")


class TreeError(ValueError):
    pass


class TreeSyntaxError(TreeError):
    def __init__(self, message, position):
        super().__init__("%s at position %d" % (message, position))
        self.position = position


class RootHasRightChild(TreeError):
    pass


class Alphabet:
    """Ordered list of distinct label names."""

    def __init__(self, symbols):
        symbols = tuple(symbols)
        if not symbols:
            raise ValueError("alphabet must be non-empty")
        if len(set(symbols)) != len(symbols):
            raise ValueError("duplicate symbols in alphabet")
        for s in symbols:
            if not isinstance(s, str) or not _LABEL_RE.match(s):
                raise ValueError("bad symbol %r" % (s,))
        self.symbols = symbols
        self._index = {s: i for i, s in enumerate(symbols)}

    def __iter__(self):
        return iter(self.symbols)

    def __len__(self):
        return len(self.symbols)

    def __contains__(self, symbol):
        return symbol in self._index

    def __eq__(self, other):
        return isinstance(other, Alphabet) and self.symbols == other.symbols

    def __hash__(self):
        return hash(self.symbols)

    def __repr__(self):
        return "Alphabet(%r)" % (list(self.symbols),)

    def index(self, symbol):
        return self._index[symbol]

    @classmethod
    def parse(cls, text):
        return cls(line.strip() for line in text.splitlines() if line.strip())

    def to_text(self):
        return "".join(s + "\n" for s in self.symbols)


def as_alphabet(alphabet):
    return alphabet if isinstance(alphabet, Alphabet) else Alphabet(alphabet)


# -- composite symbols -------------------------------------------------------

def compose(*parts):
    return "(" + ",".join(parts) + ")"


def split_composite(symbol):
    """Split "(a,1)" into ["a", "1"], respecting nested brackets."""
    if not (symbol.startswith("(") and symbol.endswith(")")):
        raise ValueError("not a composite symbol: %r" % symbol)
    inner = symbol[1:-1]
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(inner):
        if ch in "({":
            depth += 1
        elif ch in ")}":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append(inner[start:i])
            start = i + 1
    parts.append(inner[start:])
    return parts


def flag_symbol(symbol, flags, order):
    return compose(symbol, "{" + ",".join(f for f in order if f in flags) + "}")


def split_flag_symbol(symbol):
    base, flags = split_composite(symbol)
    inner = flags[1:-1]
    return base, frozenset(f for f in inner.split(",") if f)


def hat_symbol(symbol, flags):
    return flag_symbol(symbol, flags, HAT_FLAGS)


def marked_symbol(symbol, bit):
    return compose(symbol, str(int(bit)))


def marked_alphabet(alphabet):
    return Alphabet(marked_symbol(a, b) for a in as_alphabet(alphabet) for b in (0, 1))


def _subsets(items):
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


def hat_alphabet(alphabet):
    return Alphabet(hat_symbol(a, fl) for a in as_alphabet(alphabet) for fl in _subsets(HAT_FLAGS))


def root_leaf_alphabet(alphabet):
    return Alphabet(flag_symbol(a, fl, ROOT_LEAF_FLAGS)
                    for a in as_alphabet(alphabet) for fl in _subsets(ROOT_LEAF_FLAGS))


# -- trees ---------------------------------------------------------------------

class Tree:
    """Rooted unranked tree with preorder node ids; node 0 is the root."""

    def __init__(self, labels, children, ordered=True):
        self.labels = tuple(labels)
        self.children = tuple(tuple(c) for c in children)
        self.ordered = ordered
        n = len(self.labels)
        if n == 0:
            raise TreeError("trees must have at least one node")
        if len(self.children) != n:
            raise TreeError("labels and children disagree in length")
        parent = [None] * n
        for v, kids in enumerate(self.children):
            for c in kids:
                if not 0 < c < n or parent[c] is not None:
                    raise TreeError("node %r has no unique parent" % (c,))
                parent[c] = v
        self.parent = tuple(parent)
        order = []
        stack = [0]
        while stack:
            v = stack.pop()
            order.append(v)
            stack.extend(reversed(self.children[v]))
        if order != list(range(n)):
            raise TreeError("node ids must be assigned in preorder")

    @property
    def root(self):
        return 0

    def __len__(self):
        return len(self.labels)

    @property
    def nodes(self):
        return range(len(self.labels))

    def key(self):
        return (self.labels, self.children)

    def __eq__(self, other):
        return isinstance(other, Tree) and self.key() == other.key() and self.ordered == other.ordered

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return "Tree(%r)" % self.to_text()

    def to_nested(self, v=0):
        return (self.labels[v], tuple(self.to_nested(c) for c in self.children[v]))

    @classmethod
    def from_nested(cls, nested, ordered=True):
        labels, children = [], []

        def walk(node):
            v = len(labels)
            labels.append(node[0])
            children.append([])
            for sub in node[1]:
                children[v].append(walk(sub))
            return v

        walk(nested)
        return cls(labels, children, ordered)

    def to_text(self, v=0):
        kids = self.children[v]
        if not kids:
            return self.labels[v]
        return self.labels[v] + "(" + ",".join(self.to_text(c) for c in kids) + ")"

    def canonical(self):
        """Unordered canonical form: siblings sorted by their text."""
        def canon(node):
            kids = sorted((canon(k) for k in node[1]), key=_nested_text)
            return (node[0], tuple(kids))
        return Tree.from_nested(canon(self.to_nested()), self.ordered)

    def relabel(self, labels):
        return Tree(labels, self.children, self.ordered)

    def depth(self, v):
        d = 1
        while self.parent[v] is not None:
            v = self.parent[v]
            d += 1
        return d


def _nested_text(node):
    if not node[1]:
        return node[0]
    return node[0] + "(" + ",".join(_nested_text(k) for k in node[1]) + ")"


class BinaryTree:
    """Binary tree with optional left/right children and preorder ids."""

    def __init__(self, labels, left, right):
        self.labels = tuple(labels)
        self.left = tuple(left)
        self.right = tuple(right)
        n = len(self.labels)
        if n == 0:
            raise TreeError("trees must have at least one node")
        if not len(self.left) == len(self.right) == n:
            raise TreeError("inconsistent child arrays")
        parent = [None] * n
        for v in range(n):
            l, r = self.left[v], self.right[v]
            if l is not None and l == r:
                raise TreeError("left and right child coincide")
            for c in (l, r):
                if c is None:
                    continue
                if not 0 < c < n or parent[c] is not None:
                    raise TreeError("node %r has no unique parent" % (c,))
                parent[c] = v
        self.parent = tuple(parent)
        order, stack = [], [0]
        while stack:
            v = stack.pop()
            order.append(v)
            for c in (self.right[v], self.left[v]):
                if c is not None:
                    stack.append(c)
        if order != list(range(n)):
            raise TreeError("node ids must be assigned in preorder")

    root = 0

    def __len__(self):
        return len(self.labels)

    @property
    def nodes(self):
        return range(len(self.labels))

    def key(self):
        return (self.labels, self.left, self.right)

    def __eq__(self, other):
        return isinstance(other, BinaryTree) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return "BinaryTree(%r)" % self.to_text()

    def to_nested(self, v=0):
        l, r = self.left[v], self.right[v]
        return (self.labels[v],
                None if l is None else self.to_nested(l),
                None if r is None else self.to_nested(r))

    @classmethod
    def from_nested(cls, nested):
        labels, left, right = [], [], []

        def walk(node):
            v = len(labels)
            labels.append(node[0])
            left.append(None)
            right.append(None)
            if node[1] is not None:
                left[v] = walk(node[1])
            if node[2] is not None:
                right[v] = walk(node[2])
            return v

        walk(nested)
        return cls(labels, left, right)

    def to_text(self, v=0):
        l, r = self.left[v], self.right[v]
        if l is None and r is None:
            return self.labels[v]
        ls = "#" if l is None else self.to_text(l)
        rs = "#" if r is None else self.to_text(r)
        return "%s(%s,%s)" % (self.labels[v], ls, rs)

    def relabel(self, labels):
        return BinaryTree(labels, self.left, self.right)


# -- parsing -----------------------------------------------------------------

def _skip_ws(text, i):
    while i < len(text) and text[i].isspace():
        i += 1
    return i


def _read_label(text, i, alphabet):
    if alphabet is not None:
        best = None
        for s in alphabet.symbols:
            if text.startswith(s, i):
                j = _skip_ws(text, i + len(s))
                if (j == len(text) or text[j] in "(),") and (best is None or len(s) > len(best)):
                    best = s
        if best is not None:
            return best, i + len(best)
    if i < len(text) and text[i] == "(":
        depth, j = 0, i
        while j < len(text):
            if text[j] in "({":
                depth += 1
            elif text[j] in ")}":
                depth -= 1
                if depth == 0:
                    j += 1
                    break
            j += 1
        else:
            raise TreeSyntaxError("unbalanced composite label", i)
    else:
        j = i
        while j < len(text) and text[j] not in "()," and not text[j].isspace():
            j += 1
    if j == i:
        raise TreeSyntaxError("label expected", i)
    label = text[i:j]
    if alphabet is not None and label not in alphabet:
        raise TreeError("unknown label %r at position %d" % (label, i))
    return label, j


def _parse_term(text, alphabet, allow_hole):
    def term(i):
        i = _skip_ws(text, i)
        if allow_hole and text.startswith("#", i):
            return None, i + 1
        label, i = _read_label(text, i, alphabet)
        i = _skip_ws(text, i)
        kids = []
        if i < len(text) and text[i] == "(":
            i += 1
            while True:
                sub, i = term(i)
                kids.append(sub)
                i = _skip_ws(text, i)
                if i < len(text) and text[i] == ",":
                    i += 1
                    continue
                if i < len(text) and text[i] == ")":
                    i += 1
                    break
                raise TreeSyntaxError("expected ',' or ')'", i)
        return (label, kids), i

    node, i = term(0)
    i = _skip_ws(text, i)
    if i != len(text):
        raise TreeSyntaxError("trailing input", i)
    if node is None:
        raise TreeSyntaxError("empty tree", 0)
    return node


def parse_tree(text, alphabet=None, ordered=True):
    """Parse ``a(b,c(d))`` into a Tree; labels are checked against ``alphabet``."""
    if alphabet is not None:
        alphabet = as_alphabet(alphabet)
    node = _parse_term(text, alphabet, allow_hole=False)

    def conv(n):
        return (n[0], tuple(conv(k) for k in n[1]))
    return Tree.from_nested(conv(node), ordered)


def parse_binary_tree(text, alphabet=None):
    """Parse ``a(b,#)``: exactly zero or two arguments, ``#`` marks a missing child."""
    if alphabet is not None:
        alphabet = as_alphabet(alphabet)
    node = _parse_term(text, alphabet, allow_hole=True)

    def conv(n):
        if n is None:
            return None
        if not n[1]:
            return (n[0], None, None)
        if len(n[1]) != 2:
            raise TreeError("binary nodes take exactly two arguments")
        return (n[0], conv(n[1][0]), conv(n[1][1]))
    return BinaryTree.from_nested(conv(node))


# -- facts -------------------------------------------------------------------

class FactSet:
    """Unary facts pred -> set of nodes, binary facts pred -> set of pairs."""

    def __init__(self, unary=None, binary=None):
        self.unary = {p: set(s) for p, s in (unary or {}).items()}
        self.binary = {p: set(s) for p, s in (binary or {}).items()}

    def copy(self):
        return FactSet(self.unary, self.binary)

    def add(self, pred, *args):
        if len(args) == 1:
            self.unary.setdefault(pred, set()).add(args[0])
        else:
            self.binary.setdefault(pred, set()).add(tuple(args))

    def __contains__(self, atom):
        pred, args = atom
        if len(args) == 1:
            return args[0] in self.unary.get(pred, ())
        return tuple(args) in self.binary.get(pred, ())

    def atoms(self):
        out = [(p, (v,)) for p, s in self.unary.items() for v in s]
        out += [(p, tuple(e)) for p, s in self.binary.items() for e in s]
        return sorted(out)

    def __iter__(self):
        return iter(self.atoms())

    def __len__(self):
        return sum(map(len, self.unary.values())) + sum(map(len, self.binary.values()))

    def __eq__(self, other):
        return isinstance(other, FactSet) and set(self.atoms()) == set(other.atoms())

    def issubset(self, other):
        return all(a in other for a in self.atoms())

    def nodes_with(self, pred):
        return set(self.unary.get(pred, ()))

    def __repr__(self):
        return "FactSet(%s)" % ", ".join("%s(%s)" % (p, ",".join(map(str, a))) for p, a in self.atoms())


def tree_flavor(tree):
    if isinstance(tree, BinaryTree):
        return "binary"
    return "ordered" if tree.ordered else "unordered"


def facts_of(tree, schema=None):
    """Atomic facts of ``tree`` for the relations of ``schema`` plus all label facts.

    The root counts as a last sibling, so the root is in Ls exactly as it is
    in Hnrc of the binary encoding.
    """
    flavor = tree_flavor(tree)
    allowed = FLAVOR_RELATIONS[flavor]
    rels = allowed if schema is None else schema_relations(schema)
    bad = sorted(r for r in rels if r not in allowed)
    if bad:
        raise SchemaError("relations %s unavailable on %s trees" % (bad, flavor))
    fs = FactSet()
    for v, a in enumerate(tree.labels):
        fs.add(label_pred(a), v)
    for r in rels:
        (fs.unary if arity(r) == 1 else fs.binary).setdefault(r, set())
    if "Root" in rels:
        fs.add("Root", 0)
    if flavor == "binary":
        for v in tree.nodes:
            l, r = tree.left[v], tree.right[v]
            if l is None:
                if "Hnlc" in rels:
                    fs.add("Hnlc", v)
            elif "Lc" in rels:
                fs.add("Lc", v, l)
            if r is None:
                if "Hnrc" in rels:
                    fs.add("Hnrc", v)
            elif "Rc" in rels:
                fs.add("Rc", v, r)
        return fs
    for v in tree.nodes:
        kids = tree.children[v]
        if not kids and "Leaf" in rels:
            fs.add("Leaf", v)
        if "Child" in rels:
            for c in kids:
                fs.add("Child", v, c)
        if kids and "Fc" in rels:
            fs.add("Fc", v, kids[0])
        if "Ns" in rels:
            for a, b in zip(kids, kids[1:]):
                fs.add("Ns", a, b)
        if kids and "Ls" in rels:
            fs.add("Ls", kids[-1])
    if "Ls" in rels:
        fs.add("Ls", 0)
    if "Desc" in rels:
        for v in tree.nodes:
            u = tree.parent[v]
            while u is not None:
                fs.add("Desc", u, v)
                u = tree.parent[u]
    return fs


# -- encodings ---------------------------------------------------------------

def to_binary(tree):
    """First-child / next-sibling encoding; node ids are preserved."""
    if not tree.ordered:
        raise TreeError("binary encoding needs an ordered tree")
    n = len(tree)
    left, right = [None] * n, [None] * n
    for v in tree.nodes:
        kids = tree.children[v]
        if kids:
            left[v] = kids[0]
        for a, b in zip(kids, kids[1:]):
            right[a] = b
    return BinaryTree(tree.labels, left, right)


def from_binary(btree, ordered=True):
    if btree.right[0] is not None:
        raise RootHasRightChild("the root of a binary encoding has no right child")
    children = []
    for v in btree.nodes:
        kids, c = [], btree.left[v]
        while c is not None:
            kids.append(c)
            c = btree.right[c]
        children.append(kids)
    return Tree(btree.labels, children, ordered)


def hat_flags(btree, v):
    flags = set()
    if v == 0:
        flags.add("Root")
    if btree.left[v] is None:
        flags.add("Hnlc")
    if btree.right[v] is None:
        flags.add("Hnrc")
    p = btree.parent[v]
    if p is not None:
        flags.add("Islc" if btree.left[p] == v else "Isrc")
    return frozenset(flags)


def extend_hat(btree):
    return btree.relabel(hat_symbol(a, hat_flags(btree, v)) for v, a in enumerate(btree.labels))


def project_hat(btree):
    return btree.relabel(split_flag_symbol(a)[0] for a in btree.labels)


def mark_node(tree, v):
    if v not in tree.nodes:
        raise TreeError("unknown node %r" % (v,))
    return tree.relabel(marked_symbol(a, u == v) for u, a in enumerate(tree.labels))


def unmark(tree):
    """Inverse of mark_node: returns (tree over the base alphabet, marked node)."""
    labels, marked = [], []
    for v, a in enumerate(tree.labels):
        base, bit = split_composite(a)
        labels.append(base)
        if bit == "1":
            marked.append(v)
    if len(marked) != 1:
        raise TreeError("expected exactly one marked node, found %d" % len(marked))
    return tree.relabel(labels), marked[0]


def root_leaf_encode(tree):
    """Attach Root/Leaf flags to every label."""
    out = []
    for v, a in enumerate(tree.labels):
        fl = set()
        if v == 0:
            fl.add("Root")
        if not tree.children[v]:
            fl.add("Leaf")
        out.append(flag_symbol(a, fl, ROOT_LEAF_FLAGS))
    return tree.relabel(out)


# -- enumeration ---------------------------------------------------------------

@lru_cache(maxsize=None)
def _ordered_shapes(n):
    return [tuple(f) for f in _ordered_forests(n - 1)]


@lru_cache(maxsize=None)
def _ordered_forests(m):
    if m == 0:
        return [()]
    out = []
    for k in range(1, m + 1):
        for t in _ordered_shapes(k):
            for rest in _ordered_forests(m - k):
                out.append((t,) + rest)
    return out


def _shape_tree(shape, labels, ordered):
    it = iter(labels)

    def build(s):
        return (next(it), tuple(build(c) for c in s))
    return Tree.from_nested(build(shape), ordered)


@lru_cache(maxsize=None)
def _unordered_trees(n, k):
    """Canonical unordered trees of size n over label indices 0..k-1."""
    out = []
    for lab in range(k):
        for forest in _multiforests(n - 1, k, (0, 0)):
            out.append((lab, forest))
    return out


def _multiforests(m, k, lo):
    if m == 0:
        yield ()
        return
    for size in range(1, m + 1):
        for idx, t in enumerate(_unordered_trees(size, k)):
            if (size, idx) < lo:
                continue
            for rest in _multiforests(m - size, k, (size, idx)):
                yield ((size, idx),) + rest


def _unordered_nested(size, idx, k, symbols):
    lab, forest = _unordered_trees(size, k)[idx]
    return (symbols[lab], tuple(_unordered_nested(s, i, k, symbols) for s, i in forest))


def enumerate_trees(alphabet, max_nodes, flavor="ordered", min_nodes=1):
    """Every tree up to ``max_nodes`` nodes once, by size, then shape, then labels.

    For the unordered flavor one representative per sibling-permutation class is produced.
    """
    if max_nodes < 1:
        raise ValueError("max_nodes must be at least 1")
    symbols = as_alphabet(alphabet).symbols
    if flavor == "binary":
        yield from enumerate_binary_trees(alphabet, max_nodes, min_nodes)
        return
    for n in range(min_nodes, max_nodes + 1):
        if flavor == "ordered":
            for shape in _ordered_shapes(n):
                for labels in itertools.product(symbols, repeat=n):
                    yield _shape_tree(shape, labels, True)
        elif flavor == "unordered":
            k = len(symbols)
            for idx in range(len(_unordered_trees(n, k))):
                yield Tree.from_nested(_unordered_nested(n, idx, k, symbols), ordered=False)
        else:
            raise ValueError("unknown flavor %r" % flavor)


@lru_cache(maxsize=None)
def _binary_shapes(n):
    if n == 0:
        return [None]
    out = []
    for k in range(n):
        for l in _binary_shapes(k):
            for r in _binary_shapes(n - 1 - k):
                out.append((l, r))
    return out


def enumerate_binary_trees(alphabet, max_nodes, min_nodes=1):
    symbols = as_alphabet(alphabet).symbols
    for n in range(min_nodes, max_nodes + 1):
        for shape in _binary_shapes(n):
            for labels in itertools.product(symbols, repeat=n):
                it = iter(labels)

                def build(s):
                    if s is None:
                        return None
                    lab = next(it)
                    return (lab, build(s[0]), build(s[1]))
                yield BinaryTree.from_nested(build(shape))
