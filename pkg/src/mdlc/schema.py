"""Relation vocabulary shared by trees, programs and automata."""

UNARY_BUILTINS = ("Root", "Leaf", "Ls", "Hnlc", "Hnrc")
BINARY_BUILTINS = ("Child", "Desc", "Fc", "Ns", "Lc", "Rc")
BUILTINS = UNARY_BUILTINS + BINARY_BUILTINS
LABEL_PREFIX = "Label_"

_BY_LOWER = {name.lower(): name for name in BUILTINS}

SCHEMAS = {
    "tau_u": frozenset({"Child"}),
    "tau_u_root_leaf": frozenset({"Child", "Root", "Leaf"}),
    "tau_u_root_leaf_desc": frozenset({"Child", "Root", "Leaf", "Desc"}),
    "tau_o": frozenset({"Fc", "Ns"}),
    "tau_o_child": frozenset({"Fc", "Ns", "Child"}),
    "tau_gk": frozenset({"Fc", "Ns", "Root", "Leaf", "Ls"}),
    "tau_gk_child": frozenset({"Fc", "Ns", "Root", "Leaf", "Ls", "Child"}),
    "tau_gk_child_desc": frozenset({"Fc", "Ns", "Root", "Leaf", "Ls", "Child", "Desc"}),
    "tau_b": frozenset({"Lc", "Rc", "Root", "Hnlc", "Hnrc"}),
}

# relations that make sense for each kind of tree
FLAVOR_RELATIONS = {
    "unordered": frozenset({"Child", "Desc", "Root", "Leaf"}),
    "ordered": frozenset({"Child", "Desc", "Root", "Leaf", "Fc", "Ns", "Ls"}),
    "binary": frozenset({"Lc", "Rc", "Root", "Hnlc", "Hnrc"}),
}


class SchemaError(ValueError):
    pass


def label_pred(symbol):
    return LABEL_PREFIX + symbol


def is_label(pred):
    return pred.startswith(LABEL_PREFIX)


def label_symbol(pred):
    return pred[len(LABEL_PREFIX):]


def is_builtin(pred):
    return pred in BUILTINS or is_label(pred)


def arity(pred):
    if pred in BINARY_BUILTINS:
        return 2
    return 1


def canonical_builtin(name):
    """Map a case-insensitive built-in name to its canonical spelling, else None."""
    low = name.lower()
    if low.startswith("label_"):
        return LABEL_PREFIX + name[6:]
    return _BY_LOWER.get(low)


def schema_relations(schema):
    if isinstance(schema, str):
        try:
            return SCHEMAS[schema]
        except KeyError:
            raise SchemaError("unknown schema %r" % schema) from None
    return frozenset(schema)


def check_relations(relations, schema):
    allowed = schema_relations(schema)
    bad = sorted(r for r in relations if not is_label(r) and r not in allowed)
    if bad:
        raise SchemaError("relations %s not in schema %s" % (", ".join(bad), sorted(allowed)))
