"""Monadic datalog on trees: evaluation, rewritings and containment via tree automata."""

__version__ = "0.1.0"
