"""LTLf formulas, finite-trace evaluation, and guard-labelled automata."""

from .automata import (
    DEFAULT_STATE_CAP,
    Nfa,
    nfa_accepts,
    nfa_to_dot,
    nfa_to_json_dict,
    to_nfa,
)
from .formulas import (
    FALSE,
    TRUE,
    Always,
    And,
    Atom,
    Eventually,
    FalseF,
    Formula,
    Implies,
    Not,
    Or,
    Release,
    Symbol,
    Trace,
    TrueF,
    Until,
    accepts_empty,
    atoms,
    conj,
    eval_trace,
    guard_sat,
    is_guard,
    minimal_symbols,
    nnf,
    parse_ltlf,
    pretty,
)

__all__ = [
    "DEFAULT_STATE_CAP",
    "FALSE",
    "TRUE",
    "Always",
    "And",
    "Atom",
    "Eventually",
    "FalseF",
    "Formula",
    "Implies",
    "Nfa",
    "Not",
    "Or",
    "Release",
    "Symbol",
    "Trace",
    "TrueF",
    "Until",
    "accepts_empty",
    "atoms",
    "conj",
    "eval_trace",
    "guard_sat",
    "is_guard",
    "minimal_symbols",
    "nfa_accepts",
    "nfa_to_dot",
    "nfa_to_json_dict",
    "nnf",
    "parse_ltlf",
    "pretty",
    "to_nfa",
]
