"""LTLf formulas over finite traces: syntax tree, parser, evaluation, guards.

The temporal fragment deliberately has no next operator: formulas are meant
to constrain task orderings, and stutter-invariance is what makes waiting
robots sound.  Guards are the temporal-free fragment of the same tree.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import AbstractSet, Iterable, Sequence

from ..errors import ParseError, ResourceLimit

Symbol = AbstractSet[str]
Trace = Sequence[Symbol]


class Formula:
    """Base class; concrete nodes are frozen dataclasses below."""

    __slots__ = ()


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class FalseF(Formula):
    pass


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    operand: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Eventually(Formula):
    operand: Formula


@dataclass(frozen=True)
class Always(Formula):
    operand: Formula


@dataclass(frozen=True)
class Release(Formula):
    """Dual of Until; produced by negation normal form, not by the parser."""

    left: Formula
    right: Formula


TRUE = TrueF()
FALSE = FalseF()


def atoms(f: Formula) -> frozenset[str]:
    match f:
        case TrueF() | FalseF():
            return frozenset()
        case Atom(name):
            return frozenset((name,))
        case Not(g) | Eventually(g) | Always(g):
            return atoms(g)
        case And(l, r) | Or(l, r) | Implies(l, r) | Until(l, r) | Release(l, r):
            return atoms(l) | atoms(r)
    raise TypeError(f"not a formula: {f!r}")


def conj(parts: Iterable[Formula]) -> Formula:
    """Right-folded conjunction; empty yields true."""
    items = list(parts)
    if not items:
        return TRUE
    out = items[-1]
    for g in reversed(items[:-1]):
        out = And(g, out)
    return out


# --- concrete syntax ---------------------------------------------------------
#
# Precedence, loosest to tightest: ->  |  &  U  {! F G},
# with -> and U right-associative.  F/<> is eventually, G/[] is always.

_TOKEN_RE = re.compile(r"\s*(->|<>|\[\]|[()!&|]|[A-Za-z0-9_]+)")

_UNARY = {"!", "F", "G", "<>", "[]"}


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tokens: list[tuple[str, int]] = []
        self._lex()
        self.idx = 0

    def _lex(self) -> None:
        pos = 0
        while pos < len(self.text):
            m = _TOKEN_RE.match(self.text, pos)
            if m is None:
                rest = self.text[pos:].lstrip()
                if not rest:
                    break
                raise ParseError(f"unexpected character {rest[0]!r}", pos)
            self.tokens.append((m.group(1), m.start(1)))
            pos = m.end()

    def peek(self) -> str | None:
        return self.tokens[self.idx][0] if self.idx < len(self.tokens) else None

    def take(self) -> tuple[str, int]:
        if self.idx >= len(self.tokens):
            raise ParseError("unexpected end of input", len(self.text))
        tok = self.tokens[self.idx]
        self.idx += 1
        return tok

    def parse(self) -> Formula:
        f = self.implies()
        if self.idx < len(self.tokens):
            tok, at = self.tokens[self.idx]
            raise ParseError(f"unexpected token {tok!r}", at)
        return f

    def implies(self) -> Formula:
        left = self.disj()
        if self.peek() == "->":
            self.take()
            return Implies(left, self.implies())
        return left

    def disj(self) -> Formula:
        f = self.conj()
        while self.peek() == "|":
            self.take()
            f = Or(f, self.conj())
        return f

    def conj(self) -> Formula:
        f = self.until()
        while self.peek() == "&":
            self.take()
            f = And(f, self.until())
        return f

    def until(self) -> Formula:
        left = self.unary()
        if self.peek() == "U":
            self.take()
            return Until(left, self.until())
        return left

    def unary(self) -> Formula:
        tok = self.peek()
        if tok in _UNARY:
            _, at = self.take()
            inner = self.unary()
            if tok == "!":
                return Not(inner)
            if tok in ("F", "<>"):
                return Eventually(inner)
            return Always(inner)
        return self.primary()

    def primary(self) -> Formula:
        tok, at = self.take()
        if tok == "(":
            f = self.implies()
            nxt, nat = self.take() if self.idx < len(self.tokens) else (None, len(self.text))
            if nxt != ")":
                raise ParseError("expected ')'", nat)
            return f
        if tok == "true":
            return TRUE
        if tok == "false":
            return FALSE
        if tok == "X":
            raise ParseError("unsupported operator 'X' (next is not part of this logic)", at)
        if tok in ("U", ")", "&", "|", "->"):
            raise ParseError(f"unexpected token {tok!r}", at)
        return Atom(tok)


def parse_ltlf(text: str) -> Formula:
    """Parse the concrete LTLf syntax; raises ParseError with a position."""
    return _Parser(text).parse()


_LEVEL = {
    Implies: 1,
    Or: 2,
    And: 3,
    Until: 4,
    Release: 4,
    Not: 5,
    Eventually: 5,
    Always: 5,
    TrueF: 6,
    FalseF: 6,
    Atom: 6,
}


def pretty(f: Formula) -> str:
    """Render with minimal parentheses; parse(pretty(f)) reproduces f."""

    def wrap(g: Formula, need: int) -> str:
        s = pretty(g)
        return f"({s})" if _LEVEL[type(g)] < need else s

    match f:
        case TrueF():
            return "true"
        case FalseF():
            return "false"
        case Atom(name):
            return name
        case Not(g):
            return f"!{wrap(g, 5)}"
        case Eventually(g):
            return f"F {wrap(g, 5)}"
        case Always(g):
            return f"G {wrap(g, 5)}"
        case And(l, r):
            # left-fold: right child needs a strictly tighter level
            return f"{wrap(l, 3)} & {wrap(r, 4)}"
        case Or(l, r):
            return f"{wrap(l, 2)} | {wrap(r, 3)}"
        case Implies(l, r):
            return f"{wrap(l, 2)} -> {wrap(r, 1)}"
        case Until(l, r):
            return f"{wrap(l, 5)} U {wrap(r, 4)}"
        case Release(l, r):
            return f"{wrap(l, 5)} R {wrap(r, 4)}"
    raise TypeError(f"not a formula: {f!r}")


# --- finite-trace semantics --------------------------------------------------


def accepts_empty(f: Formula) -> bool:
    """Satisfaction over the zero-length trace.

    Atoms and until/eventually need a position and fail; always/release hold
    vacuously; boolean connectives are classical.
    """
    match f:
        case TrueF():
            return True
        case FalseF():
            return False
        case Atom(_):
            return False
        case Not(g):
            return not accepts_empty(g)
        case And(l, r):
            return accepts_empty(l) and accepts_empty(r)
        case Or(l, r):
            return accepts_empty(l) or accepts_empty(r)
        case Implies(l, r):
            return (not accepts_empty(l)) or accepts_empty(r)
        case Until(_, _) | Eventually(_):
            return False
        case Release(_, _) | Always(_):
            return True
    raise TypeError(f"not a formula: {f!r}")


def eval_trace(f: Formula, trace: Trace) -> bool:
    """Standard LTLf satisfaction at the first position of a finite trace."""
    n = len(trace)
    if n == 0:
        return accepts_empty(f)
    memo: dict[tuple[Formula, int], bool] = {}

    def ev(g: Formula, i: int) -> bool:
        key = (g, i)
        hit = memo.get(key)
        if hit is not None:
            return hit
        match g:
            case TrueF():
                v = True
            case FalseF():
                v = False
            case Atom(name):
                v = name in trace[i]
            case Not(h):
                v = not ev(h, i)
            case And(l, r):
                v = ev(l, i) and ev(r, i)
            case Or(l, r):
                v = ev(l, i) or ev(r, i)
            case Implies(l, r):
                v = (not ev(l, i)) or ev(r, i)
            case Until(l, r):
                v = ev(r, i) or (ev(l, i) and i + 1 < n and ev(g, i + 1))
            case Release(l, r):
                v = ev(r, i) and (ev(l, i) or i + 1 >= n or ev(g, i + 1))
            case Eventually(h):
                v = ev(h, i) or (i + 1 < n and ev(g, i + 1))
            case Always(h):
                v = ev(h, i) and (i + 1 >= n or ev(g, i + 1))
            case _:
                raise TypeError(f"not a formula: {g!r}")
        memo[key] = v
        return v

    return ev(f, 0)


def nnf(f: Formula) -> Formula:
    """Negation normal form; implications unfolded, negations pushed to atoms."""
    match f:
        case TrueF() | FalseF() | Atom(_):
            return f
        case And(l, r):
            return And(nnf(l), nnf(r))
        case Or(l, r):
            return Or(nnf(l), nnf(r))
        case Implies(l, r):
            return Or(nnf(Not(l)), nnf(r))
        case Until(l, r):
            return Until(nnf(l), nnf(r))
        case Release(l, r):
            return Release(nnf(l), nnf(r))
        case Eventually(g):
            return Eventually(nnf(g))
        case Always(g):
            return Always(nnf(g))
        case Not(g):
            match g:
                case TrueF():
                    return FALSE
                case FalseF():
                    return TRUE
                case Atom(_):
                    return f
                case Not(h):
                    return nnf(h)
                case And(l, r):
                    return Or(nnf(Not(l)), nnf(Not(r)))
                case Or(l, r):
                    return And(nnf(Not(l)), nnf(Not(r)))
                case Implies(l, r):
                    return And(nnf(l), nnf(Not(r)))
                case Until(l, r):
                    return Release(nnf(Not(l)), nnf(Not(r)))
                case Release(l, r):
                    return Until(nnf(Not(l)), nnf(Not(r)))
                case Eventually(h):
                    return Always(nnf(Not(h)))
                case Always(h):
                    return Eventually(nnf(Not(h)))
    raise TypeError(f"not a formula: {f!r}")


# --- guards ------------------------------------------------------------------


def is_guard(f: Formula) -> bool:
    """True iff the formula is purely propositional."""
    match f:
        case TrueF() | FalseF() | Atom(_):
            return True
        case Not(g):
            return is_guard(g)
        case And(l, r) | Or(l, r) | Implies(l, r):
            return is_guard(l) and is_guard(r)
        case _:
            return False


def guard_sat(g: Formula, symbol: Symbol) -> bool:
    """Evaluate a propositional guard with exactly the atoms in `symbol` true."""
    match g:
        case TrueF():
            return True
        case FalseF():
            return False
        case Atom(name):
            return name in symbol
        case Not(h):
            return not guard_sat(h, symbol)
        case And(l, r):
            return guard_sat(l, symbol) and guard_sat(r, symbol)
        case Or(l, r):
            return guard_sat(l, symbol) or guard_sat(r, symbol)
        case Implies(l, r):
            return (not guard_sat(l, symbol)) or guard_sat(r, symbol)
    raise ValueError(f"temporal operator in guard: {pretty(g)}")


Cube = tuple[frozenset[str], frozenset[str]]  # (positive atoms, negated atoms)

MINIMAL_SYMBOLS_ATOM_BOUND = 30


def _dnf_cubes(g: Formula) -> frozenset[Cube]:
    """Disjunctive normal form of an NNF guard as satisfiable literal cubes."""
    match g:
        case TrueF():
            return frozenset(((frozenset(), frozenset()),))
        case FalseF():
            return frozenset()
        case Atom(name):
            return frozenset(((frozenset((name,)), frozenset()),))
        case Not(Atom(name)):
            return frozenset(((frozenset(), frozenset((name,))),))
        case Or(l, r):
            return _dnf_cubes(l) | _dnf_cubes(r)
        case And(l, r):
            out = set()
            for pl, nl in _dnf_cubes(l):
                for pr, nr in _dnf_cubes(r):
                    pos, neg = pl | pr, nl | nr
                    if not pos & neg:
                        out.add((pos, neg))
            return frozenset(out)
    raise ValueError(f"not an NNF guard: {pretty(g)}")


def minimal_symbols(g: Formula) -> frozenset[frozenset[str]]:
    """All inclusion-minimal positive-atom sets that satisfy the guard.

    Empty result means no purely positive assignment satisfies it.
    """
    names = atoms(g)
    if len(names) > MINIMAL_SYMBOLS_ATOM_BOUND:
        raise ResourceLimit(
            f"guard has {len(names)} atoms, above the enumeration bound "
            f"{MINIMAL_SYMBOLS_ATOM_BOUND}"
        )
    candidates = {pos for pos, _ in _dnf_cubes(nnf(g))}
    keep: set[frozenset[str]] = set()
    for s in sorted(candidates, key=lambda x: (len(x), sorted(x))):
        if not any(t <= s for t in keep):
            keep.add(s)
    return frozenset(keep)
