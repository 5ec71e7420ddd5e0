"""Guard-labelled nondeterministic finite automata compiled from LTLf formulas.

States are memoized sets of outstanding obligations (subformulas in negation
normal form).  A transition is found by symbolically unfolding each obligation
one step: every unfolding contributes a literal cube that must hold now and a
successor obligation set.  A state accepts when its obligations are satisfied
by the empty remainder of the trace, so a trace is accepted exactly when the
formula holds on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

from ..errors import ResourceLimit
from .formulas import (
    FALSE,
    TRUE,
    Always,
    And,
    Atom,
    Cube,
    Eventually,
    FalseF,
    Formula,
    Not,
    Or,
    Release,
    Symbol,
    Trace,
    TrueF,
    Until,
    accepts_empty,
    atoms,
    guard_sat,
    nnf,
    pretty,
)

DEFAULT_STATE_CAP = 100_000

_EMPTY_CUBE: Cube = (frozenset(), frozenset())

Obligations = frozenset[Formula]
Move = tuple[Cube, Obligations]


def _conjoin_cube(a: Cube, b: Cube) -> Cube | None:
    pos, neg = a[0] | b[0], a[1] | b[1]
    if pos & neg:
        return None
    return (pos, neg)


def _cross(left: Iterable[Move], right: Iterable[Move]) -> tuple[Move, ...]:
    out = []
    for cl, sl in left:
        for cr, sr in right:
            cube = _conjoin_cube(cl, cr)
            if cube is not None:
                out.append((cube, sl | sr))
    return tuple(out)


@lru_cache(maxsize=None)
def _unfold(f: Formula) -> tuple[Move, ...]:
    """One-step moves of a single NNF obligation: (cube now, rest next)."""
    match f:
        case TrueF():
            return ((_EMPTY_CUBE, frozenset()),)
        case FalseF():
            return ()
        case Atom(name):
            return (((frozenset((name,)), frozenset()), frozenset()),)
        case Not(Atom(name)):
            return (((frozenset(), frozenset((name,))), frozenset()),)
        case And(l, r):
            return _cross(_unfold(l), _unfold(r))
        case Or(l, r):
            return _unfold(l) + _unfold(r)
        case Until(l, r):
            keep = tuple((c, s | {f}) for c, s in _unfold(l))
            return _unfold(r) + keep
        case Release(l, r):
            settle = _cross(_unfold(r), _unfold(l))
            keep = tuple((c, s | {f}) for c, s in _unfold(r))
            return settle + keep
        case Eventually(g):
            return _unfold(g) + ((_EMPTY_CUBE, frozenset((f,))),)
        case Always(g):
            return tuple((c, s | {f}) for c, s in _unfold(g))
    raise ValueError(f"cannot unfold non-NNF formula: {pretty(f)}")


def _unfold_state(obligations: Obligations) -> tuple[Move, ...]:
    moves: tuple[Move, ...] = ((_EMPTY_CUBE, frozenset()),)
    for f in sorted(obligations, key=pretty):
        moves = _cross(moves, _unfold(f))
        if not moves:
            break
    return moves


def _cube_to_guard(cube: Cube) -> Formula:
    pos, neg = cube
    literals: list[Formula] = [Atom(a) for a in sorted(pos)]
    literals += [Not(Atom(a)) for a in sorted(neg)]
    if not literals:
        return TRUE
    out = literals[0]
    for lit in literals[1:]:
        out = And(out, lit)
    return out


def _cubes_to_guard(cubes: Iterable[Cube]) -> Formula:
    ordered = sorted(cubes, key=lambda c: (sorted(c[0]), sorted(c[1])))
    guard = _cube_to_guard(ordered[0])
    for cube in ordered[1:]:
        guard = Or(guard, _cube_to_guard(cube))
    return guard


@dataclass(eq=False)
class Nfa:
    """Finite automaton with propositional guards on transitions.

    Treated as immutable after construction; `labels` carries a readable
    description of each state for debugging output only.
    """

    states: frozenset[int]
    initial: frozenset[int]
    accepting: frozenset[int]
    transitions: Mapping[tuple[int, int], Formula]
    universe: frozenset[str]
    labels: Mapping[int, str] = field(default_factory=dict)

    def successors(self, q: int) -> list[tuple[int, Formula]]:
        return [(dst, g) for (src, dst), g in self.transitions.items() if src == q]

    def validate(self) -> None:
        assert self.initial <= self.states and self.accepting <= self.states
        for (src, dst), g in self.transitions.items():
            assert src in self.states and dst in self.states
            assert atoms(g) <= self.universe


def to_nfa(f: Formula, state_cap: int = DEFAULT_STATE_CAP) -> Nfa:
    """Compile a formula into a guard-labelled NFA with the same language."""
    root = nnf(f)
    start: Obligations = frozenset(_split_conj(root))
    ids: dict[Obligations, int] = {start: 0}
    order: list[Obligations] = [start]
    edges: dict[tuple[int, int], set[Cube]] = {}
    queue = [start]
    while queue:
        state = queue.pop(0)
        src = ids[state]
        grouped: dict[Obligations, set[Cube]] = {}
        for cube, succ in _unfold_state(state):
            grouped.setdefault(succ, set()).add(cube)
        for succ in sorted(grouped, key=lambda s: sorted(pretty(g) for g in s)):
            if succ not in ids:
                if len(ids) >= state_cap:
                    raise ResourceLimit(
                        f"automaton construction exceeded {state_cap} states"
                    )
                ids[succ] = len(order)
                order.append(succ)
                queue.append(succ)
            edges.setdefault((src, ids[succ]), set()).update(grouped[succ])
    transitions = {pair: _cubes_to_guard(cubes) for pair, cubes in edges.items()}
    accepting = frozenset(
        ids[s] for s in order if all(accepts_empty(g) for g in s)
    )
    labels = {
        ids[s]: " & ".join(sorted(pretty(g) for g in s)) or "true" for s in order
    }
    return Nfa(
        states=frozenset(ids.values()),
        initial=frozenset((0,)),
        accepting=accepting,
        transitions=transitions,
        universe=atoms(f),
        labels=labels,
    )


def _split_conj(f: Formula) -> Iterable[Formula]:
    if isinstance(f, And):
        yield from _split_conj(f.left)
        yield from _split_conj(f.right)
    elif f != TRUE:
        yield f


def nfa_accepts(nfa: Nfa, trace: Trace) -> bool:
    """Subset simulation; the empty trace is accepted iff some state is both
    initial and accepting."""
    current = set(nfa.initial)
    for symbol in trace:
        nxt = set()
        for (src, dst), guard in nfa.transitions.items():
            if src in current and dst not in nxt and guard_sat(guard, symbol):
                nxt.add(dst)
        current = nxt
        if not current:
            return False
    return bool(current & set(nfa.accepting))


def nfa_to_json_dict(nfa: Nfa) -> dict:
    return {
        "states": sorted(nfa.states),
        "initial": sorted(nfa.initial),
        "accepting": sorted(nfa.accepting),
        "transitions": [
            {"from": src, "to": dst, "guard": pretty(guard)}
            for (src, dst), guard in sorted(
                nfa.transitions.items(), key=lambda kv: kv[0]
            )
        ],
    }


def nfa_to_dot(nfa: Nfa) -> str:
    lines = ["digraph nfa {", "  rankdir=LR;"]
    for q in sorted(nfa.states):
        shape = "doublecircle" if q in nfa.accepting else "circle"
        label = nfa.labels.get(q, str(q))
        lines.append(f'  {q} [shape={shape} label="{q}: {label}"];')
    for q in sorted(nfa.initial):
        lines.append(f"  init{q} [shape=point];")
        lines.append(f"  init{q} -> {q};")
    for (src, dst), guard in sorted(nfa.transitions.items(), key=lambda kv: kv[0]):
        lines.append(f'  {src} -> {dst} [label="{pretty(guard)}"];')
    lines.append("}")
    return "\n".join(lines)
