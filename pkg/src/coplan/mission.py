"""Team-level processing of the collaborative specification automaton.

Pipeline order: prune transitions the team can never staff, mark states where
the automaton can idle (decomposition states), extract a shortest accepting
run as a minimal task sequence, split it at decomposition states into
independently executable parts, and emit the synchronization and ordering
constraints implied by the run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import SpecInfeasible
from .ltlf import Formula, Nfa, guard_sat, minimal_symbols

Cell = tuple[int, int]


@dataclass(frozen=True)
class TaskSpec:
    """A task: its proposition, its region, and robots needed per capability."""

    name: str
    region: Cell
    requires: Mapping[str, int]

    def __post_init__(self):
        object.__setattr__(self, "requires", dict(self.requires))
        if any(c < 1 for c in self.requires.values()):
            raise ValueError(f"task {self.name}: requirement counts must be >= 1")


@dataclass(frozen=True)
class TeamModel:
    """Robots with exactly one capability each."""

    capabilities: Mapping[int, str]

    def __post_init__(self):
        object.__setattr__(self, "capabilities", dict(self.capabilities))

    @property
    def robots(self) -> list[int]:
        return sorted(self.capabilities)

    def group(self, capability: str) -> frozenset[int]:
        return frozenset(
            i for i, c in self.capabilities.items() if c == capability
        )


def symbol_feasible(
    symbol: frozenset[str],
    tasks: Mapping[str, TaskSpec],
    team: TeamModel,
) -> bool:
    """Can the team staff every task in the symbol simultaneously?

    Robots hold one capability and serve one task at a time, so simultaneous
    demands per capability simply add up.
    """
    need: dict[str, int] = {}
    for name in symbol:
        for cap, count in tasks[name].requires.items():
            need[cap] = need.get(cap, 0) + count
    return all(len(team.group(cap)) >= count for cap, count in need.items())


def prune_nfa(nfa: Nfa, tasks: Mapping[str, TaskSpec], team: TeamModel) -> Nfa:
    """Drop transitions whose every minimal symbol exceeds team capacity."""
    kept: dict[tuple[int, int], Formula] = {}
    cache: dict[Formula, frozenset[frozenset[str]]] = {}
    for pair, guard in nfa.transitions.items():
        syms = cache.get(guard)
        if syms is None:
            syms = minimal_symbols(guard)
            cache[guard] = syms
        if any(symbol_feasible(s, tasks, team) for s in syms):
            kept[pair] = guard
    pruned = Nfa(
        states=nfa.states,
        initial=nfa.initial,
        accepting=nfa.accepting,
        transitions=kept,
        universe=nfa.universe,
        labels=nfa.labels,
    )
    if not (_reachable(pruned) & set(nfa.accepting)):
        raise SpecInfeasible(
            "after pruning, no accepting state of the collaborative "
            "specification is reachable with this team"
        )
    return pruned


def _adjacency(nfa: Nfa) -> dict[int, list[int]]:
    adj: dict[int, list[int]] = {q: [] for q in nfa.states}
    for src, dst in nfa.transitions:
        adj[src].append(dst)
    for lst in adj.values():
        lst.sort()
    return adj


def _reachable(nfa: Nfa, reverse: bool = False) -> set[int]:
    adj: dict[int, set[int]] = {q: set() for q in nfa.states}
    for src, dst in nfa.transitions:
        if reverse:
            adj[dst].add(src)
        else:
            adj[src].add(dst)
    start = nfa.accepting if reverse else nfa.initial
    frontier = list(start)
    seen = set(start)
    while frontier:
        q = frontier.pop()
        for nxt in adj[q]:
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen


def find_decomposition_states(nfa: Nfa) -> frozenset[int]:
    """States on some accepting path where the automaton can idle.

    Operational criterion: the state is reachable and co-reachable, and its
    self-transition is satisfied by the all-false symbol, so the automaton can
    wait there while unrelated tasks execute.
    """
    fwd = _reachable(nfa)
    bwd = _reachable(nfa, reverse=True)
    out = set()
    for q in fwd & bwd:
        self_guard = nfa.transitions.get((q, q))
        if self_guard is not None and guard_sat(self_guard, frozenset()):
            out.add(q)
    return frozenset(out)


@dataclass(frozen=True)
class SeqTask:
    """One collaborative task occurrence in the selected sequence."""

    part: int  # 1-based subsequence index
    index: int  # 1-based position within the flattened subsequence
    element: int  # 1-based element index within the subsequence
    name: str

    @property
    def kl(self) -> tuple[int, int]:
        return (self.part, self.index)


@dataclass(frozen=True)
class EssentialSequence:
    """A minimal task sequence describing one accepting run, split into parts.

    `run` has one more state than `elements`; `boundaries` are element indices
    (0-based) where a new part starts.
    """

    run: tuple[int, ...]
    elements: tuple[frozenset[str], ...]
    boundaries: tuple[int, ...]

    @property
    def parts(self) -> tuple[tuple[frozenset[str], ...], ...]:
        cuts = [0, *self.boundaries, len(self.elements)]
        return tuple(
            tuple(self.elements[a:b]) for a, b in zip(cuts, cuts[1:])
        )

    @property
    def tasks(self) -> tuple[SeqTask, ...]:
        out = []
        for k, part in enumerate(self.parts, start=1):
            l = 0
            for m, element in enumerate(part, start=1):
                for name in sorted(element):
                    l += 1
                    out.append(SeqTask(part=k, index=l, element=m, name=name))
        return tuple(out)

    @property
    def element_keys(self) -> tuple[tuple[int, int], ...]:
        """(part, element) pairs for nonempty elements, in execution order."""
        out = []
        for k, part in enumerate(self.parts, start=1):
            for m, element in enumerate(part, start=1):
                if element:
                    out.append((k, m))
        return tuple(out)

    def element_tasks(self, key: tuple[int, int]) -> tuple[SeqTask, ...]:
        return tuple(t for t in self.tasks if (t.part, t.element) == key)

    def to_json_dict(self) -> dict:
        return {
            "run": list(self.run),
            "elements": [sorted(e) for e in self.elements],
            "boundaries": list(self.boundaries),
            "constraints": [
                {
                    "kind": c.kind,
                    "first": c.first,
                    "second": c.second,
                    "first_element": list(c.first_element),
                    "second_element": list(c.second_element),
                }
                for c in temporal_constraints(self)
            ],
        }


@dataclass(frozen=True)
class Constraint:
    """Names identify tasks for display; element keys disambiguate repeated
    atoms, since the same task atom may occur at several sequence positions."""

    kind: str  # "sync" or "order"
    first: str
    second: str
    first_element: tuple[int, int]
    second_element: tuple[int, int]


def temporal_constraints(seq: EssentialSequence) -> list[Constraint]:
    """Same-element pairs must run synchronously; earlier elements of a part
    must not run after later ones.  Parts impose nothing on each other."""
    out = []
    for k, part in enumerate(seq.parts, start=1):
        for m, element in enumerate(part, start=1):
            names = sorted(element)
            for i, a in enumerate(names):
                for b in names[i + 1 :]:
                    out.append(Constraint("sync", a, b, (k, m), (k, m)))
        for m, element in enumerate(part, start=1):
            for m2 in range(m + 1, len(part) + 1):
                for a in sorted(element):
                    for b in sorted(part[m2 - 1]):
                        out.append(Constraint("order", a, b, (k, m), (k, m2)))
    return out


def _shortest_accepting_path(nfa: Nfa) -> list[int] | None:
    """Fewest transitions, ties broken toward the lexicographically smallest
    state-id sequence."""
    adj = _adjacency(nfa)
    radj: dict[int, list[int]] = {q: [] for q in nfa.states}
    for src, dst in nfa.transitions:
        radj[dst].append(src)
    # distance-to-acceptance
    dist: dict[int, int] = {q: 0 for q in nfa.accepting}
    frontier = sorted(nfa.accepting)
    while frontier:
        nxt = []
        for q in frontier:
            for p in radj[q]:
                if p not in dist:
                    dist[p] = dist[q] + 1
                    nxt.append(p)
        frontier = sorted(set(nxt))
    starts = [q for q in sorted(nfa.initial) if q in dist]
    if not starts:
        return None
    best = min(starts, key=lambda q: (dist[q], q))
    path = [best]
    while dist[path[-1]] > 0:
        here = path[-1]
        step = min(
            (q for q in adj[here] if dist.get(q, -1) == dist[here] - 1),
        )
        path.append(step)
    return path


def _choose_symbol(
    guard: Formula,
    tasks: Mapping[str, TaskSpec] | None,
    team: TeamModel | None,
) -> frozenset[str]:
    options = sorted(minimal_symbols(guard), key=lambda s: (len(s), sorted(s)))
    if not options:
        raise SpecInfeasible(
            "selected run crosses a guard with no positive satisfying symbol"
        )
    if tasks is not None and team is not None:
        feasible = [s for s in options if symbol_feasible(s, tasks, team)]
        if feasible:
            options = feasible
    return options[0]


def interleavings_accepted(
    nfa: Nfa, parts: Sequence[Sequence[frozenset[str]]]
) -> bool:
    """Do all order-preserving interleavings of the parts stay accepted?

    Explored as a subset simulation over (per-part progress, automaton state
    set); exact and polynomial in the progress lattice, so no factorial
    enumeration is needed.
    """
    start = (tuple(0 for _ in parts), frozenset(nfa.initial))
    seen = {start}
    stack = [start]
    by_src: dict[int, list[tuple[int, Formula]]] = {}
    for (src, dst), g in nfa.transitions.items():
        by_src.setdefault(src, []).append((dst, g))
    while stack:
        progress, states = stack.pop()
        if all(p == len(part) for p, part in zip(progress, parts)):
            if not states & set(nfa.accepting):
                return False
            continue
        for idx, part in enumerate(parts):
            if progress[idx] >= len(part):
                continue
            symbol = part[progress[idx]]
            nxt = frozenset(
                dst
                for q in states
                for dst, g in by_src.get(q, [])
                if guard_sat(g, symbol)
            )
            if not nxt:
                return False
            node = (
                tuple(
                    p + 1 if j == idx else p for j, p in enumerate(progress)
                ),
                nxt,
            )
            if node not in seen:
                seen.add(node)
                stack.append(node)
    return True


def select_essential_sequence(
    nfa: Nfa,
    decomposition: frozenset[int],
    tasks: Mapping[str, TaskSpec] | None = None,
    team: TeamModel | None = None,
) -> EssentialSequence:
    """Pick a shortest accepting run, one minimal symbol per step, and cut it
    at interior decomposition states.

    Every candidate cut set is certified: all interleavings of the resulting
    parts must stay inside the automaton's language.  If certification fails,
    the earliest cut is dropped and the check repeats, so the returned split
    is always safe (a single part trivially certifies).
    """
    path = _shortest_accepting_path(nfa)
    if path is None:
        raise SpecInfeasible("no accepting run exists in the pruned automaton")
    elements = tuple(
        _choose_symbol(nfa.transitions[(a, b)], tasks, team)
        for a, b in zip(path, path[1:])
    )
    boundaries = [
        i for i in range(1, len(elements)) if path[i] in decomposition
    ]
    while boundaries:
        seq = EssentialSequence(tuple(path), elements, tuple(boundaries))
        if interleavings_accepted(nfa, seq.parts):
            break
        boundaries.pop(0)
    return EssentialSequence(tuple(path), elements, tuple(boundaries))
