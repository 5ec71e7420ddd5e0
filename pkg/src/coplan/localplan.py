"""Per-robot planning: motion model, product automaton, and accepting runs.

The product pairs a weighted transition system with the automaton of the
robot's combined formula.  Every visited region contributes its label set to
the consumed trace exactly once: entering the product consumes the start
region's labels, and each move consumes the labels of the region arrived at.
A run is therefore accepting precisely when the sequence of region label sets
along its projected plan satisfies the formula, and the step that discharges
a collaborative task always lands on that task's region, which is what the
collaborative-state machinery and the arrival-time bookkeeping rely on.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

from .errors import MissingCollaborativeState, PlanInfeasible
from .ltlf import And, Atom, Eventually, Formula, Nfa, guard_sat
from .mission import SeqTask

Region = Hashable


@dataclass(eq=False)
class TransitionSystem:
    """A robot's motion and labeling model; immutable after construction."""

    initial: Region
    adjacency: Mapping[Region, tuple[Region, ...]]
    weights: Mapping[tuple[Region, Region], float]
    labels: Mapping[Region, frozenset[str]]

    def __post_init__(self):
        assert self.initial in self.adjacency
        for state, succs in self.adjacency.items():
            assert state in succs, f"missing self-loop at {state}"
            for nxt in succs:
                w = self.weights[(state, nxt)]
                assert w > 0, f"non-positive weight on {state}->{nxt}"
            assert self.weights[(state, state)] == 1

    def with_labels_restricted(
        self, drop: frozenset[str]
    ) -> "TransitionSystem":
        """Copy with the given atoms removed from every label set."""
        return TransitionSystem(
            initial=self.initial,
            adjacency=self.adjacency,
            weights=self.weights,
            labels={s: lab - drop for s, lab in self.labels.items()},
        )


@dataclass(eq=False)
class ProductAutomaton:
    """Reachable synchronous product of a transition system and an NFA."""

    wts: TransitionSystem
    nfa: Nfa
    nodes: list[tuple[Region, int]]
    index: dict[tuple[Region, int], int]
    initial: tuple[int, ...]
    accepting: frozenset[int]
    succ: list[tuple[tuple[int, float], ...]]
    _pred: list[tuple[tuple[int, float], ...]] | None = None
    _suffix: tuple[dict, dict] | None = None
    _collab_cache: dict[str, frozenset[int]] = field(default_factory=dict)

    def region(self, node: int) -> Region:
        return self.nodes[node][0]

    def nfa_state(self, node: int) -> int:
        return self.nodes[node][1]

    def pred(self) -> list[tuple[tuple[int, float], ...]]:
        if self._pred is None:
            rev: list[list[tuple[int, float]]] = [[] for _ in self.nodes]
            for u, edges in enumerate(self.succ):
                for v, w in edges:
                    rev[v].append((u, w))
            self._pred = [tuple(sorted(e)) for e in rev]
        return self._pred


def build_product(wts: TransitionSystem, nfa: Nfa) -> ProductAutomaton:
    """Breadth-first reachable construction with label-keyed successor caching."""
    by_src: dict[int, list[tuple[int, Formula]]] = {}
    for (src, dst), g in nfa.transitions.items():
        by_src.setdefault(src, []).append((dst, g))
    for lst in by_src.values():
        lst.sort(key=lambda e: e[0])

    succ_cache: dict[tuple[int, frozenset[str]], tuple[int, ...]] = {}

    def nfa_succs(f: int, label: frozenset[str]) -> tuple[int, ...]:
        key = (f, label)
        hit = succ_cache.get(key)
        if hit is None:
            hit = tuple(
                dst for dst, g in by_src.get(f, ()) if guard_sat(g, label)
            )
            succ_cache[key] = hit
        return hit

    nodes: list[tuple[Region, int]] = []
    index: dict[tuple[Region, int], int] = {}

    def intern(state: tuple[Region, int]) -> int:
        nid = index.get(state)
        if nid is None:
            nid = len(nodes)
            index[state] = nid
            nodes.append(state)
        return nid

    start_label = wts.labels[wts.initial]
    initial_ids = []
    seen_init = set()
    for f0 in sorted(nfa.initial):
        for f1 in nfa_succs(f0, start_label):
            if f1 not in seen_init:
                seen_init.add(f1)
                initial_ids.append(intern((wts.initial, f1)))

    succ_map: dict[int, tuple[tuple[int, float], ...]] = {}
    frontier = list(initial_ids)
    visited = set(initial_ids)
    while frontier:
        nid = frontier.pop(0)
        region, f = nodes[nid]
        edges = set()
        for nxt in wts.adjacency[region]:
            w = wts.weights[(region, nxt)]
            for f2 in nfa_succs(f, wts.labels[nxt]):
                v = intern((nxt, f2))
                edges.add((v, w))
                if v not in visited:
                    visited.add(v)
                    frontier.append(v)
        succ_map[nid] = tuple(sorted(edges))
    succ = [succ_map.get(i, ()) for i in range(len(nodes))]

    accepting = frozenset(
        nid for nid, (_, f) in enumerate(nodes) if f in nfa.accepting
    )
    return ProductAutomaton(
        wts=wts,
        nfa=nfa,
        nodes=nodes,
        index=index,
        initial=tuple(initial_ids),
        accepting=accepting,
        succ=succ,
    )


def dijkstra(
    product: ProductAutomaton,
    sources: Iterable[int],
    targets: frozenset[int] | None = None,
    reverse: bool = False,
) -> tuple[dict[int, tuple[float, int]], dict[int, int]]:
    """Deterministic Dijkstra minimizing (cost, hops), ties by node id.

    Returns (best, parent) where best[node] = (cost, hops).  With reverse=True
    the search runs over predecessor edges, so parents point toward sources.
    """
    edges = product.pred() if reverse else product.succ
    best: dict[int, tuple[float, int]] = {}
    parent: dict[int, int] = {}
    heap: list[tuple[float, int, int, int]] = []
    for s in sorted(set(sources)):
        best[s] = (0.0, 0)
        heapq.heappush(heap, (0.0, 0, s, -1))
    done: set[int] = set()
    while heap:
        cost, hops, node, par = heapq.heappop(heap)
        if node in done:
            continue
        done.add(node)
        if par >= 0:
            parent[node] = par
        if targets is not None and targets <= done:
            break
        for nxt, w in edges[node]:
            cand = (cost + w, hops + 1)
            if nxt not in done and (nxt not in best or cand < best[nxt]):
                best[nxt] = cand
                heapq.heappush(heap, (cost + w, hops + 1, nxt, node))
    return best, parent


def _walk(parent: dict[int, int], sources: set[int], node: int) -> list[int]:
    path = [node]
    while path[-1] not in sources:
        path.append(parent[path[-1]])
    path.reverse()
    return path


def shortest_accepting_run(product: ProductAutomaton) -> list[int]:
    """Minimum-weight path from an initial to an accepting node."""
    if not product.initial:
        raise PlanInfeasible("no viable start: the initial region's labels "
                             "violate the formula immediately")
    best, parent = dijkstra(product, product.initial)
    goals = [n for n in product.accepting if n in best]
    if not goals:
        raise PlanInfeasible("no accepting product state is reachable")
    goal = min(goals, key=lambda n: (*best[n], n))
    return _walk(parent, set(product.initial), goal)


def suffix_to_acceptance(product: ProductAutomaton) -> tuple[dict, dict]:
    """Memoized reverse search from the accepting set; gives, for every node,
    the best remaining (cost, hops) and the next hop along it."""
    if product._suffix is None:
        best, parent = dijkstra(product, product.accepting, reverse=True)
        product._suffix = (best, parent)
    return product._suffix


def suffix_path(product: ProductAutomaton, node: int) -> list[int] | None:
    best, parent = suffix_to_acceptance(product)
    if node not in best:
        return None
    path = [node]
    while path[-1] not in product.accepting:
        path.append(parent[path[-1]])
    return path


def _entry_requires(
    product: ProductAutomaton, node: int, atom: str
) -> bool:
    """Did entering the product at this initial node have to consume `atom`?"""
    region, f1 = product.nodes[node]
    label = product.wts.labels[region]
    if atom not in label:
        return False
    nfa = product.nfa
    reachable_with = False
    for f0 in nfa.initial:
        g = nfa.transitions.get((f0, f1))
        if g is None:
            continue
        if guard_sat(g, label - {atom}):
            return False
        if f0 != f1 and guard_sat(g, label):
            reachable_with = True
    return reachable_with


def _step_requires(
    product: ProductAutomaton, src: int, dst: int, atom: str
) -> bool:
    """Does the product step src -> dst consume `atom` while advancing the
    automaton?  The step symbol is the label of the region arrived at."""
    f1 = product.nfa_state(src)
    f2 = product.nfa_state(dst)
    if f1 == f2:
        return False
    label = product.wts.labels[product.region(dst)]
    if atom not in label:
        return False
    g = product.nfa.transitions[(f1, f2)]
    return guard_sat(g, label) and not guard_sat(g, label - {atom})


def collaborative_states(product: ProductAutomaton, task: str) -> frozenset[int]:
    """Product states where the robot actually performs the task.

    The task atom labels the state's region and some incoming transition
    advances the automaton on a symbol that needs the atom; initial states
    whose entry consumption needed it count as well.
    """
    cached = product._collab_cache.get(task)
    if cached is not None:
        return cached
    out = set()
    for u, edges in enumerate(product.succ):
        for v, _ in edges:
            if v in out:
                continue
            if task in product.wts.labels[product.region(v)] and _step_requires(
                product, u, v, task
            ):
                out.add(v)
    for node in product.initial:
        if _entry_requires(product, node, task):
            out.add(node)
    result = frozenset(out)
    product._collab_cache[task] = result
    return result


def run_weight(product: ProductAutomaton, run: Sequence[int]) -> float:
    total = 0.0
    weights = product.wts.weights
    for a, b in zip(run, run[1:]):
        total += weights[(product.region(a), product.region(b))]
    return total


def run_plan(product: ProductAutomaton, run: Sequence[int]) -> list[Region]:
    return [product.region(n) for n in run]


def run_trace(product: ProductAutomaton, run: Sequence[int]) -> list[frozenset[str]]:
    """Label sets consumed along the run, one per visited state."""
    return [product.wts.labels[product.region(n)] for n in run]


def is_accepting_run(product: ProductAutomaton, run: Sequence[int]) -> bool:
    if not run or run[0] not in product.initial:
        return False
    for a, b in zip(run, run[1:]):
        if b not in {v for v, _ in product.succ[a]}:
            return False
    return run[-1] in product.accepting


def task_visits(
    product: ProductAutomaton, run: Sequence[int], assigned: Sequence[SeqTask]
) -> dict[SeqTask, tuple[int, float]]:
    """Map each assigned task to (run index, ideal arrival time).

    Tasks are matched in plan order to the run steps that consume their atom;
    one step may discharge several tasks at once.  A task whose atom is never
    consumed marks a planner bug and fails loudly.
    """
    consumed: list[set[str]] = []
    names = {t.name for t in assigned}
    for j, node in enumerate(run):
        if j == 0:
            here = {a for a in names if _entry_requires(product, node, a)}
        else:
            here = {
                a
                for a in names
                if _step_requires(product, run[j - 1], node, a)
            }
        consumed.append(here)
    times = [0.0]
    weights = product.wts.weights
    for a, b in zip(run, run[1:]):
        times.append(times[-1] + weights[(product.region(a), product.region(b))])
    out: dict[SeqTask, tuple[int, float]] = {}
    pointer = 0
    for task in sorted(assigned, key=lambda t: t.kl):
        j = pointer
        while j < len(run) and task.name not in consumed[j]:
            j += 1
        if j >= len(run):
            raise MissingCollaborativeState(
                f"run never performs assigned task {task.name} {task.kl}"
            )
        out[task] = (j, times[j])
        pointer = j
    return out


def arrival_times(
    product: ProductAutomaton, run: Sequence[int], assigned: Sequence[SeqTask]
) -> dict[SeqTask, float]:
    """Ideal (no-waiting) arrival time at each assigned task's performance."""
    return {t: time for t, (_, time) in task_visits(product, run, assigned).items()}


def build_local_formula(
    phi: Formula, assigned_by_part: Sequence[tuple[int, Sequence[str]]]
) -> Formula:
    """Conjoin the robot's own formula with an eventuality chain over its
    assigned tasks: tasks inside one part are nested in index order, and each
    part's last task opens the next part's chain."""
    tail: Formula | None = None
    for _, names in sorted(assigned_by_part, key=lambda kv: kv[0], reverse=True):
        if not names:
            continue
        last = Atom(names[-1])
        f = last if tail is None else And(last, Eventually(tail))
        for name in reversed(names[:-1]):
            f = And(Atom(name), Eventually(f))
        tail = Eventually(f)
    if tail is None:
        return phi
    return And(phi, tail)
