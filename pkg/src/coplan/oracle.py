"""Exhaustive joint planning over the synchronized team product.

Desk-scale ground truth for optimality audits: robots move in lockstep, any
staffable set of collaborative tasks may fire at any instant, individual
automata advance on private labels, and a robot that has discharged its own
specification may retire.  The objective is the sum of retirement times,
which equals the waiting-aware team total.  Only tiny instances are in scope;
the state space is capped, never pruned heuristically.
"""

from __future__ import annotations

import heapq
import itertools
from typing import Mapping

from .errors import PlanInfeasible, ResourceLimit
from .ltlf import Nfa, guard_sat, to_nfa
from .scenario import Scenario

DEFAULT_STATE_CAP = 100_000


def _subset_step(nfa: Nfa, states: frozenset[int], symbol: frozenset[str]) -> frozenset[int]:
    return frozenset(
        dst
        for (src, dst), g in nfa.transitions.items()
        if src in states and guard_sat(g, symbol)
    )


def _staffings(scenario: Scenario, positions: Mapping[int, tuple[int, int]]):
    """Every nonempty set of collaborative tasks the robots at `positions` can
    execute simultaneously, each robot serving at most one task."""
    team = scenario.team()
    robots = sorted(positions)
    usable: dict[str, list[int]] = {}
    for task in scenario.collaborative_tasks:
        candidates = [
            i
            for i in robots
            if positions[i] == task.region
            and team.capabilities[i] in task.requires
        ]
        if candidates:
            usable[task.name] = candidates
    out = []
    names = sorted(usable)
    for r in range(1, len(names) + 1):
        for chosen in itertools.combinations(names, r):
            if _can_staff(scenario, chosen, positions, robots):
                out.append(frozenset(chosen))
    return out


def _can_staff(scenario, chosen, positions, robots) -> bool:
    """Exact cover check by enumeration over robot-to-task choices; team
    sizes here are tiny by contract."""
    catalog = scenario.catalog()
    team = scenario.team()
    tasks = [catalog[name] for name in chosen]
    options: list[list[int]] = []
    for i in robots:
        usable = [
            t_idx
            for t_idx, t in enumerate(tasks)
            if positions[i] == t.region and team.capabilities[i] in t.requires
        ]
        options.append([-1, *usable])
    for combo in itertools.product(*options):
        ok = True
        for t_idx, t in enumerate(tasks):
            for cap, count in t.requires.items():
                have = sum(
                    1
                    for r_idx, i in enumerate(robots)
                    if combo[r_idx] == t_idx and team.capabilities[i] == cap
                )
                if have < count:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return True
    return False


def brute_force_joint_plan(
    scenario: Scenario, state_cap: int = DEFAULT_STATE_CAP
) -> float:
    """True waiting-aware optimum of the team total for up to two robots."""
    robots = sorted(r.id for r in scenario.robots)
    if len(robots) > 2:
        raise ValueError("joint oracle supports at most 2 robots")
    team_starts = {r.id: r.start for r in scenario.robots}
    own_labels: dict[int, dict] = {}
    nfas: dict[int, Nfa] = {}
    for i in robots:
        nfas[i] = to_nfa(scenario.individual_formula(i))
        lab = {}
        for t in scenario.individual_tasks.get(i, ()):
            lab.setdefault(t.cell, set()).add(t.name)
        own_labels[i] = {c: frozenset(s) for c, s in lab.items()}
    gnfa = to_nfa(scenario.global_formula())

    def label_of(i, cell):
        return own_labels[i].get(cell, frozenset())

    def moves(cell):
        return [cell, *scenario.neighbors(cell)]

    start_state = (
        tuple(
            (i, team_starts[i], _subset_step(nfas[i], nfas[i].initial, label_of(i, team_starts[i])))
            for i in robots
        ),
        frozenset(gnfa.initial),
    )
    if any(not fset for (_, _, fset) in start_state[0]):
        raise PlanInfeasible("a robot's start already violates its specification")

    def successors(state):
        active, gset = state
        # retire a robot whose own automaton accepts
        for idx, (i, cell, fset) in enumerate(active):
            if fset & set(nfas[i].accepting):
                yield 0.0, (active[:idx] + active[idx + 1 :], gset)
        positions = {i: cell for (i, cell, _) in active}
        # fire any staffable task set right now
        for chosen in _staffings(scenario, positions):
            nxt = _subset_step(gnfa, gset, chosen)
            if nxt:
                yield 0.0, (active, nxt)
        # synchronized motion step, every active robot pays one time unit
        if active:
            per_robot = []
            for (i, cell, fset) in active:
                steps = []
                for nxt_cell in moves(cell):
                    nxt_f = _subset_step(nfas[i], fset, label_of(i, nxt_cell))
                    if nxt_f:
                        steps.append((i, nxt_cell, nxt_f))
                per_robot.append(steps)
            for combo in itertools.product(*per_robot):
                yield float(len(active)), (tuple(combo), gset)

    def is_goal(state):
        active, gset = state
        return not active and bool(gset & set(gnfa.accepting))

    dist = {start_state: 0.0}
    heap = [(0.0, 0, start_state)]
    counter = 1
    done = set()
    while heap:
        cost, _, state = heapq.heappop(heap)
        if state in done:
            continue
        done.add(state)
        if is_goal(state):
            return cost
        if len(done) > state_cap:
            raise ResourceLimit(f"joint search exceeded {state_cap} states")
        for w, nxt in successors(state):
            cand = cost + w
            if nxt not in dist or cand < dist[nxt]:
                dist[nxt] = cand
                heapq.heappush(heap, (cand, counter, nxt))
                counter += 1
    raise PlanInfeasible("no joint execution satisfies all specifications")
