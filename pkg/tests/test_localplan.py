"""Local formula construction, product automata, runs, and arrival times."""

import itertools
import random

import pytest

from coplan.errors import MissingCollaborativeState, PlanInfeasible
from coplan.ltlf import (
    And,
    Atom,
    Eventually,
    TRUE,
    eval_trace,
    guard_sat,
    parse_ltlf,
    pretty,
    to_nfa,
)
from coplan.localplan import (
    ProductAutomaton,
    TransitionSystem,
    arrival_times,
    build_local_formula,
    build_product,
    collaborative_states,
    is_accepting_run,
    run_plan,
    run_trace,
    run_weight,
    shortest_accepting_run,
    task_visits,
)
from coplan.mission import SeqTask


def line_wts(n, labels=None, start=0):
    """A 1xN corridor with unit weights and self-loops."""
    adjacency = {}
    weights = {}
    for x in range(n):
        succs = [x]
        if x > 0:
            succs.append(x - 1)
        if x < n - 1:
            succs.append(x + 1)
        adjacency[x] = tuple(sorted(succs))
        for nxt in succs:
            weights[(x, nxt)] = 1.0
    labs = {x: frozenset() for x in range(n)}
    for x, names in (labels or {}).items():
        labs[x] = frozenset(names)
    return TransitionSystem(
        initial=start, adjacency=adjacency, weights=weights, labels=labs
    )


def grid_wts(w, h, labels=None, start=(0, 0)):
    adjacency = {}
    weights = {}
    for x in range(w):
        for y in range(h):
            cell = (x, y)
            succs = [cell]
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                nxt = (x + dx, y + dy)
                if 0 <= nxt[0] < w and 0 <= nxt[1] < h:
                    succs.append(nxt)
            adjacency[cell] = tuple(sorted(succs))
            for nxt in succs:
                weights[(cell, nxt)] = 1.0
    labs = {c: frozenset() for c in adjacency}
    for c, names in (labels or {}).items():
        labs[c] = frozenset(names)
    return TransitionSystem(
        initial=start, adjacency=adjacency, weights=weights, labels=labs
    )


def st(part, index, element, name):
    return SeqTask(part=part, index=index, element=element, name=name)


# --- local formula -------------------------------------------------------------


def test_chain_within_one_part():
    phi = Atom("ts")
    f = build_local_formula(phi, [(1, ["a", "b"])])
    assert f == And(phi, Eventually(And(Atom("a"), Eventually(Atom("b")))))


def test_chain_across_parts_keeps_double_eventually():
    phi = Atom("ts")
    f = build_local_formula(phi, [(1, ["a"]), (2, ["b"])])
    expected = And(
        phi,
        Eventually(And(Atom("a"), Eventually(Eventually(Atom("b"))))),
    )
    assert f == expected


def test_empty_assignment_returns_own_formula():
    phi = parse_ltlf("F ts1 & F ts2")
    assert build_local_formula(phi, []) is phi


def test_chain_implies_own_formula_on_bounded_traces():
    rng = random.Random(3)
    phi = parse_ltlf("F p & (!q U p)")
    f = build_local_formula(phi, [(1, ["a", "b"])])
    names = ["p", "q", "a", "b"]
    for _ in range(300):
        trace = [
            frozenset(n for n in names if rng.random() < 0.4)
            for _ in range(rng.randint(0, 5))
        ]
        if eval_trace(f, trace):
            assert eval_trace(phi, trace)


# --- product construction --------------------------------------------------------


def test_trivial_product_single_state():
    wts = line_wts(1)
    product = build_product(wts, to_nfa(TRUE))
    assert len(product.nodes) == 1
    assert set(product.initial) == {0}
    assert product.accepting == {0}


def test_two_region_line_weight_one_run():
    wts = line_wts(2, labels={1: ["a"]})
    product = build_product(wts, to_nfa(parse_ltlf("F a")))
    run = shortest_accepting_run(product)
    assert run_weight(product, run) == 1.0
    assert run_plan(product, run) == [0, 1]


def test_product_transitions_respect_definition():
    wts = grid_wts(3, 3, labels={(2, 2): ["a"], (0, 2): ["ts"]})
    nfa = to_nfa(parse_ltlf("F ts & F a"))
    product = build_product(wts, nfa)
    assert len(product.nodes) <= len(wts.adjacency) * len(nfa.states)
    for u, edges in enumerate(product.succ):
        ru, fu = product.nodes[u]
        for v, w in edges:
            rv, fv = product.nodes[v]
            assert rv in wts.adjacency[ru]
            assert w == wts.weights[(ru, rv)]
            guard = nfa.transitions[(fu, fv)]
            assert guard_sat(guard, wts.labels[rv])


def test_accepting_run_trace_satisfies_formula():
    rng = random.Random(8)
    for _ in range(40):
        labels = {}
        for name in ("a", "b", "ts"):
            labels.setdefault(
                (rng.randrange(3), rng.randrange(3)), []
            ).append(name)
        wts = grid_wts(3, 3, labels=labels, start=(rng.randrange(3), rng.randrange(3)))
        phi = parse_ltlf(rng.choice([
            "F a & F b", "F (a & F b)", "!a U b & F ts", "F a & F b & F ts",
        ]))
        product = build_product(wts, to_nfa(phi))
        try:
            run = shortest_accepting_run(product)
        except PlanInfeasible:
            continue
        assert is_accepting_run(product, run)
        assert eval_trace(phi, run_trace(product, run))


# --- shortest runs ----------------------------------------------------------------


def test_goal_three_cells_away_costs_three():
    wts = line_wts(4, labels={3: ["goal"]})
    product = build_product(wts, to_nfa(parse_ltlf("F goal")))
    run = shortest_accepting_run(product)
    assert run_weight(product, run) == 3.0


def test_nearer_of_two_goals_chosen():
    wts = line_wts(6, labels={2: ["goal"], 5: ["goal"]}, start=0)
    product = build_product(wts, to_nfa(parse_ltlf("F goal")))
    run = shortest_accepting_run(product)
    assert run_weight(product, run) == 2.0


def bfs_oracle_cost(product):
    """Exhaustive uniform-cost search over the product, independent of the
    Dijkstra implementation."""
    import heapq

    dist = {}
    heap = [(0.0, n) for n in product.initial]
    heapq.heapify(heap)
    while heap:
        cost, node = heapq.heappop(heap)
        if node in dist:
            continue
        dist[node] = cost
        for nxt, w in product.succ[node]:
            if nxt not in dist:
                heapq.heappush(heap, (cost + w, nxt))
    costs = [dist[n] for n in product.accepting if n in dist]
    return min(costs) if costs else None


def test_shortest_run_matches_bfs_oracle_on_random_grids():
    rng = random.Random(77)
    for _ in range(30):
        labels = {}
        for name in ("a", "b", "c"):
            labels.setdefault(
                (rng.randrange(5), rng.randrange(5)), []
            ).append(name)
        wts = grid_wts(5, 5, labels=labels, start=(rng.randrange(5), rng.randrange(5)))
        phi = parse_ltlf(rng.choice([
            "F a & F b & F c", "F (a & F (b & F c))", "(!a U b) & F c", "F a",
        ]))
        product = build_product(wts, to_nfa(phi))
        expected = bfs_oracle_cost(product)
        if expected is None:
            with pytest.raises(PlanInfeasible):
                shortest_accepting_run(product)
        else:
            run = shortest_accepting_run(product)
            assert run_weight(product, run) == expected


def test_plan_infeasible_when_unreachable():
    wts = line_wts(2)  # no labels at all
    product = build_product(wts, to_nfa(parse_ltlf("F missing")))
    with pytest.raises(PlanInfeasible):
        shortest_accepting_run(product)


# --- collaborative states -----------------------------------------------------------


def test_single_labeled_region_advancing_states():
    wts = line_wts(3, labels={2: ["ct"]})
    product = build_product(wts, to_nfa(parse_ltlf("F ct")))
    collab = collaborative_states(product, "ct")
    assert collab
    for node in collab:
        region, f = product.nodes[node]
        assert region == 2
        incoming = [
            u
            for u, edges in enumerate(product.succ)
            for v, _ in edges
            if v == node
        ]
        assert any(product.nfa_state(u) != f for u in incoming)


def test_states_without_nfa_advance_excluded():
    wts = line_wts(3, labels={2: ["ct"]})
    product = build_product(wts, to_nfa(parse_ltlf("F ct")))
    collab = collaborative_states(product, "ct")
    for node in range(len(product.nodes)):
        region, f = product.nodes[node]
        if region == 2 and node not in collab:
            # every incoming edge keeps the automaton still
            for u, edges in enumerate(product.succ):
                for v, _ in edges:
                    if v == node:
                        assert product.nfa_state(u) == f


def def_scan_oracle(product, task):
    """Plain scan of the definition over all states and edges."""
    out = set()
    for u, edges in enumerate(product.succ):
        fu = product.nfa_state(u)
        for v, _ in edges:
            fv = product.nfa_state(v)
            label = product.wts.labels[product.region(v)]
            if fu == fv or task not in label:
                continue
            g = product.nfa.transitions[(fu, fv)]
            if guard_sat(g, label) and not guard_sat(g, label - {task}):
                out.add(v)
    for node in product.initial:
        region, f1 = product.nodes[node]
        label = product.wts.labels[region]
        if task not in label:
            continue
        sat_with = False
        sat_without = False
        for f0 in product.nfa.initial:
            g = product.nfa.transitions.get((f0, f1))
            if g is None:
                continue
            if guard_sat(g, label - {task}):
                sat_without = True
            if f0 != f1 and guard_sat(g, label):
                sat_with = True
        if sat_with and not sat_without:
            out.add(node)
    return frozenset(out)


def test_collaborative_states_match_definition_scan():
    rng = random.Random(13)
    for _ in range(25):
        labels = {}
        for name in ("ct", "other", "ts"):
            labels.setdefault(
                (rng.randrange(5), rng.randrange(5)), []
            ).append(name)
        wts = grid_wts(5, 5, labels=labels, start=(rng.randrange(5), rng.randrange(5)))
        phi = parse_ltlf(rng.choice([
            "F ct & F other", "F (ct & F other)", "F ts & F (other & F ct)",
        ]))
        product = build_product(wts, to_nfa(phi))
        assert collaborative_states(product, "ct") == def_scan_oracle(product, "ct")


# --- arrival times -------------------------------------------------------------------


def test_arrival_time_is_prefix_weight():
    wts = line_wts(4, labels={3: ["ct"]})
    product = build_product(wts, to_nfa(parse_ltlf("F ct")))
    run = shortest_accepting_run(product)
    task = st(1, 1, 1, "ct")
    times = arrival_times(product, run, [task])
    assert times[task] == 3.0


def test_task_performed_at_run_start_time_zero():
    wts = line_wts(3, labels={0: ["ct"]}, start=0)
    product = build_product(wts, to_nfa(parse_ltlf("F ct")))
    run = shortest_accepting_run(product)
    task = st(1, 1, 1, "ct")
    visits = task_visits(product, run, [task])
    assert visits[task] == (0, 0.0)


def test_multi_task_times_follow_plan_order():
    wts = line_wts(7, labels={2: ["a"], 4: ["b"], 6: ["c"]})
    phi = build_local_formula(TRUE, [(1, ["a", "b", "c"])])
    product = build_product(wts, to_nfa(phi))
    run = shortest_accepting_run(product)
    tasks = [st(1, 1, 1, "a"), st(1, 2, 2, "b"), st(1, 3, 3, "c")]
    times = arrival_times(product, run, tasks)
    assert times[tasks[0]] == 2.0
    assert times[tasks[1]] == 4.0
    assert times[tasks[2]] == 6.0


def test_missing_collaborative_state_fails_loudly():
    wts = line_wts(3, labels={2: ["ct"]})
    product = build_product(wts, to_nfa(parse_ltlf("F ct")))
    run = shortest_accepting_run(product)
    ghost = st(1, 1, 1, "ghost")
    with pytest.raises(MissingCollaborativeState):
        arrival_times(product, run, [ghost])
