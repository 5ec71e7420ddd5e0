"""Allocation model construction, exhaustive enumeration, and dominance."""

import itertools
import random

from coplan.allocation import (
    AllocationModel,
    Assignment,
    Var,
    build_model,
    check_assignment,
    dominated,
    enumerate_assignments,
)
from coplan.mission import EssentialSequence, TaskSpec, TeamModel


def seq_of(*elements, boundaries=()):
    return EssentialSequence(
        run=tuple(range(len(elements) + 1)),
        elements=tuple(frozenset(e) for e in elements),
        boundaries=tuple(boundaries),
    )


def bare_model(n_vars, at_least=(), exclusions=(), comm=()):
    return AllocationModel(
        variables=tuple(
            Var(robot=i + 1, kl=(1, i + 1), name=f"t{i+1}") for i in range(n_vars)
        ),
        at_least=tuple(at_least),
        exclusions=tuple(exclusions),
        comm=tuple(comm),
        team=TeamModel({i + 1: "c1" for i in range(n_vars)}),
    )


def brute_force_models(model):
    """Oracle: test all 2^n subsets against the independent evaluator."""
    n = model.var_count()
    out = []
    for bits in itertools.product([False, True], repeat=n):
        true_idx = frozenset(i for i in range(n) if bits[i])
        ok, _ = check_assignment(model, true_idx)
        if ok:
            out.append(true_idx)
    return out


# --- model construction -------------------------------------------------------


def test_variables_restricted_to_capable_robots():
    seq = seq_of(["ct"])
    team = TeamModel({1: "c1", 2: "c2"})
    tasks = {"ct": TaskSpec("ct", (0, 0), {"c1": 1})}
    model = build_model(seq, team, tasks)
    assert [v.robot for v in model.variables] == [1]
    assignments = list(enumerate_assignments(model))
    assert len(assignments) == 1
    assert assignments[0].tasks[1] == frozenset({(1, 1)})
    assert assignments[0].tasks[2] == frozenset()


def test_same_element_exclusion():
    seq = seq_of(["ctA", "ctB"])
    team = TeamModel({1: "c1", 2: "c1", 3: "c1"})
    tasks = {
        "ctA": TaskSpec("ctA", (0, 0), {"c1": 1}),
        "ctB": TaskSpec("ctB", (1, 0), {"c1": 1}),
    }
    model = build_model(seq, team, tasks)
    for assignment in enumerate_assignments(model):
        for robot in team.robots:
            share = assignment.tasks[robot]
            assert len(share) <= 1  # one task per synchronized element


def test_comm_constraint_forces_shared_robot():
    seq = seq_of(["ctA"], ["ctB"])
    team = TeamModel({1: "c1", 2: "c1"})
    tasks = {
        "ctA": TaskSpec("ctA", (0, 0), {"c1": 1}),
        "ctB": TaskSpec("ctB", (1, 0), {"c1": 1}),
    }
    with_comm = build_model(seq, team, tasks)
    without = build_model(seq, team, tasks, comm_pairs=[])
    got = {
        tuple(sorted((r, kl) for r, s in a.tasks.items() for kl in s))
        for a in enumerate_assignments(with_comm)
    }
    all_models = {
        tuple(sorted((r, kl) for r, s in a.tasks.items() for kl in s))
        for a in enumerate_assignments(without)
    }
    assert got < all_models
    for entry in all_models - got:
        robots_a = {r for r, kl in entry if kl == (1, 1)}
        robots_b = {r for r, kl in entry if kl == (1, 2)}
        assert not (robots_a & robots_b)


def test_cardinality_counting_matches_indicator_sum():
    seq = seq_of(["ct"])
    team = TeamModel({1: "c1", 2: "c1", 3: "c1", 4: "c2"})
    tasks = {"ct": TaskSpec("ct", (0, 0), {"c1": 2})}
    model = build_model(seq, team, tasks)
    for assignment in enumerate_assignments(model):
        helpers = [i for i in team.robots if (1, 1) in assignment.tasks[i]]
        count = sum(1 for i in helpers if team.capabilities[i] == "c1")
        assert count >= 2


# --- enumeration ---------------------------------------------------------------


def test_unconstrained_two_variables_yield_four_models():
    model = bare_model(2)
    got = list(enumerate_assignments(model))
    assert len(got) == 4
    assert len(model.blocked) == 4
    assert len(set(model.blocked)) == 4


def test_at_least_two_of_three():
    model = bare_model(3, at_least=[((0, 1, 2), 2)])
    got = list(enumerate_assignments(model))
    assert len(got) == 4  # C(3,2) + C(3,3)


def test_enumeration_matches_bruteforce_on_random_models():
    rng = random.Random(99)
    for _ in range(120):
        n = rng.randint(1, 10)
        at_least = []
        for _ in range(rng.randint(0, 2)):
            size = rng.randint(1, n)
            group = tuple(sorted(rng.sample(range(n), size)))
            at_least.append((group, rng.randint(1, size)))
        exclusions = []
        for _ in range(rng.randint(0, 3)):
            a, b = rng.sample(range(n), 2) if n >= 2 else (0, 0)
            if a != b:
                exclusions.append((a, b))
        model = bare_model(n, at_least=at_least, exclusions=exclusions)
        got = [
            frozenset(
                i
                for i, v in enumerate(model.variables)
                if v.kl in a.tasks[v.robot]
            )
            for a in enumerate_assignments(model)
        ]
        expected = brute_force_models(
            bare_model(n, at_least=at_least, exclusions=exclusions)
        )
        assert sorted(got, key=sorted) == sorted(expected, key=sorted)
        assert len(set(got)) == len(got)


def test_enumeration_matches_bruteforce_on_sequence_instance():
    seq = seq_of(["ctA", "ctB"], ["ctC"], ["ctD"])
    team = TeamModel({1: "c1", 2: "c2", 3: "c1"})
    tasks = {
        "ctA": TaskSpec("ctA", (0, 0), {"c1": 1}),
        "ctB": TaskSpec("ctB", (1, 0), {"c2": 1}),
        "ctC": TaskSpec("ctC", (2, 0), {"c1": 1, "c2": 1}),
        "ctD": TaskSpec("ctD", (3, 0), {"c1": 2}),
    }
    model = build_model(seq, team, tasks)
    assert model.var_count() <= 20
    got = [
        frozenset(
            i for i, v in enumerate(model.variables) if v.kl in a.tasks[v.robot]
        )
        for a in enumerate_assignments(model)
    ]
    expected = brute_force_models(build_model(seq, team, tasks))
    assert sorted(got, key=sorted) == sorted(expected, key=sorted)


def test_empty_stream_when_unsatisfiable():
    model = bare_model(2, at_least=[((0, 1), 2)], exclusions=[(0, 1)])
    assert list(enumerate_assignments(model)) == []


def test_every_emitted_assignment_validates():
    seq = seq_of(["ctA"], ["ctB"])
    team = TeamModel({1: "c1", 2: "c1", 3: "c2"})
    tasks = {
        "ctA": TaskSpec("ctA", (0, 0), {"c1": 1}),
        "ctB": TaskSpec("ctB", (1, 0), {"c1": 1, "c2": 1}),
    }
    model = build_model(seq, team, tasks)
    count = 0
    for assignment in enumerate_assignments(model):
        count += 1
        true_idx = frozenset(
            i for i, v in enumerate(model.variables) if v.kl in assignment.tasks[v.robot]
        )
        ok, reason = check_assignment(model, true_idx)
        assert ok, reason
    assert count == model.emitted > 0


# --- dominance filter ------------------------------------------------------------


def A(**tasks):
    return Assignment(
        tasks={int(k[1:]): frozenset(v) for k, v in tasks.items()},
        task_names={},
    )


def test_dominated_superset_true():
    history = [A(r1=[(1, 1)])]
    cand = A(r1=[(1, 1), (1, 2)])
    assert dominated(cand, history)


def test_dominated_incomparable_false():
    history = [A(r1=[(1, 1)])]
    cand = A(r1=[(1, 2)])
    assert not dominated(cand, history)


def test_dominated_equal_counts():
    history = [A(r1=[(1, 1)], r2=[(1, 2)])]
    cand = A(r1=[(1, 1)], r2=[(1, 2)], r3=[])
    assert dominated(cand, history)
