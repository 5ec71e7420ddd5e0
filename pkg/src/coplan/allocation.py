"""Boolean allocation of sequence tasks to robots, with model enumeration.

Variables exist only for (robot, task) pairs where the robot's capability is
actually demanded; anything else could never help satisfy a requirement.
Three constraint families: per-task per-capability lower bounds, exclusivity
inside one synchronized element, and a shared robot between consecutive
elements of the same part.  Enumeration is an exhaustive backtracking search
that blocks each emitted model, mirroring iterated solving with negated-model
clauses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

from .mission import EssentialSequence, SeqTask, TaskSpec, TeamModel


@dataclass(frozen=True)
class Var:
    robot: int
    kl: tuple[int, int]
    name: str


@dataclass(frozen=True)
class CommClause:
    """Some robot must appear on both sides (variable indices per side)."""

    pair: tuple[tuple[int, int], tuple[int, int]]  # (part, element) keys
    sides: tuple[tuple[int, tuple[int, ...], tuple[int, ...]], ...]
    # (robot, its var indices in the earlier element, in the later element)


@dataclass
class AllocationModel:
    variables: tuple[Var, ...]
    at_least: tuple[tuple[tuple[int, ...], int], ...]
    exclusions: tuple[tuple[int, int], ...]
    comm: tuple[CommClause, ...]
    team: TeamModel
    blocked: list[frozenset[int]] = field(default_factory=list)
    emitted: int = 0

    def var_count(self) -> int:
        return len(self.variables)

    def clause_count(self) -> int:
        return len(self.at_least) + len(self.exclusions) + len(self.comm)

    def assignment_from_true_vars(self, true_idx: frozenset[int]) -> "Assignment":
        ok, reason = check_assignment(self, true_idx)
        if not ok:
            raise ValueError(f"assignment violates the model: {reason}")
        tasks: dict[int, set[tuple[int, int]]] = {i: set() for i in self.team.robots}
        names: dict[tuple[int, int], str] = {}
        for idx in true_idx:
            v = self.variables[idx]
            tasks[v.robot].add(v.kl)
            names[v.kl] = v.name
        for v in self.variables:
            names.setdefault(v.kl, v.name)
        return Assignment(
            tasks={i: frozenset(s) for i, s in tasks.items()},
            task_names=names,
        )


def check_assignment(model: AllocationModel, true_idx: frozenset[int]) -> tuple[bool, str]:
    """Independent clause evaluator; used both as the construction gate and as
    the test oracle."""
    for vars_, bound in model.at_least:
        if sum(1 for v in vars_ if v in true_idx) < bound:
            return False, f"cardinality below {bound} for {vars_}"
    for a, b in model.exclusions:
        if a in true_idx and b in true_idx:
            return False, f"exclusion violated for {a},{b}"
    for clause in model.comm:
        if not any(
            any(v in true_idx for v in left) and any(v in true_idx for v in right)
            for _, left, right in clause.sides
        ):
            return False, f"no shared robot across {clause.pair}"
    return True, ""


@dataclass(frozen=True)
class Assignment:
    """Which sequence tasks each robot performs."""

    tasks: Mapping[int, frozenset[tuple[int, int]]]
    task_names: Mapping[tuple[int, int], str]

    def robots_for(self, kl: tuple[int, int]) -> frozenset[int]:
        return frozenset(i for i, s in self.tasks.items() if kl in s)

    def robots_for_element(self, kls: Sequence[tuple[int, int]]) -> frozenset[int]:
        out: set[int] = set()
        for kl in kls:
            out |= self.robots_for(kl)
        return frozenset(out)

    def assigned(self, robot: int) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.tasks.get(robot, frozenset())))

    def to_json_dict(self) -> dict:
        return {
            str(robot): [list(kl) for kl in sorted(kls)]
            for robot, kls in sorted(self.tasks.items())
        }


def build_model(
    seq: EssentialSequence,
    team: TeamModel,
    tasks: Mapping[str, TaskSpec],
    comm_pairs: Sequence[tuple[int, int]] | None = None,
) -> AllocationModel:
    """Construct variables and the three constraint families.

    `comm_pairs` lists (part, element) keys whose successor pair gets the
    shared-robot constraint; None applies it to every consecutive pair inside
    each part.
    """
    variables: list[Var] = []
    index: dict[tuple[int, tuple[int, int]], int] = {}
    seq_tasks = seq.tasks
    for robot in team.robots:
        cap = team.capabilities[robot]
        for t in seq_tasks:
            if cap in tasks[t.name].requires:
                index[(robot, t.kl)] = len(variables)
                variables.append(Var(robot=robot, kl=t.kl, name=t.name))

    at_least: list[tuple[tuple[int, ...], int]] = []
    for t in seq_tasks:
        for cap, count in sorted(tasks[t.name].requires.items()):
            group = [
                index[(i, t.kl)]
                for i in sorted(team.group(cap))
                if (i, t.kl) in index
            ]
            at_least.append((tuple(group), count))

    exclusions: list[tuple[int, int]] = []
    by_element: dict[tuple[int, int], list[SeqTask]] = {}
    for t in seq_tasks:
        by_element.setdefault((t.part, t.element), []).append(t)
    for key in sorted(by_element):
        element = by_element[key]
        for robot in team.robots:
            here = [index[(robot, t.kl)] for t in element if (robot, t.kl) in index]
            for a_i, a in enumerate(here):
                for b in here[a_i + 1 :]:
                    exclusions.append((a, b))

    if comm_pairs is None:
        pairs = []
        for k, part in enumerate(seq.parts, start=1):
            for m in range(1, len(part)):
                pairs.append((k, m))
    else:
        pairs = [tuple(p) for p in comm_pairs]
    comm: list[CommClause] = []
    for k, m in pairs:
        left = by_element.get((k, m), [])
        right = by_element.get((k, m + 1), [])
        if not left or not right:
            continue
        sides = []
        for robot in team.robots:
            lv = tuple(index[(robot, t.kl)] for t in left if (robot, t.kl) in index)
            rv = tuple(index[(robot, t.kl)] for t in right if (robot, t.kl) in index)
            if lv and rv:
                sides.append((robot, lv, rv))
        comm.append(CommClause(pair=((k, m), (k, m + 1)), sides=tuple(sides)))

    return AllocationModel(
        variables=tuple(variables),
        at_least=tuple(at_least),
        exclusions=tuple(exclusions),
        comm=tuple(comm),
        team=team,
    )


def enumerate_assignments(model: AllocationModel) -> Iterator[Assignment]:
    """Lazily emit every satisfying assignment exactly once.

    Depth-first over variables in (robot, task) order, false branch first,
    with propagation on the cardinality and exclusion clauses.  Each emitted
    model is appended to `model.blocked`, which doubles as the emission log.
    """
    n = model.var_count()
    values: list[int | None] = [None] * n
    watch_atleast: list[list[int]] = [[] for _ in range(n)]
    for ci, (vars_, _) in enumerate(model.at_least):
        for v in vars_:
            watch_atleast[v].append(ci)
    partners: list[list[int]] = [[] for _ in range(n)]
    for a, b in model.exclusions:
        partners[a].append(b)
        partners[b].append(a)

    def atleast_ok(ci: int) -> bool:
        vars_, bound = model.at_least[ci]
        true = sum(1 for v in vars_ if values[v] is True)
        free = sum(1 for v in vars_ if values[v] is None)
        return true + free >= bound

    def comm_possible() -> bool:
        for clause in model.comm:
            feasible = False
            for _, left, right in clause.sides:
                l_ok = any(values[v] is not False for v in left)
                r_ok = any(values[v] is not False for v in right)
                if l_ok and r_ok:
                    feasible = True
                    break
            if not feasible:
                return False
        return True

    def assign(v: int, val: bool, trail: list[int]) -> bool:
        """Set v and propagate; returns False on conflict."""
        if values[v] is not None:
            return values[v] is val
        values[v] = val
        trail.append(v)
        if val:
            for p in partners[v]:
                if not assign(p, False, trail):
                    return False
        else:
            for ci in watch_atleast[v]:
                vars_, bound = model.at_least[ci]
                true = sum(1 for u in vars_ if values[u] is True)
                free = [u for u in vars_ if values[u] is None]
                if true + len(free) < bound:
                    return False
                if true + len(free) == bound:
                    for u in free:
                        if not assign(u, True, trail):
                            return False
        return True

    def undo(trail: list[int]) -> None:
        for v in trail:
            values[v] = None

    def search(v: int) -> Iterator[Assignment]:
        while v < n and values[v] is not None:
            v += 1
        if v == n:
            true_idx = frozenset(i for i in range(n) if values[i] is True)
            ok, _ = check_assignment(model, true_idx)
            if ok and true_idx not in model.blocked:
                model.blocked.append(true_idx)
                model.emitted += 1
                yield model.assignment_from_true_vars(true_idx)
            return
        for val in (False, True):
            trail: list[int] = []
            if assign(v, val, trail) and comm_possible():
                yield from search(v + 1)
            undo(trail)

    # an unsatisfiable bound with no free variables must kill enumeration
    if all(atleast_ok(ci) for ci in range(len(model.at_least))):
        yield from search(0)


def dominated(candidate: Assignment, history: Sequence[Assignment]) -> bool:
    """True iff some earlier assignment gives every robot a subset of the
    candidate's tasks; such candidates only add work and are skipped."""
    robots = set(candidate.tasks)
    for earlier in history:
        if all(
            earlier.tasks.get(i, frozenset()) <= candidate.tasks.get(i, frozenset())
            for i in robots | set(earlier.tasks)
        ):
            return True
    return False
