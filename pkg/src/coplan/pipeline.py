"""End-to-end planning: sequence selection, allocation search, local planning,
adjustment, and best-solution bookkeeping.

Assignment evaluations are independent of one another; the enumeration order,
the dominance filter, and the per-assignment adjustment seeds are all
deterministic, so a (scenario, seed) pair always produces the same solution.
"""

from __future__ import annotations

import random
import time as _time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

from .adjust import (
    AdjustResult,
    Schedule,
    TimeCostReport,
    adjust_plans,
    build_schedule_context,
    schedule_from_runs,
    time_cost,
)
from .allocation import (
    AllocationModel,
    Assignment,
    build_model,
    dominated,
    enumerate_assignments,
)
from .errors import AllocationInfeasible, InternalCheckFailed, PlanInfeasible
from .ltlf import Formula, Nfa, atoms, pretty, to_nfa
from .localplan import (
    ProductAutomaton,
    TransitionSystem,
    build_local_formula,
    build_product,
    shortest_accepting_run,
)
from .mission import (
    Constraint,
    EssentialSequence,
    find_decomposition_states,
    prune_nfa,
    select_essential_sequence,
    temporal_constraints,
)
from .scenario import Scenario

DEFAULT_BUDGET_SECONDS = 1800.0


def build_wts(scenario: Scenario, robot: int) -> TransitionSystem:
    """Grid motion model with unit weights and the robot's label view: its own
    individual tasks plus every collaborative task its capability can serve."""
    cells = scenario.cells()
    adjacency = {}
    weights = {}
    for cell in cells:
        succs = sorted([cell, *scenario.neighbors(cell)])
        adjacency[cell] = tuple(succs)
        for nxt in succs:
            weights[(cell, nxt)] = 1.0
    labels: dict = {cell: set() for cell in cells}
    for task in scenario.individual_tasks.get(robot, ()):
        labels[task.cell].add(task.name)
    capability = scenario.team().capabilities[robot]
    for task in scenario.collaborative_tasks:
        if capability in task.requires:
            labels[task.region].add(task.name)
    start = next(r.start for r in scenario.robots if r.id == robot)
    return TransitionSystem(
        initial=start,
        adjacency=adjacency,
        weights=weights,
        labels={cell: frozenset(names) for cell, names in labels.items()},
    )


@dataclass
class MissionContext:
    scenario: Scenario
    wts: Mapping[int, TransitionSystem]
    global_nfa: Nfa
    pruned_nfa: Nfa
    decomposition: frozenset[int]
    sequence: EssentialSequence
    constraints: list[Constraint]
    model: AllocationModel
    collab_atoms: frozenset[str]


def build_mission_context(scenario: Scenario) -> MissionContext:
    team = scenario.team()
    catalog = scenario.catalog()
    wts = {r.id: build_wts(scenario, r.id) for r in scenario.robots}
    global_nfa = to_nfa(scenario.global_formula())
    pruned = prune_nfa(global_nfa, catalog, team)
    decomposition = find_decomposition_states(pruned)
    sequence = select_essential_sequence(pruned, decomposition, catalog, team)
    comm_pairs = scenario.options.get("comm_pairs")
    if comm_pairs is not None:
        comm_pairs = [tuple(p) for p in comm_pairs]
    model = build_model(sequence, team, catalog, comm_pairs=comm_pairs)
    return MissionContext(
        scenario=scenario,
        wts=wts,
        global_nfa=global_nfa,
        pruned_nfa=pruned,
        decomposition=decomposition,
        sequence=sequence,
        constraints=temporal_constraints(sequence),
        model=model,
        collab_atoms=frozenset(catalog),
    )


@lru_cache(maxsize=4096)
def _nfa_for(formula: Formula) -> Nfa:
    return to_nfa(formula)


@dataclass
class EvaluatedAssignment:
    index: int
    assignment: Assignment
    products: dict[int, ProductAutomaton]
    runs: dict[int, list[int]]
    schedule: Schedule
    initial_report: TimeCostReport
    report: TimeCostReport
    adjust: AdjustResult | None


class _ProductCache:
    """Products keyed by (robot, local formula); assignments frequently share
    per-robot task chains, and the product only depends on the chain."""

    def __init__(self):
        self._store: dict[tuple[int, Formula], ProductAutomaton] = {}

    def get(
        self, ctx: MissionContext, robot: int, formula: Formula
    ) -> ProductAutomaton:
        key = (robot, formula)
        product = self._store.get(key)
        if product is None:
            # unassigned collaborative atoms must not satisfy obligations
            drop = ctx.collab_atoms - atoms(formula)
            wts = ctx.wts[robot].with_labels_restricted(frozenset(drop))
            product = build_product(wts, _nfa_for(formula))
            self._store[key] = product
        return product


def evaluate_assignment(
    ctx: MissionContext,
    index: int,
    assignment: Assignment,
    cache: _ProductCache,
    seed: int,
    no_adjust: bool,
) -> EvaluatedAssignment:
    scenario = ctx.scenario
    robots = [r.id for r in scenario.robots]
    products: dict[int, ProductAutomaton] = {}
    runs: dict[int, list[int]] = {}
    for robot in robots:
        by_part: dict[int, list[str]] = {}
        for t in ctx.sequence.tasks:
            if t.kl in assignment.tasks.get(robot, frozenset()):
                by_part.setdefault(t.part, []).append(t.name)
        groups = [(k, names) for k, names in sorted(by_part.items())]
        formula = build_local_formula(scenario.individual_formula(robot), groups)
        product = cache.get(ctx, robot, formula)
        try:
            run = shortest_accepting_run(product)
        except PlanInfeasible as exc:
            raise PlanInfeasible(
                f"assignment {index}: robot {robot} cannot satisfy "
                f"{pretty(formula)}: {exc}"
            )
        products[robot] = product
        runs[robot] = run
    sched_ctx = build_schedule_context(ctx.sequence, assignment, robots)
    schedule = schedule_from_runs(sched_ctx, products, runs)
    initial_report = time_cost(schedule)
    adjust_result = None
    report = initial_report
    if not no_adjust and sched_ctx.elements:
        adjust_result = adjust_plans(
            products, runs, schedule, rng=random.Random(f"{seed}:{index}")
        )
        runs = adjust_result.runs
        schedule = adjust_result.schedule
        report = adjust_result.report
    return EvaluatedAssignment(
        index=index,
        assignment=assignment,
        products=products,
        runs=runs,
        schedule=schedule,
        initial_report=initial_report,
        report=report,
        adjust=adjust_result,
    )


@dataclass
class Solution:
    scenario: Scenario
    context: MissionContext
    chosen: EvaluatedAssignment
    t_colla: float
    t_colla_init: float
    stats: dict
    simulation: dict = field(default_factory=dict)
    verification: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        doc = {
            "assignment": self.chosen.assignment.to_json_dict(),
            "sequence": self.context.sequence.to_json_dict(),
            "plans": self.simulation.get("plans", {}),
            "completions": self.simulation.get("completions", []),
            "report": {
                **self.chosen.report.to_json_dict(),
                "t_colla": self.t_colla,
                "t_colla_init": self.t_colla_init,
            },
            "stats": self.stats,
            "verification": self.verification,
        }
        return doc


def allocation_precheck(scenario: Scenario, tries: int = 5) -> None:
    """Generator-side feasibility gate: the front half of the pipeline must
    produce at least one assignment whose local plans all exist."""
    ctx = build_mission_context(scenario)
    cache = _ProductCache()
    produced = False
    for index, assignment in enumerate(enumerate_assignments(ctx.model)):
        produced = True
        if index >= tries:
            break
        try:
            evaluate_assignment(ctx, index, assignment, cache, 0, no_adjust=True)
            return
        except PlanInfeasible:
            continue
    if not produced:
        raise AllocationInfeasible("no assignment satisfies the allocation model")
    raise PlanInfeasible("no early assignment admits local plans")


def run_pipeline(
    scenario: Scenario,
    seed: int | None = None,
    budget_seconds: float | None = None,
    no_adjust: bool = False,
    max_assignments: int | None = None,
) -> Solution:
    """Iterate allocation models best-first in emission order and keep the
    cheapest verified execution plan found before exhaustion or budget."""
    from .simulate import simulate_execution, verify_solution

    t0 = _time.monotonic()
    if seed is None:
        seed = int(scenario.options.get("seed", 0))
    if budget_seconds is None:
        budget_seconds = float(
            scenario.options.get("budget_seconds", DEFAULT_BUDGET_SECONDS)
        )
    if max_assignments is None:
        opt = scenario.options.get("max_assignments")
        max_assignments = int(opt) if opt is not None else None

    ctx = build_mission_context(scenario)
    cache = _ProductCache()
    history: list[Assignment] = []
    best: EvaluatedAssignment | None = None
    best_initial: float | None = None
    curve: list[tuple[int, float]] = []
    skipped: list[dict] = []
    filtered = 0
    evaluated = 0
    emitted = 0
    budget_hit = False
    for index, assignment in enumerate(enumerate_assignments(ctx.model)):
        emitted += 1
        if max_assignments is not None and emitted > max_assignments:
            emitted -= 1
            break
        if _time.monotonic() - t0 > budget_seconds:
            budget_hit = True
            break
        if dominated(assignment, history):
            filtered += 1
            history.append(assignment)
            continue
        history.append(assignment)
        try:
            result = evaluate_assignment(
                ctx, index, assignment, cache, seed, no_adjust
            )
        except PlanInfeasible as exc:
            skipped.append({"assignment": index, "reason": str(exc)})
            continue
        evaluated += 1
        if best_initial is None or result.initial_report.total < best_initial:
            best_initial = result.initial_report.total
        if best is None or result.report.total < best.report.total:
            best = result
        curve.append((index, best.report.total))
    t_cal = _time.monotonic() - t0
    if best is None:
        if emitted == 0:
            raise AllocationInfeasible(
                "the allocation constraints admit no assignment"
            )
        if budget_hit:
            raise PlanInfeasible(
                f"budget of {budget_seconds}s exhausted before any assignment "
                f"produced a plan"
            )
        raise PlanInfeasible(
            f"all {emitted} assignments were filtered or plan-infeasible "
            f"({len(skipped)} skipped)"
        )
    stats = {
        "assignments_emitted": emitted,
        "assignments_evaluated": evaluated,
        "assignments_filtered": filtered,
        "assignments_skipped": skipped,
        "variables": ctx.model.var_count(),
        "clauses": ctx.model.clause_count(),
        "t_cal": t_cal,
        "budget_exhausted": budget_hit,
        "best_curve": curve,
        "adjust_passes": best.adjust.passes if best.adjust else 0,
        "seed": seed,
    }
    solution = Solution(
        scenario=scenario,
        context=ctx,
        chosen=best,
        t_colla=best.report.total,
        t_colla_init=best_initial if best_initial is not None else best.report.total,
        stats=stats,
    )
    solution.simulation = simulate_execution(solution)
    solution.verification = verify_solution(scenario, solution.to_json_dict())
    if not solution.verification["passed"]:
        raise InternalCheckFailed(
            f"solution failed verification: {solution.verification}"
        )
    return solution
