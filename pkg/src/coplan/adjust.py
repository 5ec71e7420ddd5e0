"""Waiting-aware total time cost and the greedy plan-adjusting protocol.

Tasks synchronized inside one sequence element share a single execution time:
the latest effective arrival among the participants.  Each robot carries a
running delay equal to the waiting it has accumulated so far.  Adjustment
sweeps the generalized tasks in execution order; per task the latest robot
first tries to re-route through another collaborative state to arrive
earlier, then the earliest robot tries to arrive later, and a candidate run
is kept only when the whole team's total cost strictly drops.  Robots learn
about each other exclusively through timing messages, never plans or
individual tasks.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .allocation import Assignment
from .errors import MissingCollaborativeState
from .localplan import (
    ProductAutomaton,
    collaborative_states,
    dijkstra,
    run_weight,
    suffix_path,
    task_visits,
)
from .mission import EssentialSequence, SeqTask

ElementKey = tuple[int, int]


@dataclass(frozen=True)
class GeneralizedTask:
    """One sequence element: synchronized tasks with one execution time."""

    key: ElementKey
    tasks: tuple[SeqTask, ...]

    @property
    def label(self) -> str:
        return "+".join(t.name for t in self.tasks)


@dataclass(frozen=True)
class ScheduleContext:
    """Structure shared by all schedules of one assignment."""

    robots: tuple[int, ...]
    elements: tuple[GeneralizedTask, ...]
    participants: Mapping[ElementKey, frozenset[int]]
    robot_tasks: Mapping[int, tuple[SeqTask, ...]]
    element_of: Mapping[tuple[int, int], ElementKey]


@dataclass(frozen=True)
class Schedule:
    """Ideal (no-waiting) timings of every robot against one run set."""

    ctx: ScheduleContext
    ideal: Mapping[tuple[int, ElementKey], float]
    indiv: Mapping[int, float]
    visit: Mapping[tuple[int, tuple[int, int]], int]


@dataclass(frozen=True)
class TimingMessage:
    """The only information robots exchange while adjusting."""

    sender: int
    task: ElementKey
    time: float


@dataclass(frozen=True)
class TimeCostReport:
    exec_times: Mapping[ElementKey, float]
    delays: Mapping[int, float]
    effective: Mapping[tuple[int, ElementKey], float]
    per_robot: Mapping[int, float]
    total: float

    def to_json_dict(self) -> dict:
        return {
            "exec_times": {
                f"{k}.{m}": t for (k, m), t in sorted(self.exec_times.items())
            },
            "delays": {str(i): d for i, d in sorted(self.delays.items())},
            "per_robot": {str(i): t for i, t in sorted(self.per_robot.items())},
            "total": self.total,
        }


def build_schedule_context(
    seq: EssentialSequence, assignment: Assignment, robots: Sequence[int]
) -> ScheduleContext:
    elements = []
    participants = {}
    for key in seq.element_keys:
        tasks = seq.element_tasks(key)
        crew = assignment.robots_for_element([t.kl for t in tasks])
        if not crew:
            raise ValueError(f"element {key} has no participating robot")
        elements.append(GeneralizedTask(key=key, tasks=tasks))
        participants[key] = crew
    by_kl = {t.kl: t for t in seq.tasks}
    robot_tasks = {
        i: tuple(by_kl[kl] for kl in sorted(assignment.tasks.get(i, ())))
        for i in robots
    }
    element_of = {t.kl: (t.part, t.element) for t in seq.tasks}
    return ScheduleContext(
        robots=tuple(sorted(robots)),
        elements=tuple(elements),
        participants=participants,
        robot_tasks=robot_tasks,
        element_of=element_of,
    )


def schedule_from_runs(
    ctx: ScheduleContext,
    products: Mapping[int, ProductAutomaton],
    runs: Mapping[int, Sequence[int]],
) -> Schedule:
    ideal: dict[tuple[int, ElementKey], float] = {}
    visit: dict[tuple[int, tuple[int, int]], int] = {}
    indiv: dict[int, float] = {}
    for robot in ctx.robots:
        run = runs[robot]
        visits = task_visits(products[robot], run, ctx.robot_tasks[robot])
        for task, (j, t) in visits.items():
            ideal[(robot, ctx.element_of[task.kl])] = t
            visit[(robot, task.kl)] = j
        indiv[robot] = run_weight(products[robot], run)
    return Schedule(ctx=ctx, ideal=ideal, indiv=indiv, visit=visit)


def _schedule_with_robot(
    schedule: Schedule,
    robot: int,
    visits: Mapping[SeqTask, tuple[int, float]],
    indiv_weight: float,
) -> Schedule:
    ideal = dict(schedule.ideal)
    visit = dict(schedule.visit)
    for task, (j, t) in visits.items():
        ideal[(robot, schedule.ctx.element_of[task.kl])] = t
        visit[(robot, task.kl)] = j
    indiv = dict(schedule.indiv)
    indiv[robot] = indiv_weight
    return Schedule(ctx=schedule.ctx, ideal=ideal, indiv=indiv, visit=visit)


def time_cost(schedule: Schedule) -> TimeCostReport:
    """Sweep the generalized tasks in order; each executes when its latest
    participant arrives, and every participant's delay is updated to what it
    has waited so far."""
    ctx = schedule.ctx
    delays = {i: 0.0 for i in ctx.robots}
    exec_times: dict[ElementKey, float] = {}
    effective: dict[tuple[int, ElementKey], float] = {}
    for element in ctx.elements:
        crew = ctx.participants[element.key]
        for i in sorted(crew):
            effective[(i, element.key)] = (
                schedule.ideal[(i, element.key)] + delays[i]
            )
        t = max(effective[(i, element.key)] for i in crew)
        exec_times[element.key] = t
        for i in crew:
            delays[i] = t - schedule.ideal[(i, element.key)]
    per_robot = {i: schedule.indiv[i] + delays[i] for i in ctx.robots}
    return TimeCostReport(
        exec_times=exec_times,
        delays=delays,
        effective=effective,
        per_robot=per_robot,
        total=sum(per_robot.values()),
    )


def opt_time(
    product: ProductAutomaton,
    robot: int,
    task: SeqTask,
    run: Sequence[int],
    is_max: bool,
    schedule: Schedule,
    report: TimeCostReport,
    rng: random.Random,
) -> list[int] | None:
    """Try the task's other collaborative states, in shuffled order, for a
    re-routed run that shifts this robot's arrival the right way and strictly
    lowers the team total.

    The latest robot must arrive strictly earlier than its current ideal
    time; the earliest robot must arrive strictly later but no later than the
    task's current execution time.  A candidate keeps the run prefix up to
    the previous task's collaborative state and re-routes from there.
    """
    ctx = schedule.ctx
    key = ctx.element_of[task.kl]
    candidates = sorted(
        collaborative_states(product, task.name)
        - {run[schedule.visit[(robot, task.kl)]]}
    )
    if not candidates:
        return None
    rng.shuffle(candidates)

    rtasks = ctx.robot_tasks[robot]
    pos = rtasks.index(task)
    if pos > 0:
        prev_key = ctx.element_of[rtasks[pos - 1].kl]
        j_prev = schedule.visit[(robot, rtasks[pos - 1].kl)]
        t_prev = report.exec_times[prev_key]
        ti_prev = schedule.ideal[(robot, prev_key)]
    else:
        # first collaborative task: no accumulated delay, keep only the start
        j_prev = 0
        t_prev = ti_prev = 0.0
    ti_ct = schedule.ideal[(robot, key)]
    t_ct = report.exec_times[key]

    source = run[j_prev]
    fwd_best, fwd_parent = dijkstra(product, [source])
    for q in candidates:
        if q not in fwd_best:
            continue
        tail = suffix_path(product, q)
        if tail is None:
            continue
        mid = [q]
        while mid[-1] != source:
            mid.append(fwd_parent[mid[-1]])
        mid.reverse()
        candidate = [*run[:j_prev], *mid, *tail[1:]]
        try:
            visits = task_visits(product, candidate, rtasks)
        except MissingCollaborativeState:
            continue
        t_new = visits[task][1]
        eff = t_prev - ti_prev + t_new
        if is_max:
            ok = eff < ti_ct
        else:
            ok = ti_ct < eff <= t_ct
        if not ok:
            continue
        trial = _schedule_with_robot(
            schedule, robot, visits, run_weight(product, candidate)
        )
        if time_cost(trial).total < report.total:
            return candidate
    return None


@dataclass
class AdjustResult:
    runs: dict[int, list[int]]
    schedule: Schedule
    report: TimeCostReport
    transcript: list[TimingMessage] = field(default_factory=list)
    log: list[dict] = field(default_factory=list)
    passes: int = 0


def adjust_plans(
    products: Mapping[int, ProductAutomaton],
    runs: Mapping[int, Sequence[int]],
    schedule: Schedule,
    seed: int | None = None,
    rng: random.Random | None = None,
) -> AdjustResult:
    """Iterate adjustment passes until one completes with no accepted change.

    Every accepted candidate strictly decreases the total, which bounds runs
    and guarantees termination.  The timing messages posted per element are
    recorded verbatim; selection of the latest and earliest robot uses only
    those posted effective arrivals.
    """
    if rng is None:
        rng = random.Random(seed)
    ctx = schedule.ctx
    current: dict[int, list[int]] = {i: list(runs[i]) for i in ctx.robots}
    result = AdjustResult(runs=current, schedule=schedule, report=time_cost(schedule))
    while True:
        result.passes += 1
        count = 0
        for element in ctx.elements:
            report = time_cost(result.schedule)
            crew = sorted(ctx.participants[element.key])
            posted = {}
            for i in crew:
                eff = report.effective[(i, element.key)]
                posted[i] = eff
                result.transcript.append(
                    TimingMessage(sender=i, task=element.key, time=eff)
                )
            improved = False
            for mode in ("latest", "earliest"):
                if mode == "latest":
                    chosen = max(crew, key=lambda i: (posted[i], -i))
                else:
                    chosen = min(crew, key=lambda i: (posted[i], i))
                task = next(
                    t
                    for t in ctx.robot_tasks[chosen]
                    if ctx.element_of[t.kl] == element.key
                )
                candidate = opt_time(
                    products[chosen],
                    chosen,
                    task,
                    result.runs[chosen],
                    mode == "latest",
                    result.schedule,
                    report,
                    rng,
                )
                entry = {
                    "pass": result.passes,
                    "task": element.label,
                    "robot": chosen,
                    "mode": mode,
                    "accepted": candidate is not None,
                    "T_colla_before": report.total,
                }
                if candidate is not None:
                    result.runs[chosen] = candidate
                    result.schedule = schedule_from_runs(
                        ctx, products, result.runs
                    )
                    entry["T_colla_after"] = time_cost(result.schedule).total
                    result.log.append(entry)
                    count += 1
                    improved = True
                else:
                    entry["T_colla_after"] = report.total
                    result.log.append(entry)
                if improved:
                    break
        if count == 0:
            break
    result.report = time_cost(result.schedule)
    return result
