"""Discrete-event execution of a solved scenario and independent verification.

Robots walk their plans at edge cost; a robot reaching a collaborative state
idles there (motion self-loops) until the task's execution time, which is the
latest participant's effective arrival.  Verification re-derives everything
it checks from the scenario document and the exported solution data: each
robot's trace against its own specification, the completion sequence against
the pruned collaborative automaton and the raw formula, synchronization
timestamps, and ordering constraints.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

from .errors import InternalCheckFailed
from .ltlf import eval_trace, nfa_accepts, to_nfa
from .mission import prune_nfa
from .scenario import Scenario

if TYPE_CHECKING:
    from .pipeline import Solution


def simulate_execution(solution: "Solution") -> dict:
    """Produce per-robot timelines (arrival times including waits) and the
    global completion record; consistency with the time-cost report is
    asserted, not assumed."""
    ctx = solution.chosen.schedule.ctx
    report = solution.chosen.report
    products = solution.chosen.products
    runs = solution.chosen.runs
    schedule = solution.chosen.schedule

    completions = []
    for element in ctx.elements:
        completions.append(
            {
                "time": report.exec_times[element.key],
                "element": list(element.key),
                "tasks": [t.name for t in element.tasks],
                "robots": sorted(ctx.participants[element.key]),
            }
        )
    completions.sort(key=lambda c: (c["time"], c["element"]))

    plans: dict[str, list[dict]] = {}
    for robot in ctx.robots:
        product = products[robot]
        run = runs[robot]
        perform_at: dict[int, list[str]] = {}
        wait_until: dict[int, float] = {}
        arrival_key: dict[int, tuple[int, int]] = {}
        for task in ctx.robot_tasks[robot]:
            j = schedule.visit[(robot, task.kl)]
            key = ctx.element_of[task.kl]
            perform_at.setdefault(j, []).append(task.name)
            arrival_key.setdefault(j, key)
            wait_until[j] = max(
                wait_until.get(j, 0.0), report.exec_times[key]
            )
        timeline = []
        clock = 0.0
        previous = None
        for j, node in enumerate(run):
            region = product.region(node)
            if previous is not None:
                clock += product.wts.weights[(previous, region)]
            if j in wait_until:
                if clock > wait_until[j] + 1e-9:
                    raise InternalCheckFailed(
                        f"robot {robot} reaches step {j} at {clock}, after "
                        f"its collaboration fired at {wait_until[j]}"
                    )
                expected = report.effective[(robot, arrival_key[j])]
                if abs(clock - expected) > 1e-9:
                    raise InternalCheckFailed(
                        f"robot {robot} simulated arrival {clock} disagrees "
                        f"with scheduled effective arrival {expected}"
                    )
            timeline.append(
                {
                    "region": list(region) if isinstance(region, tuple) else region,
                    "cumulative_time": clock,
                    "performs": "+".join(perform_at[j]) if j in perform_at else None,
                }
            )
            if j in wait_until:
                clock = wait_until[j]
            previous = region
        total = clock
        if abs(total - report.per_robot[robot]) > 1e-9:
            raise InternalCheckFailed(
                f"robot {robot} simulated busy+wait time {total} disagrees "
                f"with reported {report.per_robot[robot]}"
            )
        plans[str(robot)] = timeline
    return {"completions": completions, "plans": plans}


def verify_solution(scenario: Scenario, solution_data: dict) -> dict:
    """Four independent checks over exported solution data.

    (a) every robot's executed trace satisfies its individual specification;
    (b) the time-ordered completion sets are accepted by the pruned
        collaborative automaton and satisfy the collaborative formula;
    (c) synchronized tasks share one completion timestamp;
    (d) ordering constraints hold along completion times.
    """
    team = scenario.team()
    catalog = scenario.catalog()
    checks: dict[str, dict] = {}

    # (a) individual specifications over executed traces
    failures = []
    for robot in sorted(r.id for r in scenario.robots):
        formula = scenario.individual_formula(robot)
        own_cells = {
            tuple(t.cell): t.name
            for t in scenario.individual_tasks.get(robot, ())
        }
        timeline = solution_data["plans"].get(str(robot), [])
        trace = [
            frozenset(
                {own_cells[tuple(entry["region"])]}
                if tuple(entry["region"]) in own_cells
                else set()
            )
            for entry in timeline
        ]
        if not eval_trace(formula, trace):
            failures.append(robot)
    checks["individual_specs"] = {
        "passed": not failures,
        "failing_robots": failures,
    }

    # (b) global specification over completion events
    completions = sorted(
        solution_data.get("completions", []),
        key=lambda c: (c["time"], tuple(c["element"])),
    )
    trace = [frozenset(c["tasks"]) for c in completions]
    global_formula = scenario.global_formula()
    pruned = prune_nfa(to_nfa(global_formula), catalog, team)
    accepted = nfa_accepts(pruned, trace) and eval_trace(global_formula, trace)
    if not accepted and len({c["time"] for c in completions}) < len(completions):
        merged: list[frozenset] = []
        seen_times: list[float] = []
        for c in completions:
            if seen_times and abs(c["time"] - seen_times[-1]) < 1e-9:
                merged[-1] = merged[-1] | frozenset(c["tasks"])
            else:
                merged.append(frozenset(c["tasks"]))
                seen_times.append(c["time"])
        accepted = nfa_accepts(pruned, merged) and eval_trace(
            global_formula, merged
        )
    checks["global_spec"] = {"passed": accepted, "trace": [sorted(s) for s in trace]}

    # (c) and (d) from the declared sequence constraints; lookups go through
    # element keys because one task atom may occur at several positions
    by_element: dict[tuple, float] = {
        tuple(c["element"]): c["time"] for c in completions
    }
    by_name: dict[str, float] = {}
    for c in completions:
        for name in c["tasks"]:
            by_name.setdefault(name, c["time"])
    sync_bad = []
    order_bad = []
    for con in solution_data.get("sequence", {}).get("constraints", []):
        if "first_element" in con:
            first = by_element.get(tuple(con["first_element"]))
            second = by_element.get(tuple(con["second_element"]))
        else:
            first = by_name.get(con["first"])
            second = by_name.get(con["second"])
        if first is None or second is None:
            (sync_bad if con["kind"] == "sync" else order_bad).append(
                (con["first"], con["second"], "missing completion")
            )
            continue
        if con["kind"] == "sync" and abs(first - second) > 1e-9:
            sync_bad.append((con["first"], con["second"], first, second))
        if con["kind"] == "order" and first > second + 1e-9:
            order_bad.append((con["first"], con["second"], first, second))
    checks["synchronization"] = {"passed": not sync_bad, "violations": sync_bad}
    checks["ordering"] = {"passed": not order_bad, "violations": order_bad}

    return {
        "passed": all(c["passed"] for c in checks.values()),
        "checks": checks,
    }
