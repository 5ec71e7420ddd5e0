"""Command-line interface: plan, gen, verify, oracle.

Exit codes: 0 success, 2 infeasible specification or allocation, 3 budget
exhausted without a solution, 4 scenario or plan file problems.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .errors import (
    AllocationInfeasible,
    PlanInfeasible,
    ScenarioError,
    SpecInfeasible,
)
from .oracle import brute_force_joint_plan
from .pipeline import run_pipeline
from .render import ascii_map, svg_render
from .scenario import generate_scenario, load_scenario, save_scenario
from .simulate import verify_solution

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_BUDGET = 3
EXIT_IO = 4


def _cmd_plan(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        solution = run_pipeline(
            scenario,
            seed=args.seed,
            budget_seconds=args.budget,
            no_adjust=args.no_adjust,
        )
    except (SpecInfeasible, AllocationInfeasible) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except PlanInfeasible as exc:
        if "budget" in str(exc):
            print(f"budget exhausted: {exc}", file=sys.stderr)
            return EXIT_BUDGET
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    doc = solution.to_json_dict()
    stats = solution.stats
    print(
        f"T_colla={solution.t_colla:g} T_colla_init={solution.t_colla_init:g} "
        f"t_cal={stats['t_cal']:.3f}s assignments: "
        f"{stats['assignments_evaluated']} evaluated, "
        f"{stats['assignments_filtered']} filtered"
    )
    for robot, timeline in sorted(doc["plans"].items(), key=lambda kv: int(kv[0])):
        tasks = [e["performs"] for e in timeline if e["performs"]]
        print(
            f"  robot {robot}: {len(timeline)} steps, "
            f"total {solution.chosen.report.per_robot[int(robot)]:g}, "
            f"performs {tasks or 'nothing'}"
        )
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        print(f"plan written to {args.out}")
    if args.render:
        Path(args.render).write_text(svg_render(scenario, doc), encoding="utf-8")
        print(f"render written to {args.render}")
    if args.ascii:
        print(ascii_map(scenario, doc))
    if args.csv:
        _append_csv(args.csv, scenario, solution)
        print(f"stats appended to {args.csv}")
    return EXIT_OK


def _append_csv(path: str, scenario, solution) -> None:
    fields = [
        "env_size",
        "N",
        "T_colla",
        "T_colla_init",
        "t_cal",
        "t_cal_no_adjust",
        "assignments_evaluated",
        "assignments_filtered",
    ]
    exists = Path(path).exists()
    with open(path, "a", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=fields)
        if not exists:
            writer.writeheader()
        writer.writerow(
            {
                "env_size": f"{scenario.width}x{scenario.height}",
                "N": len(scenario.robots),
                "T_colla": solution.t_colla,
                "T_colla_init": solution.t_colla_init,
                "t_cal": solution.stats["t_cal"],
                "t_cal_no_adjust": solution.stats.get("t_cal_no_adjust", ""),
                "assignments_evaluated": solution.stats["assignments_evaluated"],
                "assignments_filtered": solution.stats["assignments_filtered"],
            }
        )


def _cmd_gen(args) -> int:
    try:
        width, height = (int(v) for v in args.grid.lower().split("x"))
    except ValueError:
        print("grid must look like 10x10", file=sys.stderr)
        return EXIT_IO
    try:
        scenario = generate_scenario(
            seed=args.seed,
            grid_size=(width, height),
            n_robots=args.robots,
            n_indiv_per_robot=args.indiv,
            n_collab=args.collab,
            cap_count=args.caps,
        )
    except ScenarioError as exc:
        print(f"generation failed: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    save_scenario(scenario, args.out)
    print(f"scenario written to {args.out}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
        plan_doc = json.loads(Path(args.plan).read_text(encoding="utf-8"))
    except (ScenarioError, OSError, json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_IO
    report = verify_solution(scenario, plan_doc)
    for name, check in report["checks"].items():
        print(f"{'PASS' if check['passed'] else 'FAIL'} {name}")
    return EXIT_OK if report["passed"] else EXIT_INFEASIBLE


def _cmd_oracle(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        best = brute_force_joint_plan(scenario)
    except (PlanInfeasible, SpecInfeasible) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    print(f"optimal T_colla={best:g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coplan",
        description="Plan collaborative and individual LTLf tasks for a robot team.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="solve a scenario")
    plan.add_argument("--scenario", required=True)
    plan.add_argument("--seed", type=int, default=None)
    plan.add_argument("--budget", type=float, default=None, metavar="SECS")
    plan.add_argument("--no-adjust", action="store_true")
    plan.add_argument("--out", default=None, metavar="plan.json")
    plan.add_argument("--render", default=None, metavar="out.svg")
    plan.add_argument("--ascii", action="store_true")
    plan.add_argument("--csv", default=None, metavar="results.csv")
    plan.set_defaults(func=_cmd_plan)

    gen = sub.add_parser("gen", help="generate a random scenario")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--grid", required=True, metavar="WxH")
    gen.add_argument("--robots", type=int, required=True, metavar="N")
    gen.add_argument("--collab", type=int, required=True, metavar="K")
    gen.add_argument("--caps", type=int, required=True, metavar="C")
    gen.add_argument("--indiv", type=int, default=2)
    gen.add_argument("--out", required=True, metavar="F")
    gen.set_defaults(func=_cmd_gen)

    verify = sub.add_parser("verify", help="verify a saved plan")
    verify.add_argument("--scenario", required=True)
    verify.add_argument("--plan", required=True)
    verify.set_defaults(func=_cmd_verify)

    oracle = sub.add_parser("oracle", help="brute-force joint optimum (N <= 2)")
    oracle.add_argument("--scenario", required=True)
    oracle.set_defaults(func=_cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
