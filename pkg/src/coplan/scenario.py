"""Scenario documents: schema, validation, canonical JSON, random generation.

A scenario is a 4-connected grid with blocked cells, a team of
single-capability robots, per-robot individual tasks, a shared collaborative
task catalog, and LTLf specifications (one private formula per robot plus the
global collaborative formula).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .errors import (
    ParseError,
    ScenarioFormatError,
    ScenarioInvariantError,
)
from .ltlf import Formula, atoms, parse_ltlf, pretty
from .mission import TaskSpec, TeamModel

Cell = tuple[int, int]


@dataclass(frozen=True)
class Robot:
    id: int
    capability: str
    start: Cell


@dataclass(frozen=True)
class IndividualTask:
    name: str
    cell: Cell


@dataclass
class Scenario:
    width: int
    height: int
    blocked: frozenset[Cell]
    robots: tuple[Robot, ...]
    individual_tasks: Mapping[int, tuple[IndividualTask, ...]]
    collaborative_tasks: tuple[TaskSpec, ...]
    individual_specs: Mapping[int, str]
    global_spec: str
    options: dict = field(default_factory=dict)

    # --- derived views ---

    def team(self) -> TeamModel:
        return TeamModel({r.id: r.capability for r in self.robots})

    def catalog(self) -> dict[str, TaskSpec]:
        return {t.name: t for t in self.collaborative_tasks}

    def individual_formula(self, robot: int) -> Formula:
        return parse_ltlf(self.individual_specs.get(robot, "true"))

    def global_formula(self) -> Formula:
        return parse_ltlf(self.global_spec)

    def cells(self) -> list[Cell]:
        return [
            (x, y)
            for x in range(self.width)
            for y in range(self.height)
            if (x, y) not in self.blocked
        ]

    def neighbors(self, cell: Cell) -> list[Cell]:
        x, y = cell
        out = []
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nxt = (x + dx, y + dy)
            if (
                0 <= nxt[0] < self.width
                and 0 <= nxt[1] < self.height
                and nxt not in self.blocked
            ):
                out.append(nxt)
        return out

    def to_json_dict(self) -> dict:
        return {
            "grid": {
                "width": self.width,
                "height": self.height,
                "blocked": [list(c) for c in sorted(self.blocked)],
            },
            "robots": [
                {"id": r.id, "capability": r.capability, "start": list(r.start)}
                for r in self.robots
            ],
            "individual_tasks": {
                str(robot): [
                    {"name": t.name, "cell": list(t.cell)} for t in tasks
                ]
                for robot, tasks in sorted(self.individual_tasks.items())
            },
            "collaborative_tasks": [
                {
                    "name": t.name,
                    "cell": list(t.region),
                    "requires": dict(sorted(t.requires.items())),
                }
                for t in self.collaborative_tasks
            ],
            "specs": {
                "individual": {
                    str(robot): text
                    for robot, text in sorted(self.individual_specs.items())
                },
                "global": self.global_spec,
            },
            "options": dict(sorted(self.options.items())),
        }


# --- loading -----------------------------------------------------------------


def _expect(doc: dict, key: str, kind, path: str):
    if key not in doc:
        raise ScenarioFormatError(f"{path}.{key}", "missing field")
    value = doc[key]
    if kind is not None and not isinstance(value, kind):
        raise ScenarioFormatError(
            f"{path}.{key}", f"expected {kind.__name__}, got {type(value).__name__}"
        )
    return value


def _cell(value, path: str) -> Cell:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, int) for v in value)
    ):
        raise ScenarioFormatError(path, "expected a two-integer cell [x, y]")
    return (value[0], value[1])


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioFormatError("$", "scenario document must be an object")
    grid = _expect(doc, "grid", dict, "$")
    width = _expect(grid, "width", int, "$.grid")
    height = _expect(grid, "height", int, "$.grid")
    if width < 1 or height < 1:
        raise ScenarioFormatError("$.grid", "grid must be at least 1x1")
    blocked = frozenset(
        _cell(c, f"$.grid.blocked[{i}]")
        for i, c in enumerate(grid.get("blocked", []))
    )
    robots = []
    for i, entry in enumerate(_expect(doc, "robots", list, "$")):
        path = f"$.robots[{i}]"
        robots.append(
            Robot(
                id=_expect(entry, "id", int, path),
                capability=_expect(entry, "capability", str, path),
                start=_cell(_expect(entry, "start", None, path), f"{path}.start"),
            )
        )
    individual: dict[int, tuple[IndividualTask, ...]] = {}
    for key, entries in _expect(doc, "individual_tasks", dict, "$").items():
        path = f"$.individual_tasks.{key}"
        try:
            robot = int(key)
        except ValueError:
            raise ScenarioFormatError(path, "robot key must be an integer")
        tasks = []
        for i, entry in enumerate(entries):
            tpath = f"{path}[{i}]"
            tasks.append(
                IndividualTask(
                    name=_expect(entry, "name", str, tpath),
                    cell=_cell(_expect(entry, "cell", None, tpath), f"{tpath}.cell"),
                )
            )
        individual[robot] = tuple(tasks)
    collaborative = []
    for i, entry in enumerate(_expect(doc, "collaborative_tasks", list, "$")):
        path = f"$.collaborative_tasks[{i}]"
        requires = _expect(entry, "requires", dict, path)
        if not requires:
            raise ScenarioFormatError(f"{path}.requires", "must not be empty")
        for cap, count in requires.items():
            if not isinstance(count, int) or count < 1:
                raise ScenarioFormatError(
                    f"{path}.requires.{cap}", "count must be a positive integer"
                )
        collaborative.append(
            TaskSpec(
                name=_expect(entry, "name", str, path),
                region=_cell(_expect(entry, "cell", None, path), f"{path}.cell"),
                requires=requires,
            )
        )
    specs = _expect(doc, "specs", dict, "$")
    individual_specs = {}
    for key, text in _expect(specs, "individual", dict, "$.specs").items():
        if not isinstance(text, str):
            raise ScenarioFormatError(f"$.specs.individual.{key}", "expected string")
        individual_specs[int(key)] = text
    global_spec = _expect(specs, "global", str, "$.specs")
    options = doc.get("options", {})
    if not isinstance(options, dict):
        raise ScenarioFormatError("$.options", "expected object")
    scenario = Scenario(
        width=width,
        height=height,
        blocked=blocked,
        robots=tuple(robots),
        individual_tasks=individual,
        collaborative_tasks=tuple(collaborative),
        individual_specs=individual_specs,
        global_spec=global_spec,
        options=dict(options),
    )
    validate_scenario(scenario)
    return scenario


def validate_scenario(s: Scenario) -> None:
    ids = [r.id for r in s.robots]
    if len(set(ids)) != len(ids):
        raise ScenarioInvariantError("duplicate robot ids")
    if not s.robots:
        raise ScenarioInvariantError("scenario needs at least one robot")

    def in_grid(cell: Cell) -> bool:
        return 0 <= cell[0] < s.width and 0 <= cell[1] < s.height

    for r in s.robots:
        if not in_grid(r.start) or r.start in s.blocked:
            raise ScenarioInvariantError(
                f"robot {r.id} starts on a blocked or out-of-grid cell {r.start}"
            )
    names: set[str] = set()
    for robot, tasks in s.individual_tasks.items():
        if robot not in set(ids):
            raise ScenarioInvariantError(f"individual tasks for unknown robot {robot}")
        for t in tasks:
            if not in_grid(t.cell) or t.cell in s.blocked:
                raise ScenarioInvariantError(
                    f"task {t.name} sits on a blocked or out-of-grid cell {t.cell}"
                )
            if t.name in names:
                raise ScenarioInvariantError(f"task name {t.name} is not unique")
            names.add(t.name)
    for t in s.collaborative_tasks:
        if not in_grid(t.region) or t.region in s.blocked:
            raise ScenarioInvariantError(
                f"task {t.name} sits on a blocked or out-of-grid cell {t.region}"
            )
        if t.name in names:
            raise ScenarioInvariantError(f"task name {t.name} is not unique")
        names.add(t.name)
    collab_names = {t.name for t in s.collaborative_tasks}
    team_caps = {r.capability for r in s.robots}
    for t in s.collaborative_tasks:
        for cap in t.requires:
            if cap not in team_caps:
                raise ScenarioInvariantError(
                    f"task {t.name} requires capability {cap} no robot has"
                )
    for robot in s.individual_specs:
        if robot not in set(ids):
            raise ScenarioInvariantError(f"spec for unknown robot {robot}")
    for r in s.robots:
        own = {t.name for t in s.individual_tasks.get(r.id, ())}
        try:
            f = s.individual_formula(r.id)
        except ParseError as exc:
            raise ScenarioInvariantError(
                f"robot {r.id} individual spec does not parse: {exc}"
            )
        extra = atoms(f) - own
        if extra:
            raise ScenarioInvariantError(
                f"robot {r.id} spec mentions unknown tasks {sorted(extra)}"
            )
    try:
        g = s.global_formula()
    except ParseError as exc:
        raise ScenarioInvariantError(f"global spec does not parse: {exc}")
    extra = atoms(g) - collab_names
    if extra:
        raise ScenarioInvariantError(
            f"global spec mentions unknown tasks {sorted(extra)}"
        )
    comm_pairs = s.options.get("comm_pairs")
    if comm_pairs is not None:
        if not isinstance(comm_pairs, list) or not all(
            isinstance(p, (list, tuple))
            and len(p) == 2
            and all(isinstance(v, int) for v in p)
            for p in comm_pairs
        ):
            raise ScenarioInvariantError(
                "options.comm_pairs must be a list of [part, element] pairs"
            )


def load_scenario(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioFormatError(str(path), f"cannot read file: {exc}")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(str(path), f"invalid JSON: {exc}")
    return scenario_from_dict(doc)


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(canonical_json(scenario), encoding="utf-8")


def canonical_json(scenario: Scenario) -> str:
    return json.dumps(scenario.to_json_dict(), indent=2, sort_keys=True) + "\n"


# --- generation ----------------------------------------------------------------


def _connected(scenario: Scenario, cells: Sequence[Cell]) -> bool:
    if not cells:
        return True
    seen = {cells[0]}
    stack = [cells[0]]
    while stack:
        for nxt in scenario.neighbors(stack.pop()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return all(c in seen for c in cells)


def _spec_template(rng: random.Random, names: Sequence[str]) -> str:
    """Conjunction of eventualities plus, when possible, one until-guard and
    one nested chase."""
    clauses = [f"(F {n})" for n in names]
    if len(names) >= 2 and rng.random() < 0.8:
        guard, trigger = rng.sample(list(names), 2)
        clauses.append(f"(!{guard} U {trigger})")
    if len(names) >= 2 and rng.random() < 0.8:
        first, second = rng.sample(list(names), 2)
        clauses.append(f"(F ({first} & F {second}))")
    return " & ".join(clauses)


def _try_generate(
    rng: random.Random,
    grid_size: tuple[int, int],
    n_robots: int,
    n_indiv_per_robot: int,
    n_collab: int,
    cap_count: int,
    blocked_frac: float,
    seed: int,
) -> Scenario:
    width, height = grid_size
    all_cells = [(x, y) for x in range(width) for y in range(height)]
    n_blocked = int(len(all_cells) * blocked_frac)
    blocked = frozenset(rng.sample(all_cells, n_blocked)) if n_blocked else frozenset()
    free = [c for c in all_cells if c not in blocked]
    needed = n_robots + n_robots * n_indiv_per_robot + n_collab
    if len(free) < needed:
        raise ScenarioInvariantError(
            f"grid too small: {len(free)} free cells for {needed} placements"
        )
    spots = rng.sample(free, needed)
    caps = [f"c{j + 1}" for j in range(cap_count)]
    # every capability present at least once, remainder random
    assigned_caps = list(caps)
    assigned_caps += [rng.choice(caps) for _ in range(n_robots - cap_count)]
    rng.shuffle(assigned_caps)
    robots = tuple(
        Robot(id=i + 1, capability=assigned_caps[i], start=spots.pop())
        for i in range(n_robots)
    )
    group_size = {c: sum(1 for r in robots if r.capability == c) for c in caps}
    individual: dict[int, tuple[IndividualTask, ...]] = {}
    specs: dict[int, str] = {}
    for r in robots:
        tasks = tuple(
            IndividualTask(name=f"ts{r.id}_{j + 1}", cell=spots.pop())
            for j in range(n_indiv_per_robot)
        )
        individual[r.id] = tasks
        specs[r.id] = _spec_template(rng, [t.name for t in tasks]) if tasks else "true"
    collaborative = []
    for j in range(n_collab):
        chosen = rng.sample(caps, rng.randint(1, min(2, cap_count)))
        requires = {
            cap: rng.randint(1, min(2, group_size[cap])) for cap in chosen
        }
        collaborative.append(
            TaskSpec(name=f"ct{j + 1}", region=spots.pop(), requires=requires)
        )
    global_spec = _spec_template(rng, [t.name for t in collaborative])
    scenario = Scenario(
        width=width,
        height=height,
        blocked=blocked,
        robots=robots,
        individual_tasks=individual,
        collaborative_tasks=tuple(collaborative),
        individual_specs=specs,
        global_spec=global_spec,
        options={"seed": seed},
    )
    validate_scenario(scenario)
    anchors = [r.start for r in robots]
    anchors += [t.cell for tasks in individual.values() for t in tasks]
    anchors += [t.region for t in collaborative]
    if not _connected(scenario, anchors):
        raise ScenarioInvariantError("anchor cells are not mutually reachable")
    return scenario


def generate_scenario(
    seed: int,
    grid_size: tuple[int, int],
    n_robots: int,
    n_indiv_per_robot: int = 2,
    n_collab: int = 3,
    cap_count: int = 2,
    blocked_frac: float = 0.1,
    max_attempts: int = 200,
) -> Scenario:
    """Deterministic-in-seed random scenario that the planning pipeline can
    actually solve.

    Placement, capabilities, requirements, and formula templates are drawn
    from the seed; attempts that produce disconnected maps, unstaffable
    specifications, or unallocatable sequences are discarded and retried with
    a derived seed, so equal seeds always give equal scenarios.
    """
    if min(grid_size) < 1 or n_robots < 1 or n_collab < 0 or cap_count < 1:
        raise ScenarioInvariantError("generator parameters must be positive")
    if cap_count > n_robots:
        raise ScenarioInvariantError(
            "cannot cover every capability: more capabilities than robots"
        )
    from .pipeline import allocation_precheck  # cycle kept import-local

    failure: Exception | None = None
    for attempt in range(max_attempts):
        rng = random.Random(f"{seed}:{attempt}")
        try:
            scenario = _try_generate(
                rng,
                grid_size,
                n_robots,
                n_indiv_per_robot,
                n_collab,
                cap_count,
                blocked_frac,
                seed,
            )
            allocation_precheck(scenario)
            return scenario
        except Exception as exc:  # retry with the next derived seed
            failure = exc
    raise ScenarioInvariantError(
        f"no feasible scenario after {max_attempts} attempts: {failure}"
    )
