"""Exception types shared across the toolkit."""


class ParseError(ValueError):
    """Formula text does not match the grammar."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class ResourceLimit(RuntimeError):
    """A configured size bound (automaton states, enumeration width) was exceeded."""


class SpecInfeasible(RuntimeError):
    """No accepting behaviour remains for the collaborative specification."""


class AllocationInfeasible(RuntimeError):
    """The task allocation constraints admit no assignment."""


class PlanInfeasible(RuntimeError):
    """A robot's product automaton has no accepting run."""


class MissingCollaborativeState(RuntimeError):
    """A run never performs a task it was assigned; indicates a planner bug."""


class ScenarioError(ValueError):
    """Base for scenario file problems."""


class ScenarioFormatError(ScenarioError):
    """Structural problem in a scenario document; carries a JSON-ish path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class ScenarioInvariantError(ScenarioError):
    """The document parses but violates a scenario invariant."""


class InternalCheckFailed(RuntimeError):
    """An end-to-end verification gate failed on a produced solution."""
