"""Shared oracles and builders used across the test modules."""

from __future__ import annotations

import itertools
import random
from typing import Iterable, Iterator, Sequence

from coplan.ltlf import (
    Always,
    And,
    Atom,
    Eventually,
    FALSE,
    Formula,
    Implies,
    Not,
    Or,
    TRUE,
    Until,
)


def all_traces(names: Sequence[str], max_len: int) -> Iterator[list[frozenset[str]]]:
    """Every trace up to max_len over the power set of the given atoms."""
    symbols = [frozenset(s) for r in range(len(names) + 1)
               for s in itertools.combinations(sorted(names), r)]
    for length in range(max_len + 1):
        for combo in itertools.product(symbols, repeat=length):
            yield list(combo)


def random_formula(rng: random.Random, names: Sequence[str], depth: int) -> Formula:
    """Random formula over the public constructors, for differential tests."""
    if depth == 0:
        return rng.choice([TRUE, FALSE] + [Atom(n) for n in names])
    kind = rng.choice(["atom", "not", "and", "or", "implies", "until", "ev", "alw"])
    if kind == "atom":
        return random_formula(rng, names, 0)
    if kind in ("not", "ev", "alw"):
        inner = random_formula(rng, names, depth - 1)
        return {"not": Not, "ev": Eventually, "alw": Always}[kind](inner)
    left = random_formula(rng, names, depth - 1)
    right = random_formula(rng, names, depth - 1)
    return {"and": And, "or": Or, "implies": Implies, "until": Until}[kind](left, right)


def can_match(robots_by_cap: dict[str, int], demands: Iterable[dict[str, int]]) -> bool:
    """Brute-force check that single-capability robots can staff all demands
    simultaneously, assigning each robot to at most one task."""
    need: dict[str, int] = {}
    for req in demands:
        for cap, count in req.items():
            need[cap] = need.get(cap, 0) + count
    return all(robots_by_cap.get(cap, 0) >= count for cap, count in need.items())
