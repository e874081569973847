import logging
from collections.abc import Callable, Hashable, Iterable, Iterator, Sequence

from toposkit.config import EnumerationGuard

log = logging.getLogger(__name__)


class Conflict(Exception):
    """Raised by a propagator when an assignment cannot be extended consistently."""

    pass


Assignment = dict[Hashable, int]
Propagator = Callable[[Hashable, int, Assignment], Iterable[tuple[Hashable, int]]]


def propagating_search(
    variables: Sequence[Hashable],
    domain: Callable[[Hashable], int],
    forced: Propagator,
    guard: EnumerationGuard | None = None,
) -> Iterator[Assignment]:
    """
    Enumerate every total assignment `variable -> value in range(domain(variable))`.

    Assigning `v = x` hands `(v, x, assignment)` to `forced`, which returns the values it
    forces on other variables (or raises `Conflict`). Branching happens on the first
    unassigned variable, values ascending, so assignments come out in lexicographic order
    of the tuple of values read along `variables`.
    """
    guard = guard or EnumerationGuard()

    def assign(assignment: Assignment, var: Hashable, value: int) -> Assignment | None:
        assignment = dict(assignment)
        pending = [(var, value)]
        try:
            while pending:
                v, x = pending.pop()
                current = assignment.get(v)
                if current is not None:
                    if current != x:
                        return None
                    continue
                assignment[v] = x
                pending.extend(forced(v, x, assignment))
        except Conflict:
            return None
        return assignment

    def extend(assignment: Assignment, start: int) -> Iterator[Assignment]:
        position = start
        while position < len(variables) and variables[position] in assignment:
            position += 1
        if position == len(variables):
            yield assignment
            return
        var = variables[position]
        for value in range(domain(var)):
            guard.tick()
            extended = assign(assignment, var, value)
            if extended is not None:
                yield from extend(extended, position + 1)

    yield from extend({}, 0)
