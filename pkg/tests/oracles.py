"""Independent brute-force oracles the engine is checked against.

These deliberately share no code with the implementation: overlap is
decided on a minute grid, reachability by repeated set expansion, cycle
membership by exhaustive simple-path enumeration, and enrollment by
recounting plan lines.
"""

from __future__ import annotations

from krs.domain import MeetingTime


def minute_grid_overlap(a: MeetingTime, b: MeetingTime) -> bool:
    """Mark every occupied minute of the week and intersect the sets."""
    grid_a = {(a.day.value, minute) for minute in range(a.start, a.end)}
    grid_b = {(b.day.value, minute) for minute in range(b.start, b.end)}
    return bool(grid_a & grid_b)


def minute_grid_pairs(candidate, active_sections):
    """All clashing (section_id, candidate_meeting, active_meeting) triples."""
    hits = set()
    for section in active_sections:
        for cand in candidate.meetings:
            for held in section.meetings:
                if minute_grid_overlap(cand, held):
                    hits.add((section.section_id, cand, held))
    return hits


def closure_by_expansion(prereqs: dict[str, frozenset[str] | set[str]], code: str) -> set[str]:
    """Transitive closure by repeated expansion until a fixpoint."""
    reached = set(prereqs.get(code, set()))
    while True:
        grown = set(reached)
        for node in reached:
            grown |= set(prereqs.get(node, set()))
        if grown == reached:
            break
        reached = grown
    reached.discard(code)
    return reached


def nodes_on_cycles(prereqs: dict[str, set[str]]) -> set[str]:
    """Exhaustive simple-path enumeration: node is cyclic iff a path
    returns to it. Only usable for small graphs."""
    nodes = set(prereqs)
    edges = {n: [m for m in prereqs[n] if m in nodes] for n in nodes}
    cyclic = set()
    for start in nodes:
        stack = [(start, frozenset())]
        while stack:
            node, visited = stack.pop()
            for nxt in edges[node]:
                if nxt == start:
                    cyclic.add(start)
                    stack = []
                    break
                if nxt not in visited:
                    stack.append((nxt, visited | {nxt}))
        # loop again from the next start
    return cyclic


def recount_enrollment(plans, term_code: str) -> dict[str, int]:
    """Count active lines per section straight off the plan store."""
    counts: dict[str, int] = {}
    for plan in plans:
        if plan.term_code != term_code:
            continue
        for line in plan.lines:
            if line.status.value in ("Planned", "Added"):
                counts[line.section_id] = counts.get(line.section_id, 0) + 1
    return counts
