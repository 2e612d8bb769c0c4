"""Course catalog: CSV import, prerequisite graph, per-term section index.

Import collects *every* problem it finds (format, reference, duplicate,
cycle) instead of stopping at the first, so staff can fix a file in one
pass. A catalog that imports cleanly is guaranteed acyclic and fully
resolvable.
"""

from __future__ import annotations

import csv
import io
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .domain import Course, DomainError, Section, parse_meeting

COURSES_HEADER = ["code", "title", "credits", "prereqs"]
SECTIONS_HEADER = ["section_id", "course_code", "class_label", "term_code",
                   "capacity", "lecturer", "meetings"]

# Issue kinds reported by import/validate.
PARSE_ERROR = "PARSE_ERROR"
UNKNOWN_PREREQ = "UNKNOWN_PREREQ"
PREREQ_CYCLE = "PREREQ_CYCLE"
DUPLICATE_CODE = "DUPLICATE_CODE"
UNKNOWN_COURSE = "UNKNOWN_COURSE"


class UnknownCourseError(LookupError):
    def __init__(self, code: str):
        self.code = code
        super().__init__(f"unknown course: {code}")


class UnknownTermError(LookupError):
    def __init__(self, term_code: str):
        self.term_code = term_code
        super().__init__(f"unknown term: {term_code}")


@dataclass(frozen=True)
class ImportIssue:
    kind: str
    detail: str
    line: Optional[int] = None
    subject: str = ""

    def __str__(self) -> str:
        where = f" (line {self.line})" if self.line is not None else ""
        return f"{self.kind}{where}: {self.detail}"


@dataclass(frozen=True)
class Catalog:
    courses: Mapping[str, Course] = field(default_factory=dict)
    sections: Mapping[str, Section] = field(default_factory=dict)
    by_term: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def course_of(self, section_id: str) -> Course:
        """Resolve a section to its course; KeyError on unknown section."""
        return self.courses[self.sections[section_id].course_code]


EMPTY_CATALOG = Catalog()


# ---------------------------------------------------------------- import

def import_catalog(
    courses_src: str | io.TextIOBase,
    sections_src: str | io.TextIOBase = "",
) -> tuple[Optional[Catalog], list[ImportIssue]]:
    """Parse and validate the two catalog files.

    Returns (catalog, []) on success or (None, issues) with the complete
    issue list. Empty input yields an empty catalog.
    """
    issues: list[ImportIssue] = []
    courses = _parse_courses(_as_text(courses_src), issues)
    sections = _parse_sections(_as_text(sections_src), courses, issues)

    prereq_map = {c.code: set(c.prerequisites) for c in courses.values()}
    for course in courses.values():
        for pre in sorted(course.prerequisites):
            if pre not in courses:
                issues.append(ImportIssue(UNKNOWN_PREREQ, f"course {course.code} requires unknown course {pre}", subject=pre))
    for cycle in detect_cycles(prereq_map):
        issues.append(ImportIssue(PREREQ_CYCLE, "prerequisite cycle: " + " -> ".join(cycle), subject=cycle[0]))

    if issues:
        return None, issues

    by_term: dict[str, list[str]] = {}
    for sec in sections.values():
        by_term.setdefault(sec.term_code, []).append(sec.section_id)
    index = {term: tuple(sorted(ids)) for term, ids in by_term.items()}
    return Catalog(courses=courses, sections=sections, by_term=index), []


def _as_text(src) -> str:
    if hasattr(src, "read"):
        return src.read()
    return src or ""


def _rows(text: str, header: list[str], issues: list[ImportIssue]) -> Iterable[tuple[int, list[str]]]:
    """Yield (line_no, row) for data rows; header row is required and checked."""
    if not text.strip():
        return
    reader = csv.reader(io.StringIO(text))
    try:
        first = next(reader)
    except StopIteration:
        return
    if [c.strip().lower() for c in first] != header:
        issues.append(ImportIssue(PARSE_ERROR, f"expected header {','.join(header)!r}", line=1))
        return
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        yield reader.line_num, row


def _parse_courses(text: str, issues: list[ImportIssue]) -> dict[str, Course]:
    courses: dict[str, Course] = {}
    for line_no, row in _rows(text, COURSES_HEADER, issues):
        if len(row) != len(COURSES_HEADER):
            issues.append(ImportIssue(PARSE_ERROR, f"expected {len(COURSES_HEADER)} fields, got {len(row)}", line=line_no))
            continue
        code, title, credits_raw, prereqs_raw = (c.strip() for c in row)
        try:
            credits = int(credits_raw)
        except ValueError:
            issues.append(ImportIssue(PARSE_ERROR, f"credits must be an integer, got {credits_raw!r}", line=line_no, subject=code))
            continue
        prereqs = frozenset(p.strip() for p in prereqs_raw.split(";") if p.strip())
        if code in courses:
            issues.append(ImportIssue(DUPLICATE_CODE, f"duplicate course code {code}", line=line_no, subject=code))
            continue
        if code and code in prereqs:
            issues.append(ImportIssue(PREREQ_CYCLE, f"prerequisite cycle: {code} -> {code}", line=line_no, subject=code))
            continue
        try:
            courses[code] = Course(code=code, title=title, credits=credits, prerequisites=prereqs)
        except DomainError as exc:
            issues.append(ImportIssue(PARSE_ERROR, str(exc), line=line_no, subject=code))
    return courses


def _parse_sections(text: str, courses: Mapping[str, Course], issues: list[ImportIssue]) -> dict[str, Section]:
    sections: dict[str, Section] = {}
    for line_no, row in _rows(text, SECTIONS_HEADER, issues):
        if len(row) != len(SECTIONS_HEADER):
            issues.append(ImportIssue(PARSE_ERROR, f"expected {len(SECTIONS_HEADER)} fields, got {len(row)}", line=line_no))
            continue
        sid, course_code, label, term_code, cap_raw, lecturer, meetings_raw = (c.strip() for c in row)
        try:
            capacity = int(cap_raw)
        except ValueError:
            issues.append(ImportIssue(PARSE_ERROR, f"capacity must be an integer, got {cap_raw!r}", line=line_no, subject=sid))
            continue
        if sid in sections:
            issues.append(ImportIssue(DUPLICATE_CODE, f"duplicate section_id {sid}", line=line_no, subject=sid))
            continue
        if course_code not in courses:
            issues.append(ImportIssue(UNKNOWN_COURSE, f"section {sid} references unknown course {course_code}", line=line_no, subject=course_code))
            continue
        try:
            meetings = tuple(parse_meeting(tok) for tok in meetings_raw.split(";") if tok.strip())
            sections[sid] = Section(
                section_id=sid, course_code=course_code, class_label=label,
                term_code=term_code, capacity=capacity, meetings=meetings, lecturer=lecturer,
            )
        except DomainError as exc:
            issues.append(ImportIssue(PARSE_ERROR, str(exc), line=line_no, subject=sid))
    return sections


# ---------------------------------------------------------------- graph queries

def prereq_closure(catalog: Catalog, code: str) -> frozenset[str]:
    """Everything reachable from `code` along prerequisite edges, `code` excluded."""
    if code not in catalog.courses:
        raise UnknownCourseError(code)
    seen: set[str] = set()
    queue = deque(catalog.courses[code].prerequisites)
    while queue:
        current = queue.popleft()
        if current in seen:
            continue
        seen.add(current)
        course = catalog.courses.get(current)
        if course is not None:
            queue.extend(course.prerequisites)
    seen.discard(code)
    return frozenset(seen)


def detect_cycles(prereq_map: Mapping[str, set[str] | frozenset[str]]) -> list[list[str]]:
    """Report every cycle in a draft prerequisite relation.

    Each cycle is the sorted member list of one strongly connected
    component that contains a cycle (size > 1, or a self-loop). Returns
    [] iff the relation admits a topological order. Edges to codes
    missing from the map are ignored; they are reference errors, not
    cycles.
    """
    nodes = list(prereq_map)
    edges = {n: [p for p in sorted(prereq_map[n]) if p in prereq_map] for n in nodes}

    # Tarjan's SCC, iterative to survive deep chains.
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    counter = 0
    sccs: list[list[str]] = []

    for root in nodes:
        if root in index:
            continue
        work: list[tuple[str, int]] = [(root, 0)]
        while work:
            node, edge_i = work[-1]
            if edge_i == 0:
                index[node] = low[node] = counter
                counter += 1
                stack.append(node)
                on_stack.add(node)
            advanced = False
            for i in range(edge_i, len(edges[node])):
                nxt = edges[node][i]
                if nxt not in index:
                    work[-1] = (node, i + 1)
                    work.append((nxt, 0))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if low[node] == index[node]:
                component = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.append(member)
                    if member == node:
                        break
                sccs.append(component)
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])

    cycles = [
        sorted(scc)
        for scc in sccs
        if len(scc) > 1 or scc[0] in edges[scc[0]]
    ]
    cycles.sort()
    return cycles


def sections_of(catalog: Catalog, term_code: str, course_code: str) -> list[Section]:
    """All sections of a course in a term, any state, by class_label order."""
    if term_code not in catalog.by_term:
        raise UnknownTermError(term_code)
    if course_code not in catalog.courses:
        raise UnknownCourseError(course_code)
    found = [
        catalog.sections[sid]
        for sid in catalog.by_term[term_code]
        if catalog.sections[sid].course_code == course_code
    ]
    found.sort(key=lambda s: s.class_label)
    return found
