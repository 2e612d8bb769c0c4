"""Core entities of the registration domain.

Every type here is an immutable value object validated at construction.
Mutation happens only in the store/rules layers, which replace whole
values; this keeps snapshots and concurrent readers trivially safe.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from datetime import datetime
from enum import Enum
from typing import Callable, Iterable, Optional

MINUTES_PER_DAY = 1440
DEFAULT_CREDIT_CAP = 24  # SKS


class DomainError(ValueError):
    """An entity invariant was violated at construction or transition time."""


class UnknownSectionRef(LookupError):
    """A plan line references a section the catalog cannot resolve."""

    def __init__(self, section_id: str):
        self.section_id = section_id
        super().__init__(f"unresolvable section reference: {section_id}")


class IllegalTransition(DomainError):
    """A plan line was asked to move along a forbidden status edge."""

    def __init__(self, from_status: "LineStatus", to_status: "LineStatus"):
        self.from_status = from_status
        self.to_status = to_status
        super().__init__(f"illegal line transition {from_status.value} -> {to_status.value}")


# ---------------------------------------------------------------- enums

class Day(str, Enum):
    MON = "MON"
    TUE = "TUE"
    WED = "WED"
    THU = "THU"
    FRI = "FRI"
    SAT = "SAT"
    SUN = "SUN"

    @property
    def order(self) -> int:
        return _DAY_ORDER[self]


_DAY_ORDER = {d: i for i, d in enumerate(Day)}


class SectionState(str, Enum):
    OPEN = "Open"
    CONFIRMED = "Confirmed"
    CANCELLED = "Cancelled"


class LineStatus(str, Enum):
    PLANNED = "Planned"
    ADDED = "Added"
    WITHDRAWN = "Withdrawn"
    CANCELLED = "Cancelled"


ACTIVE_STATUSES = frozenset({LineStatus.PLANNED, LineStatus.ADDED})
TERMINAL_STATUSES = frozenset({LineStatus.WITHDRAWN, LineStatus.CANCELLED})


class FinancialStatus(str, Enum):
    CLEAR = "Clear"
    HOLD = "Hold"


class CaseStatus(str, Enum):
    NONE = "None"
    HOLD = "Hold"


class ViolationCode(str, Enum):
    WINDOW_CLOSED = "WINDOW_CLOSED"
    PAYMENT_HOLD = "PAYMENT_HOLD"
    CASE_HOLD = "CASE_HOLD"
    PREREQ_UNMET = "PREREQ_UNMET"
    SCHEDULE_CONFLICT = "SCHEDULE_CONFLICT"
    SECTION_FULL = "SECTION_FULL"
    CREDIT_CAP_EXCEEDED = "CREDIT_CAP_EXCEEDED"
    DUPLICATE_COURSE = "DUPLICATE_COURSE"
    SECTION_CANCELLED = "SECTION_CANCELLED"
    UNKNOWN_SECTION = "UNKNOWN_SECTION"


# ---------------------------------------------------------------- entities

@dataclass(frozen=True, slots=True)
class Course:
    code: str
    title: str
    credits: int
    prerequisites: frozenset[str] = frozenset()

    def __post_init__(self):
        if not self.code:
            raise DomainError("course code must be non-empty")
        if not 1 <= self.credits <= 12:
            raise DomainError(f"course {self.code}: credits must be in 1..12, got {self.credits}")
        if self.code in self.prerequisites:
            raise DomainError(f"course {self.code} lists itself as a prerequisite")
        object.__setattr__(self, "prerequisites", frozenset(self.prerequisites))


@dataclass(frozen=True, slots=True)
class MeetingTime:
    """A weekly-repeating slot: day of week plus minutes from midnight."""

    day: Day
    start: int
    end: int

    def __post_init__(self):
        if not 0 <= self.start < self.end <= MINUTES_PER_DAY:
            raise DomainError(f"meeting time must satisfy 0 <= start < end <= {MINUTES_PER_DAY}")

    @property
    def sort_key(self) -> tuple[int, int, int]:
        return (self.day.order, self.start, self.end)

    def __str__(self) -> str:
        return f"{self.day.value} {_hhmm(self.start)}-{_hhmm(self.end)}"


def _hhmm(minutes: int) -> str:
    return f"{minutes // 60:02d}:{minutes % 60:02d}"


def _overlaps(a: MeetingTime, b: MeetingTime) -> bool:
    # Half-open intervals: a shared endpoint is not a clash.
    return a.day == b.day and a.start < b.end and b.start < a.end


@dataclass(frozen=True, slots=True)
class Section:
    section_id: str
    course_code: str
    class_label: str
    term_code: str
    capacity: int
    meetings: tuple[MeetingTime, ...]
    lecturer: str = ""
    state: SectionState = SectionState.OPEN

    def __post_init__(self):
        if not self.section_id:
            raise DomainError("section_id must be non-empty")
        if self.capacity < 1:
            raise DomainError(f"section {self.section_id}: capacity must be >= 1")
        meetings = tuple(self.meetings)
        if not meetings:
            raise DomainError(f"section {self.section_id}: at least one meeting required")
        for i, a in enumerate(meetings):
            for b in meetings[i + 1:]:
                if _overlaps(a, b):
                    raise DomainError(
                        f"section {self.section_id}: meetings {a} and {b} overlap each other"
                    )
        object.__setattr__(self, "meetings", meetings)

    def with_state(self, state: SectionState) -> "Section":
        return replace(self, state=state)


TERM_CODE_RE = re.compile(r"^\d{4}[123]$")


@dataclass(frozen=True, slots=True)
class TimeWindow:
    open_at: datetime
    close_at: datetime

    def __post_init__(self):
        if self.open_at >= self.close_at:
            raise DomainError("window must open before it closes")

    def contains(self, at: datetime) -> bool:
        # Bounds are inclusive on both ends.
        return self.open_at <= at <= self.close_at


@dataclass(frozen=True, slots=True)
class Term:
    term_code: str
    registration_window: TimeWindow
    payment_window: TimeWindow
    min_enrollment: int = 10
    # Lines committed before this instant are Planned, at/after it Added.
    # None means the whole window is the initial (Planned) period.
    change_open_at: Optional[datetime] = None

    def __post_init__(self):
        if not TERM_CODE_RE.match(self.term_code):
            raise DomainError(f"term code {self.term_code!r} must match YYYYS with S in 1..3")
        if self.min_enrollment < 0:
            raise DomainError("min_enrollment must be >= 0")

    @property
    def year(self) -> int:
        return int(self.term_code[:4])

    @property
    def semester(self) -> int:
        return int(self.term_code[4])

    def display_name(self) -> str:
        return f"Semester {self.semester} {self.year}/{self.year + 1}"


@dataclass(frozen=True, slots=True)
class StudentProfile:
    nim: str
    name: str
    program: str = ""
    financial_status: FinancialStatus = FinancialStatus.CLEAR
    case_status: CaseStatus = CaseStatus.NONE
    credit_cap: int = DEFAULT_CREDIT_CAP
    over_credit_permit: bool = False

    def __post_init__(self):
        if not self.nim:
            raise DomainError("nim must be non-empty")
        if self.credit_cap < 1:
            raise DomainError(f"student {self.nim}: credit cap must be >= 1")


@dataclass(frozen=True, slots=True)
class AcademicRecord:
    """Ingested history: which courses were taken and whether they were passed.

    GPA figures are opaque display strings, never computed here.
    """

    nim: str
    completed: frozenset[tuple[str, bool]] = frozenset()
    credits_passed: int = 0
    credits_total: int = 0
    gpa_semester: str = ""
    gpa_cumulative: str = ""

    def __post_init__(self):
        if self.credits_passed > self.credits_total:
            raise DomainError(f"record {self.nim}: credits_passed exceeds credits_total")
        if self.credits_passed < 0:
            raise DomainError(f"record {self.nim}: credits must be non-negative")
        object.__setattr__(self, "completed", frozenset(self.completed))

    def taken(self, course_code: str) -> bool:
        return any(code == course_code for code, _ in self.completed)

    def passed(self, course_code: str) -> bool:
        return any(code == course_code and ok for code, ok in self.completed)


EMPTY_RECORD = AcademicRecord(nim="")


@dataclass(frozen=True, slots=True)
class PlanLine:
    section_id: str
    status: LineStatus
    committed_at: datetime

    @property
    def active(self) -> bool:
        return self.status in ACTIVE_STATUSES


@dataclass(frozen=True, slots=True)
class RegistrationPlan:
    nim: str
    term_code: str
    lines: tuple[PlanLine, ...] = ()
    print_count: int = 0

    def __post_init__(self):
        if self.print_count < 0:
            raise DomainError("print_count must be non-negative")
        object.__setattr__(self, "lines", tuple(self.lines))

    def active_lines(self) -> tuple[PlanLine, ...]:
        return tuple(line for line in self.lines if line.active)

    def active_line_for(self, section_id: str) -> Optional[PlanLine]:
        for line in self.lines:
            if line.section_id == section_id and line.active:
                return line
        return None


@dataclass(frozen=True, slots=True)
class RuleViolation:
    code: ViolationCode
    detail: str
    subject: str

    def __post_init__(self):
        # Guard against raw strings sneaking in from wire layers.
        object.__setattr__(self, "code", ViolationCode(self.code))


# ---------------------------------------------------------------- operations

def active_credits(plan: RegistrationPlan, course_of: Callable[[str], Course]) -> int:
    """Total SKS across Planned/Added lines; terminal lines contribute nothing.

    `course_of` resolves a section_id to its Course and raises KeyError for
    unknown ids, which is surfaced as UnknownSectionRef.
    """
    total = 0
    for line in plan.lines:
        if not line.active:
            continue
        try:
            course = course_of(line.section_id)
        except KeyError:
            raise UnknownSectionRef(line.section_id) from None
        total += course.credits
    return total


# Planned/Added may withdraw or be cancelled; identity edges are accepted
# as no-ops so retried requests stay idempotent.
ALLOWED_TRANSITIONS = frozenset(
    {
        (LineStatus.PLANNED, LineStatus.WITHDRAWN),
        (LineStatus.PLANNED, LineStatus.CANCELLED),
        (LineStatus.ADDED, LineStatus.WITHDRAWN),
        (LineStatus.ADDED, LineStatus.CANCELLED),
    }
    | {(s, s) for s in LineStatus}
)


def transition_line(line: PlanLine, to: LineStatus) -> PlanLine:
    """Move a line to a new status, or raise IllegalTransition."""
    to = LineStatus(to)
    if (line.status, to) not in ALLOWED_TRANSITIONS:
        raise IllegalTransition(line.status, to)
    if to is line.status:
        return line
    return replace(line, status=to)


def parse_meeting(token: str) -> MeetingTime:
    """Parse a `DAY hh:mm-hh:mm` token, e.g. `MON 07:30-09:10`."""
    m = re.match(r"^\s*([A-Za-z]{3})\s+(\d{1,2}):(\d{2})-(\d{1,2}):(\d{2})\s*$", token)
    if not m:
        raise DomainError(f"bad meeting token {token!r}, expected `DAY hh:mm-hh:mm`")
    day_name = m.group(1).upper()
    try:
        day = Day(day_name)
    except ValueError:
        raise DomainError(f"bad day {day_name!r} in meeting token {token!r}") from None
    start = int(m.group(2)) * 60 + int(m.group(3))
    end = int(m.group(4)) * 60 + int(m.group(5))
    return MeetingTime(day=day, start=start, end=end)


def format_meetings(meetings: Iterable[MeetingTime]) -> str:
    return ";".join(str(m) for m in meetings)
