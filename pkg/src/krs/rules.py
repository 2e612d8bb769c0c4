"""The registration engine: every add/withdraw flows through here.

Validation reports the complete list of broken rules in one fixed order,
so a student sees all problems at once. The only exceptions: a closed
registration window is reported alone (nothing else is meaningful
outside the window), and an unresolvable section suppresses the checks
that need section data.

Commits re-validate against current state under the store lock, so the
check-and-reserve step is linearizable: a section can never be committed
past its capacity no matter how many callers race.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import Mapping, Optional

from . import timetable
from .catalog import Catalog, UnknownTermError
from .domain import (
    AcademicRecord,
    CaseStatus,
    Course,
    EMPTY_RECORD,
    FinancialStatus,
    LineStatus,
    PlanLine,
    RegistrationPlan,
    RuleViolation,
    Section,
    SectionState,
    StudentProfile,
    Term,
    ViolationCode,
    active_credits,
)
from .store import AuditAction, Store, UnknownStudentError

RULE_ORDER = (
    ViolationCode.WINDOW_CLOSED,
    ViolationCode.PAYMENT_HOLD,
    ViolationCode.CASE_HOLD,
    ViolationCode.UNKNOWN_SECTION,
    ViolationCode.SECTION_CANCELLED,
    ViolationCode.DUPLICATE_COURSE,
    ViolationCode.PREREQ_UNMET,
    ViolationCode.SCHEDULE_CONFLICT,
    ViolationCode.CREDIT_CAP_EXCEEDED,
    ViolationCode.SECTION_FULL,
)


@dataclass(frozen=True)
class AddRequest:
    nim: str
    term_code: str
    section_id: str
    requested_at: datetime

    def __post_init__(self):
        if not (self.nim and self.term_code and self.section_id):
            raise ValueError("nim, term_code and section_id must all be non-empty")


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    violations: tuple[RuleViolation, ...] = ()
    committed_line: Optional[PlanLine] = None

    def __post_init__(self):
        if self.accepted != (len(self.violations) == 0):
            raise ValueError("a verdict is accepted exactly when it has no violations")

    @property
    def codes(self) -> tuple[ViolationCode, ...]:
        return tuple(v.code for v in self.violations)


def rejected(*violations: RuleViolation) -> Verdict:
    return Verdict(accepted=False, violations=tuple(violations))


@dataclass(frozen=True)
class ValidationContext:
    """A consistent snapshot of everything one add decision needs."""

    catalog: Catalog
    term: Term
    profile: StudentProfile
    record: AcademicRecord
    plan: RegistrationPlan
    sections: Mapping[str, Section]          # live states, superset of the plan's refs
    free_seats: Mapping[str, int]
    require_pass: bool = True


def prereq_satisfied(
    record: AcademicRecord, course: Course, require_pass: bool = True
) -> tuple[bool, frozenset[str]]:
    """Check direct prerequisites against the record; returns (ok, missing)."""
    missing = set()
    for code in course.prerequisites:
        ok = record.passed(code) if require_pass else record.taken(code)
        if not ok:
            missing.add(code)
    return (not missing), frozenset(missing)


def validate_add(req: AddRequest, ctx: ValidationContext) -> Verdict:
    """Evaluate the full rule pipeline; pure, no side effects."""
    violations: list[RuleViolation] = []

    if not ctx.term.registration_window.contains(req.requested_at):
        # Outside the window nothing else applies; report the gate alone.
        return rejected(RuleViolation(
            ViolationCode.WINDOW_CLOSED,
            f"registration for term {ctx.term.term_code} is open "
            f"{ctx.term.registration_window.open_at.isoformat()} to "
            f"{ctx.term.registration_window.close_at.isoformat()}",
            ctx.term.term_code,
        ))

    if (ctx.profile.financial_status is FinancialStatus.HOLD
            and req.requested_at >= ctx.term.payment_window.open_at):
        # Payment status only gates once the payment window has opened.
        violations.append(RuleViolation(
            ViolationCode.PAYMENT_HOLD,
            f"student {ctx.profile.nim} has a financial hold", ctx.profile.nim,
        ))
    if ctx.profile.case_status is CaseStatus.HOLD:
        violations.append(RuleViolation(
            ViolationCode.CASE_HOLD,
            f"student {ctx.profile.nim} has a case hold", ctx.profile.nim,
        ))

    section = ctx.sections.get(req.section_id)
    if section is None or section.term_code != req.term_code:
        violations.append(RuleViolation(
            ViolationCode.UNKNOWN_SECTION,
            f"section {req.section_id} does not exist in term {req.term_code}",
            req.section_id,
        ))
        return rejected(*violations)

    course = ctx.catalog.courses[section.course_code]

    if section.state is SectionState.CANCELLED:
        violations.append(RuleViolation(
            ViolationCode.SECTION_CANCELLED,
            f"section {req.section_id} ({course.code}-{section.class_label}) was cancelled",
            req.section_id,
        ))

    active_sections = [
        ctx.sections[line.section_id]
        for line in ctx.plan.lines
        if line.active and line.section_id in ctx.sections
    ]
    if any(sec.course_code == course.code for sec in active_sections):
        violations.append(RuleViolation(
            ViolationCode.DUPLICATE_COURSE,
            f"plan already holds an active line for course {course.code}",
            course.code,
        ))

    ok, missing = prereq_satisfied(ctx.record, course, ctx.require_pass)
    if not ok:
        wanted = "passed" if ctx.require_pass else "taken"
        violations.append(RuleViolation(
            ViolationCode.PREREQ_UNMET,
            f"course {course.code} requires {wanted}: {', '.join(sorted(missing))}",
            course.code,
        ))

    overlaps = timetable.section_conflicts(section, active_sections)
    if overlaps:
        violations.append(RuleViolation(
            ViolationCode.SCHEDULE_CONFLICT,
            timetable.describe_overlaps(overlaps),
            req.section_id,
        ))

    if not ctx.profile.over_credit_permit:
        current = active_credits(ctx.plan, lambda sid: ctx.catalog.courses[ctx.sections[sid].course_code])
        if current + course.credits > ctx.profile.credit_cap:
            violations.append(RuleViolation(
                ViolationCode.CREDIT_CAP_EXCEEDED,
                f"{current} + {course.credits} SKS would exceed the cap of "
                f"{ctx.profile.credit_cap} SKS",
                course.code,
            ))

    if ctx.free_seats.get(req.section_id, 0) <= 0:
        violations.append(RuleViolation(
            ViolationCode.SECTION_FULL,
            f"section {req.section_id} has reached its capacity of {section.capacity}",
            req.section_id,
        ))

    violations.sort(key=lambda v: RULE_ORDER.index(v.code))
    if violations:
        return rejected(*violations)
    return Verdict(accepted=True)


class RegistrationEngine:
    """Applies the rule pipeline against a store, atomically."""

    def __init__(self, store: Store, require_pass: bool = True):
        self.store = store
        self.require_pass = require_pass

    # -------------------------------------------------------- snapshotting

    def context_for(self, req: AddRequest) -> ValidationContext:
        """Build a consistent snapshot; call under the store lock for commits."""
        store = self.store
        term = store.term(req.term_code)
        if term is None:
            raise UnknownTermError(req.term_code)
        profile = store.profiles.get(req.nim)
        if profile is None:
            raise UnknownStudentError(req.nim)
        record = store.records.get(req.nim, EMPTY_RECORD)
        return ValidationContext(
            catalog=store.catalog,
            term=term,
            profile=profile,
            record=record,
            plan=store.plan(req.nim, req.term_code),
            sections=dict(store.sections),
            free_seats=dict(store.free),
            require_pass=self.require_pass,
        )

    def validate_add(self, req: AddRequest) -> Verdict:
        with self.store.locked():
            return validate_add(req, self.context_for(req))

    # -------------------------------------------------------- commits

    def commit_add(self, req: AddRequest, actor: Optional[str] = None) -> Verdict:
        """Validate against current state, then reserve the seat and append
        the line as one atomic step. A racing caller that loses the last
        seat sees plain SECTION_FULL."""
        with self.store.locked():
            ctx = self.context_for(req)
            verdict = validate_add(req, ctx)
            if not verdict.accepted:
                return verdict
            status = LineStatus.PLANNED
            if ctx.term.change_open_at is not None and req.requested_at >= ctx.term.change_open_at:
                status = LineStatus.ADDED
            self.store.record(
                AuditAction.ADD_COMMITTED,
                actor or req.nim,
                {
                    "nim": req.nim,
                    "term_code": req.term_code,
                    "section_id": req.section_id,
                    "status": status.value,
                    "at": req.requested_at.isoformat(),
                },
                at=req.requested_at,
            )
            line = self.store.plan(req.nim, req.term_code).lines[-1]
            return Verdict(accepted=True, committed_line=line)

    def commit_withdraw(self, nim: str, term_code: str, section_id: str,
                        at: datetime, actor: Optional[str] = None) -> Verdict:
        """Mark the active line Withdrawn and release its seat atomically."""
        with self.store.locked():
            term = self.store.term(term_code)
            if term is None:
                raise UnknownTermError(term_code)
            if not term.registration_window.contains(at):
                return rejected(RuleViolation(
                    ViolationCode.WINDOW_CLOSED,
                    f"withdrawals for term {term_code} are only accepted while "
                    f"registration is open",
                    term_code,
                ))
            plan = self.store.plan(nim, term_code)
            line = plan.active_line_for(section_id)
            if line is None:
                return rejected(RuleViolation(
                    ViolationCode.UNKNOWN_SECTION,
                    f"no active plan line for section {section_id}",
                    section_id,
                ))
            self.store.record(
                AuditAction.WITHDRAWN,
                actor or nim,
                {"nim": nim, "term_code": term_code, "section_id": section_id,
                 "at": at.isoformat()},
                at=at,
            )
            updated = next(
                l for l in reversed(self.store.plan(nim, term_code).lines)
                if l.section_id == section_id and l.status is LineStatus.WITHDRAWN
            )
            return Verdict(accepted=True, committed_line=updated)
