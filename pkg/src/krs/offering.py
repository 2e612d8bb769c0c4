"""Staff-side demand reporting and the run/cancel decision per section.

The system only flags low demand; the run-or-cancel call always stays
with staff. Cancelling cascades atomically: the section closes, every
affected student's line flips to Cancelled (freeing their credits for a
replacement while the window is still open), each of them gets a
notification record, and one announcement goes out.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Optional

from .catalog import UnknownTermError
from .domain import SectionState
from .store import AuditAction, Store


class Decision(str, Enum):
    CONFIRM = "Confirm"
    CANCEL = "Cancel"


class AlreadyDecidedError(Exception):
    def __init__(self, section_id: str, state: SectionState):
        self.section_id = section_id
        self.state = state
        super().__init__(f"section {section_id} was already decided: {state.value}")


class UnknownSectionError(LookupError):
    def __init__(self, section_id: str):
        self.section_id = section_id
        super().__init__(f"unknown section: {section_id}")


@dataclass(frozen=True)
class DemandRow:
    course_code: str
    section_id: str
    class_label: str
    enrolled: int
    capacity: int
    fill_ratio: float
    below_threshold: bool


@dataclass(frozen=True)
class DecisionOutcome:
    section_id: str
    state: SectionState
    affected_nims: tuple[str, ...] = ()
    announcement_id: Optional[int] = None


def demand_report(store: Store, term_code: str) -> list[DemandRow]:
    """One row per non-cancelled section of the term, committed counts.

    below_threshold is strict: a section sitting exactly at the minimum
    is not flagged.
    """
    with store.locked():
        term = store.term(term_code)
        if term is None:
            raise UnknownTermError(term_code)
        rows = []
        for sid, section in store.sections.items():
            if section.term_code != term_code or section.state is SectionState.CANCELLED:
                continue
            enrolled = section.capacity - store.free_seats(sid)
            rows.append(DemandRow(
                course_code=section.course_code,
                section_id=sid,
                class_label=section.class_label,
                enrolled=enrolled,
                capacity=section.capacity,
                fill_ratio=enrolled / section.capacity,
                below_threshold=enrolled < term.min_enrollment,
            ))
        rows.sort(key=lambda r: (r.course_code, r.class_label))
        return rows


def decide_section(store: Store, section_id: str, decision: Decision, actor: str,
                   at: Optional[datetime] = None) -> DecisionOutcome:
    """Confirm or cancel an Open section; Cancel runs the full cascade."""
    decision = Decision(decision)
    with store.locked():
        section = store.section(section_id)
        if section is None:
            raise UnknownSectionError(section_id)
        if section.state is not SectionState.OPEN:
            raise AlreadyDecidedError(section_id, section.state)
        stamp = at or store.now()

        if decision is Decision.CONFIRM:
            store.record(
                AuditAction.SECTION_CONFIRMED, actor,
                {"section_id": section_id, "at": stamp.isoformat()},
                at=stamp,
            )
            return DecisionOutcome(section_id=section_id, state=SectionState.CONFIRMED)

        course = store.catalog.courses[section.course_code]
        affected = [
            {"nim": plan.nim, "term_code": plan.term_code}
            for plan in store.plans_in_term(section.term_code)
            if plan.active_line_for(section_id) is not None
        ]
        affected.sort(key=lambda ref: ref["nim"])
        label = f"{course.code}-{section.class_label}"
        message = (
            f"Section {label} ({course.title}) will not run in term "
            f"{section.term_code}. Its plan line was cancelled; a replacement "
            f"can be added while registration is open."
        )
        announcement = {
            "id": store.next_announcement_id,
            "posted_at": stamp.isoformat(),
            "author": actor,
            "title": f"Section {label} cancelled",
            "body": message,
        }
        store.record(
            AuditAction.SECTION_CANCELLED, actor,
            {
                "section_id": section_id,
                "term_code": section.term_code,
                "at": stamp.isoformat(),
                "affected": affected,
                "message": message,
                "announcement": announcement,
            },
            at=stamp,
        )
        return DecisionOutcome(
            section_id=section_id,
            state=SectionState.CANCELLED,
            affected_nims=tuple(ref["nim"] for ref in affected),
            announcement_id=announcement["id"],
        )


def replacement_sections(store: Store, section_id: str) -> list:
    """Other non-cancelled sections of the same course, for re-registration."""
    section = store.section(section_id)
    if section is None:
        raise UnknownSectionError(section_id)
    options = [
        sec for sid, sec in store.sections.items()
        if sec.course_code == section.course_code
        and sec.term_code == section.term_code
        and sid != section_id
        and sec.state is not SectionState.CANCELLED
    ]
    options.sort(key=lambda s: s.class_label)
    return options
