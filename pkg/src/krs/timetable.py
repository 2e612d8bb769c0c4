"""Clash detection between meeting times and between sections.

Intervals are half-open: a meeting ending 09:00 does not clash with one
starting 09:00. Only a student's active (Planned/Added) sections can
block a candidate.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple

from .domain import MeetingTime, Section


def meetings_overlap(a: MeetingTime, b: MeetingTime) -> bool:
    """True iff the two slots share a day and at least one minute."""
    return a.day == b.day and a.start < b.end and b.start < a.end


class Overlap(NamedTuple):
    """One clashing meeting pair against an already-chosen section."""

    section_id: str
    candidate_meeting: MeetingTime
    active_meeting: MeetingTime


def section_conflicts(candidate: Section, active: Iterable[Section]) -> list[Overlap]:
    """All clashing meeting pairs of `candidate` against the active sections.

    Output order is deterministic: by active section_id, then by the
    candidate meeting's day/start, then the active meeting's day/start.
    An empty list means the section fits.
    """
    hits: list[Overlap] = []
    for section in active:
        for cand in candidate.meetings:
            for held in section.meetings:
                if meetings_overlap(cand, held):
                    hits.append(Overlap(section.section_id, cand, held))
    hits.sort(
        key=lambda o: (o.section_id, o.candidate_meeting.sort_key, o.active_meeting.sort_key)
    )
    return hits


def describe_overlaps(overlaps: Iterable[Overlap]) -> str:
    """Human-readable one-line summary, used as violation detail."""
    return "; ".join(
        f"{o.candidate_meeting} clashes with {o.active_meeting} (section {o.section_id})"
        for o in overlaps
    )
