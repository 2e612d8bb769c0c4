"""Transactional online course-registration (KRS) system.

Library layers: domain (entities), catalog (courses/prereqs/sections),
timetable (clash detection), rules (the registration engine), offering
(demand + cancellation), store (durable state + audit log), service
(HTTP API), cli (administration), report (demand outputs and charts).
"""

__version__ = "0.1.0"

from .catalog import Catalog, import_catalog, prereq_closure, sections_of
from .domain import (
    AcademicRecord,
    Course,
    LineStatus,
    MeetingTime,
    PlanLine,
    RegistrationPlan,
    RuleViolation,
    Section,
    SectionState,
    StudentProfile,
    Term,
    TimeWindow,
    ViolationCode,
    active_credits,
    transition_line,
)
from .offering import Decision, DemandRow, decide_section, demand_report
from .rules import AddRequest, RegistrationEngine, Verdict, prereq_satisfied, validate_add
from .store import Store, init_state_dir
from .timetable import meetings_overlap, section_conflicts

__all__ = [
    "AcademicRecord", "AddRequest", "Catalog", "Course", "Decision", "DemandRow",
    "LineStatus", "MeetingTime", "PlanLine", "RegistrationEngine", "RegistrationPlan",
    "RuleViolation", "Section", "SectionState", "Store", "StudentProfile", "Term",
    "TimeWindow", "Verdict", "ViolationCode", "active_credits", "decide_section",
    "demand_report", "import_catalog", "init_state_dir", "meetings_overlap",
    "prereq_closure", "prereq_satisfied", "section_conflicts", "sections_of",
    "transition_line", "validate_add",
]
