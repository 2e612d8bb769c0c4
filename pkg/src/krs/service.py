"""HTTP boundary: bearer-token sessions, role checks, and the /api/v1 routes.

Verdict mapping: business-rule rejections are 409 with the full ordered
violations list; structural misses (unknown student/term/section) are
404; malformed bodies are 422. Handlers do no rule evaluation of their
own; they delegate to the rules/offering/store layers.
"""

from __future__ import annotations

import secrets
import threading
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Optional

from fastapi import Depends, FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from .catalog import UnknownCourseError, UnknownTermError, sections_of
from .domain import RuleViolation, Section, Term, ViolationCode
from .offering import (
    AlreadyDecidedError,
    Decision,
    DecisionOutcome,
    UnknownSectionError,
    decide_section,
    demand_report,
)
from .rules import AddRequest, RegistrationEngine, Verdict
from .store import (
    Announcement,
    AuditAction,
    Role,
    Store,
    UnknownPlanError,
)

API_PREFIX = "/api/v1"


class ApiError(Exception):
    def __init__(self, status_code: int, body: dict):
        self.status_code = status_code
        self.body = body
        super().__init__(str(body))


def _unauthorized(detail: str = "authentication required") -> ApiError:
    return ApiError(401, {"error": detail})


def _forbidden(detail: str = "not allowed for this role") -> ApiError:
    return ApiError(403, {"error": detail})


def _not_found(detail: str) -> ApiError:
    return ApiError(404, {"error": detail})


# ---------------------------------------------------------------- sessions

@dataclass(frozen=True)
class Session:
    token: str
    principal: str
    role: Role
    name: str
    expires_at: datetime


class SessionRegistry:
    """In-memory bearer sessions; tokens carry 256 bits of randomness."""

    def __init__(self, store: Store, ttl_min: int = 120):
        self.store = store
        self.ttl = timedelta(minutes=ttl_min)
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def open(self, principal: str, password: str) -> Optional[Session]:
        cred = self.store.verify_credential(principal, password)
        if cred is None:
            return None
        session = Session(
            token=secrets.token_urlsafe(32),
            principal=cred.principal,
            role=cred.role,
            name=cred.name,
            expires_at=self.store.now() + self.ttl,
        )
        with self._lock:
            self._sessions[session.token] = session
        self.store.record(
            AuditAction.SESSION_OPENED, principal,
            {"principal": principal, "role": cred.role.value},
        )
        return session

    def resolve(self, token: str) -> Optional[Session]:
        with self._lock:
            session = self._sessions.get(token)
            if session is None:
                return None
            if session.expires_at <= self.store.now():
                del self._sessions[token]
                return None
            return session


# ---------------------------------------------------------------- request bodies

class LoginBody(BaseModel):
    principal: str
    password: str


class AddLineBody(BaseModel):
    section_id: str


class DecisionBody(BaseModel):
    decision: str


class AnnouncementBody(BaseModel):
    title: str
    body: str


# ---------------------------------------------------------------- serializers

def _violations_body(violations: tuple[RuleViolation, ...] | list) -> dict:
    return {
        "violations": [
            {"code": v.code.value, "detail": v.detail, "subject": v.subject}
            for v in violations
        ]
    }


def _term_json(term: Term) -> dict:
    return {
        "term_code": term.term_code,
        "display_name": term.display_name(),
        "registration_window": {
            "open_at": term.registration_window.open_at.isoformat(),
            "close_at": term.registration_window.close_at.isoformat(),
        },
        "payment_window": {
            "open_at": term.payment_window.open_at.isoformat(),
            "close_at": term.payment_window.close_at.isoformat(),
        },
        "change_open_at": term.change_open_at.isoformat() if term.change_open_at else None,
        "min_enrollment": term.min_enrollment,
    }


def _section_json(store: Store, section: Section) -> dict:
    return {
        "section_id": section.section_id,
        "course_code": section.course_code,
        "class_label": section.class_label,
        "term_code": section.term_code,
        "capacity": section.capacity,
        "free_seats": store.free_seats(section.section_id),
        "lecturer": section.lecturer,
        "state": section.state.value,
        "meetings": [
            {"day": m.day.value, "start": m.start, "end": m.end, "display": str(m)}
            for m in section.meetings
        ],
    }


def _plan_json(store: Store, nim: str, term_code: str) -> dict:
    plan = store.plan(nim, term_code)
    profile = store.profiles.get(nim)
    lines = []
    for line in plan.lines:
        section = store.section(line.section_id)
        course = store.course_of_section(line.section_id) if section else None
        lines.append({
            "section_id": line.section_id,
            "course_code": course.code if course else "",
            "course_title": course.title if course else "",
            "class_label": section.class_label if section else "",
            "credits": course.credits if course else 0,
            "status": line.status.value,
            "committed_at": line.committed_at.isoformat(),
        })
    return {
        "nim": nim,
        "term_code": term_code,
        "print_count": plan.print_count,
        "active_credits": store.active_credits_of(plan),
        "credit_cap": profile.credit_cap if profile else None,
        "over_credit_permit": profile.over_credit_permit if profile else False,
        "lines": lines,
    }


def _announcement_json(a: Announcement) -> dict:
    return {"id": a.id, "posted_at": a.posted_at.isoformat(), "author": a.author,
            "title": a.title, "body": a.body}


def _line_json(verdict: Verdict) -> dict:
    line = verdict.committed_line
    return {
        "section_id": line.section_id,
        "status": line.status.value,
        "committed_at": line.committed_at.isoformat(),
    }


def _outcome_json(outcome: DecisionOutcome) -> dict:
    return {
        "section_id": outcome.section_id,
        "state": outcome.state.value,
        "affected_count": len(outcome.affected_nims),
        "affected_nims": list(outcome.affected_nims),
        "announcement_id": outcome.announcement_id,
    }


# ---------------------------------------------------------------- app factory

def create_app(
    store: Store,
    require_pass: bool = True,
    session_ttl_min: int = 120,
    ui_dir: Optional[str] = None,
) -> FastAPI:
    app = FastAPI(title="krs", docs_url=None, redoc_url=None)
    # Bearer auth, no cookies: a permissive CORS policy is safe and lets the
    # web UI run from a dev origin.
    from fastapi.middleware.cors import CORSMiddleware

    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    engine = RegistrationEngine(store, require_pass=require_pass)
    sessions = SessionRegistry(store, ttl_min=session_ttl_min)
    app.state.store = store
    app.state.engine = engine
    app.state.sessions = sessions

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status_code, content=exc.body)

    @app.exception_handler(RequestValidationError)
    async def _bad_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422, content={"error": "malformed request body"})

    def current_session(request: Request) -> Session:
        header = request.headers.get("Authorization", "")
        if not header.startswith("Bearer "):
            raise _unauthorized()
        session = sessions.resolve(header[len("Bearer "):].strip())
        if session is None:
            raise _unauthorized("session is invalid or expired")
        return session

    def staff_only(session: Session = Depends(current_session)) -> Session:
        if session.role is not Role.STAFF:
            raise _forbidden()
        return session

    def plan_access(nim: str, session: Session) -> None:
        """Students may only touch their own plan; staff may touch any."""
        if session.role is Role.STAFF:
            return
        if session.role is Role.STUDENT and session.principal == nim:
            return
        raise _forbidden("plans of other students are not visible")

    def known_student(nim: str) -> None:
        if nim not in store.profiles:
            raise _not_found(f"unknown student: {nim}")

    def known_term(term: str) -> Term:
        found = store.term(term)
        if found is None:
            raise _not_found(f"unknown term: {term}")
        return found

    # ------------------------------------------------------------ sessions

    @app.post(API_PREFIX + "/sessions", status_code=201)
    def login(body: LoginBody):
        session = sessions.open(body.principal, body.password)
        if session is None:
            raise _unauthorized("bad credentials")
        return {
            "token": session.token,
            "principal": session.principal,
            "role": session.role.value,
            "name": session.name,
            "expires_at": session.expires_at.isoformat(),
        }

    # ------------------------------------------------------------ terms & catalog

    @app.get(API_PREFIX + "/terms/current")
    def current_term(session: Session = Depends(current_session)):
        now = store.now()
        terms = sorted(store.terms.values(), key=lambda t: t.registration_window.open_at)
        if not terms:
            raise _not_found("no terms configured")
        open_now = [t for t in terms if t.registration_window.contains(now)]
        if open_now:
            return _term_json(open_now[-1])
        started = [t for t in terms if t.registration_window.open_at <= now]
        return _term_json(started[-1] if started else terms[0])

    @app.get(API_PREFIX + "/catalog/courses")
    def list_courses(
        term: Optional[str] = Query(default=None),
        session: Session = Depends(current_session),
    ):
        courses = store.catalog.courses
        if term is not None:
            known_term(term)
            offered = {
                store.sections[sid].course_code
                for sid in store.catalog.by_term.get(term, ())
            }
            courses = {c: courses[c] for c in offered}
        return {
            "courses": [
                {
                    "code": c.code,
                    "title": c.title,
                    "credits": c.credits,
                    "prerequisites": sorted(c.prerequisites),
                }
                for c in sorted(courses.values(), key=lambda c: c.code)
            ]
        }

    @app.get(API_PREFIX + "/catalog/courses/{code}/sections")
    def course_sections(
        code: str,
        term: str = Query(...),
        session: Session = Depends(current_session),
    ):
        known_term(term)
        try:
            found = sections_of(store.catalog, term, code)
        except (UnknownCourseError, UnknownTermError) as exc:
            raise _not_found(str(exc)) from None
        # live view: overlay decided states
        live = [store.section(s.section_id) or s for s in found]
        return {"sections": [_section_json(store, s) for s in live]}

    # ------------------------------------------------------------ plans

    @app.get(API_PREFIX + "/students/{nim}/plan")
    def get_plan(
        nim: str,
        term: str = Query(...),
        session: Session = Depends(current_session),
    ):
        plan_access(nim, session)
        known_student(nim)
        known_term(term)
        with store.locked():
            return _plan_json(store, nim, term)

    @app.post(API_PREFIX + "/students/{nim}/plan/lines", status_code=201)
    def add_line(
        nim: str,
        body: AddLineBody,
        term: str = Query(...),
        session: Session = Depends(current_session),
    ):
        plan_access(nim, session)
        known_student(nim)
        known_term(term)
        req = AddRequest(nim=nim, term_code=term, section_id=body.section_id,
                         requested_at=store.now())
        verdict = engine.commit_add(req, actor=session.principal)
        if not verdict.accepted:
            raise ApiError(409, _violations_body(verdict.violations))
        with store.locked():
            return {
                "line": _line_json(verdict),
                "active_credits": store.active_credits_of(store.plan(nim, term)),
            }

    @app.delete(API_PREFIX + "/students/{nim}/plan/lines/{section_id}")
    def withdraw_line(
        nim: str,
        section_id: str,
        term: str = Query(...),
        session: Session = Depends(current_session),
    ):
        plan_access(nim, session)
        known_student(nim)
        known_term(term)
        verdict = engine.commit_withdraw(nim, term, section_id, at=store.now(),
                                         actor=session.principal)
        if not verdict.accepted:
            if verdict.codes == (ViolationCode.UNKNOWN_SECTION,):
                raise _not_found(f"no active plan line for section {section_id}")
            raise ApiError(409, _violations_body(verdict.violations))
        return {"line": _line_json(verdict)}

    @app.get(API_PREFIX + "/students/{nim}/plan/document")
    def plan_document(
        nim: str,
        term: str = Query(...),
        session: Session = Depends(current_session),
    ):
        plan_access(nim, session)
        try:
            text = store.render_krs(nim, term)
        except UnknownPlanError as exc:
            raise _not_found(str(exc)) from None
        return PlainTextResponse(text)

    # ------------------------------------------------------------ staff

    @app.get(API_PREFIX + "/staff/demand")
    def demand(
        term: str = Query(...),
        session: Session = Depends(staff_only),
    ):
        try:
            rows = demand_report(store, term)
        except UnknownTermError as exc:
            raise _not_found(str(exc)) from None
        return {
            "term_code": term,
            "rows": [
                {
                    "course_code": r.course_code,
                    "section_id": r.section_id,
                    "class_label": r.class_label,
                    "enrolled": r.enrolled,
                    "capacity": r.capacity,
                    "fill_ratio": r.fill_ratio,
                    "below_threshold": r.below_threshold,
                }
                for r in rows
            ],
        }

    @app.post(API_PREFIX + "/staff/sections/{section_id}/decision")
    def decide(
        section_id: str,
        body: DecisionBody,
        session: Session = Depends(staff_only),
    ):
        try:
            decision = Decision(body.decision.capitalize())
        except ValueError:
            raise ApiError(422, {"error": "decision must be Confirm or Cancel"}) from None
        try:
            outcome = decide_section(store, section_id, decision, actor=session.principal)
        except UnknownSectionError as exc:
            raise _not_found(str(exc)) from None
        except AlreadyDecidedError as exc:
            raise ApiError(409, {
                "violations": [{
                    "code": "ALREADY_DECIDED",
                    "detail": str(exc),
                    "subject": section_id,
                }]
            }) from None
        return _outcome_json(outcome)

    @app.get(API_PREFIX + "/sections/{section_id}/roster")
    def roster(
        section_id: str,
        session: Session = Depends(current_session),
    ):
        section = store.section(section_id)
        if section is None:
            raise _not_found(f"unknown section: {section_id}")
        if session.role is Role.STUDENT:
            raise _forbidden()
        if session.role is Role.LECTURER and section.lecturer != session.principal:
            raise _forbidden("lecturers may only view their own sections")
        with store.locked():
            students = []
            for plan in store.plans_in_term(section.term_code):
                line = plan.active_line_for(section_id)
                if line is None:
                    continue
                profile = store.profiles.get(plan.nim)
                students.append({
                    "nim": plan.nim,
                    "name": profile.name if profile else "",
                    "status": line.status.value,
                })
            students.sort(key=lambda s: s["nim"])
        return {"section_id": section_id, "course_code": section.course_code,
                "class_label": section.class_label, "students": students}

    # ------------------------------------------------------------ announcements

    @app.get(API_PREFIX + "/announcements")
    def announcements(
        since: int = Query(default=0),
        session: Session = Depends(current_session),
    ):
        items = store.announcements_since(since)
        return {
            "announcements": [_announcement_json(a) for a in items],
            "latest": items[-1].id if items else since,
        }

    @app.post(API_PREFIX + "/announcements", status_code=201)
    def post_announcement(
        body: AnnouncementBody,
        session: Session = Depends(staff_only),
    ):
        ann = store.post_announcement(author=session.principal, title=body.title,
                                      body=body.body)
        return _announcement_json(ann)

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
