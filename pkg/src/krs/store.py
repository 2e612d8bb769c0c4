"""Durable system state: snapshot + append-only audit log + catalog files.

State directory layout:

    snapshot.json       full state at some audit sequence number
    audit.log           one JSON record per line, strictly increasing seq
    catalog/courses.csv and catalog/sections.csv, the import files

Every mutation is written through to the log *before* it becomes visible
in memory, so a crash at any instant loses at most the un-acknowledged
call. Startup loads the snapshot and replays every log entry after it;
replaying the whole log from an empty snapshot rebuilds the same state.
A torn final log line (crash mid-write) is discarded: that entry was
never acknowledged.

The store is the single mutation funnel. One re-entrant lock serializes
all writers; domain values are immutable, so readers are safe. This is
coarser than the per-section minimum the rules engine needs, but keeps
the check/log/apply step trivially atomic.
"""

from __future__ import annotations

import hashlib
import json
import os
import secrets
import threading
from contextlib import contextmanager
from dataclasses import dataclass, replace
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Optional
from zoneinfo import ZoneInfo

from filelock import FileLock, Timeout

from .catalog import Catalog, EMPTY_CATALOG, import_catalog
from .domain import (
    AcademicRecord,
    CaseStatus,
    Course,
    FinancialStatus,
    LineStatus,
    PlanLine,
    RegistrationPlan,
    Section,
    SectionState,
    StudentProfile,
    Term,
    TimeWindow,
    active_credits,
    format_meetings,
    transition_line,
)

SNAPSHOT_NAME = "snapshot.json"
AUDIT_NAME = "audit.log"
CATALOG_DIR = "catalog"
LOCK_NAME = ".krs.lock"

DEFAULT_TZ = "Asia/Jakarta"


class StoreError(Exception):
    """Base class for persistence failures."""


class CorruptSnapshotError(StoreError):
    pass


class GapInLogError(StoreError):
    def __init__(self, missing_seq: int):
        self.missing_seq = missing_seq
        super().__init__(f"audit log is missing sequence number {missing_seq}")


class StateLockedError(StoreError):
    pass


class StoreIOError(StoreError):
    pass


class UnknownPlanError(LookupError):
    def __init__(self, nim: str, term_code: str):
        self.nim = nim
        self.term_code = term_code
        super().__init__(f"no plan context for student {nim} in term {term_code}")


class UnknownStudentError(LookupError):
    def __init__(self, nim: str):
        self.nim = nim
        super().__init__(f"unknown student: {nim}")


# ---------------------------------------------------------------- audit model

class AuditAction(str, Enum):
    ADD_COMMITTED = "AddCommitted"
    WITHDRAWN = "Withdrawn"
    SECTION_CANCELLED = "SectionCancelled"
    SECTION_CONFIRMED = "SectionConfirmed"
    PLAN_PRINTED = "PlanPrinted"
    PROFILE_CHANGED = "ProfileChanged"
    ANNOUNCEMENT_POSTED = "AnnouncementPosted"
    # Login events must be auditable too; replay ignores them.
    SESSION_OPENED = "SessionOpened"


@dataclass(frozen=True)
class AuditEntry:
    seq: int
    at: datetime
    actor: str
    action: AuditAction
    payload: dict

    def to_json(self) -> dict:
        return {
            "seq": self.seq,
            "at": self.at.isoformat(),
            "actor": self.actor,
            "action": self.action.value,
            "payload": self.payload,
        }

    @staticmethod
    def from_json(raw: dict) -> "AuditEntry":
        return AuditEntry(
            seq=int(raw["seq"]),
            at=datetime.fromisoformat(raw["at"]),
            actor=str(raw["actor"]),
            action=AuditAction(raw["action"]),
            payload=dict(raw["payload"]),
        )


class Role(str, Enum):
    STUDENT = "Student"
    STAFF = "Staff"
    LECTURER = "Lecturer"


@dataclass(frozen=True)
class Credential:
    principal: str
    role: Role
    name: str
    salt: str
    pw_hash: str


@dataclass(frozen=True)
class Announcement:
    id: int
    posted_at: datetime
    author: str
    title: str
    body: str


@dataclass(frozen=True)
class Notification:
    nim: str
    at: datetime
    section_id: str
    message: str


def _hash_password(password: str, salt: str) -> str:
    digest = hashlib.pbkdf2_hmac("sha256", password.encode(), bytes.fromhex(salt), 60_000)
    return digest.hex()


def _wall_now(tz: ZoneInfo) -> datetime:
    return datetime.now(tz)


# ---------------------------------------------------------------- catalog export

def export_catalog(catalog: Catalog) -> tuple[str, str]:
    """Serialize a catalog back to the two import files (normalized order)."""
    import csv
    import io

    courses_buf = io.StringIO()
    writer = csv.writer(courses_buf, lineterminator="\n")
    writer.writerow(["code", "title", "credits", "prereqs"])
    for code in sorted(catalog.courses):
        course = catalog.courses[code]
        writer.writerow([course.code, course.title, course.credits,
                         ";".join(sorted(course.prerequisites))])

    sections_buf = io.StringIO()
    writer = csv.writer(sections_buf, lineterminator="\n")
    writer.writerow(["section_id", "course_code", "class_label", "term_code",
                     "capacity", "lecturer", "meetings"])
    for sid in sorted(catalog.sections):
        sec = catalog.sections[sid]
        writer.writerow([sec.section_id, sec.course_code, sec.class_label, sec.term_code,
                         sec.capacity, sec.lecturer, format_meetings(sec.meetings)])
    return courses_buf.getvalue(), sections_buf.getvalue()


# ---------------------------------------------------------------- store

class Store:
    """All durable state plus the write-ahead audit discipline."""

    def __init__(
        self,
        state_dir: str | Path,
        clock: Optional[Callable[[], datetime]] = None,
        timezone: str = DEFAULT_TZ,
        create: bool = False,
    ):
        self.state_dir = Path(state_dir)
        if create:
            self.state_dir.mkdir(parents=True, exist_ok=True)
            (self.state_dir / CATALOG_DIR).mkdir(exist_ok=True)
        if not self.state_dir.is_dir():
            raise StoreError(f"state directory {self.state_dir} does not exist (run init first)")

        self.tz = ZoneInfo(timezone)
        self.clock = clock
        self._lock = threading.RLock()
        self._flock = FileLock(str(self.state_dir / LOCK_NAME))
        try:
            self._flock.acquire(timeout=0)
        except Timeout:
            raise StateLockedError(
                f"state directory {self.state_dir} is locked by another process"
            ) from None

        # In-memory state; all values immutable, containers replaced in place.
        self.catalog: Catalog = EMPTY_CATALOG
        self.sections: dict[str, Section] = {}
        self.terms: dict[str, Term] = {}
        self.profiles: dict[str, StudentProfile] = {}
        self.records: dict[str, AcademicRecord] = {}
        self.plans: dict[tuple[str, str], RegistrationPlan] = {}
        self.free: dict[str, int] = {}
        self.announcements: list[Announcement] = []
        self.notifications: dict[str, list[Notification]] = {}
        self.credentials: dict[str, Credential] = {}
        self._announcement_next_id = 1
        self._seq = 0

        self._audit_fh = None
        try:
            self._load()
        except Exception:
            self._flock.release()
            raise
        self._audit_fh = open(self.state_dir / AUDIT_NAME, "a", encoding="utf-8")

    # ------------------------------------------------------------ lifecycle

    def close(self):
        with self._lock:
            if self._audit_fh is not None:
                self._audit_fh.close()
                self._audit_fh = None
        if self._flock.is_locked:
            self._flock.release()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def now(self) -> datetime:
        if self.clock is not None:
            return self.clock()
        return _wall_now(self.tz)

    @contextmanager
    def locked(self):
        with self._lock:
            yield self

    @property
    def seq(self) -> int:
        return self._seq

    # ------------------------------------------------------------ loading

    def _load(self):
        self._load_catalog_files()

        snap_path = self.state_dir / SNAPSHOT_NAME
        snapshot_seq = 0
        if snap_path.exists():
            try:
                raw = json.loads(snap_path.read_text(encoding="utf-8"))
                self._restore_snapshot(raw)
                snapshot_seq = int(raw["seq"])
            except StoreError:
                raise
            except Exception as exc:
                raise CorruptSnapshotError(f"cannot read {snap_path}: {exc}") from exc
        self._seq = snapshot_seq
        self._recompute_free()

        for entry in self._read_log(snapshot_seq):
            self._apply(entry)
            self._seq = entry.seq

    def _load_catalog_files(self):
        courses_path = self.state_dir / CATALOG_DIR / "courses.csv"
        sections_path = self.state_dir / CATALOG_DIR / "sections.csv"
        courses_text = courses_path.read_text(encoding="utf-8") if courses_path.exists() else ""
        sections_text = sections_path.read_text(encoding="utf-8") if sections_path.exists() else ""
        catalog, issues = import_catalog(courses_text, sections_text)
        if catalog is None:
            listing = "; ".join(str(i) for i in issues[:5])
            raise CorruptSnapshotError(f"stored catalog files no longer validate: {listing}")
        self.catalog = catalog
        self.sections = dict(catalog.sections)

    def _read_log(self, snapshot_seq: int) -> Iterable[AuditEntry]:
        log_path = self.state_dir / AUDIT_NAME
        if not log_path.exists():
            return []
        lines = log_path.read_text(encoding="utf-8").splitlines()
        entries: list[AuditEntry] = []
        prev_seq = None
        for i, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                entry = AuditEntry.from_json(json.loads(line))
            except Exception:
                if i == len(lines) - 1:
                    break  # torn final line from a crash mid-append; never acknowledged
                raise GapInLogError((prev_seq or 0) + 1) from None
            if prev_seq is not None and entry.seq != prev_seq + 1:
                raise GapInLogError(prev_seq + 1)
            prev_seq = entry.seq
            entries.append(entry)
        replayable = [e for e in entries if e.seq > snapshot_seq]
        if replayable and replayable[0].seq != snapshot_seq + 1:
            raise GapInLogError(snapshot_seq + 1)
        return replayable

    def _recompute_free(self):
        counts: dict[str, int] = {}
        for plan in self.plans.values():
            for line in plan.active_lines():
                counts[line.section_id] = counts.get(line.section_id, 0) + 1
        self.free = {
            sid: sec.capacity - counts.get(sid, 0) for sid, sec in self.sections.items()
        }

    # ------------------------------------------------------------ snapshot

    def snapshot_dict(self) -> dict:
        return {
            "version": 1,
            "seq": self._seq,
            "announcement_next_id": self._announcement_next_id,
            "terms": {code: _encode_term(t) for code, t in sorted(self.terms.items())},
            "profiles": {nim: _encode_profile(p) for nim, p in sorted(self.profiles.items())},
            "records": {nim: _encode_record(r) for nim, r in sorted(self.records.items())},
            "credentials": {p: _encode_credential(c) for p, c in sorted(self.credentials.items())},
            "plans": [_encode_plan(p) for _, p in sorted(self.plans.items())],
            "section_states": {
                sid: sec.state.value
                for sid, sec in sorted(self.sections.items())
                if sec.state is not SectionState.OPEN
            },
            "announcements": [_encode_announcement(a) for a in self.announcements],
            "notifications": {
                nim: [_encode_notification(n) for n in items]
                for nim, items in sorted(self.notifications.items())
            },
        }

    def save_snapshot(self):
        with self._lock:
            path = self.state_dir / SNAPSHOT_NAME
            tmp = path.with_suffix(".json.tmp")
            tmp.write_text(json.dumps(self.snapshot_dict(), indent=1), encoding="utf-8")
            os.replace(tmp, path)

    def _restore_snapshot(self, raw: dict):
        try:
            self.terms = {code: _decode_term(t) for code, t in raw.get("terms", {}).items()}
            self.profiles = {nim: _decode_profile(p) for nim, p in raw.get("profiles", {}).items()}
            self.records = {nim: _decode_record(r) for nim, r in raw.get("records", {}).items()}
            self.credentials = {p: _decode_credential(c) for p, c in raw.get("credentials", {}).items()}
            self.plans = {}
            for plan_raw in raw.get("plans", []):
                plan = _decode_plan(plan_raw)
                self.plans[(plan.nim, plan.term_code)] = plan
            for sid, state in raw.get("section_states", {}).items():
                if sid in self.sections:
                    self.sections[sid] = self.sections[sid].with_state(SectionState(state))
            self.announcements = [_decode_announcement(a) for a in raw.get("announcements", [])]
            self.notifications = {
                nim: [_decode_notification(n) for n in items]
                for nim, items in raw.get("notifications", {}).items()
            }
            self._announcement_next_id = int(raw.get("announcement_next_id", 1))
        except (KeyError, ValueError, TypeError) as exc:
            raise CorruptSnapshotError(f"snapshot structure invalid: {exc}") from exc

    # ------------------------------------------------------------ audit log

    def record(self, action: AuditAction, actor: str, payload: dict,
               at: Optional[datetime] = None) -> AuditEntry:
        """Append one audit entry (write-through) and apply its effect."""
        with self._lock:
            entry = AuditEntry(
                seq=self._seq + 1,
                at=at or self.now(),
                actor=actor,
                action=action,
                payload=payload,
            )
            self._append_line(entry)
            self._seq = entry.seq
            self._apply(entry)
            return entry

    def _append_line(self, entry: AuditEntry):
        if self._audit_fh is None:
            self._audit_fh = open(self.state_dir / AUDIT_NAME, "a", encoding="utf-8")
        try:
            self._audit_fh.write(json.dumps(entry.to_json()) + "\n")
            self._audit_fh.flush()
            os.fsync(self._audit_fh.fileno())
        except OSError as exc:
            raise StoreIOError(f"cannot append audit entry: {exc}") from exc

    def audit_tail(self, n: int = 10) -> list[AuditEntry]:
        path = self.state_dir / AUDIT_NAME
        if not path.exists():
            return []
        entries = []
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            try:
                entries.append(AuditEntry.from_json(json.loads(line)))
            except Exception:
                continue
        return entries[-n:] if n >= 0 else entries

    # ------------------------------------------------------------ replay

    def _apply(self, entry: AuditEntry):
        handler = _APPLIERS[entry.action]
        handler(self, entry)

    def _apply_add(self, entry: AuditEntry):
        p = entry.payload
        key = (p["nim"], p["term_code"])
        plan = self.plans.get(key) or RegistrationPlan(nim=p["nim"], term_code=p["term_code"])
        line = PlanLine(
            section_id=p["section_id"],
            status=LineStatus(p["status"]),
            committed_at=datetime.fromisoformat(p["at"]),
        )
        self.plans[key] = replace(plan, lines=plan.lines + (line,))
        if p["section_id"] in self.free:
            self.free[p["section_id"]] -= 1

    def _apply_withdraw(self, entry: AuditEntry):
        p = entry.payload
        key = (p["nim"], p["term_code"])
        plan = self.plans[key]
        lines = list(plan.lines)
        for i, line in enumerate(lines):
            if line.section_id == p["section_id"] and line.active:
                lines[i] = transition_line(line, LineStatus.WITHDRAWN)
                break
        self.plans[key] = replace(plan, lines=tuple(lines))
        if p["section_id"] in self.free:
            self.free[p["section_id"]] += 1

    def _apply_section_cancelled(self, entry: AuditEntry):
        p = entry.payload
        sid = p["section_id"]
        at = datetime.fromisoformat(p["at"])
        section = self.sections.get(sid)
        if section is not None:
            self.sections[sid] = section.with_state(SectionState.CANCELLED)
        for ref in p["affected"]:
            key = (ref["nim"], ref["term_code"])
            plan = self.plans.get(key)
            if plan is None:
                continue
            lines = tuple(
                transition_line(line, LineStatus.CANCELLED)
                if line.section_id == sid and line.active
                else line
                for line in plan.lines
            )
            self.plans[key] = replace(plan, lines=lines)
            note = Notification(nim=ref["nim"], at=at, section_id=sid, message=p["message"])
            self.notifications.setdefault(ref["nim"], []).append(note)
        if section is not None:
            self.free[sid] = section.capacity
        ann = p.get("announcement")
        if ann:
            self._insert_announcement(_decode_announcement(ann))

    def _apply_section_confirmed(self, entry: AuditEntry):
        sid = entry.payload["section_id"]
        section = self.sections.get(sid)
        if section is not None:
            self.sections[sid] = section.with_state(SectionState.CONFIRMED)

    def _apply_plan_printed(self, entry: AuditEntry):
        p = entry.payload
        key = (p["nim"], p["term_code"])
        plan = self.plans.get(key) or RegistrationPlan(nim=p["nim"], term_code=p["term_code"])
        self.plans[key] = replace(plan, print_count=plan.print_count + 1)

    def _apply_profile_changed(self, entry: AuditEntry):
        profile = _decode_profile(entry.payload["profile"])
        self.profiles[profile.nim] = profile

    def _apply_announcement(self, entry: AuditEntry):
        self._insert_announcement(_decode_announcement(entry.payload["announcement"]))

    def _apply_session(self, entry: AuditEntry):
        pass  # sessions are ephemeral; logged for accountability only

    def _insert_announcement(self, ann: Announcement):
        self.announcements.append(ann)
        self._announcement_next_id = max(self._announcement_next_id, ann.id + 1)

    # ------------------------------------------------------------ admin mutations

    def install_catalog(self, catalog: Catalog, save: bool = True):
        """Swap in a validated catalog and persist its files."""
        with self._lock:
            missing = sorted(
                {
                    line.section_id
                    for plan in self.plans.values()
                    for line in plan.lines
                    if line.section_id not in catalog.sections
                }
            )
            if missing:
                raise StoreError(
                    "cannot install catalog: existing plans reference missing sections: "
                    + ", ".join(missing)
                )
            courses_text, sections_text = export_catalog(catalog)
            cat_dir = self.state_dir / CATALOG_DIR
            cat_dir.mkdir(exist_ok=True)
            (cat_dir / "courses.csv").write_text(courses_text, encoding="utf-8")
            (cat_dir / "sections.csv").write_text(sections_text, encoding="utf-8")

            old_states = {sid: sec.state for sid, sec in self.sections.items()}
            self.catalog = catalog
            self.sections = {
                sid: sec.with_state(old_states.get(sid, sec.state))
                for sid, sec in catalog.sections.items()
            }
            self._recompute_free()
            if save:
                self.save_snapshot()

    def upsert_term(self, term: Term, save: bool = True):
        with self._lock:
            self.terms[term.term_code] = term
            if save:
                self.save_snapshot()

    def term(self, term_code: str) -> Optional[Term]:
        return self.terms.get(term_code)

    def upsert_profile(self, profile: StudentProfile, actor: str,
                       at: Optional[datetime] = None) -> AuditEntry:
        return self.record(
            AuditAction.PROFILE_CHANGED, actor,
            {"profile": _encode_profile(profile)}, at=at,
        )

    def upsert_record(self, record: AcademicRecord, save: bool = True):
        with self._lock:
            self.records[record.nim] = record
            if save:
                self.save_snapshot()

    def set_credential(self, principal: str, password: str, role: Role, name: str = "",
                       save: bool = True):
        with self._lock:
            salt = secrets.token_hex(16)
            self.credentials[principal] = Credential(
                principal=principal, role=role, name=name or principal,
                salt=salt, pw_hash=_hash_password(password, salt),
            )
            if save:
                self.save_snapshot()

    def verify_credential(self, principal: str, password: str) -> Optional[Credential]:
        cred = self.credentials.get(principal)
        if cred is None:
            return None
        if secrets.compare_digest(cred.pw_hash, _hash_password(password, cred.salt)):
            return cred
        return None

    # ------------------------------------------------------------ queries

    def section(self, section_id: str) -> Optional[Section]:
        return self.sections.get(section_id)

    def free_seats(self, section_id: str) -> int:
        return self.free.get(section_id, 0)

    def plan(self, nim: str, term_code: str) -> RegistrationPlan:
        return self.plans.get((nim, term_code)) or RegistrationPlan(nim=nim, term_code=term_code)

    def plans_in_term(self, term_code: str) -> list[RegistrationPlan]:
        return [p for (_, tc), p in self.plans.items() if tc == term_code]

    def course_of_section(self, section_id: str) -> Course:
        """Resolve section -> course against the live section map; KeyError if unknown."""
        return self.catalog.courses[self.sections[section_id].course_code]

    def active_credits_of(self, plan: RegistrationPlan) -> int:
        return active_credits(plan, self.course_of_section)

    def announcements_since(self, since_id: int = 0) -> list[Announcement]:
        return [a for a in self.announcements if a.id > since_id]

    def post_announcement(self, author: str, title: str, body: str,
                          at: Optional[datetime] = None) -> Announcement:
        with self._lock:
            ann = Announcement(
                id=self._announcement_next_id,
                posted_at=at or self.now(),
                author=author, title=title, body=body,
            )
            self.record(
                AuditAction.ANNOUNCEMENT_POSTED, author,
                {"announcement": _encode_announcement(ann)}, at=ann.posted_at,
            )
            return ann

    def notifications_of(self, nim: str) -> list[Notification]:
        return list(self.notifications.get(nim, []))

    @property
    def next_announcement_id(self) -> int:
        return self._announcement_next_id

    # ------------------------------------------------------------ document

    def render_krs(self, nim: str, term_code: str, at: Optional[datetime] = None) -> str:
        """Render the study-plan card and count the print.

        Raises UnknownPlanError when the student or term is unknown; an
        existing student with no lines still gets a valid empty card.
        """
        with self._lock:
            profile = self.profiles.get(nim)
            term = self.terms.get(term_code)
            if profile is None or term is None:
                raise UnknownPlanError(nim, term_code)
            plan = self.plan(nim, term_code)
            stamp = at or self.now()
            self.record(
                AuditAction.PLAN_PRINTED, nim,
                {"nim": nim, "term_code": term_code, "at": stamp.isoformat()},
                at=stamp,
            )
            plan = self.plan(nim, term_code)  # re-read: print_count just moved
            return _render_document(self, profile, term, plan, stamp)


# ---------------------------------------------------------------- document text

_MONTHS_ID = [
    None, "Januari", "Februari", "Maret", "April", "Mei", "Juni",
    "Juli", "Agustus", "September", "Oktober", "November", "Desember",
]

_STATUS_DISPLAY = {
    LineStatus.PLANNED: "-",
    LineStatus.ADDED: "Tambah",
    LineStatus.WITHDRAWN: "Mundur",
    LineStatus.CANCELLED: "Batal",
}


def format_stamp(dt: datetime) -> str:
    return f"{dt.day:02d} {_MONTHS_ID[dt.month]} {dt.year} {dt:%H:%M:%S}"


def _render_document(store: Store, profile: StudentProfile, term: Term,
                     plan: RegistrationPlan, stamp: datetime) -> str:
    rows = []
    active_count = 0
    for i, line in enumerate(plan.lines, start=1):
        section = store.sections.get(line.section_id)
        course = store.course_of_section(line.section_id) if section else None
        if section is None or course is None:
            continue
        if line.active:
            active_count += 1
        rows.append(
            (i, course.code, course.title, _STATUS_DISPLAY[line.status],
             section.class_label, course.credits)
        )
    total = store.active_credits_of(plan)

    title_w = max([len(r[2]) for r in rows], default=16)
    title_w = max(title_w, len("NAMA MATA KULIAH"))
    out = []
    out.append(f"Kartu Rencana Studi Mahasiswa, per {format_stamp(stamp)}")
    out.append(term.display_name())
    out.append("")
    out.append("Data Mahasiswa")
    out.append(f"NIM / Nama      : {profile.nim} / {profile.name}")
    out.append(f"Program Studi   : {profile.program}")
    out.append("")
    out.append(f"Status pendaftaran per {format_stamp(stamp)}")
    out.append(
        f"Status keuangan : {profile.financial_status.value}"
        f" (maksimum pengambilan {profile.credit_cap} SKS)"
    )
    case = "Tidak ada" if profile.case_status is CaseStatus.NONE else profile.case_status.value
    permit = "Ada" if profile.over_credit_permit else "Tidak ada"
    out.append(f"Status kasus    : {case}")
    out.append(f"Surat SKS lebih : {permit}")
    out.append("")
    out.append("RENCANA STUDI")
    out.append(f"{'No.':<5}{'KD MK':<8}{'NAMA MATA KULIAH':<{title_w + 2}}{'STATUS':<8}{'KELAS':<7}SKS")
    for no, code, title, status, label, credits in rows:
        out.append(f"{str(no) + '.':<5}{code:<8}{title:<{title_w + 2}}{status:<8}{label:<7}{credits}")
    out.append("")
    out.append("REKAPITULASI RENCANA STUDI")
    out.append(f"Jumlah mata kuliah : {active_count}")
    out.append(f"Jumlah SKS : {total}")
    out.append("")
    out.append(f"Sudah pernah cetak KRS sebanyak {plan.print_count} kali.")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- codecs

def _encode_window(w: TimeWindow) -> dict:
    return {"open_at": w.open_at.isoformat(), "close_at": w.close_at.isoformat()}


def _decode_window(raw: dict) -> TimeWindow:
    return TimeWindow(
        open_at=datetime.fromisoformat(raw["open_at"]),
        close_at=datetime.fromisoformat(raw["close_at"]),
    )


def _encode_term(t: Term) -> dict:
    return {
        "term_code": t.term_code,
        "registration_window": _encode_window(t.registration_window),
        "payment_window": _encode_window(t.payment_window),
        "min_enrollment": t.min_enrollment,
        "change_open_at": t.change_open_at.isoformat() if t.change_open_at else None,
    }


def _decode_term(raw: dict) -> Term:
    return Term(
        term_code=raw["term_code"],
        registration_window=_decode_window(raw["registration_window"]),
        payment_window=_decode_window(raw["payment_window"]),
        min_enrollment=int(raw.get("min_enrollment", 0)),
        change_open_at=(
            datetime.fromisoformat(raw["change_open_at"]) if raw.get("change_open_at") else None
        ),
    )


def _encode_profile(p: StudentProfile) -> dict:
    return {
        "nim": p.nim, "name": p.name, "program": p.program,
        "financial_status": p.financial_status.value,
        "case_status": p.case_status.value,
        "credit_cap": p.credit_cap,
        "over_credit_permit": p.over_credit_permit,
    }


def _decode_profile(raw: dict) -> StudentProfile:
    return StudentProfile(
        nim=raw["nim"], name=raw["name"], program=raw.get("program", ""),
        financial_status=FinancialStatus(raw["financial_status"]),
        case_status=CaseStatus(raw["case_status"]),
        credit_cap=int(raw["credit_cap"]),
        over_credit_permit=bool(raw["over_credit_permit"]),
    )


def _encode_record(r: AcademicRecord) -> dict:
    return {
        "nim": r.nim,
        "completed": sorted([code, passed] for code, passed in r.completed),
        "credits_passed": r.credits_passed,
        "credits_total": r.credits_total,
        "gpa_semester": r.gpa_semester,
        "gpa_cumulative": r.gpa_cumulative,
    }


def _decode_record(raw: dict) -> AcademicRecord:
    return AcademicRecord(
        nim=raw["nim"],
        completed=frozenset((code, bool(passed)) for code, passed in raw.get("completed", [])),
        credits_passed=int(raw.get("credits_passed", 0)),
        credits_total=int(raw.get("credits_total", 0)),
        gpa_semester=raw.get("gpa_semester", ""),
        gpa_cumulative=raw.get("gpa_cumulative", ""),
    )


def _encode_credential(c: Credential) -> dict:
    return {"principal": c.principal, "role": c.role.value, "name": c.name,
            "salt": c.salt, "hash": c.pw_hash}


def _decode_credential(raw: dict) -> Credential:
    return Credential(principal=raw["principal"], role=Role(raw["role"]),
                      name=raw.get("name", ""), salt=raw["salt"], pw_hash=raw["hash"])


def _encode_plan(p: RegistrationPlan) -> dict:
    return {
        "nim": p.nim, "term_code": p.term_code, "print_count": p.print_count,
        "lines": [
            {"section_id": l.section_id, "status": l.status.value,
             "committed_at": l.committed_at.isoformat()}
            for l in p.lines
        ],
    }


def _decode_plan(raw: dict) -> RegistrationPlan:
    return RegistrationPlan(
        nim=raw["nim"], term_code=raw["term_code"],
        print_count=int(raw.get("print_count", 0)),
        lines=tuple(
            PlanLine(
                section_id=l["section_id"],
                status=LineStatus(l["status"]),
                committed_at=datetime.fromisoformat(l["committed_at"]),
            )
            for l in raw.get("lines", [])
        ),
    )


def _encode_announcement(a: Announcement) -> dict:
    return {"id": a.id, "posted_at": a.posted_at.isoformat(), "author": a.author,
            "title": a.title, "body": a.body}


def _decode_announcement(raw: dict) -> Announcement:
    return Announcement(id=int(raw["id"]), posted_at=datetime.fromisoformat(raw["posted_at"]),
                        author=raw["author"], title=raw["title"], body=raw["body"])


def _encode_notification(n: Notification) -> dict:
    return {"nim": n.nim, "at": n.at.isoformat(), "section_id": n.section_id,
            "message": n.message}


def _decode_notification(raw: dict) -> Notification:
    return Notification(nim=raw["nim"], at=datetime.fromisoformat(raw["at"]),
                        section_id=raw["section_id"], message=raw["message"])


_APPLIERS = {
    AuditAction.ADD_COMMITTED: Store._apply_add,
    AuditAction.WITHDRAWN: Store._apply_withdraw,
    AuditAction.SECTION_CANCELLED: Store._apply_section_cancelled,
    AuditAction.SECTION_CONFIRMED: Store._apply_section_confirmed,
    AuditAction.PLAN_PRINTED: Store._apply_plan_printed,
    AuditAction.PROFILE_CHANGED: Store._apply_profile_changed,
    AuditAction.ANNOUNCEMENT_POSTED: Store._apply_announcement,
    AuditAction.SESSION_OPENED: Store._apply_session,
}


def init_state_dir(path: str | Path, timezone: str = DEFAULT_TZ) -> Path:
    """Create a fresh state directory with an empty snapshot and log."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    (root / CATALOG_DIR).mkdir(exist_ok=True)
    log = root / AUDIT_NAME
    if not log.exists():
        log.touch()
    snap = root / SNAPSHOT_NAME
    if not snap.exists():
        with Store(root, timezone=timezone) as store:
            store.save_snapshot()
    return root
