"""Shared fixtures: the study-card catalog, a populated store, a fake clock."""

from __future__ import annotations

from datetime import datetime, timedelta
from pathlib import Path
from zoneinfo import ZoneInfo

import pytest

from krs.catalog import import_catalog
from krs.domain import StudentProfile, Term, TimeWindow
from krs.store import Role, Store, init_state_dir

DATA = Path(__file__).parent / "data"
TZ = ZoneInfo("Asia/Jakarta")

# The reference student's eight picks: classes 01,02,01,01,02,01,01,09.
CARD_PICKS = [
    "ET3020-01", "ET3030-02", "ET3008-01", "ET3002-01",
    "ET3001-02", "EL3001-01", "ET5062-01", "KU4026-09",
]
CARD_NIM = "13205012"
CARD_TERM = "20072"


def ts(*args) -> datetime:
    return datetime(*args, tzinfo=TZ)


class FakeClock:
    """Deterministic, manually advanced clock."""

    def __init__(self, start: datetime):
        self.now = start

    def __call__(self) -> datetime:
        return self.now

    def set(self, value: datetime):
        self.now = value

    def tick(self, seconds: int = 1):
        self.now += timedelta(seconds=seconds)


@pytest.fixture
def clock() -> FakeClock:
    return FakeClock(ts(2008, 2, 22, 10, 0, 0))


@pytest.fixture(scope="session")
def card_csv() -> tuple[str, str]:
    return (
        (DATA / "card_courses.csv").read_text(encoding="utf-8"),
        (DATA / "card_sections.csv").read_text(encoding="utf-8"),
    )


@pytest.fixture
def card_catalog(card_csv):
    catalog, issues = import_catalog(*card_csv)
    assert not issues, issues
    return catalog


def make_term_20072() -> Term:
    return Term(
        term_code=CARD_TERM,
        registration_window=TimeWindow(ts(2008, 2, 20, 0, 0, 0), ts(2008, 3, 1, 0, 0, 0)),
        payment_window=TimeWindow(ts(2008, 2, 1, 0, 0, 0), ts(2008, 3, 10, 0, 0, 0)),
        min_enrollment=10,
        change_open_at=ts(2008, 2, 24, 0, 0, 0),
    )


def build_store(state_dir, catalog, clock) -> Store:
    """A store with the card catalog, term 20072, and the reference student."""
    init_state_dir(state_dir)
    store = Store(state_dir, clock=clock)
    store.install_catalog(catalog)
    store.upsert_term(make_term_20072())
    store.upsert_profile(
        StudentProfile(nim=CARD_NIM, name="Dian Fatma Anggita", program="Teknik Elektro"),
        actor="setup",
    )
    store.set_credential(CARD_NIM, "student-pw", Role.STUDENT, "Dian Fatma Anggita")
    store.set_credential("staff1", "staff-pw", Role.STAFF, "Bagian Akademik")
    store.set_credential("lect-a", "lect-pw", Role.LECTURER, "Lecturer A")
    return store


@pytest.fixture
def store(tmp_path, card_catalog, clock):
    built = build_store(tmp_path / "state", card_catalog, clock)
    yield built
    built.close()


def add_students(store: Store, nims, actor="setup"):
    for nim in nims:
        store.upsert_profile(StudentProfile(nim=nim, name=f"Student {nim}"), actor=actor)
