"""CLI behaviour: commands, exit codes, file outputs, audit parity."""

import json
from pathlib import Path

import pytest

from krs import cli as krs_cli
from krs.offering import demand_report
from krs.rules import AddRequest, RegistrationEngine
from krs.store import Store

from conftest import CARD_TERM, DATA, FakeClock, add_students, ts

AT = ts(2008, 2, 22, 10, 0, 0)


def run(args, state_dir):
    return krs_cli.main(["--state-dir", str(state_dir)] + args)


@pytest.fixture
def state_dir(tmp_path, monkeypatch):
    # pin the CLI's wall clock so timestamps are reproducible
    monkeypatch.setattr("krs.store._wall_now", lambda tz: AT)
    path = tmp_path / "state"
    assert run(["init"], path) == 0
    return path


def bootstrap(state_dir):
    """init + catalog + term via the CLI itself."""
    assert run(["catalog", "import",
                "--courses", str(DATA / "card_courses.csv"),
                "--sections", str(DATA / "card_sections.csv")], state_dir) == 0
    assert run(["term", "create", CARD_TERM,
                "--reg-open", "2008-02-20T00:00:00",
                "--reg-close", "2008-03-01T00:00:00",
                "--pay-open", "2008-02-01T00:00:00",
                "--pay-close", "2008-03-10T00:00:00",
                "--change-open", "2008-02-24T00:00:00",
                "--min-enroll", "10"], state_dir) == 0


def write_students_csv(path: Path, rows):
    header = ("nim,name,program,credit_cap,over_credit_permit,financial_status,"
              "case_status,credits_passed,credits_total,password\n")
    path.write_text(header + "".join(r + "\n" for r in rows), encoding="utf-8")
    return path


class TestInitAndImport:
    def test_init_creates_layout(self, state_dir):
        assert (state_dir / "snapshot.json").exists()
        assert (state_dir / "audit.log").exists()
        assert (state_dir / "catalog").is_dir()

    def test_catalog_import_reports_counts(self, state_dir, capsys):
        bootstrap(state_dir)
        out = capsys.readouterr().out
        assert "8 courses, 11 sections imported" in out

    def test_import_bad_file_exits_2_with_every_issue(self, state_dir, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("code,title,credits,prereqs\nA,a,3,GHOST\nB,b,x,\nC,c,2,\nC,cc,3,\n")
        code = run(["catalog", "import", "--courses", str(bad)], state_dir)
        assert code == 2
        err = capsys.readouterr().err
        assert "PARSE_ERROR" in err and "DUPLICATE_CODE" in err and "UNKNOWN_PREREQ" in err

    def test_validate_agrees_with_import(self, state_dir, tmp_path):
        good = DATA / "card_courses.csv"
        bad = tmp_path / "bad.csv"
        bad.write_text("code,title,credits,prereqs\nA,a,3,A\n")
        cases = [
            (good, 0),
            (bad, 2),
        ]
        for path, expected_validate in cases:
            v = krs_cli.main(["--state-dir", str(state_dir), "catalog", "validate",
                              "--courses", str(path)])
            i = krs_cli.main(["--state-dir", str(state_dir), "catalog", "import",
                              "--courses", str(path)])
            assert v == expected_validate
            assert (v == 0) == (i == 0)

    def test_validate_import_agreement_on_random_files(self, tmp_path, monkeypatch):
        """validate exits 2 exactly when import would reject (agreement)."""
        import random
        monkeypatch.setattr("krs.store._wall_now", lambda tz: AT)
        rng = random.Random(314)
        glyphs = ["A", "B", "C", "GHOST"]
        for case in range(25):
            rows = ["code,title,credits,prereqs"]
            for name in ["A", "B", "C"]:
                credits = rng.choice(["3", "0", "x"]) if rng.random() < 0.3 else "3"
                prereqs = ";".join(p for p in glyphs if rng.random() < 0.25)
                rows.append(f"{name},t,{credits},{prereqs}")
            if rng.random() < 0.2:
                rows.append("A,dup,2,")
            path = tmp_path / f"cat{case}.csv"
            path.write_text("".join(r + "\n" for r in rows))
            state = tmp_path / f"state{case}"
            assert run(["init"], state) == 0
            v = run(["catalog", "validate", "--courses", str(path)], state)
            i = run(["catalog", "import", "--courses", str(path)], state)
            assert v in (0, 2) and i in (0, 2)
            assert v == i, path.read_text()


class TestTermCommands:
    def test_create_show_round_trip(self, state_dir, capsys):
        bootstrap(state_dir)
        capsys.readouterr()
        assert run(["term", "show", CARD_TERM, "--json"], state_dir) == 0
        shown = json.loads(capsys.readouterr().out)
        assert shown["term_code"] == CARD_TERM
        assert shown["registration_window"]["open_at"] == "2008-02-20T00:00:00+07:00"
        assert shown["registration_window"]["close_at"] == "2008-03-01T00:00:00+07:00"
        assert shown["payment_window"]["open_at"] == "2008-02-01T00:00:00+07:00"
        assert shown["payment_window"]["close_at"] == "2008-03-10T00:00:00+07:00"
        assert shown["change_open_at"] == "2008-02-24T00:00:00+07:00"
        assert shown["min_enrollment"] == 10

    def test_set_window_updates_only_given_fields(self, state_dir, capsys):
        bootstrap(state_dir)
        assert run(["term", "set-window", CARD_TERM,
                    "--reg-close", "2008-03-02T00:00:00"], state_dir) == 0
        capsys.readouterr()
        run(["term", "show", CARD_TERM, "--json"], state_dir)
        shown = json.loads(capsys.readouterr().out)
        assert shown["registration_window"]["close_at"] == "2008-03-02T00:00:00+07:00"
        assert shown["registration_window"]["open_at"] == "2008-02-20T00:00:00+07:00"

    def test_bad_term_code_exits_2(self, state_dir):
        code = run(["term", "create", "20079",
                    "--reg-open", "2008-02-20T00:00:00",
                    "--reg-close", "2008-03-01T00:00:00",
                    "--pay-open", "2008-02-01T00:00:00",
                    "--pay-close", "2008-03-10T00:00:00"], state_dir)
        assert code == 2

    def test_bad_timestamp_exits_2(self, state_dir):
        code = run(["term", "create", CARD_TERM,
                    "--reg-open", "someday",
                    "--reg-close", "2008-03-01T00:00:00",
                    "--pay-open", "2008-02-01T00:00:00",
                    "--pay-close", "2008-03-10T00:00:00"], state_dir)
        assert code == 2


class TestStudentsAndUsers:
    def test_student_import_and_overrides(self, state_dir, tmp_path, capsys):
        bootstrap(state_dir)
        students = write_students_csv(tmp_path / "students.csv", [
            "13205012,Dian Fatma Anggita,Teknik Elektro,24,false,Clear,None,91,98,pw1",
            "13205013,Second Student,Teknik Elektro,24,false,Clear,None,0,0,pw2",
        ])
        records = tmp_path / "records.csv"
        records.write_text("nim,course_code,passed\n13205012,EL3001,true\n")
        assert run(["student", "import", "--students", str(students),
                    "--records", str(records)], state_dir) == 0
        assert "2 students imported" in capsys.readouterr().out

        assert run(["student", "set-cap", "13205012", "21"], state_dir) == 0
        assert run(["student", "set-permit", "13205012", "on"], state_dir) == 0
        assert run(["student", "set-hold", "13205013", "--financial", "hold"], state_dir) == 0

        with Store(state_dir) as store:
            assert store.profiles["13205012"].credit_cap == 21
            assert store.profiles["13205012"].over_credit_permit is True
            assert store.profiles["13205013"].financial_status.value == "Hold"
            assert store.records["13205012"].passed("EL3001")
            assert store.verify_credential("13205012", "pw1") is not None

    def test_unknown_student_exits_2(self, state_dir):
        bootstrap(state_dir)
        assert run(["student", "set-cap", "ghost", "20"], state_dir) == 2

    def test_records_for_unknown_courses_rejected(self, state_dir, tmp_path, capsys):
        bootstrap(state_dir)
        students = write_students_csv(tmp_path / "students.csv", [
            "13205012,Dian,Teknik Elektro,24,false,Clear,None,0,0,pw1",
        ])
        records = tmp_path / "records.csv"
        records.write_text("nim,course_code,passed\n13205012,NOPE999,true\n")
        code = run(["student", "import", "--students", str(students),
                    "--records", str(records)], state_dir)
        assert code == 2
        assert "NOPE999" in capsys.readouterr().err

    def test_user_add_staff(self, state_dir):
        assert run(["user", "add", "staff9", "--role", "staff",
                    "--name", "Ops", "--password", "pw"], state_dir) == 0
        with Store(state_dir) as store:
            assert store.verify_credential("staff9", "pw").role.value == "Staff"


class TestDemandAndSections:
    def seed_enrollment(self, state_dir):
        bootstrap(state_dir)
        with Store(state_dir, clock=FakeClock(AT)) as store:
            add_students(store, [f"s{i:02d}" for i in range(12)])
            engine = RegistrationEngine(store)
            for i in range(12):
                assert engine.commit_add(
                    AddRequest(f"s{i:02d}", CARD_TERM, "ET3020-01", AT)).accepted
            for i in range(4):
                assert engine.commit_add(
                    AddRequest(f"s{i:02d}", CARD_TERM, "ET3030-02", AT)).accepted
            store.save_snapshot()

    def test_demand_json_matches_library(self, state_dir, capsys):
        self.seed_enrollment(state_dir)
        capsys.readouterr()
        assert run(["demand", CARD_TERM, "--json"], state_dir) == 0
        cli_rows = json.loads(capsys.readouterr().out)
        with Store(state_dir) as store:
            lib_rows = [r.__dict__ for r in demand_report(store, CARD_TERM)]
        assert cli_rows == lib_rows

    def test_below_threshold_filter_matches_library(self, state_dir, capsys):
        self.seed_enrollment(state_dir)
        capsys.readouterr()
        assert run(["demand", CARD_TERM, "--below-threshold", "--json"], state_dir) == 0
        cli_rows = json.loads(capsys.readouterr().out)
        with Store(state_dir) as store:
            lib_rows = [r.__dict__ for r in demand_report(store, CARD_TERM)
                        if r.below_threshold]
        assert cli_rows == lib_rows
        assert all(r["below_threshold"] for r in cli_rows)
        assert {r["section_id"] for r in cli_rows} == \
            {r["section_id"] for r in lib_rows}

    def test_csv_and_chart_written(self, state_dir, tmp_path, capsys):
        self.seed_enrollment(state_dir)
        csv_path = tmp_path / "demand.csv"
        chart_path = tmp_path / "demand.png"
        assert run(["demand", CARD_TERM, "--csv", str(csv_path),
                    "--chart", str(chart_path)], state_dir) == 0
        lines = csv_path.read_text().splitlines()
        assert lines[0].startswith("course_code,section_id")
        assert len(lines) == 1 + 11
        assert chart_path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_section_cancel_outputs_cascade_summary(self, state_dir, capsys):
        self.seed_enrollment(state_dir)
        capsys.readouterr()
        assert run(["section", "cancel", "ET3030-02", "--actor", "staff1"], state_dir) == 0
        out = capsys.readouterr().out
        assert "4 student(s) notified" in out
        assert run(["section", "cancel", "ET3030-02", "--actor", "staff1"], state_dir) == 2

    def test_confirm(self, state_dir, capsys):
        self.seed_enrollment(state_dir)
        assert run(["section", "confirm", "ET3020-01", "--actor", "staff1"], state_dir) == 0

    def test_unknown_term_exits_2(self, state_dir):
        bootstrap(state_dir)
        assert run(["demand", "19011"], state_dir) == 2


class TestAuditTail:
    def test_tail_shows_recent_entries(self, state_dir, capsys):
        bootstrap(state_dir)
        assert run(["user", "add", "staff9", "--role", "staff", "--password", "x"],
                   state_dir) == 0
        capsys.readouterr()
        assert run(["audit", "tail", "-n", "5"], state_dir) == 0
        # no audited events yet beyond none: catalog/term/user are snapshot-level
        assert run(["student", "set-cap", "x", "1"], state_dir) == 2

    def test_audit_entries_match_api_equivalents(self, state_dir, tmp_path, card_catalog):
        """CLI `section cancel` writes the same entry the API decision does."""
        from fastapi.testclient import TestClient
        from krs.service import create_app
        from conftest import build_store

        # CLI side
        self_seed = TestDemandAndSections()
        self_seed.seed_enrollment(state_dir)
        assert run(["section", "cancel", "ET3020-01", "--actor", "staff1"], state_dir) == 0
        with Store(state_dir) as store:
            cli_entry = [e for e in store.audit_tail(100)
                         if e.action.value == "SectionCancelled"][-1]

        # API side, same fixture and clock
        clock = FakeClock(AT)
        api_store = build_store(tmp_path / "api-state", card_catalog, clock)
        add_students(api_store, [f"s{i:02d}" for i in range(12)])
        engine = RegistrationEngine(api_store)
        for i in range(12):
            engine.commit_add(AddRequest(f"s{i:02d}", CARD_TERM, "ET3020-01", AT))
        app = create_app(api_store)
        with TestClient(app) as http:
            token = http.post("/api/v1/sessions",
                              json={"principal": "staff1", "password": "staff-pw"}
                              ).json()["token"]
            resp = http.post("/api/v1/staff/sections/ET3020-01/decision",
                             headers={"Authorization": f"Bearer {token}"},
                             json={"decision": "Cancel"})
            assert resp.status_code == 200
        api_entry = [e for e in api_store.audit_tail(100)
                     if e.action.value == "SectionCancelled"][-1]
        api_store.close()

        assert cli_entry.action == api_entry.action
        assert cli_entry.actor == api_entry.actor
        assert cli_entry.payload == api_entry.payload


class TestServeSettings:
    def test_flag_beats_config_beats_default(self):
        from krs.cli import resolve_serve_settings
        from krs.config import ServiceConfig
        cfg = ServiceConfig(listen="0.0.0.0:9000", state_dir="/from-config")
        # state dir left at its CLI default: the config file wins
        assert resolve_serve_settings(cfg, "./krs-state", True, None) == \
            ("/from-config", "0.0.0.0", 9000)
        # explicitly given flag/env wins over the config file
        assert resolve_serve_settings(cfg, "/from-flag", False, None)[0] == "/from-flag"
        # --listen beats the config listen
        assert resolve_serve_settings(cfg, "/x", False, "127.0.0.1:7001")[1:] == \
            ("127.0.0.1", 7001)


class TestExitCodes:
    def test_unknown_command_is_usage_error(self, state_dir):
        assert run(["frobnicate"], state_dir) == 1

    def test_missing_required_option_is_usage_error(self, state_dir):
        assert run(["catalog", "import"], state_dir) == 1

    def test_missing_state_dir_is_io_error(self, tmp_path):
        code = krs_cli.main(["--state-dir", str(tmp_path / "void"), "audit", "tail"])
        assert code == 3

    def test_locked_state_dir_is_io_error(self, state_dir):
        holder = Store(state_dir)
        try:
            assert run(["audit", "tail"], state_dir) == 3
        finally:
            holder.close()
