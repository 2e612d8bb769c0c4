"""Administrative command line: term setup, catalog import, reports, serving.

The CLI works on the state directory directly (never over HTTP) and
refuses to run while another process holds the directory lock. Exit
codes: 0 ok, 1 usage error, 2 validation error, 3 I/O or state error.
"""

from __future__ import annotations

import csv
import json
import sys
from datetime import datetime
from pathlib import Path
from typing import Optional
from zoneinfo import ZoneInfo

import click

from . import report
from .catalog import UnknownTermError, import_catalog
from .config import load_config
from .domain import (
    AcademicRecord,
    CaseStatus,
    DomainError,
    FinancialStatus,
    StudentProfile,
    Term,
    TimeWindow,
)
from .offering import (
    AlreadyDecidedError,
    Decision,
    UnknownSectionError,
    decide_section,
    demand_report,
)
from .store import DEFAULT_TZ, Role, Store, StoreError, init_state_dir

EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_IO = 3

STUDENTS_HEADER = ["nim", "name", "program", "credit_cap", "over_credit_permit",
                   "financial_status", "case_status", "credits_passed",
                   "credits_total", "password"]
RECORDS_HEADER = ["nim", "course_code", "passed"]

_TRUTHY = {"1", "true", "yes", "on"}


class ValidationFailure(Exception):
    """Bad input data; maps to exit code 2."""


def parse_ts(raw: str, tz: ZoneInfo) -> datetime:
    """ISO-8601 timestamp; naive values are taken in the configured zone."""
    text = raw.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        value = datetime.fromisoformat(text)
    except ValueError:
        raise ValidationFailure(f"bad timestamp {raw!r}, expected ISO-8601") from None
    if value.tzinfo is None:
        value = value.replace(tzinfo=tz)
    return value


@click.group()
@click.option("--state-dir", envvar="KRS_STATE_DIR", default="./krs-state",
              show_default=True, help="State directory (env: KRS_STATE_DIR).")
@click.option("--tz", "timezone", envvar="KRS_TZ", default=DEFAULT_TZ, show_default=True,
              help="Timezone for timestamps (env: KRS_TZ).")
@click.pass_context
def cli(ctx, state_dir: str, timezone: str):
    """Course-registration administration."""
    ctx.ensure_object(dict)
    ctx.obj["state_dir"] = state_dir
    ctx.obj["timezone"] = timezone
    ctx.obj["tz"] = ZoneInfo(timezone)


def open_store(ctx) -> Store:
    return Store(ctx.obj["state_dir"], timezone=ctx.obj["timezone"])


# ---------------------------------------------------------------- init / serve

@cli.command()
@click.pass_context
def init(ctx):
    """Create a fresh state directory."""
    path = init_state_dir(ctx.obj["state_dir"], timezone=ctx.obj["timezone"])
    click.echo(f"initialized state directory {path}")


def resolve_serve_settings(cfg, state_dir_flag: str, state_dir_defaulted: bool,
                           listen_flag: Optional[str]) -> tuple[str, str, int]:
    """Precedence: explicit flag/env beats the config file beats defaults."""
    state_dir = cfg.state_dir if state_dir_defaulted else state_dir_flag
    listen = listen_flag or cfg.listen
    host, _, port = listen.rpartition(":")
    return state_dir, host or "127.0.0.1", int(port)


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON config file; env vars override it.")
@click.option("--listen", default=None, help="host:port to bind (overrides config).")
@click.option("--ui-dir", default=None, type=click.Path(exists=True, file_okay=False),
              help="Static directory with the web UI build.")
@click.pass_context
def serve(ctx, config_path: Optional[str], listen: Optional[str], ui_dir: Optional[str]):
    """Run the HTTP API (holds the state directory lock until stopped)."""
    import uvicorn

    from .service import create_app

    cfg = load_config(config_path)
    parent = ctx.parent or ctx
    defaulted = parent.get_parameter_source("state_dir") is click.core.ParameterSource.DEFAULT
    state_dir, host, port = resolve_serve_settings(cfg, ctx.obj["state_dir"], defaulted, listen)
    store = Store(state_dir, timezone=cfg.timezone)
    app = create_app(store, require_pass=cfg.require_pass,
                     session_ttl_min=cfg.session_ttl_min, ui_dir=ui_dir)
    click.echo(f"serving on http://{host}:{port} (state: {state_dir})")
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        store.save_snapshot()
        store.close()


# ---------------------------------------------------------------- terms

@cli.group()
def term():
    """Create and inspect terms and their windows."""


@term.command("create")
@click.argument("code")
@click.option("--reg-open", required=True)
@click.option("--reg-close", required=True)
@click.option("--pay-open", required=True)
@click.option("--pay-close", required=True)
@click.option("--change-open", default=None,
              help="Start of the add/change period; lines after it are Added.")
@click.option("--min-enroll", default=10, show_default=True, type=int)
@click.pass_context
def term_create(ctx, code, reg_open, reg_close, pay_open, pay_close, change_open, min_enroll):
    """Create a term: CODE is YYYYS, e.g. 20072."""
    tz = ctx.obj["tz"]
    try:
        new_term = Term(
            term_code=code,
            registration_window=TimeWindow(parse_ts(reg_open, tz), parse_ts(reg_close, tz)),
            payment_window=TimeWindow(parse_ts(pay_open, tz), parse_ts(pay_close, tz)),
            min_enrollment=min_enroll,
            change_open_at=parse_ts(change_open, tz) if change_open else None,
        )
    except DomainError as exc:
        raise ValidationFailure(str(exc)) from None
    with open_store(ctx) as store:
        store.upsert_term(new_term)
    click.echo(f"term {code} created ({new_term.display_name()})")


def _term_lines(t: Term) -> list[str]:
    return [
        f"term          : {t.term_code} ({t.display_name()})",
        f"registration  : {t.registration_window.open_at.isoformat()} .. "
        f"{t.registration_window.close_at.isoformat()}",
        f"payment       : {t.payment_window.open_at.isoformat()} .. "
        f"{t.payment_window.close_at.isoformat()}",
        f"change opens  : {t.change_open_at.isoformat() if t.change_open_at else '-'}",
        f"min enrollment: {t.min_enrollment}",
    ]


@term.command("show")
@click.argument("code")
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
def term_show(ctx, code, as_json):
    """Print one term's windows and threshold."""
    with open_store(ctx) as store:
        found = store.term(code)
        if found is None:
            raise ValidationFailure(f"unknown term: {code}")
        if as_json:
            from .store import _encode_term
            click.echo(json.dumps(_encode_term(found), indent=2))
        else:
            for line in _term_lines(found):
                click.echo(line)


@term.command("set-window")
@click.argument("code")
@click.option("--reg-open", default=None)
@click.option("--reg-close", default=None)
@click.option("--pay-open", default=None)
@click.option("--pay-close", default=None)
@click.option("--change-open", default=None)
@click.option("--min-enroll", default=None, type=int)
@click.pass_context
def term_set_window(ctx, code, reg_open, reg_close, pay_open, pay_close, change_open, min_enroll):
    """Adjust windows of an existing term."""
    tz = ctx.obj["tz"]
    with open_store(ctx) as store:
        found = store.term(code)
        if found is None:
            raise ValidationFailure(f"unknown term: {code}")
        reg = TimeWindow(
            parse_ts(reg_open, tz) if reg_open else found.registration_window.open_at,
            parse_ts(reg_close, tz) if reg_close else found.registration_window.close_at,
        )
        pay = TimeWindow(
            parse_ts(pay_open, tz) if pay_open else found.payment_window.open_at,
            parse_ts(pay_close, tz) if pay_close else found.payment_window.close_at,
        )
        try:
            updated = Term(
                term_code=code, registration_window=reg, payment_window=pay,
                min_enrollment=found.min_enrollment if min_enroll is None else min_enroll,
                change_open_at=parse_ts(change_open, tz) if change_open else found.change_open_at,
            )
        except DomainError as exc:
            raise ValidationFailure(str(exc)) from None
        store.upsert_term(updated)
    click.echo(f"term {code} updated")


# ---------------------------------------------------------------- catalog

def _read_catalog_files(courses_path: str, sections_path: Optional[str]):
    courses_text = Path(courses_path).read_text(encoding="utf-8")
    sections_text = Path(sections_path).read_text(encoding="utf-8") if sections_path else ""
    return import_catalog(courses_text, sections_text)


@cli.group()
def catalog():
    """Import and validate the course/section files."""


@catalog.command("import")
@click.option("--courses", "courses_path", required=True, type=click.Path(exists=True))
@click.option("--sections", "sections_path", default=None, type=click.Path(exists=True))
@click.pass_context
def catalog_import(ctx, courses_path, sections_path):
    """Validate and install the catalog files into the state directory."""
    loaded, issues = _read_catalog_files(courses_path, sections_path)
    if loaded is None:
        for issue in issues:
            click.echo(str(issue), err=True)
        raise ValidationFailure(f"catalog rejected with {len(issues)} problem(s)")
    with open_store(ctx) as store:
        store.install_catalog(loaded)
    click.echo(f"{len(loaded.courses)} courses, {len(loaded.sections)} sections imported")


@catalog.command("validate")
@click.option("--courses", "courses_path", required=True, type=click.Path(exists=True))
@click.option("--sections", "sections_path", default=None, type=click.Path(exists=True))
def catalog_validate(courses_path, sections_path):
    """Check the files without touching any state."""
    loaded, issues = _read_catalog_files(courses_path, sections_path)
    if loaded is None:
        for issue in issues:
            click.echo(str(issue), err=True)
        raise ValidationFailure(f"catalog rejected with {len(issues)} problem(s)")
    click.echo(f"OK: {len(loaded.courses)} courses, {len(loaded.sections)} sections")


# ---------------------------------------------------------------- students & users

def _parse_bool_cell(raw: str) -> bool:
    return raw.strip().lower() in _TRUTHY


@cli.group()
def student():
    """Student profiles, records, and per-student overrides."""


@student.command("import")
@click.option("--students", "students_path", required=True, type=click.Path(exists=True))
@click.option("--records", "records_path", default=None, type=click.Path(exists=True))
@click.pass_context
def student_import(ctx, students_path, records_path):
    """Load student profiles (and optionally completed-course records).

    students file: nim,name,program,credit_cap,over_credit_permit,
    financial_status,case_status,credits_passed,credits_total,password
    records file: nim,course_code,passed
    """
    completed: dict[str, set] = {}
    if records_path:
        with open(records_path, encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [c.strip().lower() for c in header] != RECORDS_HEADER:
                raise ValidationFailure(f"records file must start with header {','.join(RECORDS_HEADER)}")
            for row in reader:
                if not row or all(not c.strip() for c in row):
                    continue
                nim, code, passed = (c.strip() for c in row)
                completed.setdefault(nim, set()).add((code, _parse_bool_cell(passed)))

    count = 0
    with open_store(ctx) as store:
        # completed entries must reference catalog courses, or prerequisite
        # checks would silently never match them
        unknown = sorted({
            code for entries in completed.values()
            for code, _ in entries if code not in store.catalog.courses
        })
        if unknown:
            raise ValidationFailure(
                "records reference courses missing from the catalog: " + ", ".join(unknown))
        with open(students_path, encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [c.strip().lower() for c in header] != STUDENTS_HEADER:
                raise ValidationFailure(f"students file must start with header {','.join(STUDENTS_HEADER)}")
            for row in reader:
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != len(STUDENTS_HEADER):
                    raise ValidationFailure(f"students row has {len(row)} fields: {row!r}")
                (nim, name, program, cap, permit, financial, case,
                 credits_passed, credits_total, password) = (c.strip() for c in row)
                try:
                    profile = StudentProfile(
                        nim=nim, name=name, program=program,
                        financial_status=FinancialStatus(financial or "Clear"),
                        case_status=CaseStatus(case or "None"),
                        credit_cap=int(cap) if cap else 24,
                        over_credit_permit=_parse_bool_cell(permit),
                    )
                    record = AcademicRecord(
                        nim=nim,
                        completed=frozenset(completed.get(nim, set())),
                        credits_passed=int(credits_passed or 0),
                        credits_total=int(credits_total or 0),
                    )
                except (DomainError, ValueError) as exc:
                    raise ValidationFailure(f"student {nim}: {exc}") from None
                store.upsert_profile(profile, actor="cli")
                store.upsert_record(record, save=False)
                if password:
                    store.set_credential(nim, password, Role.STUDENT, name, save=False)
                count += 1
        store.save_snapshot()
    click.echo(f"{count} students imported")


def _change_profile(ctx, nim: str, change) -> StudentProfile:
    with open_store(ctx) as store:
        profile = store.profiles.get(nim)
        if profile is None:
            raise ValidationFailure(f"unknown student: {nim}")
        try:
            updated = change(profile)
        except DomainError as exc:
            raise ValidationFailure(str(exc)) from None
        store.upsert_profile(updated, actor="cli")
        store.save_snapshot()
        return updated


@student.command("set-cap")
@click.argument("nim")
@click.argument("cap", type=int)
@click.pass_context
def student_set_cap(ctx, nim, cap):
    """Override a student's SKS cap."""
    from dataclasses import replace
    updated = _change_profile(ctx, nim, lambda p: replace(p, credit_cap=cap))
    click.echo(f"student {nim}: credit cap set to {updated.credit_cap} SKS")


@student.command("set-permit")
@click.argument("nim")
@click.argument("state", type=click.Choice(["on", "off"]))
@click.pass_context
def student_set_permit(ctx, nim, state):
    """Grant or revoke the over-credit permit."""
    from dataclasses import replace
    updated = _change_profile(ctx, nim, lambda p: replace(p, over_credit_permit=state == "on"))
    click.echo(f"student {nim}: over-credit permit {'granted' if updated.over_credit_permit else 'revoked'}")


@student.command("set-hold")
@click.argument("nim")
@click.option("--financial", type=click.Choice(["clear", "hold"]), default=None)
@click.option("--case", type=click.Choice(["none", "hold"]), default=None)
@click.pass_context
def student_set_hold(ctx, nim, financial, case):
    """Set financial/case hold flags."""
    from dataclasses import replace

    def change(p: StudentProfile) -> StudentProfile:
        updated = p
        if financial is not None:
            updated = replace(updated, financial_status=FinancialStatus(financial.capitalize()))
        if case is not None:
            updated = replace(updated, case_status=CaseStatus(case.capitalize()))
        return updated

    updated = _change_profile(ctx, nim, change)
    click.echo(f"student {nim}: financial={updated.financial_status.value} "
               f"case={updated.case_status.value}")


@cli.group()
def user():
    """Login credentials for staff and lecturers."""


@user.command("add")
@click.argument("principal")
@click.option("--role", "role_name", required=True,
              type=click.Choice(["student", "staff", "lecturer"]))
@click.option("--name", default="")
@click.option("--password", required=True)
@click.pass_context
def user_add(ctx, principal, role_name, name, password):
    """Create or replace a credential."""
    with open_store(ctx) as store:
        store.set_credential(principal, password, Role(role_name.capitalize()), name)
    click.echo(f"{role_name} credential stored for {principal}")


# ---------------------------------------------------------------- reports & decisions

@cli.command()
@click.argument("term_code")
@click.option("--below-threshold", "below_only", is_flag=True,
              help="Only sections under the term's minimum enrollment.")
@click.option("--json", "as_json", is_flag=True)
@click.option("--csv", "csv_path", default=None, type=click.Path(),
              help="Also write the rows as CSV.")
@click.option("--chart", "chart_path", default=None, type=click.Path(),
              help="Also render the seats-filled chart (png/svg/pdf).")
@click.pass_context
def demand(ctx, term_code, below_only, as_json, csv_path, chart_path):
    """Per-section enrollment counts for a term."""
    with open_store(ctx) as store:
        try:
            rows = demand_report(store, term_code)
        except UnknownTermError as exc:
            raise ValidationFailure(str(exc)) from None
        threshold = store.term(term_code).min_enrollment
    if below_only:
        rows = [r for r in rows if r.below_threshold]
    if as_json:
        click.echo(json.dumps([r.__dict__ for r in rows], indent=2))
    else:
        click.echo(report.demand_table(rows))
    if csv_path:
        report.write_demand_csv(rows, csv_path)
        click.echo(f"csv written to {csv_path}")
    if chart_path:
        report.render_demand_chart(rows, chart_path, threshold, term_code)
        click.echo(f"chart written to {chart_path}")


@cli.group()
def section():
    """Confirm or cancel offered sections."""


def _decide(ctx, section_id: str, decision: Decision, actor: str) -> None:
    with open_store(ctx) as store:
        try:
            outcome = decide_section(store, section_id, decision, actor=actor)
        except UnknownSectionError as exc:
            raise ValidationFailure(str(exc)) from None
        except AlreadyDecidedError as exc:
            raise ValidationFailure(str(exc)) from None
    if outcome.state.value == "Cancelled":
        click.echo(f"section {section_id} cancelled; {len(outcome.affected_nims)} "
                   f"student(s) notified, announcement #{outcome.announcement_id} posted")
    else:
        click.echo(f"section {section_id} confirmed")


@section.command("cancel")
@click.argument("section_id")
@click.option("--actor", required=True, help="Staff id responsible for the decision.")
@click.pass_context
def section_cancel(ctx, section_id, actor):
    """Cancel a section and cascade to every registered student."""
    _decide(ctx, section_id, Decision.CANCEL, actor)


@section.command("confirm")
@click.argument("section_id")
@click.option("--actor", required=True)
@click.pass_context
def section_confirm(ctx, section_id, actor):
    """Confirm a section will run."""
    _decide(ctx, section_id, Decision.CONFIRM, actor)


# ---------------------------------------------------------------- audit

@cli.group()
def audit():
    """Inspect the append-only audit log."""


@audit.command("tail")
@click.option("-n", "count", default=10, show_default=True)
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
def audit_tail(ctx, count, as_json):
    """Show the last N audit entries."""
    with open_store(ctx) as store:
        entries = store.audit_tail(count)
    for entry in entries:
        if as_json:
            click.echo(json.dumps(entry.to_json()))
        else:
            click.echo(f"{entry.seq:>6}  {entry.at.isoformat()}  {entry.actor:<12} "
                       f"{entry.action.value:<20} {json.dumps(entry.payload)}")


def main(argv: Optional[list[str]] = None) -> int:
    """Entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except ValidationFailure as exc:
        click.echo(f"validation error: {exc}", err=True)
        return EXIT_VALIDATION
    except (StoreError, OSError) as exc:
        click.echo(f"i/o error: {exc}", err=True)
        return EXIT_IO
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
