// Student registration view: searchable catalog, live plan with running
// SKS total, add/withdraw, and the printable study card. Adds are never
// optimistic; the plan only changes after the server's verdict arrives.

import {
  ApiClient,
  CourseInfo,
  Plan,
  RuleRejection,
  SectionInfo,
  SessionInfo,
  TermInfo,
  Violation,
} from "./api.js";
import { clear, el } from "./dom.js";
import { describeViolation } from "./messages.js";

interface CatalogEntry {
  course: CourseInfo;
  sections: SectionInfo[];
}

export class StudentView {
  root: HTMLElement;
  api: ApiClient;
  session: SessionInfo;
  term!: TermInfo;
  plan: Plan | null = null;
  catalog: CatalogEntry[] = [];
  query = "";
  lastVerdict: Violation[] = [];
  lastDocument = "";

  private totalsBox = el("div", { class: "totals" });
  private verdictBox = el("div", { class: "verdicts" });
  private catalogBox = el("div", { class: "catalog" });
  private planBox = el("div", { class: "plan" });
  private documentBox = el("pre", { class: "document", hidden: "hidden" });

  constructor(root: HTMLElement, api: ApiClient, session: SessionInfo) {
    this.root = root;
    this.api = api;
    this.session = session;
  }

  async init(): Promise<void> {
    this.term = await this.api.currentTerm();
    const courses = await this.api.courses(this.term.term_code);
    this.catalog = await Promise.all(
      courses.map(async (course) => ({
        course,
        sections: await this.api.sections(course.code, this.term.term_code),
      })),
    );
    await this.refreshPlan();
    this.render();
  }

  async refreshPlan(): Promise<void> {
    this.plan = await this.api.plan(this.session.principal, this.term.term_code);
  }

  render(): void {
    clear(this.root);
    const search = el("input", {
      class: "search",
      placeholder: "Search courses by code or title",
      value: this.query,
      "data-test": "search",
    });
    search.addEventListener("input", () => {
      this.query = search.value;
      this.renderCatalog();
    });
    this.root.append(
      el("h2", {}, [`Rencana Studi ${this.term.display_name}`]),
      this.totalsBox, this.verdictBox, search,
      this.catalogBox, this.planBox, this.documentBox,
    );
    this.renderTotals();
    this.renderCatalog();
    this.renderPlan();
  }

  renderTotals(): void {
    if (!this.plan) return;
    clear(this.totalsBox);
    const cap = this.plan.credit_cap ?? "-";
    this.totalsBox.append(
      el("strong", { "data-test": "sks-total" },
        [`${this.plan.active_credits} / ${cap} SKS`]),
      this.plan.over_credit_permit
        ? el("span", { class: "permit" }, [" over-credit permit active"])
        : "",
    );
  }

  renderVerdict(): void {
    clear(this.verdictBox);
    if (this.lastVerdict.length === 0) return;
    const list = el("ul", { class: "violations", "data-test": "violations" });
    for (const violation of this.lastVerdict) {
      list.append(
        el("li", { class: "violation", "data-code": violation.code }, [
          el("strong", {}, [describeViolation(violation)]),
          el("small", {}, [` ${violation.detail}`]),
        ]),
      );
    }
    this.verdictBox.append(list);
  }

  renderCatalog(): void {
    clear(this.catalogBox);
    const needle = this.query.trim().toLowerCase();
    const shown = this.catalog.filter(({ course }) =>
      !needle
      || course.code.toLowerCase().includes(needle)
      || course.title.toLowerCase().includes(needle));
    for (const { course, sections } of shown) {
      const box = el("div", { class: "course", "data-course": course.code });
      box.append(el("h3", {}, [
        el("span", { class: "course-title" }, [course.title]),
        el("code", { class: "course-code" }, [` ${course.code}`]),
        el("span", { class: "credits" }, [` ${course.credits} SKS`]),
      ]));
      if (course.prerequisites.length > 0) {
        box.append(el("small", {}, [`requires ${course.prerequisites.join(", ")}`]));
      }
      for (const section of sections) {
        const row = el("div", { class: "section-row", "data-section": section.section_id });
        const button = el("button", { "data-test": `add-${section.section_id}` }, ["Tambah"]);
        if (section.state === "Cancelled") button.setAttribute("disabled", "disabled");
        button.addEventListener("click", () => void this.add(section.section_id));
        row.append(
          el("span", {}, [
            `kelas ${section.class_label} `,
            section.meetings.map((m) => m.display).join("; "),
            ` (${section.free_seats}/${section.capacity} seats, ${section.state})`,
          ]),
          button,
        );
        box.append(row);
      }
      this.catalogBox.append(box);
    }
  }

  renderPlan(): void {
    if (!this.plan) return;
    clear(this.planBox);
    this.planBox.append(el("h3", {}, ["Current plan"]));
    const table = el("table", { class: "plan-table" });
    for (const line of this.plan.lines) {
      const active = line.status === "Planned" || line.status === "Added";
      const row = el("tr", {
        class: active ? "line" : `line line-${line.status.toLowerCase()}`,
        "data-test": `line-${line.section_id}`,
        "data-status": line.status,
      });
      const title = el("td", {}, [`${line.course_code} ${line.course_title}`]);
      if (line.status === "Withdrawn" || line.status === "Cancelled") {
        title.style.textDecoration = "line-through";
      }
      row.append(
        title,
        el("td", {}, [`kelas ${line.class_label}`]),
        el("td", {}, [`${line.credits} SKS`]),
        el("td", {}, [line.status]),
      );
      if (active) {
        const withdraw = el("button",
          { "data-test": `withdraw-${line.section_id}` }, ["Mundur"]);
        withdraw.addEventListener("click", () => void this.withdraw(line.section_id));
        row.append(el("td", {}, [withdraw]));
      }
      table.append(row);
    }
    this.planBox.append(table);
    const print = el("button", { "data-test": "print" }, ["Cetak KRS"]);
    print.addEventListener("click", () => void this.print());
    this.planBox.append(print);
  }

  async add(sectionId: string): Promise<void> {
    try {
      await this.api.addLine(this.session.principal, this.term.term_code, sectionId);
      this.lastVerdict = [];
    } catch (err) {
      if (err instanceof RuleRejection) {
        this.lastVerdict = err.violations;
      } else {
        throw err;
      }
    }
    await this.refreshPlan();
    this.renderTotals();
    this.renderVerdict();
    this.renderPlan();
  }

  async withdraw(sectionId: string): Promise<void> {
    try {
      await this.api.withdrawLine(this.session.principal, this.term.term_code, sectionId);
      this.lastVerdict = [];
    } catch (err) {
      if (err instanceof RuleRejection) {
        this.lastVerdict = err.violations;
      } else {
        throw err;
      }
    }
    await this.refreshPlan();
    this.renderTotals();
    this.renderVerdict();
    this.renderPlan();
  }

  async print(): Promise<void> {
    this.lastDocument = await this.api.document(this.session.principal, this.term.term_code);
    this.documentBox.removeAttribute("hidden");
    this.documentBox.textContent = this.lastDocument;
  }
}
