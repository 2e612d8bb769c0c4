// Staff dashboard: live demand table with below-threshold highlighting,
// confirm/cancel with a confirmation dialog, and an announcement
// composer. Refreshes by polling; every number shown comes from the API.

import {
  ApiClient,
  DecisionOutcome,
  DemandRow,
  RuleRejection,
  SessionInfo,
  TermInfo,
} from "./api.js";
import { clear, el } from "./dom.js";
import { describeViolation } from "./messages.js";

export const DEMAND_REFRESH_MS = 10_000;

export class StaffView {
  root: HTMLElement;
  api: ApiClient;
  session: SessionInfo;
  term!: TermInfo;
  rows: DemandRow[] = [];
  lastOutcome: DecisionOutcome | null = null;
  lastError = "";
  confirmFn: (question: string) => boolean;
  private timer: ReturnType<typeof setInterval> | null = null;

  private tableBox = el("div", { class: "demand" });
  private resultBox = el("div", { class: "decision-result", "data-test": "decision-result" });
  private composerBox = el("div", { class: "composer" });

  constructor(root: HTMLElement, api: ApiClient, session: SessionInfo,
              confirmFn: (question: string) => boolean = (q) => window.confirm(q)) {
    this.root = root;
    this.api = api;
    this.session = session;
    this.confirmFn = confirmFn;
  }

  async init(autoRefresh = true): Promise<void> {
    this.term = await this.api.currentTerm();
    await this.refresh();
    this.render();
    if (autoRefresh) {
      this.timer = setInterval(() => void this.refreshAndRender(), DEMAND_REFRESH_MS);
    }
  }

  dispose(): void {
    if (this.timer !== null) clearInterval(this.timer);
  }

  async refresh(): Promise<void> {
    this.rows = await this.api.demand(this.term.term_code);
  }

  async refreshAndRender(): Promise<void> {
    await this.refresh();
    this.renderTable();
  }

  render(): void {
    clear(this.root);
    this.root.append(
      el("h2", {}, [`Demand ${this.term.display_name} (minimum ${this.term.min_enrollment})`]),
      this.resultBox,
      this.tableBox,
      this.composerBox,
    );
    this.renderTable();
    this.renderComposer();
  }

  renderTable(): void {
    clear(this.tableBox);
    const table = el("table", { class: "demand-table" });
    table.append(el("tr", {}, [
      el("th", {}, ["Course"]), el("th", {}, ["Class"]), el("th", {}, ["Enrolled"]),
      el("th", {}, ["Capacity"]), el("th", {}, ["Fill"]), el("th", {}, ["Decision"]),
    ]));
    for (const row of this.rows) {
      const tr = el("tr", {
        class: row.below_threshold ? "demand-row below-threshold" : "demand-row",
        "data-test": `demand-${row.section_id}`,
        "data-below": String(row.below_threshold),
      });
      const actions = el("td", {});
      for (const decision of ["Confirm", "Cancel"] as const) {
        const button = el("button",
          { "data-test": `${decision.toLowerCase()}-${row.section_id}` }, [decision]);
        button.addEventListener("click", () => void this.decide(row, decision));
        actions.append(button);
      }
      tr.append(
        el("td", {}, [row.course_code]),
        el("td", {}, [row.class_label]),
        el("td", {}, [String(row.enrolled)]),
        el("td", {}, [String(row.capacity)]),
        el("td", {}, [row.fill_ratio.toFixed(2)]),
        actions,
      );
      table.append(tr);
    }
    this.tableBox.append(table);
  }

  renderResult(): void {
    clear(this.resultBox);
    if (this.lastError) {
      this.resultBox.append(el("p", { class: "error" }, [this.lastError]));
      return;
    }
    if (!this.lastOutcome) return;
    const o = this.lastOutcome;
    const text = o.state === "Cancelled"
      ? `Section ${o.section_id} cancelled; ${o.affected_count} student(s) notified.`
      : `Section ${o.section_id} confirmed.`;
    this.resultBox.append(el("p", { class: "ok" }, [text]));
  }

  async decide(row: DemandRow, decision: "Confirm" | "Cancel"): Promise<void> {
    const question = decision === "Cancel"
      ? `Cancel ${row.course_code} class ${row.class_label} with ${row.enrolled} registered?`
      : `Confirm ${row.course_code} class ${row.class_label}?`;
    if (!this.confirmFn(question)) return;
    try {
      this.lastOutcome = await this.api.decide(row.section_id, decision);
      this.lastError = "";
    } catch (err) {
      if (err instanceof RuleRejection) {
        this.lastOutcome = null;
        this.lastError = err.violations.map(describeViolation).join(" ");
      } else {
        throw err;
      }
    }
    await this.refresh();
    this.renderResult();
    this.renderTable();
  }

  renderComposer(): void {
    clear(this.composerBox);
    const title = el("input", { placeholder: "Announcement title", "data-test": "ann-title" });
    const body = el("textarea", { placeholder: "Body", "data-test": "ann-body" });
    const send = el("button", { "data-test": "ann-send" }, ["Post announcement"]);
    const status = el("span", { class: "ann-status", "data-test": "ann-status" });
    send.addEventListener("click", () => {
      void (async () => {
        const posted = await this.api.postAnnouncement(title.value, body.value);
        status.textContent = `posted #${posted.id}`;
        title.value = "";
        body.value = "";
      })();
    });
    this.composerBox.append(el("h3", {}, ["Announcements"]), title, body, send, status);
  }
}
