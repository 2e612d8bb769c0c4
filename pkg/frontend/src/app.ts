// Boot: login form, role routing, announcement polling. A 401 anywhere
// drops back to the login prompt.

import { ApiClient, SessionInfo } from "./api.js";
import { clear, el } from "./dom.js";
import { StaffView } from "./staff.js";
import { StudentView } from "./student.js";

export const ANNOUNCEMENT_POLL_MS = 10_000;

export class App {
  root: HTMLElement;
  api: ApiClient;
  session: SessionInfo | null = null;
  private feedCursor = 0;
  private feedBox = el("div", { class: "feed", "data-test": "feed" });
  private poller: ReturnType<typeof setInterval> | null = null;
  private active: StaffView | StudentView | null = null;

  constructor(root: HTMLElement, api: ApiClient = new ApiClient()) {
    this.root = root;
    this.api = api;
    this.api.onUnauthorized = () => this.showLogin("Session expired, please log in again.");
  }

  start(): void {
    this.showLogin();
  }

  showLogin(note = ""): void {
    if (this.poller !== null) clearInterval(this.poller);
    if (this.active instanceof StaffView) this.active.dispose();
    this.session = null;
    this.api.token = null;
    clear(this.root);
    const principal = el("input", { placeholder: "NIM or staff id", "data-test": "login-principal" });
    const password = el("input", { type: "password", placeholder: "Password", "data-test": "login-password" });
    const button = el("button", { "data-test": "login-submit" }, ["Masuk"]);
    const error = el("p", { class: "error", "data-test": "login-error" }, [note]);
    button.addEventListener("click", () => {
      void (async () => {
        try {
          const session = await this.api.login(principal.value, password.value);
          await this.enter(session);
        } catch {
          error.textContent = "Login failed.";
        }
      })();
    });
    this.root.append(el("h1", {}, ["KRS Online"]), error, principal, password, button);
  }

  async enter(session: SessionInfo): Promise<void> {
    this.session = session;
    clear(this.root);
    const header = el("div", { class: "topbar" }, [
      el("span", {}, [`${session.name} (${session.role})`]),
    ]);
    const main = el("div", { class: "main" });
    this.root.append(header, this.feedBox, main);

    if (session.role === "Staff") {
      this.active = new StaffView(main, this.api, session);
      await this.active.init();
    } else {
      this.active = new StudentView(main, this.api, session);
      await this.active.init();
    }
    await this.pollFeed();
    this.poller = setInterval(() => void this.pollFeed(), ANNOUNCEMENT_POLL_MS);
  }

  async pollFeed(): Promise<void> {
    const data = await this.api.announcements(this.feedCursor);
    if (data.announcements.length === 0) return;
    this.feedCursor = data.latest;
    for (const a of data.announcements) {
      this.feedBox.prepend(
        el("div", { class: "announcement", "data-test": `announcement-${a.id}` }, [
          el("strong", {}, [a.title]),
          el("p", {}, [a.body]),
        ]),
      );
    }
  }
}

declare global {
  interface Window {
    krsApp?: App;
  }
}

if (typeof document !== "undefined" && document.getElementById("krs-root")) {
  const app = new App(document.getElementById("krs-root") as HTMLElement);
  window.krsApp = app;
  app.start();
}
