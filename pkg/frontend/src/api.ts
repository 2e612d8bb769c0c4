// Typed client for the /api/v1 registration service. Every rule verdict
// shown anywhere in the UI originates from these responses; the UI never
// evaluates registration rules on its own.

export interface Violation {
  code: string;
  detail: string;
  subject: string;
}

export interface SessionInfo {
  token: string;
  principal: string;
  role: "Student" | "Staff" | "Lecturer";
  name: string;
  expires_at: string;
}

export interface Meeting {
  day: string;
  start: number;
  end: number;
  display: string;
}

export interface SectionInfo {
  section_id: string;
  course_code: string;
  class_label: string;
  term_code: string;
  capacity: number;
  free_seats: number;
  lecturer: string;
  state: "Open" | "Confirmed" | "Cancelled";
  meetings: Meeting[];
}

export interface CourseInfo {
  code: string;
  title: string;
  credits: number;
  prerequisites: string[];
}

export interface PlanLine {
  section_id: string;
  course_code: string;
  course_title: string;
  class_label: string;
  credits: number;
  status: "Planned" | "Added" | "Withdrawn" | "Cancelled";
  committed_at: string;
}

export interface Plan {
  nim: string;
  term_code: string;
  print_count: number;
  active_credits: number;
  credit_cap: number | null;
  over_credit_permit: boolean;
  lines: PlanLine[];
}

export interface TermInfo {
  term_code: string;
  display_name: string;
  min_enrollment: number;
}

export interface DemandRow {
  course_code: string;
  section_id: string;
  class_label: string;
  enrolled: number;
  capacity: number;
  fill_ratio: number;
  below_threshold: boolean;
}

export interface DecisionOutcome {
  section_id: string;
  state: string;
  affected_count: number;
  affected_nims: string[];
  announcement_id: number | null;
}

export interface AnnouncementInfo {
  id: number;
  posted_at: string;
  author: string;
  title: string;
  body: string;
}

export class RuleRejection extends Error {
  violations: Violation[];
  constructor(violations: Violation[]) {
    super(violations.map((v) => v.code).join(", "));
    this.violations = violations;
  }
}

export class ApiError extends Error {
  status: number;
  constructor(status: number, message: string) {
    super(message);
    this.status = status;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  base: string;
  token: string | null = null;
  onUnauthorized: (() => void) | null = null;
  private fetchFn: FetchLike;

  constructor(base = "", fetchFn: FetchLike = (u, i) => fetch(u, i)) {
    this.base = base.replace(/\/$/, "");
    this.fetchFn = fetchFn;
  }

  private async request(method: string, path: string, body?: unknown,
                        isLogin = false): Promise<Response> {
    const headers: Record<string, string> = {};
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    if (body !== undefined) headers["Content-Type"] = "application/json";
    const resp = await this.fetchFn(`${this.base}/api/v1${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (resp.status === 401) {
      // A rejected login is just bad credentials, not an expired session.
      if (!isLogin && this.onUnauthorized) this.onUnauthorized();
      throw new ApiError(401, "session expired or not authenticated");
    }
    return resp;
  }

  private async json<T>(method: string, path: string, body?: unknown,
                        isLogin = false): Promise<T> {
    const resp = await this.request(method, path, body, isLogin);
    if (resp.status === 409) {
      const payload = await resp.json();
      throw new RuleRejection(payload.violations ?? []);
    }
    if (!resp.ok) {
      const payload = await resp.json().catch(() => ({ error: resp.statusText }));
      throw new ApiError(resp.status, payload.error ?? resp.statusText);
    }
    return (await resp.json()) as T;
  }

  async login(principal: string, password: string): Promise<SessionInfo> {
    const session = await this.json<SessionInfo>(
      "POST", "/sessions", { principal, password }, true);
    this.token = session.token;
    return session;
  }

  currentTerm(): Promise<TermInfo> {
    return this.json<TermInfo>("GET", "/terms/current");
  }

  async courses(term: string): Promise<CourseInfo[]> {
    const data = await this.json<{ courses: CourseInfo[] }>(
      "GET", `/catalog/courses?term=${encodeURIComponent(term)}`);
    return data.courses;
  }

  async sections(courseCode: string, term: string): Promise<SectionInfo[]> {
    const data = await this.json<{ sections: SectionInfo[] }>(
      "GET",
      `/catalog/courses/${encodeURIComponent(courseCode)}/sections?term=${encodeURIComponent(term)}`);
    return data.sections;
  }

  plan(nim: string, term: string): Promise<Plan> {
    return this.json<Plan>(
      "GET", `/students/${encodeURIComponent(nim)}/plan?term=${encodeURIComponent(term)}`);
  }

  addLine(nim: string, term: string, sectionId: string): Promise<{ line: PlanLine; active_credits: number }> {
    return this.json("POST",
      `/students/${encodeURIComponent(nim)}/plan/lines?term=${encodeURIComponent(term)}`,
      { section_id: sectionId });
  }

  withdrawLine(nim: string, term: string, sectionId: string): Promise<{ line: PlanLine }> {
    return this.json("DELETE",
      `/students/${encodeURIComponent(nim)}/plan/lines/${encodeURIComponent(sectionId)}`
      + `?term=${encodeURIComponent(term)}`);
  }

  async document(nim: string, term: string): Promise<string> {
    const resp = await this.request("GET",
      `/students/${encodeURIComponent(nim)}/plan/document?term=${encodeURIComponent(term)}`);
    if (!resp.ok) throw new ApiError(resp.status, "document unavailable");
    return resp.text();
  }

  async demand(term: string): Promise<DemandRow[]> {
    const data = await this.json<{ rows: DemandRow[] }>(
      "GET", `/staff/demand?term=${encodeURIComponent(term)}`);
    return data.rows;
  }

  decide(sectionId: string, decision: "Confirm" | "Cancel"): Promise<DecisionOutcome> {
    return this.json("POST",
      `/staff/sections/${encodeURIComponent(sectionId)}/decision`, { decision });
  }

  announcements(since: number): Promise<{ announcements: AnnouncementInfo[]; latest: number }> {
    return this.json("GET", `/announcements?since=${since}`);
  }

  postAnnouncement(title: string, body: string): Promise<AnnouncementInfo> {
    return this.json("POST", "/announcements", { title, body });
  }
}
