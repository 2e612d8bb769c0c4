// Violation codes are the API contract; these templates are presentation
// only. The raw detail from the server is always shown beneath the
// friendly line so nothing the rules engine said gets lost.

import { Violation } from "./api.js";

const TEMPLATES: Record<string, string> = {
  WINDOW_CLOSED: "Registration is closed for this term.",
  PAYMENT_HOLD: "A financial hold is blocking registration.",
  CASE_HOLD: "A case hold is blocking registration.",
  PREREQ_UNMET: "Prerequisites are not met yet.",
  SCHEDULE_CONFLICT: "This class clashes with something already in the plan.",
  SECTION_FULL: "This class is full.",
  CREDIT_CAP_EXCEEDED: "This would exceed the SKS cap.",
  DUPLICATE_COURSE: "This course is already in the plan.",
  SECTION_CANCELLED: "This class was cancelled for the term.",
  UNKNOWN_SECTION: "That class does not exist in this term.",
  ALREADY_DECIDED: "This section was already confirmed or cancelled.",
};

export function describeViolation(v: Violation): string {
  return TEMPLATES[v.code] ?? `Rejected (${v.code}).`;
}

export function knownCode(code: string): boolean {
  return code in TEMPLATES;
}
