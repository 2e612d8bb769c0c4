import { describe, expect, it } from "vitest";

import { describeViolation, knownCode } from "../src/messages.js";

describe("violation messages", () => {
  it("maps every engine code to a human template", () => {
    const codes = [
      "WINDOW_CLOSED", "PAYMENT_HOLD", "CASE_HOLD", "PREREQ_UNMET",
      "SCHEDULE_CONFLICT", "SECTION_FULL", "CREDIT_CAP_EXCEEDED",
      "DUPLICATE_COURSE", "SECTION_CANCELLED", "UNKNOWN_SECTION",
      "ALREADY_DECIDED",
    ];
    for (const code of codes) {
      expect(knownCode(code)).toBe(true);
      const text = describeViolation({ code, detail: "d", subject: "s" });
      expect(text.length).toBeGreaterThan(5);
      expect(text).not.toContain(code); // templates are words, not codes
    }
  });

  it("falls back gracefully on unknown codes", () => {
    expect(describeViolation({ code: "NEW_THING", detail: "", subject: "" }))
      .toContain("NEW_THING");
  });
});
