import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { StudyApi } from "../src/api.js";
import type { SessionView } from "../src/api.js";
import { WorkstationPanel } from "../src/workstation.js";
import { makeFakeFetch } from "./helpers.js";

function sessionFixture(arm: "ai-assisted" | "standard-care"): SessionView {
  return {
    session_id: `sess-c1-${arm}`,
    case_id: "c1",
    reader_id: "r1",
    arm,
    state: "reading",
    started_wall: 1_700_000_000,
    started_mono: 50,
    finalized_wall: null,
    finalized_mono: null,
    reading_time_s: null,
    draft_source: "none",
    draft_report_id: null,
    draft_latency_ms: null,
    model_version: null,
    report_versions: [],
  };
}

const caseFixture = {
  case_id: "c1",
  image_refs: ["img/c1-pa.png", "img/c1-lat.png"],
  history_note: "cough and fever",
  patient_meta: {},
  admissible: true,
  sessions_by_arm: {},
  released_report_id: null,
  signature: null,
};

function buildPanel(arm: "ai-assisted" | "standard-care", storage?: Storage) {
  const session = sessionFixture(arm);
  const finalized: SessionView = {
    ...session,
    state: "finalized",
    finalized_wall: session.started_wall + 96.4,
    finalized_mono: 146.4,
    reading_time_s: 96.4,
    report_versions: ["rep-00002"],
  };
  const { fetchFn, calls } = makeFakeFetch({
    "POST /studies/s1/sessions": () => ({ status: 201, json: session }),
    "GET /studies/s1/cases/c1": () => ({ status: 200, json: caseFixture }),
    [`GET /studies/s1/sessions/${session.session_id}`]: () => ({
      status: 200,
      json: session,
    }),
    [`POST /studies/s1/sessions/${session.session_id}/draft`]: () => ({
      status: 200,
      json: {
        session_id: session.session_id,
        report_text: "FINDINGS: Right lower lobe opacity.\nIMPRESSION: Pneumonia.",
        findings: [{ finding: "Pneumonia", probability: 0.93 }],
        latency_ms: 412,
        model_version: "local-template-1",
      },
    }),
    [`POST /studies/s1/sessions/${session.session_id}/finalize`]: () => ({
      status: 200,
      json: finalized,
    }),
  });
  const root = document.createElement("div");
  document.body.appendChild(root);
  const api = new StudyApi("http://unit.test", fetchFn);
  const panel = new WorkstationPanel(root, api, "s1", {
    ...(storage ? { storage } : {}),
  });
  return { panel, root, calls };
}

describe("WorkstationPanel", () => {
  beforeEach(() => {
    vi.useFakeTimers();
    document.body.innerHTML = "";
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  it("shows the draft button only in the ai-assisted arm", async () => {
    const ai = buildPanel("ai-assisted");
    (ai.root.querySelector("#ws-case") as HTMLInputElement).value = "c1";
    (ai.root.querySelector("#ws-reader") as HTMLInputElement).value = "r1";
    await ai.panel.startSession();
    expect(ai.root.querySelector("#ws-draft")).not.toBeNull();
    ai.panel.dispose();

    const std = buildPanel("standard-care");
    (std.root.querySelector("#ws-case") as HTMLInputElement).value = "c1";
    (std.root.querySelector("#ws-reader") as HTMLInputElement).value = "r1";
    await std.panel.startSession();
    expect(std.root.querySelector("#ws-draft")).toBeNull();
    std.panel.dispose();
  });

  it("renders the case images and history after starting", async () => {
    const { panel, root } = buildPanel("standard-care");
    (root.querySelector("#ws-case") as HTMLInputElement).value = "c1";
    (root.querySelector("#ws-reader") as HTMLInputElement).value = "r1";
    await panel.startSession();
    const images = root.querySelectorAll("#ws-images img");
    expect(images).toHaveLength(2);
    expect((images[0] as HTMLImageElement).getAttribute("src")).toBe(
      "/static/img%2Fc1-pa.png",
    );
    expect(root.querySelector("#ws-history")?.textContent).toContain(
      "cough and fever",
    );
    panel.dispose();
  });

  it("keeps finalize disabled until the report text is non-empty", async () => {
    const { panel, root } = buildPanel("standard-care");
    (root.querySelector("#ws-case") as HTMLInputElement).value = "c1";
    (root.querySelector("#ws-reader") as HTMLInputElement).value = "r1";
    await panel.startSession();
    const finalize = root.querySelector("#ws-finalize") as HTMLButtonElement;
    const area = root.querySelector("#ws-report") as HTMLTextAreaElement;
    expect(finalize.disabled).toBe(true);
    area.value = "   ";
    area.dispatchEvent(new Event("input"));
    expect(finalize.disabled).toBe(true);
    area.value = "No acute findings.";
    area.dispatchEvent(new Event("input"));
    expect(finalize.disabled).toBe(false);
    panel.dispose();
  });

  it("inserts the model draft into the report area", async () => {
    const { panel, root } = buildPanel("ai-assisted");
    (root.querySelector("#ws-case") as HTMLInputElement).value = "c1";
    (root.querySelector("#ws-reader") as HTMLInputElement).value = "r1";
    await panel.startSession();
    await panel.insertDraft();
    const area = root.querySelector("#ws-report") as HTMLTextAreaElement;
    expect(area.value).toContain("Right lower lobe opacity");
    expect(root.querySelector("#ws-draft-info")?.textContent).toContain(
      "local-template-1",
    );
    // a fresh draft makes the text non-empty, so finalize unlocks
    expect((root.querySelector("#ws-finalize") as HTMLButtonElement).disabled).toBe(false);
    panel.dispose();
  });

  it("freezes the elapsed display at the server reading time on finalize", async () => {
    const { panel, root } = buildPanel("ai-assisted");
    (root.querySelector("#ws-case") as HTMLInputElement).value = "c1";
    (root.querySelector("#ws-reader") as HTMLInputElement).value = "r1";
    await panel.startSession();
    vi.advanceTimersByTime(3_000);
    const area = root.querySelector("#ws-report") as HTMLTextAreaElement;
    area.value = "Right lower lobe pneumonia.";
    area.dispatchEvent(new Event("input"));
    await panel.finalize();

    const label = root.querySelector("#ws-timer") as HTMLSpanElement;
    expect(label.textContent).toBe("96.4 s");
    expect(root.querySelector("#ws-state")?.textContent).toBe("finalized");
    // the display must not move again, no matter how long we wait
    vi.advanceTimersByTime(30_000);
    expect(label.textContent).toBe("96.4 s");
    expect(area.disabled).toBe(true);
    expect((root.querySelector("#ws-finalize") as HTMLButtonElement).disabled).toBe(true);
    expect((root.querySelector("#ws-draft") as HTMLButtonElement).disabled).toBe(true);
    panel.dispose();
  });

  it("rehydrates a stored session from server state on reload", async () => {
    const storage = window.localStorage;
    storage.clear();
    const first = buildPanel("ai-assisted", storage);
    (first.root.querySelector("#ws-case") as HTMLInputElement).value = "c1";
    (first.root.querySelector("#ws-reader") as HTMLInputElement).value = "r1";
    await first.panel.startSession();
    first.panel.dispose();

    // a brand-new panel (fresh page) picks the session back up
    const second = buildPanel("ai-assisted", storage);
    const resumed = await second.panel.resumeFromStorage();
    expect(resumed).toBe(true);
    expect(second.panel.session?.session_id).toBe("sess-c1-ai-assisted");
    expect(second.root.querySelector("#ws-session")?.textContent).toContain(
      "sess-c1-ai-assisted",
    );
    second.panel.dispose();
    storage.clear();
  });
});
