// Reader workstation: start a timed session on a case, optionally pull the
// model draft (ai-assisted arm only), edit, finalize.
//
// Two rules the tests pin down:
//   - the draft button exists in the DOM only when the session arm is
//     ai-assisted; standard-care readers never see the affordance
//   - after finalize the elapsed display shows the server's reading_time_s
//     exactly and stops moving

import { ApiError, StudyApi } from "./api.js";
import type { SessionView } from "./api.js";
import { clear, el, setText } from "./dom.js";
import { formatSeconds, SessionTimer } from "./time.js";

const STORAGE_KEY = "cxrstudy.workstation.session";

export interface WorkstationOptions {
  // opaque image refs are resolved against this base for <img> tags
  imageBase?: string;
  storage?: Storage;
}

export class WorkstationPanel {
  readonly root: HTMLElement;
  session: SessionView | null = null;

  private readonly api: StudyApi;
  private readonly studyId: string;
  private readonly imageBase: string;
  private readonly storage: Storage | null;
  private readonly timer: SessionTimer;

  private readonly caseInput: HTMLInputElement;
  private readonly readerInput: HTMLInputElement;
  private readonly startButton: HTMLButtonElement;
  private readonly imagePanel: HTMLDivElement;
  private readonly historyPanel: HTMLDivElement;
  private readonly sessionLine: HTMLDivElement;
  private readonly timerLabel: HTMLSpanElement;
  private readonly stateLabel: HTMLSpanElement;
  private readonly draftSlot: HTMLDivElement;
  private readonly draftInfo: HTMLDivElement;
  private readonly reportArea: HTMLTextAreaElement;
  private readonly finalizeButton: HTMLButtonElement;
  private readonly statusLine: HTMLDivElement;

  constructor(
    root: HTMLElement,
    api: StudyApi,
    studyId: string,
    opts: WorkstationOptions = {},
  ) {
    this.root = root;
    this.api = api;
    this.studyId = studyId;
    this.imageBase = (opts.imageBase ?? "/static").replace(/\/+$/, "");
    this.storage = opts.storage ?? null;

    this.caseInput = el("input", { id: "ws-case", placeholder: "case id" });
    this.readerInput = el("input", { id: "ws-reader", placeholder: "reader id" });
    this.startButton = el("button", { id: "ws-start", text: "Start reading" });
    this.imagePanel = el("div", { id: "ws-images", class: "panel" });
    this.historyPanel = el("div", { id: "ws-history", class: "panel" });
    this.sessionLine = el("div", { id: "ws-session" });
    this.timerLabel = el("span", { id: "ws-timer", text: "--" });
    this.stateLabel = el("span", { id: "ws-state", text: "idle" });
    this.draftSlot = el("div", { id: "ws-draft-slot" });
    this.draftInfo = el("div", { id: "ws-draft-info" });
    this.reportArea = el("textarea", { id: "ws-report", rows: "10" });
    this.finalizeButton = el("button", { id: "ws-finalize", text: "Finalize" });
    this.finalizeButton.disabled = true;
    this.statusLine = el("div", { id: "ws-status", class: "status" });

    this.timer = new SessionTimer((seconds) => {
      setText(this.timerLabel, formatSeconds(seconds));
    });

    this.startButton.addEventListener("click", () => {
      void this.startSession();
    });
    this.reportArea.addEventListener("input", () => {
      this.refreshFinalizeGate();
    });
    this.finalizeButton.addEventListener("click", () => {
      void this.finalize();
    });

    root.append(
      el("h2", { text: "Workstation" }),
      el("div", {}, [this.caseInput, this.readerInput, this.startButton]),
      el("div", {}, [
        el("span", { text: "elapsed: " }),
        this.timerLabel,
        el("span", { text: " | state: " }),
        this.stateLabel,
      ]),
      this.sessionLine,
      this.imagePanel,
      this.historyPanel,
      this.draftSlot,
      this.draftInfo,
      this.reportArea,
      el("div", {}, [this.finalizeButton]),
      this.statusLine,
    );
  }

  async startSession(): Promise<void> {
    const caseId = this.caseInput.value.trim();
    const readerId = this.readerInput.value.trim();
    if (!caseId || !readerId) {
      setText(this.statusLine, "case id and reader id are required");
      return;
    }
    try {
      const session = await this.api.startSession(this.studyId, caseId, readerId);
      this.storage?.setItem(STORAGE_KEY, session.session_id);
      await this.showSession(session, 0);
      setText(this.statusLine, "");
    } catch (err) {
      this.reportError(err);
    }
  }

  // reload path: pick up the session recorded in storage and rebuild the
  // view from server state, not from anything cached locally
  async resumeFromStorage(): Promise<boolean> {
    const sessionId = this.storage?.getItem(STORAGE_KEY);
    if (!sessionId) {
      return false;
    }
    try {
      const session = await this.api.getSession(this.studyId, sessionId);
      const estimate = Date.now() / 1000 - session.started_wall;
      await this.showSession(session, estimate);
      return true;
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        this.storage?.removeItem(STORAGE_KEY);
        return false;
      }
      this.reportError(err);
      return false;
    }
  }

  private async showSession(session: SessionView, elapsedEstimate: number): Promise<void> {
    this.session = session;
    setText(
      this.sessionLine,
      `session ${session.session_id} | arm: ${session.arm}`,
    );
    await this.renderCase(session.case_id);
    this.renderDraftButton(session);

    if (session.state === "finalized") {
      this.timer.freeze(session.reading_time_s ?? 0);
      setText(this.stateLabel, "finalized");
      this.lockEditing();
    } else {
      this.timer.start(elapsedEstimate);
      setText(this.stateLabel, "reading");
      this.reportArea.disabled = false;
      this.refreshFinalizeGate();
    }
  }

  private async renderCase(caseId: string): Promise<void> {
    const caseView = await this.api.getCase(this.studyId, caseId);
    clear(this.imagePanel);
    this.imagePanel.append(el("h3", { text: "Images" }));
    for (const ref of caseView.image_refs) {
      this.imagePanel.append(
        el("img", {
          src: `${this.imageBase}/${encodeURIComponent(ref)}`,
          alt: ref,
          class: "cxr-image",
        }),
      );
    }
    clear(this.historyPanel);
    this.historyPanel.append(
      el("h3", { text: "Clinical history" }),
      el("p", { text: caseView.history_note || "(none provided)" }),
    );
  }

  private renderDraftButton(session: SessionView): void {
    clear(this.draftSlot);
    if (session.arm !== "ai-assisted") {
      return;
    }
    const button = el("button", { id: "ws-draft", text: "Insert model draft" });
    button.disabled = session.state === "finalized";
    button.addEventListener("click", () => {
      void this.insertDraft();
    });
    this.draftSlot.append(button);
  }

  async insertDraft(): Promise<void> {
    if (!this.session) {
      return;
    }
    try {
      const draft = await this.api.requestDraft(
        this.studyId,
        this.session.session_id,
      );
      this.reportArea.value = draft.report_text;
      setText(
        this.draftInfo,
        `draft from ${draft.model_version} in ${draft.latency_ms} ms`,
      );
      this.refreshFinalizeGate();
      setText(this.statusLine, "");
    } catch (err) {
      this.reportError(err);
    }
  }

  async finalize(): Promise<void> {
    if (!this.session) {
      return;
    }
    const text = this.reportArea.value;
    if (!text.trim()) {
      return;
    }
    try {
      const session = await this.api.finalizeSession(
        this.studyId,
        this.session.session_id,
        text,
      );
      this.session = session;
      // the server's measured duration replaces the advisory ticker
      this.timer.freeze(session.reading_time_s ?? 0);
      setText(this.stateLabel, "finalized");
      this.lockEditing();
      setText(this.statusLine, "");
    } catch (err) {
      this.reportError(err);
    }
  }

  private refreshFinalizeGate(): void {
    const empty = this.reportArea.value.trim() === "";
    const finalized = this.session?.state === "finalized";
    this.finalizeButton.disabled = empty || !this.session || Boolean(finalized);
  }

  private lockEditing(): void {
    this.reportArea.disabled = true;
    this.finalizeButton.disabled = true;
    const draftButton = this.draftSlot.querySelector("button");
    if (draftButton) {
      draftButton.disabled = true;
    }
  }

  private reportError(err: unknown): void {
    if (err instanceof ApiError) {
      setText(this.statusLine, err.detail);
    } else {
      setText(this.statusLine, String(err));
    }
  }

  dispose(): void {
    this.timer.stop();
  }
}
