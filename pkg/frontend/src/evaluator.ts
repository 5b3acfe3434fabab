// Blinded evaluator console.
//
// The rater sees exactly what the batch payload carries: report text (or the
// two texts of a pairwise item) and the instrument's answer controls. No arm,
// no report id, no author role, no release state is ever written into the
// DOM, so there is nothing to unblind even with devtools open.
//
// Submission rules:
//   - forced choice: the submit button stays disabled until an option is
//     selected; there is no skip
//   - a duplicate rejected by the server (409) is surfaced in the status
//     line and the console moves on, since the server already holds an
//     answer for that item from this rater
//   - a network failure queues the response locally; the rater continues
//     and a retry button drains the queue

import { ApiError, StudyApi } from "./api.js";
import type { BatchItem, BatchView } from "./api.js";
import { clear, el, setText } from "./dom.js";

interface QueuedResponse {
  itemId: string;
  response: string | number;
}

const LIKERT_LEGEND = "Overall report quality (1 = poor, 5 = excellent)";
const RADPEER_LEGEND = "RADPEER agreement with the reference standard (1-5)";
const PAIRWISE_LEGEND = "Which report do you prefer?";
const SOURCE_LEGEND = "Who do you think wrote this report?";

export class EvaluatorPanel {
  readonly root: HTMLElement;
  batch: BatchView | null = null;

  private readonly api: StudyApi;
  private readonly studyId: string;
  private index = 0;
  private submittedCount = 0;
  private queue: QueuedResponse[] = [];

  private readonly batchInput: HTMLInputElement;
  private readonly raterInput: HTMLInputElement;
  private readonly loadButton: HTMLButtonElement;
  private readonly progressLabel: HTMLSpanElement;
  private readonly itemPanel: HTMLDivElement;
  private readonly controls: HTMLFormElement;
  private readonly submitButton: HTMLButtonElement;
  private readonly retryButton: HTMLButtonElement;
  private readonly queueLabel: HTMLSpanElement;
  private readonly statusLine: HTMLDivElement;

  constructor(root: HTMLElement, api: StudyApi, studyId: string) {
    this.root = root;
    this.api = api;
    this.studyId = studyId;

    this.batchInput = el("input", { id: "ev-batch", placeholder: "batch id" });
    this.raterInput = el("input", { id: "ev-rater", placeholder: "rater id" });
    this.loadButton = el("button", { id: "ev-load", text: "Load batch" });
    this.progressLabel = el("span", { id: "ev-progress", text: "no batch" });
    this.itemPanel = el("div", { id: "ev-item", class: "panel" });
    this.controls = el("form", { id: "ev-controls" });
    this.submitButton = el("button", {
      id: "ev-submit",
      type: "button",
      text: "Submit",
    });
    this.submitButton.disabled = true;
    this.retryButton = el("button", {
      id: "ev-retry",
      type: "button",
      text: "Retry queued",
    });
    this.retryButton.disabled = true;
    this.queueLabel = el("span", { id: "ev-queue", text: "" });
    this.statusLine = el("div", { id: "ev-status", class: "status" });

    this.loadButton.addEventListener("click", () => {
      void this.loadBatch();
    });
    this.submitButton.addEventListener("click", () => {
      void this.submit();
    });
    this.retryButton.addEventListener("click", () => {
      void this.retryQueued();
    });
    // any selection unlocks submit; nothing is preselected
    this.controls.addEventListener("change", () => {
      this.submitButton.disabled = this.selection() === null;
    });

    root.append(
      el("h2", { text: "Evaluation" }),
      el("div", {}, [this.batchInput, this.raterInput, this.loadButton]),
      el("div", {}, [el("span", { text: "progress: " }), this.progressLabel]),
      this.itemPanel,
      this.controls,
      el("div", {}, [this.submitButton, this.retryButton, this.queueLabel]),
      this.statusLine,
    );
  }

  async loadBatch(): Promise<void> {
    const batchId = this.batchInput.value.trim();
    if (!batchId) {
      setText(this.statusLine, "batch id is required");
      return;
    }
    try {
      this.batch = await this.api.getBatch(this.studyId, batchId);
      this.index = 0;
      this.submittedCount = 0;
      this.queue = [];
      this.renderCurrentItem();
      setText(this.statusLine, "");
    } catch (err) {
      this.reportError(err);
    }
  }

  private currentItem(): BatchItem | null {
    if (!this.batch) {
      return null;
    }
    return this.batch.items[this.index] ?? null;
  }

  private renderCurrentItem(): void {
    clear(this.itemPanel);
    clear(this.controls);
    this.submitButton.disabled = true;
    this.updateProgress();

    const item = this.currentItem();
    if (!item) {
      this.itemPanel.append(el("p", { text: "Batch complete. Thank you." }));
      return;
    }

    if (item.instrument === "pairwise_preference") {
      const payload = item.payload as { first_text: string; second_text: string };
      this.itemPanel.append(
        el("div", { class: "pair" }, [
          el("h3", { text: "Report A" }),
          el("pre", { class: "report-text", text: payload.first_text }),
        ]),
        el("div", { class: "pair" }, [
          el("h3", { text: "Report B" }),
          el("pre", { class: "report-text", text: payload.second_text }),
        ]),
      );
      this.controls.append(
        el("p", { text: PAIRWISE_LEGEND }),
        this.radio("choice", "first", "Report A"),
        this.radio("choice", "second", "Report B"),
      );
      return;
    }

    const payload = item.payload as { report_text: string };
    this.itemPanel.append(
      el("pre", { class: "report-text", text: payload.report_text }),
    );

    if (item.instrument === "source_guess") {
      this.controls.append(
        el("p", { text: SOURCE_LEGEND }),
        this.radio("choice", "ai", "A model"),
        this.radio("choice", "published", "A radiologist"),
      );
      return;
    }

    const legend =
      item.instrument === "likert_quality" ? LIKERT_LEGEND : RADPEER_LEGEND;
    this.controls.append(el("p", { text: legend }));
    for (let score = 1; score <= 5; score += 1) {
      this.controls.append(this.radio("choice", String(score), String(score)));
    }
  }

  private radio(name: string, value: string, label: string): HTMLLabelElement {
    const input = el("input", { type: "radio", name, value });
    return el("label", { class: "choice" }, [input, ` ${label}`]);
  }

  // null when nothing is picked yet; the submit gate keys off this
  selection(): string | number | null {
    const picked = this.controls.querySelector<HTMLInputElement>(
      "input[type=radio]:checked",
    );
    if (!picked) {
      return null;
    }
    const item = this.currentItem();
    if (
      item &&
      (item.instrument === "likert_quality" ||
        item.instrument === "radpeer_agreement")
    ) {
      return Number.parseInt(picked.value, 10);
    }
    return picked.value;
  }

  async submit(): Promise<void> {
    const item = this.currentItem();
    const response = this.selection();
    const raterId = this.raterInput.value.trim();
    if (!item || !this.batch || response === null) {
      return;
    }
    if (!raterId) {
      setText(this.statusLine, "rater id is required");
      return;
    }
    try {
      await this.api.submitRecord(
        this.studyId,
        this.batch.batch_id,
        item.item_id,
        raterId,
        response,
      );
      this.submittedCount += 1;
      setText(this.statusLine, "");
      this.advance();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // the server already has this rater's answer; tell them and move on
        setText(this.statusLine, `duplicate submission rejected: ${err.detail}`);
        this.advance();
      } else if (err instanceof ApiError) {
        this.reportError(err);
      } else {
        // transport failure: hold the answer locally and keep going
        this.queue.push({ itemId: item.item_id, response });
        setText(
          this.statusLine,
          "connection failed; response queued for retry",
        );
        this.updateQueueLabel();
        this.advance();
      }
    }
  }

  async retryQueued(): Promise<void> {
    if (!this.batch) {
      return;
    }
    const raterId = this.raterInput.value.trim();
    const remaining: QueuedResponse[] = [];
    let sent = 0;
    for (const pending of this.queue) {
      try {
        await this.api.submitRecord(
          this.studyId,
          this.batch.batch_id,
          pending.itemId,
          raterId,
          pending.response,
        );
        sent += 1;
        this.submittedCount += 1;
      } catch (err) {
        if (err instanceof ApiError && err.status === 409) {
          // already recorded server-side; drop it from the queue
          sent += 1;
        } else if (err instanceof ApiError) {
          this.reportError(err);
        } else {
          remaining.push(pending);
        }
      }
    }
    this.queue = remaining;
    this.updateQueueLabel();
    this.updateProgress();
    if (sent > 0 && remaining.length === 0) {
      setText(this.statusLine, `queue drained (${sent} sent)`);
    } else if (remaining.length > 0) {
      setText(this.statusLine, `${remaining.length} responses still queued`);
    }
  }

  private advance(): void {
    this.index += 1;
    this.renderCurrentItem();
  }

  private updateProgress(): void {
    if (!this.batch) {
      setText(this.progressLabel, "no batch");
      return;
    }
    setText(
      this.progressLabel,
      `${this.submittedCount} of ${this.batch.items.length} submitted`,
    );
  }

  private updateQueueLabel(): void {
    const n = this.queue.length;
    setText(this.queueLabel, n === 0 ? "" : `${n} queued`);
    this.retryButton.disabled = n === 0;
  }

  queuedCount(): number {
    return this.queue.length;
  }

  private reportError(err: unknown): void {
    if (err instanceof ApiError) {
      setText(this.statusLine, err.detail);
    } else {
      setText(this.statusLine, String(err));
    }
  }
}
