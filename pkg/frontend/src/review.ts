// Senior review console.
//
// Unlike the evaluator, the reviewer is deliberately unblinded: they see both
// finalized reports side by side with arm labels and choose which one the
// released report is based on, optionally editing the text before release.

import { ApiError, StudyApi } from "./api.js";
import type { Arm, CaseView } from "./api.js";
import { clear, el, setText } from "./dom.js";

export class ReviewPanel {
  readonly root: HTMLElement;
  caseView: CaseView | null = null;

  private readonly api: StudyApi;
  private readonly studyId: string;

  private readonly caseInput: HTMLInputElement;
  private readonly loadButton: HTMLButtonElement;
  private readonly reportsPanel: HTMLDivElement;
  private readonly reviewerInput: HTMLInputElement;
  private readonly armChoices: HTMLDivElement;
  private readonly editArea: HTMLTextAreaElement;
  private readonly releaseButton: HTMLButtonElement;
  private readonly releasedPanel: HTMLDivElement;
  private readonly statusLine: HTMLDivElement;

  constructor(root: HTMLElement, api: StudyApi, studyId: string) {
    this.root = root;
    this.api = api;
    this.studyId = studyId;

    this.caseInput = el("input", { id: "rv-case", placeholder: "case id" });
    this.loadButton = el("button", { id: "rv-load", text: "Load case" });
    this.reportsPanel = el("div", { id: "rv-reports", class: "panel" });
    this.reviewerInput = el("input", {
      id: "rv-reviewer",
      placeholder: "reviewer id",
    });
    this.armChoices = el("div", { id: "rv-arms" });
    this.editArea = el("textarea", {
      id: "rv-edit",
      rows: "8",
      placeholder: "optional edited text; leave empty to release the base as-is",
    });
    this.releaseButton = el("button", { id: "rv-release", text: "Release" });
    this.releaseButton.disabled = true;
    this.releasedPanel = el("div", { id: "rv-released" });
    this.statusLine = el("div", { id: "rv-status", class: "status" });

    this.loadButton.addEventListener("click", () => {
      void this.loadCase();
    });
    this.armChoices.addEventListener("change", () => {
      this.releaseButton.disabled = this.selectedArm() === null;
    });
    this.releaseButton.addEventListener("click", () => {
      void this.release();
    });

    root.append(
      el("h2", { text: "Senior review" }),
      el("div", {}, [this.caseInput, this.loadButton]),
      this.reportsPanel,
      el("div", {}, [this.reviewerInput, this.armChoices]),
      this.editArea,
      el("div", {}, [this.releaseButton]),
      this.releasedPanel,
      this.statusLine,
    );
  }

  async loadCase(): Promise<void> {
    const caseId = this.caseInput.value.trim();
    if (!caseId) {
      setText(this.statusLine, "case id is required");
      return;
    }
    try {
      this.caseView = await this.api.getCase(this.studyId, caseId);
      await this.renderReports(this.caseView);
      this.renderReleased(this.caseView);
      setText(this.statusLine, "");
    } catch (err) {
      this.reportError(err);
    }
  }

  private async renderReports(caseView: CaseView): Promise<void> {
    clear(this.reportsPanel);
    clear(this.armChoices);
    this.releaseButton.disabled = true;

    const arms = Object.keys(caseView.sessions_by_arm) as Arm[];
    if (arms.length === 0) {
      this.reportsPanel.append(el("p", { text: "no sessions yet" }));
      return;
    }
    for (const arm of arms) {
      const sessionId = caseView.sessions_by_arm[arm];
      if (!sessionId) {
        continue;
      }
      const session = await this.api.getSession(this.studyId, sessionId);
      const column = el("div", { class: "pair" }, [el("h3", { text: arm })]);
      if (session.state !== "finalized") {
        column.append(el("p", { text: "still reading" }));
        this.reportsPanel.append(column);
        continue;
      }
      const lastVersion = session.report_versions[session.report_versions.length - 1];
      if (lastVersion) {
        const report = await this.api.getReport(this.studyId, lastVersion);
        column.append(el("pre", { class: "report-text", text: report.text }));
      }
      this.reportsPanel.append(column);

      const input = el("input", {
        type: "radio",
        name: "rv-base",
        value: arm,
      });
      this.armChoices.append(el("label", { class: "choice" }, [input, ` base: ${arm}`]));
    }
  }

  private selectedArm(): Arm | null {
    const picked = this.armChoices.querySelector<HTMLInputElement>(
      "input[type=radio]:checked",
    );
    return picked ? (picked.value as Arm) : null;
  }

  async release(): Promise<void> {
    const caseId = this.caseView?.case_id;
    const reviewerId = this.reviewerInput.value.trim();
    const baseArm = this.selectedArm();
    if (!caseId || !baseArm) {
      return;
    }
    if (!reviewerId) {
      setText(this.statusLine, "reviewer id is required");
      return;
    }
    const edited = this.editArea.value.trim();
    try {
      await this.api.seniorReview(this.studyId, caseId, reviewerId, {
        baseArm,
        ...(edited ? { text: edited } : {}),
      });
      this.caseView = await this.api.getCase(this.studyId, caseId);
      this.renderReleased(this.caseView);
      setText(this.statusLine, "");
    } catch (err) {
      this.reportError(err);
    }
  }

  private renderReleased(caseView: CaseView): void {
    clear(this.releasedPanel);
    if (!caseView.released_report_id) {
      this.releasedPanel.append(el("p", { text: "not released" }));
      return;
    }
    this.releasedPanel.append(
      el("p", {
        text: `released: ${caseView.released_report_id} (signature ${caseView.signature ?? "missing"})`,
      }),
    );
  }

  private reportError(err: unknown): void {
    if (err instanceof ApiError) {
      setText(this.statusLine, err.detail);
    } else {
      setText(this.statusLine, String(err));
    }
  }
}
