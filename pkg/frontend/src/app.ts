// Application shell: pick a study, then switch between the four roles.
//
// Each role panel talks to the API directly; the shell only handles study
// selection and tab switching.

import { ApiError, StudyApi } from "./api.js";
import { AdminPanel } from "./admin.js";
import { clear, el, setText } from "./dom.js";
import { EvaluatorPanel } from "./evaluator.js";
import { ReviewPanel } from "./review.js";
import { WorkstationPanel } from "./workstation.js";

type Role = "workstation" | "review" | "evaluation" | "admin";

const ROLES: Role[] = ["workstation", "review", "evaluation", "admin"];

export interface AppOptions {
  imageBase?: string;
  storage?: Storage;
}

export class App {
  readonly root: HTMLElement;
  workstation: WorkstationPanel | null = null;
  review: ReviewPanel | null = null;
  evaluator: EvaluatorPanel | null = null;
  admin: AdminPanel | null = null;

  private readonly api: StudyApi;
  private readonly opts: AppOptions;
  private studyId: string | null = null;

  private readonly studyInput: HTMLInputElement;
  private readonly connectButton: HTMLButtonElement;
  private readonly tabBar: HTMLDivElement;
  private readonly panelHost: HTMLDivElement;
  private readonly statusLine: HTMLDivElement;

  constructor(root: HTMLElement, api: StudyApi, opts: AppOptions = {}) {
    this.root = root;
    this.api = api;
    this.opts = opts;

    this.studyInput = el("input", { id: "app-study", placeholder: "study id" });
    this.connectButton = el("button", { id: "app-connect", text: "Open study" });
    this.tabBar = el("div", { id: "app-tabs" });
    this.panelHost = el("div", { id: "app-panel" });
    this.statusLine = el("div", { id: "app-status", class: "status" });

    this.connectButton.addEventListener("click", () => {
      void this.connect();
    });

    root.append(
      el("h1", { text: "Reader study console" }),
      el("div", {}, [this.studyInput, this.connectButton]),
      this.tabBar,
      this.panelHost,
      this.statusLine,
    );
  }

  async connect(): Promise<void> {
    const studyId = this.studyInput.value.trim();
    if (!studyId) {
      setText(this.statusLine, "study id is required");
      return;
    }
    try {
      // surface a bad id now rather than on the first panel action
      await this.api.getOverview(studyId);
    } catch (err) {
      if (err instanceof ApiError) {
        setText(this.statusLine, err.detail);
      } else {
        setText(this.statusLine, String(err));
      }
      return;
    }
    this.studyId = studyId;
    setText(this.statusLine, "");
    this.renderTabs();
    await this.showRole("workstation");
  }

  private renderTabs(): void {
    clear(this.tabBar);
    for (const role of ROLES) {
      const button = el("button", { class: "tab", "data-role": role, text: role });
      button.addEventListener("click", () => {
        void this.showRole(role);
      });
      this.tabBar.append(button);
    }
  }

  async showRole(role: Role): Promise<void> {
    const studyId = this.studyId;
    if (!studyId) {
      return;
    }
    this.workstation?.dispose();
    this.workstation = null;
    this.review = null;
    this.evaluator = null;
    this.admin = null;
    clear(this.panelHost);
    const section = el("div", { id: `role-${role}` });
    this.panelHost.append(section);

    if (role === "workstation") {
      this.workstation = new WorkstationPanel(section, this.api, studyId, {
        ...(this.opts.imageBase !== undefined
          ? { imageBase: this.opts.imageBase }
          : {}),
        storage: this.opts.storage ?? window.localStorage,
      });
      await this.workstation.resumeFromStorage();
    } else if (role === "review") {
      this.review = new ReviewPanel(section, this.api, studyId);
    } else if (role === "evaluation") {
      this.evaluator = new EvaluatorPanel(section, this.api, studyId);
    } else {
      this.admin = new AdminPanel(section, this.api, studyId);
      await this.admin.refresh();
    }
  }
}

// entry point used by index.html; the API base defaults to the page origin
// and can be overridden with ?api=http://host:port
export function bootstrap(): App {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("api") ?? window.location.origin;
  const api = new StudyApi(base);
  const host = document.getElementById("app");
  if (!host) {
    throw new Error("index.html must provide <div id='app'>");
  }
  return new App(host, api);
}
