// Admin overview: enrollment and progress counts plus the allocation table.
//
// Sealed allocation rows render the word "sealed" and nothing else; the
// server does not send an arm for them and this panel never tries to guess.

import { ApiError, StudyApi } from "./api.js";
import type { AllocationRow, ExportView, OverviewView } from "./api.js";
import { clear, el, setText } from "./dom.js";

function fmtByArm(byArm: Record<string, number>): string {
  const parts = Object.entries(byArm)
    .sort(([a], [b]) => a.localeCompare(b))
    .map(([arm, n]) => `${arm}: ${n}`);
  return parts.length ? parts.join(", ") : "none";
}

export class AdminPanel {
  readonly root: HTMLElement;
  overview: OverviewView | null = null;

  private readonly api: StudyApi;
  private readonly studyId: string;

  private readonly refreshButton: HTMLButtonElement;
  private readonly countsPanel: HTMLDivElement;
  private readonly allocationTable: HTMLTableElement;
  private readonly exportButton: HTMLButtonElement;
  private readonly exportPanel: HTMLDivElement;
  private readonly statusLine: HTMLDivElement;

  constructor(root: HTMLElement, api: StudyApi, studyId: string) {
    this.root = root;
    this.api = api;
    this.studyId = studyId;

    this.refreshButton = el("button", { id: "ad-refresh", text: "Refresh" });
    this.countsPanel = el("div", { id: "ad-counts", class: "panel" });
    this.allocationTable = el("table", { id: "ad-allocations" });
    this.exportButton = el("button", {
      id: "ad-export",
      text: "Load export summary",
    });
    this.exportPanel = el("div", { id: "ad-export-summary", class: "panel" });
    this.statusLine = el("div", { id: "ad-status", class: "status" });

    this.refreshButton.addEventListener("click", () => {
      void this.refresh();
    });
    this.exportButton.addEventListener("click", () => {
      void this.loadExport();
    });

    root.append(
      el("h2", { text: "Study overview" }),
      el("div", {}, [this.refreshButton, this.exportButton]),
      this.countsPanel,
      this.allocationTable,
      this.exportPanel,
      this.statusLine,
    );
  }

  async refresh(): Promise<void> {
    try {
      const overview = await this.api.getOverview(this.studyId);
      const allocations = await this.api.listAllocations(this.studyId);
      this.overview = overview;
      this.renderCounts(overview);
      this.renderAllocations(allocations.allocations);
      setText(this.statusLine, "");
    } catch (err) {
      this.reportError(err);
    }
  }

  private renderCounts(o: OverviewView): void {
    clear(this.countsPanel);
    const lines = [
      `allocations: ${o.allocations.total} total, ${o.allocations.sealed} sealed, ${o.allocations.opened} opened`,
      `opened by arm: ${fmtByArm(o.allocations.opened_by_arm)}`,
      `readers: ${o.readers.total} (${fmtByArm(o.readers.by_arm)})`,
      `cases: ${o.cases.registered} registered, ${o.cases.fully_read} fully read, ${o.cases.released} released`,
      `sessions: ${o.sessions.reading} reading, ${o.sessions.finalized} finalized`,
      `evaluation: ${o.evaluation.batches} batches, ${o.evaluation.records} records`,
    ];
    for (const line of lines) {
      this.countsPanel.append(el("p", { text: line }));
    }
  }

  private renderAllocations(rows: AllocationRow[]): void {
    clear(this.allocationTable);
    const header = el("tr", {}, [
      el("th", { text: "#" }),
      el("th", { text: "status" }),
    ]);
    this.allocationTable.append(header);
    for (const row of rows) {
      // an opened row shows its arm; a sealed row shows only "sealed"
      const status = row.sealed ? "sealed" : (row.arm ?? "opened");
      this.allocationTable.append(
        el("tr", { class: row.sealed ? "sealed" : "opened" }, [
          el("td", { text: String(row.sequence_index) }),
          el("td", { text: status }),
        ]),
      );
    }
  }

  async loadExport(): Promise<void> {
    try {
      const exported = await this.api.getExport(this.studyId);
      this.renderExport(exported);
      setText(this.statusLine, "");
    } catch (err) {
      this.reportError(err);
    }
  }

  private renderExport(exported: ExportView): void {
    clear(this.exportPanel);
    const sums: Record<string, { total: number; n: number }> = {};
    for (const row of exported.rows) {
      for (const [arm, seconds] of Object.entries(row.reading_time_s)) {
        const bucket = (sums[arm] ??= { total: 0, n: 0 });
        bucket.total += seconds;
        bucket.n += 1;
      }
    }
    const means = Object.entries(sums)
      .sort(([a], [b]) => a.localeCompare(b))
      .map(([arm, s]) => `${arm}: ${(s.total / s.n).toFixed(1)} s`)
      .join(", ");
    this.exportPanel.append(
      el("p", { text: `export: ${exported.n_cases} cases, lexicon ${exported.lexicon_version}` }),
      el("p", { text: `allocation counts: ${fmtByArm(exported.allocation_counts)}` }),
      el("p", { text: `mean reading time: ${means || "no finalized sessions"}` }),
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
