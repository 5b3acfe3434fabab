// Typed client for the cxrstudy HTTP API.
//
// Every method maps 1:1 onto a documented route. The client never invents
// fields and never peels provenance out of blinded payloads; whatever the
// server withholds stays withheld here.

export type Arm = "ai-assisted" | "standard-care";

export type Instrument =
  | "likert_quality"
  | "radpeer_agreement"
  | "pairwise_preference"
  | "source_guess";

export interface StudySummary {
  study_id: string;
  name: string;
}

export interface AllocationRow {
  sequence_index: number;
  sealed: boolean;
  opened_at: number | null;
  // present only once the envelope has been opened
  arm?: Arm;
}

export interface ReaderView {
  reader_id: string;
  arm: Arm;
}

export interface CaseView {
  case_id: string;
  image_refs: string[];
  history_note: string;
  patient_meta: Record<string, unknown>;
  admissible: boolean;
  sessions_by_arm: Partial<Record<Arm, string>>;
  released_report_id: string | null;
  signature: string | null;
}

export interface SessionView {
  session_id: string;
  case_id: string;
  reader_id: string;
  arm: Arm;
  state: "reading" | "finalized";
  started_wall: number;
  started_mono: number;
  finalized_wall: number | null;
  finalized_mono: number | null;
  reading_time_s: number | null;
  draft_source: "none" | "ai-model";
  draft_report_id: string | null;
  draft_latency_ms: number | null;
  model_version: string | null;
  report_versions: string[];
}

export interface DraftView {
  session_id: string;
  report_text: string;
  findings: { finding: string; probability: number }[];
  latency_ms: number;
  model_version: string;
}

export interface ReportView {
  report_id: string;
  case_id: string;
  text: string;
  author_role: string;
  arm: Arm | null;
  parent_report_id: string | null;
  image_refs: string[];
  history_note: string;
}

export interface PairwisePayload {
  first_text: string;
  second_text: string;
}

export interface SingleReportPayload {
  report_text: string;
}

export interface BatchItem {
  item_id: string;
  case_id: string;
  instrument: Instrument;
  payload: PairwisePayload | SingleReportPayload;
  display_order_seed: number;
}

export interface BatchView {
  batch_id: string;
  instrument: Instrument;
  seed: number;
  items: BatchItem[];
}

export interface EvaluationRecordView {
  batch_id: string;
  item_id: string;
  rater_id: string;
  response: string | number;
}

export interface OverviewView {
  study_id: string;
  allocations: {
    total: number;
    sealed: number;
    opened: number;
    opened_by_arm: Record<string, number>;
  };
  readers: { total: number; by_arm: Record<string, number> };
  cases: { registered: number; fully_read: number; released: number };
  sessions: { reading: number; finalized: number };
  evaluation: { batches: number; records: number };
}

export interface ExportRow {
  case_id: string;
  readers: Record<string, string>;
  reading_time_s: Record<string, number>;
  pneumonia_positive: Record<string, boolean>;
  released_report_id: string | null;
  quality_scores: Record<string, number[]>;
  agreement_scores: Record<string, number[]>;
  preference_votes: string[];
}

export interface ExportView {
  study_id: string;
  n_cases: number;
  allocation_counts: Record<string, number>;
  lexicon_version: string;
  rows: ExportRow[];
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class StudyApi {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    // bind so a bare window.fetch keeps its receiver
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    let res: Response;
    res = await this.fetchFn(this.base + path, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const parsed = (await res.json()) as { detail?: unknown };
        if (typeof parsed.detail === "string") {
          detail = parsed.detail;
        } else if (parsed.detail !== undefined) {
          detail = JSON.stringify(parsed.detail);
        }
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/healthz");
  }

  listStudies(): Promise<{ studies: StudySummary[] }> {
    return this.request("GET", "/studies");
  }

  createStudy(studyId: string, name: string): Promise<StudySummary> {
    return this.request("POST", "/studies", { study_id: studyId, name });
  }

  createAllocation(
    studyId: string,
    seed: number,
    n: number,
    blockSize = 4,
  ): Promise<{ study_id: string; n: number }> {
    return this.request("POST", `/studies/${studyId}/allocation`, {
      seed,
      n,
      block_size: blockSize,
    });
  }

  listAllocations(studyId: string): Promise<{ allocations: AllocationRow[] }> {
    return this.request("GET", `/studies/${studyId}/allocations`);
  }

  openAllocation(
    studyId: string,
    sequenceIndex: number,
  ): Promise<{ sequence_index: number; arm: Arm }> {
    return this.request(
      "GET",
      `/studies/${studyId}/allocations/${sequenceIndex}/arm`,
    );
  }

  enrollReader(studyId: string, readerId: string): Promise<ReaderView> {
    return this.request("POST", `/studies/${studyId}/readers`, {
      reader_id: readerId,
    });
  }

  registerCase(
    studyId: string,
    caseId: string,
    imageRefs: string[],
    historyNote = "",
  ): Promise<CaseView> {
    return this.request("POST", `/studies/${studyId}/cases`, {
      case_id: caseId,
      image_refs: imageRefs,
      history_note: historyNote,
    });
  }

  getCase(studyId: string, caseId: string): Promise<CaseView> {
    return this.request("GET", `/studies/${studyId}/cases/${caseId}`);
  }

  startSession(
    studyId: string,
    caseId: string,
    readerId: string,
  ): Promise<SessionView> {
    return this.request("POST", `/studies/${studyId}/sessions`, {
      case_id: caseId,
      reader_id: readerId,
    });
  }

  getSession(studyId: string, sessionId: string): Promise<SessionView> {
    return this.request("GET", `/studies/${studyId}/sessions/${sessionId}`);
  }

  requestDraft(studyId: string, sessionId: string): Promise<DraftView> {
    return this.request(
      "POST",
      `/studies/${studyId}/sessions/${sessionId}/draft`,
    );
  }

  finalizeSession(
    studyId: string,
    sessionId: string,
    finalText: string,
  ): Promise<SessionView> {
    return this.request(
      "POST",
      `/studies/${studyId}/sessions/${sessionId}/finalize`,
      { final_text: finalText },
    );
  }

  seniorReview(
    studyId: string,
    caseId: string,
    reviewerId: string,
    opts: { baseArm?: Arm; baseReportId?: string; text?: string } = {},
  ): Promise<ReportView> {
    const body: Record<string, unknown> = { reviewer_id: reviewerId };
    if (opts.baseArm !== undefined) body["base_arm"] = opts.baseArm;
    if (opts.baseReportId !== undefined) body["base_report_id"] = opts.baseReportId;
    if (opts.text !== undefined) body["text"] = opts.text;
    return this.request("POST", `/studies/${studyId}/cases/${caseId}/review`, body);
  }

  getReport(studyId: string, reportId: string): Promise<ReportView> {
    return this.request("GET", `/studies/${studyId}/reports/${reportId}`);
  }

  createBatch(
    studyId: string,
    instrument: Instrument,
    seed: number,
  ): Promise<BatchView> {
    return this.request("POST", `/studies/${studyId}/evaluation/batches`, {
      instrument,
      seed,
    });
  }

  getBatch(studyId: string, batchId: string): Promise<BatchView> {
    return this.request(
      "GET",
      `/studies/${studyId}/evaluation/batches/${batchId}`,
    );
  }

  submitRecord(
    studyId: string,
    batchId: string,
    itemId: string,
    raterId: string,
    response: string | number,
  ): Promise<EvaluationRecordView> {
    return this.request("POST", `/studies/${studyId}/evaluation/records`, {
      batch_id: batchId,
      item_id: itemId,
      rater_id: raterId,
      response,
    });
  }

  getOverview(studyId: string): Promise<OverviewView> {
    return this.request("GET", `/studies/${studyId}/overview`);
  }

  getExport(studyId: string): Promise<ExportView> {
    return this.request("GET", `/studies/${studyId}/export`);
  }
}
