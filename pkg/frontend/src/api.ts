/** Typed client for the repair-workbench HTTP API.
 *
 * Every view the UI renders comes straight from one of these calls; the
 * client never recomputes statistics on its own.
 */

export type TextField = [name: string, value: string];

export interface FlagItem {
  instance_id: string;
  difficulty: number;
  gold_label: string;
  text_fields: TextField[];
  revision: number;
  attempt_count: number;
  resolved: boolean;
}

export interface FlagQueue {
  kind: "trivial" | "erroneous";
  total: number;
  offset: number;
  items: FlagItem[];
}

export interface Verdict {
  predicted_label: string;
  confidence: number;
  flipped: boolean;
}

export interface EditRecord {
  edit_id: number;
  instance_id: string;
  edit_kind: "trivial_hardening" | "error_repair";
  changed_fields: Record<string, string>;
  author: string;
  timestamp: string;
  predictor_verdict: Verdict | null;
  status: "proposed" | "accepted" | "rejected";
  rationale: string;
}

export interface InstanceView {
  instance_id: string;
  revision: number;
  difficulty: number | null;
  flag_kind: "trivial" | "erroneous" | null;
  gold_label: string;
  text_fields: TextField[];
  original: { gold_label: string; text_fields: TextField[] };
  edits: EditRecord[];
}

export interface ClassDelta {
  n_instances: number;
  n_candidates: number;
  before_accuracy: number;
  after_accuracy: number;
  delta: number;
}

export interface RepairReport {
  trivial: ClassDelta | null;
  erroneous: ClassDelta | null;
}

export interface Prediction {
  label_probs: Record<string, number>;
  predicted_label: string;
}

/** Server said no: carries the HTTP status and the rule it cited. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

/** The request never reached the server (offline, refused, timeout). */
export class NetworkError extends Error {}

export class WorkbenchApi {
  constructor(
    readonly baseUrl: string,
    readonly token?: string,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const headers = new Headers(init?.headers);
    if (init?.body) headers.set("Content-Type", "application/json");
    if (this.token) headers.set("Authorization", `Bearer ${this.token}`);
    let resp: Response;
    try {
      resp = await fetch(this.baseUrl + path, { ...init, headers });
    } catch (err) {
      throw new NetworkError(String(err));
    }
    const body = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      const detail =
        typeof body?.detail === "string" ? body.detail : JSON.stringify(body);
      throw new ApiError(resp.status, detail);
    }
    return body as T;
  }

  health(): Promise<{ status: string; instances: number }> {
    return this.request("/api/health");
  }

  flags(kind: "trivial" | "erroneous", offset = 0, limit = 50): Promise<FlagQueue> {
    const q = new URLSearchParams({
      kind,
      offset: String(offset),
      limit: String(limit),
    });
    return this.request(`/api/flags?${q}`);
  }

  instance(id: string): Promise<InstanceView> {
    return this.request(`/api/instances/${encodeURIComponent(id)}`);
  }

  submitEdit(
    id: string,
    body: {
      edit_kind: EditRecord["edit_kind"];
      changed_fields: Record<string, string>;
      author?: string;
      rationale?: string;
    },
    revision?: number,
  ): Promise<EditRecord> {
    const headers: Record<string, string> = {};
    if (revision !== undefined) headers["If-Match"] = String(revision);
    return this.request(`/api/instances/${encodeURIComponent(id)}/edits`, {
      method: "POST",
      headers,
      body: JSON.stringify(body),
    });
  }

  decide(editId: number, decision: "accepted" | "rejected"): Promise<EditRecord> {
    return this.request(`/api/edits/${editId}/decision`, {
      method: "POST",
      body: JSON.stringify({ decision }),
    });
  }

  repairReport(): Promise<RepairReport> {
    return this.request("/api/reports/repair");
  }

  predict(textFields: TextField[], candidateLabels: string[]): Promise<Prediction> {
    return this.request("/api/predict", {
      method: "POST",
      body: JSON.stringify({
        text_fields: textFields,
        candidate_labels: candidateLabels,
      }),
    });
  }
}
