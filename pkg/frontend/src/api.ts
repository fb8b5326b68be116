/** Typed client for the capture/triage HTTP API. */

export interface ApiErrorPayload {
  code: string;
  message: string;
  details: Record<string, unknown>;
}

export class ApiError extends Error {
  readonly payload: ApiErrorPayload;
  readonly status: number;

  constructor(status: number, payload: ApiErrorPayload) {
    super(`${payload.code}: ${payload.message}`);
    this.status = status;
    this.payload = payload;
  }
}

export interface CaptureView {
  original_ref: string;
  cropped_ref: string;
  report: { scores: Record<string, number>; flags: Record<string, boolean>; verdict: string; reasons: string[] };
  timestamp: number;
  override: boolean;
  roi_ref: string | null;
}

export interface CaseView {
  record_id: string;
  state: string;
  patient: { age: number; gender: string; fitzpatrick: number; lesion_location: string };
  captures: CaptureView[];
  recapture_count: number;
  annotation: unknown;
  preliminary: unknown;
  feedback: unknown[];
  malignant_suspect: boolean;
  histopathology: { result: string; final_class: string } | null;
  effective_label: string | null;
  created_at: number;
}

export interface CapturePayload {
  state: string;
  report: { scores: Record<string, number>; flags: Record<string, boolean>; verdict: string; reasons: string[] };
  capture: CaptureView;
  crop_preview: { x: number; y: number; side: number; image_width: number; image_height: number };
}

export interface PredictionPayload {
  state: string;
  members: Record<string, number[]>;
  vote: number;
  vote_label: string;
  fusion: number[] | null;
  label: string;
  risk: string;
  binary_risk: string;
  model_version: string;
}

export interface MetaPayload {
  crop_fraction: number;
  roi_padding: number;
  classes: string[];
  model_versions: string;
}

export interface QueuePayload {
  cases: { record_id: string; state: string; malignant_suspect: boolean; captures: number; effective_label: string | null }[];
}

export interface SummaryPayload {
  dataset: { total: number; by_class: Record<string, number>; by_risk: Record<string, number> };
  case_states: Record<string, number>;
}

async function unwrap<T>(response: Response): Promise<T> {
  const body = await response.json();
  if (!response.ok) {
    const error = (body as { error?: ApiErrorPayload }).error ?? {
      code: "unknown",
      message: response.statusText,
      details: {},
    };
    throw new ApiError(response.status, error);
  }
  return body as T;
}

export class ApiClient {
  constructor(private readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return fetch(this.url(path), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    }).then((r) => unwrap<T>(r));
  }

  meta(): Promise<MetaPayload> {
    return fetch(this.url("/meta")).then((r) => unwrap<MetaPayload>(r));
  }

  createCase(patient: { age: number; gender: string; fitzpatrick: number; lesion_location: string }): Promise<CaseView> {
    return this.post("/cases", patient);
  }

  getCase(caseId: string): Promise<CaseView> {
    return fetch(this.url(`/cases/${caseId}`)).then((r) => unwrap<CaseView>(r));
  }

  async submitCapture(
    caseId: string,
    image: Blob,
    device: { model: string; operating_system?: string; camera?: string },
    options: { override?: boolean; idempotencyKey?: string } = {},
  ): Promise<CapturePayload> {
    const form = new FormData();
    form.append("image", image, "capture.png");
    form.append("metadata", JSON.stringify({ device, override: options.override ?? false }));
    const headers: Record<string, string> = {};
    if (options.idempotencyKey) headers["Idempotency-Key"] = options.idempotencyKey;
    const response = await fetch(this.url(`/cases/${caseId}/captures`), {
      method: "POST",
      body: form,
      headers,
    });
    return unwrap<CapturePayload>(response);
  }

  annotate(caseId: string, roi: { center_x: number; center_y: number; radius: number },
           annotatorId: string, role: string): Promise<CaseView> {
    return this.post(`/cases/${caseId}/annotation`, {
      ...roi,
      annotator_id: annotatorId,
      role,
    });
  }

  predict(caseId: string): Promise<PredictionPayload> {
    return this.post(`/cases/${caseId}/predict`, {});
  }

  feedback(caseId: string, verdict: string, clinicianId: string, hypothesis?: string): Promise<CaseView> {
    return this.post(`/cases/${caseId}/feedback`, {
      verdict,
      clinician_id: clinicianId,
      hypothesis: hypothesis ?? null,
    });
  }

  flag(caseId: string): Promise<CaseView> {
    return this.post(`/cases/${caseId}/flag`, {});
  }

  histopathology(caseId: string, result: string, finalClass: string): Promise<CaseView> {
    return this.post(`/cases/${caseId}/histopathology`, { result, final_class: finalClass });
  }

  reviewQueue(state?: string): Promise<QueuePayload> {
    const suffix = state ? `?state=${encodeURIComponent(state)}` : "";
    return fetch(this.url(`/review/queue${suffix}`)).then((r) => unwrap<QueuePayload>(r));
  }

  summary(): Promise<SummaryPayload> {
    return fetch(this.url("/summary")).then((r) => unwrap<SummaryPayload>(r));
  }

  exportUrl(): string {
    return this.url("/export");
  }
}
