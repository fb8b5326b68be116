/**
 * UI state as a pure function of server responses and local interactions.
 *
 * Every mutation flows through `reduce(state, event)`; replaying the event
 * log reproduces the exact state, which the tests rely on.
 */

import type { ApiErrorPayload, CaseView, CapturePayload, PredictionPayload, QueuePayload, SummaryPayload } from "./api.js";
import { formatQualityPrompt, type QualityPrompt } from "./prompts.js";

export type Screen = "capture" | "annotate" | "review" | "supervisor";

export interface RoiDraft {
  center: { x: number; y: number } | null;
  radius: number | null;
}

export interface UiState {
  screen: Screen;
  caseId: string | null;
  caseRecord: CaseView | null;
  prompt: QualityPrompt | null;
  cropPreview: CapturePayload["crop_preview"] | null;
  roiDraft: RoiDraft;
  prediction: PredictionPayload | null;
  queue: QueuePayload["cases"] | null;
  summary: SummaryPayload | null;
  error: ApiErrorPayload | null;
}

export type UiEvent =
  | { kind: "screen_changed"; screen: Screen }
  | { kind: "case_created"; record: CaseView }
  | { kind: "case_loaded"; record: CaseView }
  | { kind: "capture_accepted"; payload: CapturePayload; record: CaseView }
  | { kind: "capture_rejected"; error: ApiErrorPayload }
  | { kind: "roi_center_picked"; point: { x: number; y: number } }
  | { kind: "roi_radius_set"; radius: number }
  | { kind: "roi_cleared" }
  | { kind: "annotated"; record: CaseView }
  | { kind: "prediction_received"; payload: PredictionPayload; record: CaseView }
  | { kind: "feedback_recorded"; record: CaseView }
  | { kind: "flagged"; record: CaseView }
  | { kind: "biopsy_confirmed"; record: CaseView }
  | { kind: "queue_loaded"; payload: QueuePayload }
  | { kind: "summary_loaded"; payload: SummaryPayload }
  | { kind: "request_failed"; error: ApiErrorPayload };

export function initialState(): UiState {
  return {
    screen: "capture",
    caseId: null,
    caseRecord: null,
    prompt: null,
    cropPreview: null,
    roiDraft: { center: null, radius: null },
    prediction: null,
    queue: null,
    summary: null,
    error: null,
  };
}

export function reduce(state: UiState, event: UiEvent): UiState {
  switch (event.kind) {
    case "screen_changed":
      return { ...state, screen: event.screen, error: null };
    case "case_created":
    case "case_loaded":
      return {
        ...initialState(),
        screen: state.screen,
        caseId: event.record.record_id,
        caseRecord: event.record,
      };
    case "capture_accepted":
      return {
        ...state,
        caseRecord: event.record,
        prompt: formatQualityPrompt(event.payload.report),
        cropPreview: event.payload.crop_preview,
        error: null,
      };
    case "capture_rejected": {
      const details = event.error.details as {
        scores?: Record<string, number>;
        flags?: Record<string, boolean>;
        verdict?: string;
        reasons?: string[];
      };
      const prompt = details.scores && details.flags
        ? formatQualityPrompt({
            scores: details.scores,
            flags: details.flags,
            verdict: details.verdict ?? "recapture",
            reasons: details.reasons ?? [],
          })
        : { items: [], recapture: true };
      return { ...state, prompt, error: event.error };
    }
    case "roi_center_picked":
      return { ...state, roiDraft: { center: event.point, radius: null } };
    case "roi_radius_set":
      if (!state.roiDraft.center) return state;
      return { ...state, roiDraft: { ...state.roiDraft, radius: event.radius } };
    case "roi_cleared":
      return { ...state, roiDraft: { center: null, radius: null } };
    case "annotated":
      return { ...state, caseRecord: event.record, roiDraft: { center: null, radius: null }, error: null };
    case "prediction_received":
      return { ...state, prediction: event.payload, caseRecord: event.record, error: null };
    case "feedback_recorded":
    case "flagged":
    case "biopsy_confirmed":
      return { ...state, caseRecord: event.record, error: null };
    case "queue_loaded":
      return { ...state, queue: event.payload.cases, error: null };
    case "summary_loaded":
      return { ...state, summary: event.payload, error: null };
    case "request_failed":
      return { ...state, error: event.error };
  }
}

export function replay(events: UiEvent[]): UiState {
  return events.reduce(reduce, initialState());
}

/** Minimal observable store wiring the reducer to screen renderers. */
export class Store {
  private state: UiState = initialState();
  private readonly log: UiEvent[] = [];
  private readonly listeners = new Set<(state: UiState) => void>();

  getState(): UiState {
    return this.state;
  }

  getLog(): UiEvent[] {
    return [...this.log];
  }

  dispatch(event: UiEvent): UiState {
    this.log.push(event);
    this.state = reduce(this.state, event);
    for (const listener of this.listeners) listener(this.state);
    return this.state;
  }

  subscribe(listener: (state: UiState) => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }
}
