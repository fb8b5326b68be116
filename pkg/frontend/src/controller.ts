/**
 * UI actions: each method performs the API call a screen widget triggers
 * and dispatches the resulting events. Screens stay declarative; the
 * end-to-end test drives the console through this layer.
 */

import { ApiClient, ApiError } from "./api.js";
import type { Store } from "./state.js";

export class ConsoleController {
  constructor(readonly api: ApiClient, readonly store: Store) {}

  private fail(error: unknown): never {
    if (error instanceof ApiError) {
      this.store.dispatch({ kind: "request_failed", error: error.payload });
    } else {
      this.store.dispatch({
        kind: "request_failed",
        error: { code: "network", message: String(error), details: {} },
      });
    }
    throw error;
  }

  async createCase(patient: { age: number; gender: string; fitzpatrick: number; lesion_location: string }) {
    try {
      const record = await this.api.createCase(patient);
      this.store.dispatch({ kind: "case_created", record });
      return record;
    } catch (error) {
      this.fail(error);
    }
  }

  async loadCase(caseId: string) {
    try {
      const record = await this.api.getCase(caseId);
      this.store.dispatch({ kind: "case_loaded", record });
      return record;
    } catch (error) {
      this.fail(error);
    }
  }

  /**
   * Submit a capture; a quality rejection is part of the flow (the prompt
   * renders from the error details), every other failure propagates.
   */
  async submitCapture(image: Blob, device: { model: string }, override = false) {
    const caseId = this.requireCase();
    try {
      const payload = await this.api.submitCapture(caseId, image, device, { override });
      const record = await this.api.getCase(caseId);
      this.store.dispatch({ kind: "capture_accepted", payload, record });
      return payload;
    } catch (error) {
      if (error instanceof ApiError && error.payload.code === "quality_rejected") {
        this.store.dispatch({ kind: "capture_rejected", error: error.payload });
        return null;
      }
      this.fail(error);
    }
  }

  pickRoiCenter(point: { x: number; y: number }) {
    this.store.dispatch({ kind: "roi_center_picked", point });
  }

  setRoiRadius(radius: number) {
    this.store.dispatch({ kind: "roi_radius_set", radius });
  }

  async submitAnnotation(annotatorId: string, role: string) {
    const caseId = this.requireCase();
    const draft = this.store.getState().roiDraft;
    if (!draft.center || !draft.radius) {
      throw new Error("ROI center and radius must be set before annotating");
    }
    try {
      const record = await this.api.annotate(
        caseId,
        { center_x: draft.center.x, center_y: draft.center.y, radius: draft.radius },
        annotatorId,
        role,
      );
      this.store.dispatch({ kind: "annotated", record });
      return record;
    } catch (error) {
      this.fail(error);
    }
  }

  async requestPrediction() {
    const caseId = this.requireCase();
    try {
      const payload = await this.api.predict(caseId);
      const record = await this.api.getCase(caseId);
      this.store.dispatch({ kind: "prediction_received", payload, record });
      return payload;
    } catch (error) {
      this.fail(error);
    }
  }

  async sendFeedback(verdict: "confirm" | "disagree" | "uncertain", clinicianId: string, hypothesis?: string) {
    const caseId = this.requireCase();
    try {
      const record = await this.api.feedback(caseId, verdict, clinicianId, hypothesis);
      this.store.dispatch({ kind: "feedback_recorded", record });
      return record;
    } catch (error) {
      this.fail(error);
    }
  }

  async flagMalignantSuspect() {
    const caseId = this.requireCase();
    try {
      const record = await this.api.flag(caseId);
      this.store.dispatch({ kind: "flagged", record });
      return record;
    } catch (error) {
      this.fail(error);
    }
  }

  async recordHistopathology(result: string, finalClass: string) {
    const caseId = this.requireCase();
    try {
      const record = await this.api.histopathology(caseId, result, finalClass);
      this.store.dispatch({ kind: "biopsy_confirmed", record });
      return record;
    } catch (error) {
      this.fail(error);
    }
  }

  async refreshQueue(state?: string) {
    try {
      const payload = await this.api.reviewQueue(state);
      this.store.dispatch({ kind: "queue_loaded", payload });
      return payload;
    } catch (error) {
      this.fail(error);
    }
  }

  async refreshSummary() {
    try {
      const payload = await this.api.summary();
      this.store.dispatch({ kind: "summary_loaded", payload });
      return payload;
    } catch (error) {
      this.fail(error);
    }
  }

  private requireCase(): string {
    const caseId = this.store.getState().caseId;
    if (!caseId) throw new Error("no active case");
    return caseId;
  }
}
