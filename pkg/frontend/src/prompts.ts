/** Recapture prompt construction from a quality report payload. */

export interface QualityReportPayload {
  scores: Record<string, number>;
  flags: Record<string, boolean>;
  verdict: string;
  reasons: string[];
}

export interface PromptItem {
  reason: string;
  score: number;
  message: string;
}

export interface QualityPrompt {
  items: PromptItem[];
  recapture: boolean;
}

const INDICATOR_ORDER = ["sharpness", "blur", "exposure", "compression"];

const MESSAGES: Record<string, string> = {
  sharpness: "Fine detail is lost. Move closer (about 5 cm) and refocus before retaking.",
  blur: "The image looks out of focus or shaken. Hold the phone steady and retake.",
  exposure: "Lighting is off (too bright or too dark). Adjust lighting and retake.",
  compression: "The image shows compression artifacts. Retake at the camera's native quality.",
};

/**
 * One message per flagged indicator, ordered by descending score (ties by
 * indicator order). A passing report yields an empty prompt without the
 * recapture call-to-action.
 */
export function formatQualityPrompt(report: QualityReportPayload): QualityPrompt {
  const flagged = INDICATOR_ORDER.filter((name) => report.flags[name]);
  flagged.sort((a, b) => {
    const diff = (report.scores[b] ?? 0) - (report.scores[a] ?? 0);
    if (diff !== 0) return diff;
    return INDICATOR_ORDER.indexOf(a) - INDICATOR_ORDER.indexOf(b);
  });
  const items = flagged.map((reason) => ({
    reason,
    score: report.scores[reason] ?? 0,
    message: MESSAGES[reason] ?? `Quality issue: ${reason}. Please retake.`,
  }));
  return { items, recapture: items.length > 0 };
}
