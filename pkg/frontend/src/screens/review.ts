/**
 * Review screen: prediction breakdown, confirm/disagree/uncertain feedback,
 * malignancy flagging and histopathology entry.
 */

import type { ConsoleController } from "../controller.js";
import type { Store, UiState } from "../state.js";
import type { MetaPayload } from "../api.js";

export interface ReviewDeps {
  controller: ConsoleController;
  store: Store;
  meta: MetaPayload;
}

export function renderReviewScreen(root: HTMLElement, deps: ReviewDeps): void {
  const { controller, store, meta } = deps;
  root.innerHTML = `
    <section class="panel">
      <h2>Preliminary prediction</h2>
      <button id="run-predict" type="button">Run classifiers</button>
      <div id="prediction"></div>
    </section>
    <section class="panel">
      <h2>Clinician feedback</h2>
      <label>Clinician <input id="clinician" value="derm-1"></label>
      <label>Hypothesis <input id="hypothesis" placeholder="required when disagreeing"></label>
      <div class="controls">
        <button id="fb-confirm" type="button">Confirm</button>
        <button id="fb-disagree" type="button">Disagree</button>
        <button id="fb-uncertain" type="button">Uncertain</button>
      </div>
      <div class="controls">
        <button id="flag" type="button">Flag malignant suspect</button>
      </div>
    </section>
    <section class="panel">
      <h2>Histopathology</h2>
      <label>Result <input id="histo-result" placeholder="e.g. BCC confirmed"></label>
      <label>Final class
        <select id="histo-class">${meta.classes.map((c) => `<option>${c}</option>`).join("")}</select>
      </label>
      <button id="histo-save" type="button">Record result</button>
      <p id="review-status" class="banner"></p>
    </section>`;

  const predictionBox = root.querySelector<HTMLDivElement>("#prediction")!;
  const status = root.querySelector<HTMLParagraphElement>("#review-status")!;
  const clinician = () => root.querySelector<HTMLInputElement>("#clinician")!.value;
  const hypothesis = () => root.querySelector<HTMLInputElement>("#hypothesis")!.value || undefined;

  root.querySelector<HTMLButtonElement>("#run-predict")!
    .addEventListener("click", () => controller.requestPrediction());
  root.querySelector<HTMLButtonElement>("#fb-confirm")!
    .addEventListener("click", () => controller.sendFeedback("confirm", clinician()));
  root.querySelector<HTMLButtonElement>("#fb-disagree")!
    .addEventListener("click", () => controller.sendFeedback("disagree", clinician(), hypothesis()));
  root.querySelector<HTMLButtonElement>("#fb-uncertain")!
    .addEventListener("click", () => controller.sendFeedback("uncertain", clinician()));
  root.querySelector<HTMLButtonElement>("#flag")!
    .addEventListener("click", () => controller.flagMalignantSuspect());
  root.querySelector<HTMLButtonElement>("#histo-save")!.addEventListener("click", () => {
    const result = root.querySelector<HTMLInputElement>("#histo-result")!.value;
    const finalClass = root.querySelector<HTMLSelectElement>("#histo-class")!.value;
    controller.recordHistopathology(result, finalClass);
  });

  function bars(name: string, probs: number[]): string {
    const rows = probs.map((p, i) => `
      <div class="bar-row">
        <span class="bar-label">${meta.classes[i] ?? `class ${i}`}</span>
        <span class="bar" style="width:${Math.round(p * 160)}px"></span>
        <span>${(p * 100).toFixed(1)}%</span>
      </div>`).join("");
    return `<details open><summary>${name}</summary>${rows}</details>`;
  }

  function render(state: UiState): void {
    const pred = state.prediction;
    if (pred) {
      const members = Object.entries(pred.members)
        .map(([name, probs]) => bars(name, probs)).join("");
      const fusion = pred.fusion ? bars("fusion", pred.fusion) : "";
      predictionBox.innerHTML = `
        ${members}${fusion}
        <p><strong>${pred.label}</strong> - ${pred.risk}
           (<em>${pred.binary_risk}</em>); vote: ${pred.vote_label}</p>
        <p class="fine">models: ${pred.model_version}</p>`;
    } else {
      predictionBox.textContent = "No prediction yet.";
    }
    const rec = state.caseRecord;
    status.textContent = rec
      ? `Case ${rec.record_id}: ${rec.state}`
        + (rec.histopathology ? ` - final: ${rec.histopathology.final_class}` : "")
      : "No active case.";
    if (state.error) {
      status.textContent += ` - ${state.error.code}: ${state.error.message}`;
    }
  }

  store.subscribe(render);
  render(store.getState());
}
