/** Supervisor dashboard: review queue, dataset summary, export link. */

import type { ConsoleController } from "../controller.js";
import type { Store, UiState } from "../state.js";

export interface SupervisorDeps {
  controller: ConsoleController;
  store: Store;
}

const STATES = ["", "created", "quality_failed", "quality_passed", "annotated",
  "prediction_issued", "feedback_recorded", "biopsy_pending", "confirmed", "closed"];

export function renderSupervisorScreen(root: HTMLElement, deps: SupervisorDeps): void {
  const { controller, store } = deps;
  root.innerHTML = `
    <section class="panel">
      <h2>Review queue</h2>
      <label>State filter
        <select id="state-filter">${STATES.map((s) =>
          `<option value="${s}">${s || "all"}</option>`).join("")}</select>
      </label>
      <button id="refresh-queue" type="button">Refresh</button>
      <table id="queue-table">
        <thead><tr><th>case</th><th>state</th><th>captures</th>
        <th>suspect</th><th>label</th></tr></thead>
        <tbody></tbody>
      </table>
    </section>
    <section class="panel">
      <h2>Dataset</h2>
      <button id="refresh-summary" type="button">Refresh summary</button>
      <div id="summary-box"></div>
      <p><a id="export-link" href="#">Download dataset archive</a></p>
    </section>`;

  const tbody = root.querySelector<HTMLTableSectionElement>("#queue-table tbody")!;
  const summaryBox = root.querySelector<HTMLDivElement>("#summary-box")!;
  root.querySelector<HTMLAnchorElement>("#export-link")!.href = controller.api.exportUrl();

  root.querySelector<HTMLButtonElement>("#refresh-queue")!.addEventListener("click", () => {
    const state = root.querySelector<HTMLSelectElement>("#state-filter")!.value;
    controller.refreshQueue(state || undefined);
  });
  root.querySelector<HTMLButtonElement>("#refresh-summary")!
    .addEventListener("click", () => controller.refreshSummary());

  function render(state: UiState): void {
    tbody.innerHTML = "";
    for (const item of state.queue ?? []) {
      const row = document.createElement("tr");
      row.innerHTML = `<td>${item.record_id}</td><td>${item.state}</td>`
        + `<td>${item.captures}</td><td>${item.malignant_suspect ? "yes" : ""}</td>`
        + `<td>${item.effective_label ?? ""}</td>`;
      tbody.appendChild(row);
    }
    if (state.summary) {
      const { dataset, case_states } = state.summary;
      const classes = Object.entries(dataset.by_class)
        .map(([k, v]) => `<li>${k}: ${v}</li>`).join("");
      const risks = Object.entries(dataset.by_risk)
        .map(([k, v]) => `<li>${k}: ${v}</li>`).join("");
      const states = Object.entries(case_states)
        .map(([k, v]) => `<li>${k}: ${v}</li>`).join("");
      summaryBox.innerHTML = `
        <p>${dataset.total} labeled images</p>
        <div class="summary-cols">
          <div><h3>By class</h3><ul>${classes}</ul></div>
          <div><h3>By risk</h3><ul>${risks}</ul></div>
          <div><h3>Case states</h3><ul>${states}</ul></div>
        </div>`;
    }
  }

  store.subscribe(render);
  render(store.getState());
}
