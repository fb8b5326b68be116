/** Console bootstrap: API wiring, tab navigation, screen mounting. */

import { ApiClient } from "./api.js";
import { ConsoleController } from "./controller.js";
import { Store, type Screen } from "./state.js";
import { renderCaptureScreen } from "./screens/capture.js";
import { renderAnnotateScreen } from "./screens/annotate.js";
import { renderReviewScreen } from "./screens/review.js";
import { renderSupervisorScreen } from "./screens/supervisor.js";

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("api") ?? "";
  const api = new ApiClient(base);
  const store = new Store();
  const controller = new ConsoleController(api, store);
  const meta = await api.meta();

  const screens: Record<Screen, HTMLElement> = {
    capture: document.getElementById("screen-capture")!,
    annotate: document.getElementById("screen-annotate")!,
    review: document.getElementById("screen-review")!,
    supervisor: document.getElementById("screen-supervisor")!,
  };

  const annotateScreen = renderAnnotateScreen(screens.annotate, { controller, store });
  renderCaptureScreen(screens.capture, {
    controller, store, meta,
    onAccepted: (cropped) => {
      annotateScreen.setImage(cropped);
      store.dispatch({ kind: "screen_changed", screen: "annotate" });
    },
  });
  renderReviewScreen(screens.review, { controller, store, meta });
  renderSupervisorScreen(screens.supervisor, { controller, store });

  for (const button of document.querySelectorAll<HTMLButtonElement>("nav button")) {
    button.addEventListener("click", () => {
      store.dispatch({ kind: "screen_changed", screen: button.dataset.screen as Screen });
    });
  }

  store.subscribe((state) => {
    for (const [name, el] of Object.entries(screens)) {
      el.hidden = name !== state.screen;
    }
    for (const button of document.querySelectorAll<HTMLButtonElement>("nav button")) {
      button.classList.toggle("active", button.dataset.screen === state.screen);
    }
    const errorBar = document.getElementById("error-bar")!;
    if (state.error && state.error.code !== "quality_rejected") {
      errorBar.textContent = `${state.error.code}: ${state.error.message}`;
      errorBar.hidden = false;
    } else {
      errorBar.hidden = true;
    }
  });
  store.dispatch({ kind: "screen_changed", screen: "capture" });
}

boot().catch((error) => {
  document.getElementById("error-bar")!.textContent =
    `Cannot reach the service: ${error}`;
  document.getElementById("error-bar")!.hidden = false;
});
