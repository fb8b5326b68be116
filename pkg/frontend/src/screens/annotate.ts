/**
 * Annotation screen: pan/zoom canvas over the accepted crop; click marks
 * the lesion center, drag sets the circular ROI radius.
 */

import { dragRadius, imageToView, viewToImage, type ViewTransform } from "../geometry.js";
import type { ConsoleController } from "../controller.js";
import type { Store, UiState } from "../state.js";

export interface AnnotateDeps {
  controller: ConsoleController;
  store: Store;
}

export interface AnnotateScreen {
  setImage(bitmap: ImageBitmap): void;
}

export function renderAnnotateScreen(root: HTMLElement, deps: AnnotateDeps): AnnotateScreen {
  const { controller, store } = deps;
  root.innerHTML = `
    <section class="panel">
      <h2>Annotate region of interest</h2>
      <p class="hint">Click the lesion center, then drag outward to set the radius.</p>
      <canvas id="annotate-canvas" width="480" height="480"></canvas>
      <div class="controls">
        <label>Zoom <input id="zoom" type="range" min="0.25" max="8" step="0.25" value="1"></label>
        <label>Annotator <input id="annotator" value="derm-1"></label>
        <label>Role
          <select id="role">
            <option>dermatologist</option><option>resident</option>
            <option>student</option><option>supervisor</option>
          </select></label>
        <button id="submit-roi" type="button">Save annotation</button>
      </div>
      <p id="roi-status" class="banner"></p>
    </section>`;

  const canvas = root.querySelector<HTMLCanvasElement>("#annotate-canvas")!;
  const zoomInput = root.querySelector<HTMLInputElement>("#zoom")!;
  const status = root.querySelector<HTMLParagraphElement>("#roi-status")!;

  let bitmap: ImageBitmap | null = null;
  let dragging = false;

  function transform(): ViewTransform {
    if (!bitmap) return { scale: 1, offsetX: 0, offsetY: 0 };
    const zoom = Number(zoomInput.value);
    const base = Math.min(canvas.width / bitmap.width, canvas.height / bitmap.height);
    const scale = base * zoom;
    return {
      scale,
      offsetX: (canvas.width - bitmap.width * scale) / 2,
      offsetY: (canvas.height - bitmap.height * scale) / 2,
    };
  }

  function draw(): void {
    const ctx = canvas.getContext("2d")!;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    if (!bitmap) {
      ctx.fillStyle = "#888";
      ctx.fillText("Accept a capture first.", 20, 30);
      return;
    }
    const t = transform();
    ctx.drawImage(bitmap, t.offsetX, t.offsetY,
                  bitmap.width * t.scale, bitmap.height * t.scale);
    const draft = store.getState().roiDraft;
    if (draft.center) {
      const c = imageToView(draft.center, t);
      ctx.strokeStyle = "#e33";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.moveTo(c.x - 6, c.y);
      ctx.lineTo(c.x + 6, c.y);
      ctx.moveTo(c.x, c.y - 6);
      ctx.lineTo(c.x, c.y + 6);
      ctx.stroke();
      if (draft.radius) {
        ctx.beginPath();
        ctx.arc(c.x, c.y, draft.radius * t.scale, 0, Math.PI * 2);
        ctx.stroke();
      }
    }
  }

  canvas.addEventListener("mousedown", (ev) => {
    if (!bitmap) return;
    const rect = canvas.getBoundingClientRect();
    const view = { x: ev.clientX - rect.left, y: ev.clientY - rect.top };
    const point = viewToImage(view, transform(), bitmap.width, bitmap.height);
    if (!point) {
      status.textContent = "Click inside the image.";
      status.classList.add("warn");
      return;
    }
    status.classList.remove("warn");
    controller.pickRoiCenter(point);
    dragging = true;
    draw();
  });

  canvas.addEventListener("mousemove", (ev) => {
    if (!dragging || !bitmap) return;
    const draft = store.getState().roiDraft;
    if (!draft.center) return;
    const rect = canvas.getBoundingClientRect();
    const view = { x: ev.clientX - rect.left, y: ev.clientY - rect.top };
    controller.setRoiRadius(Math.max(1, dragRadius(draft.center, view, transform())));
    draw();
  });

  canvas.addEventListener("mouseup", () => {
    dragging = false;
  });

  zoomInput.addEventListener("input", draw);

  root.querySelector<HTMLButtonElement>("#submit-roi")!.addEventListener("click", async () => {
    const annotator = root.querySelector<HTMLInputElement>("#annotator")!.value;
    const role = root.querySelector<HTMLSelectElement>("#role")!.value;
    await deps.controller.submitAnnotation(annotator, role);
  });

  function render(state: UiState): void {
    const draft = state.roiDraft;
    if (state.caseRecord?.state === "annotated") {
      status.textContent = "Annotation saved.";
    } else if (draft.center && draft.radius) {
      status.textContent = `Center (${draft.center.x.toFixed(1)}, ${draft.center.y.toFixed(1)}), `
        + `radius ${draft.radius.toFixed(1)} px`;
    } else if (draft.center) {
      status.textContent = "Drag to set the radius.";
    } else {
      status.textContent = "No region marked yet.";
    }
    draw();
  }

  store.subscribe(render);
  render(store.getState());

  return {
    setImage(next: ImageBitmap): void {
      bitmap = next;
      controller.store.dispatch({ kind: "roi_cleared" });
      draw();
    },
  };
}
