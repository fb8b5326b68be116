/**
 * Capture screen: patient form, live camera or file input, framing guide
 * overlay, quality verdicts with ordered recapture prompts.
 */

import { buildCropOverlay } from "../geometry.js";
import type { ConsoleController } from "../controller.js";
import type { Store, UiState } from "../state.js";
import type { MetaPayload } from "../api.js";

export interface CaptureDeps {
  controller: ConsoleController;
  store: Store;
  meta: MetaPayload;
  /** invoked when a capture is accepted so the annotate screen can reuse the crop */
  onAccepted: (cropped: ImageBitmap) => void;
}

const BODY_SITES = ["face", "scalp", "ear", "neck", "chest", "abdomen", "back",
  "shoulder", "upper arm", "forearm", "hand", "buttock", "thigh", "lower leg",
  "foot", "genital", "other"];

export function renderCaptureScreen(root: HTMLElement, deps: CaptureDeps): void {
  const { controller, store, meta } = deps;
  root.innerHTML = `
    <section class="panel">
      <h2>New case</h2>
      <form id="patient-form">
        <label>Age <input name="age" type="number" min="0" max="120" value="50" required></label>
        <label>Gender
          <select name="gender">
            <option>female</option><option>male</option>
            <option>other</option><option>unspecified</option>
          </select></label>
        <label>Fitzpatrick <input name="fitzpatrick" type="number" min="1" max="6" value="3" required></label>
        <label>Lesion location
          <select name="lesion_location">${BODY_SITES.map((s) => `<option>${s}</option>`).join("")}</select>
        </label>
        <button type="submit">Create case</button>
      </form>
      <p id="case-banner" class="banner"></p>
    </section>
    <section class="panel">
      <h2>Capture</h2>
      <div class="capture-stage">
        <video id="camera" autoplay playsinline muted hidden></video>
        <canvas id="preview" width="480" height="360"></canvas>
      </div>
      <div class="controls">
        <button id="camera-start" type="button">Start camera</button>
        <button id="camera-shoot" type="button" disabled>Capture frame</button>
        <input id="file-input" type="file" accept="image/*">
        <label><input id="override" type="checkbox"> supervisor override</label>
        <button id="submit-capture" type="button" disabled>Submit</button>
      </div>
      <ul id="prompt-list" class="prompts"></ul>
    </section>`;

  const video = root.querySelector<HTMLVideoElement>("#camera")!;
  const preview = root.querySelector<HTMLCanvasElement>("#preview")!;
  const promptList = root.querySelector<HTMLUListElement>("#prompt-list")!;
  const banner = root.querySelector<HTMLParagraphElement>("#case-banner")!;
  const submitButton = root.querySelector<HTMLButtonElement>("#submit-capture")!;
  const shootButton = root.querySelector<HTMLButtonElement>("#camera-shoot")!;

  let pending: { blob: Blob; bitmap: ImageBitmap } | null = null;

  root.querySelector<HTMLFormElement>("#patient-form")!.addEventListener("submit", async (ev) => {
    ev.preventDefault();
    const data = new FormData(ev.target as HTMLFormElement);
    await controller.createCase({
      age: Number(data.get("age")),
      gender: String(data.get("gender")),
      fitzpatrick: Number(data.get("fitzpatrick")),
      lesion_location: String(data.get("lesion_location")),
    });
  });

  root.querySelector<HTMLButtonElement>("#camera-start")!.addEventListener("click", async () => {
    const stream = await navigator.mediaDevices.getUserMedia({ video: true });
    video.srcObject = stream;
    video.hidden = false;
    shootButton.disabled = false;
  });

  shootButton.addEventListener("click", async () => {
    const frame = document.createElement("canvas");
    frame.width = video.videoWidth;
    frame.height = video.videoHeight;
    frame.getContext("2d")!.drawImage(video, 0, 0);
    const blob: Blob = await new Promise((resolve) =>
      frame.toBlob((b) => resolve(b!), "image/png"));
    await stage(blob);
  });

  root.querySelector<HTMLInputElement>("#file-input")!.addEventListener("change", async (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (file) await stage(file);
  });

  submitButton.addEventListener("click", async () => {
    if (!pending) return;
    const override = root.querySelector<HTMLInputElement>("#override")!.checked;
    const payload = await controller.submitCapture(pending.blob, { model: "browser-console" }, override);
    if (payload) {
      const region = payload.crop_preview;
      const cropped = await createImageBitmap(
        pending.bitmap, region.x, region.y, region.side, region.side);
      deps.onAccepted(cropped);
    }
  });

  async function stage(blob: Blob): Promise<void> {
    const bitmap = await createImageBitmap(blob);
    pending = { blob, bitmap };
    submitButton.disabled = false;
    drawPreview(bitmap);
  }

  function drawPreview(bitmap: ImageBitmap): void {
    const ctx = preview.getContext("2d")!;
    ctx.clearRect(0, 0, preview.width, preview.height);
    const overlay = buildCropOverlay(preview.width, preview.height,
                                     bitmap.width, bitmap.height, meta.crop_fraction);
    ctx.drawImage(bitmap, overlay.drawOrigin.x, overlay.drawOrigin.y,
                  bitmap.width * overlay.scale, bitmap.height * overlay.scale);
    ctx.strokeStyle = "#27c";
    ctx.lineWidth = 2;
    ctx.strokeRect(overlay.guide.x, overlay.guide.y, overlay.guide.side, overlay.guide.side);
    ctx.beginPath();
    ctx.moveTo(overlay.center.x - 8, overlay.center.y);
    ctx.lineTo(overlay.center.x + 8, overlay.center.y);
    ctx.moveTo(overlay.center.x, overlay.center.y - 8);
    ctx.lineTo(overlay.center.x, overlay.center.y + 8);
    ctx.stroke();
  }

  function render(state: UiState): void {
    banner.textContent = state.caseId
      ? `Case ${state.caseId} - ${state.caseRecord?.state ?? ""}`
      : "No active case";
    promptList.innerHTML = "";
    if (state.prompt && state.prompt.recapture) {
      for (const item of state.prompt.items) {
        const li = document.createElement("li");
        li.className = "prompt-item";
        li.textContent = `${item.reason} (${item.score.toFixed(2)}): ${item.message}`;
        promptList.appendChild(li);
      }
      const cta = document.createElement("li");
      cta.className = "prompt-cta";
      cta.textContent = "Please recapture the image.";
      promptList.appendChild(cta);
    } else if (state.prompt) {
      const ok = document.createElement("li");
      ok.className = "prompt-ok";
      ok.textContent = "Quality check passed.";
      promptList.appendChild(ok);
    }
  }

  store.subscribe(render);
  render(store.getState());
}
