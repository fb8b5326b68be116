/**
 * Crop-overlay and annotation-canvas geometry.
 *
 * All functions are pure; the crop math mirrors the server's centered
 * square crop exactly so the on-screen guide frames precisely what the
 * service will store.
 */

export interface Point {
  x: number;
  y: number;
}

export interface CropRegion {
  x: number;
  y: number;
  side: number;
}

export interface OverlayGeometry {
  /** square framing guide, viewport coordinates */
  guide: CropRegion;
  /** cross-hair at the guide center, viewport coordinates */
  center: Point;
  /** image -> viewport scale of the letterboxed drawing */
  scale: number;
  /** top-left corner of the drawn image inside the viewport */
  drawOrigin: Point;
}

/** Server-side centered square crop region, in image pixels. */
export function cropRegion(width: number, height: number, fraction: number): CropRegion {
  if (width <= 0 || height <= 0) {
    throw new Error(`image dimensions must be positive, got ${width}x${height}`);
  }
  if (!(fraction > 0 && fraction <= 1)) {
    throw new Error(`crop fraction must be in (0, 1], got ${fraction}`);
  }
  const side = Math.floor(fraction * Math.min(width, height));
  if (side < 1) {
    throw new Error(`crop fraction ${fraction} yields an empty region`);
  }
  return {
    x: Math.floor((width - side) / 2),
    y: Math.floor((height - side) / 2),
    side,
  };
}

/** Letterboxed framing guide for an image drawn inside a viewport. */
export function buildCropOverlay(
  viewportW: number,
  viewportH: number,
  imageW: number,
  imageH: number,
  fraction: number,
): OverlayGeometry {
  if (viewportW <= 0 || viewportH <= 0) {
    throw new Error(`viewport dimensions must be positive, got ${viewportW}x${viewportH}`);
  }
  const region = cropRegion(imageW, imageH, fraction);
  const scale = Math.min(viewportW / imageW, viewportH / imageH);
  const drawOrigin = {
    x: (viewportW - imageW * scale) / 2,
    y: (viewportH - imageH * scale) / 2,
  };
  return {
    guide: {
      x: drawOrigin.x + region.x * scale,
      y: drawOrigin.y + region.y * scale,
      side: region.side * scale,
    },
    center: {
      x: drawOrigin.x + (region.x + region.side / 2) * scale,
      y: drawOrigin.y + (region.y + region.side / 2) * scale,
    },
    scale,
    drawOrigin,
  };
}

/** Guide mapped back to image pixels (used by tests and the capture preview). */
export function overlayToImage(overlay: OverlayGeometry): CropRegion {
  return {
    x: (overlay.guide.x - overlay.drawOrigin.x) / overlay.scale,
    y: (overlay.guide.y - overlay.drawOrigin.y) / overlay.scale,
    side: overlay.guide.side / overlay.scale,
  };
}

/** Pan/zoom state of the annotation canvas: view = image * scale + offset. */
export interface ViewTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export function imageToView(point: Point, t: ViewTransform): Point {
  return { x: point.x * t.scale + t.offsetX, y: point.y * t.scale + t.offsetY };
}

/**
 * Inverse transform of a click; returns null when the click lands outside
 * the image extent (letterbox margin) so the caller can show a cue.
 */
export function viewToImage(
  point: Point,
  t: ViewTransform,
  imageW: number,
  imageH: number,
): Point | null {
  if (!Number.isFinite(t.scale) || t.scale <= 0) {
    throw new Error(`transform not invertible, scale ${t.scale}`);
  }
  const x = (point.x - t.offsetX) / t.scale;
  const y = (point.y - t.offsetY) / t.scale;
  if (x < 0 || y < 0 || x >= imageW || y >= imageH) {
    return null;
  }
  return { x, y };
}

/** Radius in image pixels from the center mark to the drag point. */
export function dragRadius(centerImage: Point, dragView: Point, t: ViewTransform): number {
  const centerView = imageToView(centerImage, t);
  const dx = dragView.x - centerView.x;
  const dy = dragView.y - centerView.y;
  return Math.hypot(dx, dy) / t.scale;
}
