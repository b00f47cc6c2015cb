// Frame rendering: grayscale pixel grid scaled up with hard pixel edges,
// plus label-probability bar geometry. The buffer math is pure so it can
// be golden-tested without a real canvas.

import { WireFrame, decodePixels } from "./protocol.js";

export function frameToRgba(
  pixels: Uint8Array,
  width: number,
  height: number,
  scale: number,
): Uint8ClampedArray<ArrayBuffer> {
  const w = width * scale;
  const h = height * scale;
  const out = new Uint8ClampedArray(new ArrayBuffer(w * h * 4));
  for (let y = 0; y < h; y++) {
    const srcRow = Math.floor(y / scale) * width;
    for (let x = 0; x < w; x++) {
      const v = pixels[srcRow + Math.floor(x / scale)];
      const o = (y * w + x) * 4;
      out[o] = v;
      out[o + 1] = v;
      out[o + 2] = v;
      out[o + 3] = 255;
    }
  }
  return out;
}

export function drawFrame(
  ctx: CanvasRenderingContext2D,
  frame: WireFrame,
  scale: number,
): void {
  const pixels = decodePixels(frame);
  const rgba = frameToRgba(pixels, frame.width, frame.height, scale);
  const image = new ImageData(rgba, frame.width * scale, frame.height * scale);
  ctx.putImageData(image, 0, 0);
}

// Bar heights in [0, 1] for the per-class probability display.
export function probBarHeights(labelProbs: number[]): number[] {
  return labelProbs.map((p) => Math.min(Math.max(p, 0), 1));
}
