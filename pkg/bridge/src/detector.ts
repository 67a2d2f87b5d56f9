// Built-in detector backend: a deterministic color-region analyzer.
//
// The export pipeline treats the detector as a black box behind the
// DetectorBackend interface. This backend finds connected regions of
// saturated color, classifies them by hue, and scores confidence from
// region solidity, color purity, and size. It needs no weights or
// network access, and its output is reproducible byte for byte, which
// keeps the export path testable offline; a model-backed backend can be
// swapped in through the same interface.

import { DetectorBackend, PixelDetection, RgbaImage } from "./types";

// hue buckets, in scan order of the hue circle starting at red
const BUCKET_LABELS = ["car", "truck", "bus", "boat", "person", "umbrella"];
const BUCKET_CLASSES = [2, 7, 5, 8, 0, 25];

export interface ColorRegionOptions {
  // pixels with max(R,G,B) - min(R,G,B) below this are background
  saturationThreshold: number;
  // connected regions smaller than this many pixels are noise
  minArea: number;
}

export const DEFAULT_OPTIONS: ColorRegionOptions = {
  saturationThreshold: 60,
  minArea: 24,
};

function hueBucket(r: number, g: number, b: number): number {
  const max = Math.max(r, g, b);
  const min = Math.min(r, g, b);
  const span = max - min;
  let hue: number;
  if (max === r) {
    hue = 60 * (((g - b) / span) % 6);
  } else if (max === g) {
    hue = 60 * ((b - r) / span + 2);
  } else {
    hue = 60 * ((r - g) / span + 4);
  }
  if (hue < 0) {
    hue += 360;
  }
  // 60-degree buckets centered on red/yellow/green/cyan/blue/magenta
  return Math.floor(((hue + 30) % 360) / 60);
}

export class ColorRegionDetector implements DetectorBackend {
  name = "color-region";
  private opts: ColorRegionOptions;

  constructor(opts: Partial<ColorRegionOptions> = {}) {
    this.opts = { ...DEFAULT_OPTIONS, ...opts };
  }

  detect(image: RgbaImage): PixelDetection[] {
    const { width, height, data } = image;
    const n = width * height;
    const bucket = new Int8Array(n).fill(-1);
    const saturation = new Float64Array(n);
    for (let i = 0; i < n; i++) {
      const r = data[4 * i]!;
      const g = data[4 * i + 1]!;
      const b = data[4 * i + 2]!;
      const span = Math.max(r, g, b) - Math.min(r, g, b);
      if (span >= this.opts.saturationThreshold) {
        bucket[i] = hueBucket(r, g, b);
        saturation[i] = span / 255;
      }
    }

    const detections: PixelDetection[] = [];
    const visited = new Uint8Array(n);
    const queue = new Int32Array(n);
    for (let start = 0; start < n; start++) {
      const wanted = bucket[start]!;
      if (visited[start] || wanted < 0) {
        continue;
      }
      // flood fill of one same-hue region, row-major discovery order
      let head = 0;
      let tail = 0;
      queue[tail++] = start;
      visited[start] = 1;
      let area = 0;
      let satSum = 0;
      let x0 = width;
      let x1 = -1;
      let y0 = height;
      let y1 = -1;
      while (head < tail) {
        const p = queue[head++]!;
        const px = p % width;
        const py = (p - px) / width;
        area++;
        satSum += saturation[p]!;
        if (px < x0) x0 = px;
        if (px > x1) x1 = px;
        if (py < y0) y0 = py;
        if (py > y1) y1 = py;
        const neighbors = [p - 1, p + 1, p - width, p + width];
        for (const q of neighbors) {
          if (q < 0 || q >= n || visited[q] || bucket[q] !== wanted) {
            continue;
          }
          if ((q === p - 1 && px === 0) || (q === p + 1 && px === width - 1)) {
            continue;
          }
          visited[q] = 1;
          queue[tail++] = q;
        }
      }
      if (area < this.opts.minArea) {
        continue;
      }
      const boxW = x1 - x0 + 1;
      const boxH = y1 - y0 + 1;
      // solidity: how much of the bounding box the region fills
      const fill = area / (boxW * boxH);
      const purity = satSum / area;
      const sizeTerm = Math.min(1, (20 * area) / n);
      const conf = Math.min(
        0.99,
        0.2 + 0.45 * fill + 0.25 * purity + 0.1 * sizeTerm,
      );
      detections.push({
        x: x0,
        y: y0,
        width: boxW,
        height: boxH,
        conf,
        cls: BUCKET_CLASSES[wanted]!,
        label: BUCKET_LABELS[wanted]!,
      });
    }
    return detections;
  }
}
