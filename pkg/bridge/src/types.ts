// Shared shapes for the detector-to-surrogate export path.

// One detection in pixel space, as produced by a detector backend.
export interface PixelDetection {
  // top-left corner and size, in pixels
  x: number;
  y: number;
  width: number;
  height: number;
  conf: number;
  cls: number;
  label: string;
}

// Decoded image: tightly packed RGBA bytes, row-major.
export interface RgbaImage {
  width: number;
  height: number;
  data: Uint8Array;
}

// A detector backend turns decoded pixels into detections. Output order
// must be deterministic for a given image.
export interface DetectorBackend {
  name: string;
  detect(image: RgbaImage): PixelDetection[];
}

// One line of the interchange JSONL consumed by the surrogate pipeline:
// box center and size as image fractions, confidence, integer class,
// source image size, optional caption.
export interface DetectionRecord {
  image_id: string;
  x: number;
  y: number;
  w: number;
  h: number;
  conf: number;
  cls: number;
  img_w: number;
  img_h: number;
  caption?: string;
}

export interface BridgeConfig {
  imageDir: string;
  output: string;
  confFloor: number;
  withCaptions: boolean;
}

export const DEFAULT_CONF_FLOOR = 0.25;

export function validateConfig(cfg: BridgeConfig): void {
  if (!(cfg.confFloor >= 0 && cfg.confFloor <= 1)) {
    throw new Error(`conf floor must be in [0, 1], got ${cfg.confFloor}`);
  }
  if (cfg.imageDir.length === 0) {
    throw new Error("image directory must not be empty");
  }
  if (cfg.output.length === 0) {
    throw new Error("output path must not be empty");
  }
}
