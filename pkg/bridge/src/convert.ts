// Pixel-space detections to interchange records.

import { DetectionRecord, PixelDetection } from "./types";

// Converts a pixel box to center-fraction form: a 64x48 box centered at
// (320, 240) in a 640x480 image becomes x=0.5, y=0.5, w=0.1, h=0.1.
export function toRecord(
  imageId: string,
  det: PixelDetection,
  imgW: number,
  imgH: number,
): DetectionRecord {
  if (imgW <= 0 || imgH <= 0) {
    throw new Error(`image size must be positive, got ${imgW}x${imgH}`);
  }
  return {
    image_id: imageId,
    x: (det.x + det.width / 2) / imgW,
    y: (det.y + det.height / 2) / imgH,
    w: det.width / imgW,
    h: det.height / imgH,
    conf: det.conf,
    cls: det.cls,
    img_w: imgW,
    img_h: imgH,
  };
}

// One caption per image, built from the detected labels; the surrogate
// side treats captions as opaque metadata.
export function describeScene(detections: PixelDetection[]): string {
  if (detections.length === 0) {
    return "an empty scene";
  }
  const counts = new Map<string, number>();
  for (const det of detections) {
    counts.set(det.label, (counts.get(det.label) ?? 0) + 1);
  }
  const parts = [...counts.entries()].map(([label, c]) =>
    c === 1 ? `a ${label}` : `${c} ${label}s`,
  );
  if (parts.length === 1) {
    return `a scene with ${parts[0]}`;
  }
  return `a scene with ${parts.slice(0, -1).join(", ")} and ${parts[parts.length - 1]}`;
}

// Serializes records one JSON object per line in canonical key order.
export function toJsonl(records: DetectionRecord[]): string {
  return records
    .map((r) => {
      const ordered: Record<string, unknown> = {
        image_id: r.image_id,
        x: r.x,
        y: r.y,
        w: r.w,
        h: r.h,
        conf: r.conf,
        cls: r.cls,
        img_w: r.img_w,
        img_h: r.img_h,
      };
      if (r.caption !== undefined) {
        ordered.caption = r.caption;
      }
      return JSON.stringify(ordered);
    })
    .map((line) => line + "\n")
    .join("");
}
