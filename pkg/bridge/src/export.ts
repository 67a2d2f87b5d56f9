// Directory-to-JSONL export: the bridge's one entry point.

import * as fs from "fs";
import * as path from "path";

import { describeScene, toJsonl, toRecord } from "./convert";
import { ColorRegionDetector } from "./detector";
import { listImageFiles, loadImage } from "./image";
import {
  BridgeConfig,
  DetectionRecord,
  DetectorBackend,
  validateConfig,
} from "./types";

export interface ExportSummary {
  images: number;
  skipped: string[];
  detections: number;
  dropped: number; // below the confidence floor
}

// Scans cfg.imageDir (lexicographic order), runs the backend on each
// decodable image, drops detections below cfg.confFloor, and writes one
// JSONL line per kept detection to cfg.output. Unreadable images are
// skipped with a warning; zero detections still write an (empty) file.
export function exportDetections(
  cfg: BridgeConfig,
  backend: DetectorBackend = new ColorRegionDetector(),
  warn: (message: string) => void = (m) => console.error(m),
): ExportSummary {
  validateConfig(cfg);
  if (!fs.existsSync(cfg.imageDir) || !fs.statSync(cfg.imageDir).isDirectory()) {
    throw new Error(`image directory not found: ${cfg.imageDir}`);
  }
  const summary: ExportSummary = {
    images: 0,
    skipped: [],
    detections: 0,
    dropped: 0,
  };
  const records: DetectionRecord[] = [];
  for (const name of listImageFiles(cfg.imageDir)) {
    const file = path.join(cfg.imageDir, name);
    let image;
    try {
      image = loadImage(file);
    } catch (err) {
      summary.skipped.push(name);
      warn(`warning: skipping unreadable image ${name}: ${String(err)}`);
      continue;
    }
    summary.images++;
    const imageId = name.slice(0, name.length - path.extname(name).length);
    const detections = backend.detect(image);
    const kept = detections.filter((d) => d.conf >= cfg.confFloor);
    summary.dropped += detections.length - kept.length;
    const caption = cfg.withCaptions ? describeScene(kept) : undefined;
    for (const det of kept) {
      const record = toRecord(imageId, det, image.width, image.height);
      if (caption !== undefined) {
        record.caption = caption;
      }
      records.push(record);
    }
  }
  summary.detections = records.length;
  if (records.length === 0) {
    warn("warning: no detections above the confidence floor");
  }
  fs.writeFileSync(cfg.output, toJsonl(records));
  return summary;
}
