// Synthetic test images: flat background with solid colored rectangles.

import * as fs from "fs";
import * as path from "path";

import { PNG } from "pngjs";

import { RgbaImage } from "../src/types";

export interface Rect {
  x: number;
  y: number;
  w: number;
  h: number;
  color: [number, number, number];
}

export function makeImage(
  width: number,
  height: number,
  rects: Rect[],
  background: [number, number, number] = [235, 235, 235],
): RgbaImage {
  const data = new Uint8Array(width * height * 4);
  for (let i = 0; i < width * height; i++) {
    data[4 * i] = background[0];
    data[4 * i + 1] = background[1];
    data[4 * i + 2] = background[2];
    data[4 * i + 3] = 255;
  }
  for (const rect of rects) {
    for (let y = rect.y; y < rect.y + rect.h; y++) {
      for (let x = rect.x; x < rect.x + rect.w; x++) {
        const i = y * width + x;
        data[4 * i] = rect.color[0];
        data[4 * i + 1] = rect.color[1];
        data[4 * i + 2] = rect.color[2];
      }
    }
  }
  return { width, height, data };
}

export function toPng(image: RgbaImage): Buffer {
  const png = new PNG({ width: image.width, height: image.height });
  Buffer.from(image.data).copy(png.data);
  return PNG.sync.write(png);
}

export function writePng(dir: string, name: string, image: RgbaImage): string {
  const file = path.join(dir, name);
  fs.writeFileSync(file, toPng(image));
  return file;
}

export const RED: [number, number, number] = [255, 0, 0];
export const DIM_RED: [number, number, number] = [200, 30, 30];
export const GREEN: [number, number, number] = [40, 180, 40];
export const BLUE: [number, number, number] = [30, 60, 200];
export const YELLOW: [number, number, number] = [210, 200, 40];
