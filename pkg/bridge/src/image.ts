// Image decoding: PNG and JPEG files to packed RGBA pixels.

import * as fs from "fs";
import * as path from "path";

import * as jpeg from "jpeg-js";
import { PNG } from "pngjs";

import { RgbaImage } from "./types";

const PNG_MAGIC = Buffer.from([0x89, 0x50, 0x4e, 0x47]);
const JPEG_MAGIC = Buffer.from([0xff, 0xd8, 0xff]);

export const IMAGE_EXTENSIONS = [".png", ".jpg", ".jpeg"];

export function isImagePath(file: string): boolean {
  return IMAGE_EXTENSIONS.includes(path.extname(file).toLowerCase());
}

// Decodes by content magic, not extension; throws on anything else.
export function decodeImage(buffer: Buffer): RgbaImage {
  if (buffer.subarray(0, 4).equals(PNG_MAGIC)) {
    const png = PNG.sync.read(buffer);
    return {
      width: png.width,
      height: png.height,
      data: new Uint8Array(png.data),
    };
  }
  if (buffer.subarray(0, 3).equals(JPEG_MAGIC)) {
    const img = jpeg.decode(buffer, { useTArray: true, maxMemoryUsageInMB: 512 });
    return { width: img.width, height: img.height, data: img.data };
  }
  throw new Error("not a PNG or JPEG file");
}

export function loadImage(file: string): RgbaImage {
  return decodeImage(fs.readFileSync(file));
}

// Lexicographically sorted image files directly inside a directory.
export function listImageFiles(dir: string): string[] {
  const entries = fs.readdirSync(dir, { withFileTypes: true });
  return entries
    .filter((e) => e.isFile() && isImagePath(e.name))
    .map((e) => e.name)
    .sort();
}
