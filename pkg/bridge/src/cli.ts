#!/usr/bin/env node
// Command-line wrapper: detector-bridge --images DIR --out FILE
//                       [--conf-floor F] [--captions]

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { exportDetections } from "./export";
import { DEFAULT_CONF_FLOOR } from "./types";

export function main(argv: string[]): number {
  const args = yargs(argv)
    .option("images", {
      type: "string",
      demandOption: true,
      describe: "directory of input images (png/jpeg)",
    })
    .option("out", {
      type: "string",
      demandOption: true,
      describe: "output JSONL path",
    })
    .option("conf-floor", {
      type: "number",
      default: DEFAULT_CONF_FLOOR,
      describe: "drop detections with confidence below this",
    })
    .option("captions", {
      type: "boolean",
      default: false,
      describe: "attach one generated caption per image",
    })
    .strict()
    .exitProcess(false)
    .fail((msg) => {
      throw new Error(msg);
    })
    .parseSync();

  const summary = exportDetections({
    imageDir: args.images,
    output: args.out,
    confFloor: args["conf-floor"],
    withCaptions: args.captions,
  });
  const skipped = summary.skipped.length;
  console.log(
    `images: ${summary.images}  detections: ${summary.detections}  ` +
      `dropped: ${summary.dropped}  skipped: ${skipped}`,
  );
  return 0;
}

if (require.main === module) {
  try {
    process.exitCode = main(hideBin(process.argv));
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    process.exitCode = 1;
  }
}
