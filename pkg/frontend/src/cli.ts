/**
 * thermalpeps-plot <kind> <input.csv> [-o output.svg] [--no-fit]
 *
 * Kinds: trajectory | correlator | scaling | finite.
 * Exit codes: 0 ok, 2 usage or schema mismatch (with a column diagnostic).
 */

import { readFileSync, writeFileSync } from "node:fs";

import { SchemaError } from "./csv.js";
import { FigureKind, render } from "./figures.js";

const KINDS: FigureKind[] = ["trajectory", "correlator", "scaling", "finite"];

export function main(argv: string[]): number {
  const args = [...argv];
  let output: string | undefined;
  let fitOverlay = true;
  const positional: string[] = [];
  while (args.length > 0) {
    const a = args.shift()!;
    if (a === "-o" || a === "--output") {
      output = args.shift();
      if (!output) {
        console.error("missing value for -o/--output");
        return 2;
      }
    } else if (a === "--no-fit") {
      fitOverlay = false;
    } else if (a === "-h" || a === "--help") {
      console.log("usage: thermalpeps-plot <kind> <input.csv> [-o output.svg] [--no-fit]");
      console.log(`kinds: ${KINDS.join(", ")}`);
      return 0;
    } else {
      positional.push(a);
    }
  }
  if (positional.length !== 2) {
    console.error("usage: thermalpeps-plot <kind> <input.csv> [-o output.svg] [--no-fit]");
    return 2;
  }
  const [kind, input] = positional;
  if (!KINDS.includes(kind as FigureKind)) {
    console.error(`unknown kind ${kind}; expected one of ${KINDS.join(", ")}`);
    return 2;
  }
  let csv: string;
  try {
    csv = readFileSync(input!, "utf8");
  } catch (err) {
    console.error(`cannot read ${input}: ${(err as Error).message}`);
    return 2;
  }
  try {
    const svg = render({ kind: kind as FigureKind, csv, fitOverlay });
    const out = output ?? input!.replace(/\.csv$/i, "") + ".svg";
    writeFileSync(out, svg);
    console.log(out);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema mismatch: ${err.message}`);
      return 2;
    }
    throw err;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
