#!/usr/bin/env node
/**
 * plots --in DIR --out DIR
 *
 * Reads DIR/metrics.csv (and eigen_trace.csv when present) and writes the
 * figure files into the output directory. Schema mismatches abort with the
 * offending column named.
 */

import { mkdirSync } from "fs";
import { parseArgs } from "util";

import { SchemaError } from "./csv.js";
import { plotAll } from "./figures.js";

export function main(argv: string[]): number {
  let values;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        in: { type: "string" },
        out: { type: "string" },
      },
    }));
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }
  if (!values.in || !values.out) {
    console.error("usage: plots --in DIR --out DIR");
    return 2;
  }
  mkdirSync(values.out, { recursive: true });
  try {
    for (const path of plotAll(values.in, values.out)) {
      console.log(`wrote ${path}`);
    }
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`error: bad input schema (column '${err.column}'): ${err.message}`);
      return 1;
    }
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
