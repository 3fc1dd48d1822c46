#!/usr/bin/env node
import path from "node:path";

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import {
  buildEstimatorError,
  buildKlSweep,
  buildRateFit,
  buildRegretCurve,
  BuiltPlot,
} from "./plots.js";
import { renderSvg, writeFigure } from "./render.js";
import { PLOT_KINDS, PlotKind } from "./schema.js";

function splitInputs(inputs: string[]): { csv: string[]; json: string[] } {
  const csv = inputs.filter((f) => path.extname(f).toLowerCase() === ".csv");
  const json = inputs.filter((f) => path.extname(f).toLowerCase() === ".json");
  const other = inputs.filter((f) => !csv.includes(f) && !json.includes(f));
  if (other.length > 0) {
    throw new Error(`inputs must be .csv or .json files, got: ${other.join(", ")}`);
  }
  return { csv, json };
}

export function buildPlot(
  kind: PlotKind,
  inputs: string[],
  opts: { policy?: string; refExponent?: number },
): BuiltPlot {
  const { csv, json } = splitInputs(inputs);
  switch (kind) {
    case "regret-curve": {
      if (csv.length !== 1) throw new Error("regret-curve needs exactly one trace CSV");
      return buildRegretCurve(csv[0]);
    }
    case "rate-fit": {
      if (csv.length !== 1 || json.length !== 1) {
        throw new Error("rate-fit needs one medians CSV and one rate-fit JSON");
      }
      return buildRateFit(csv[0], json[0], opts.policy, opts.refExponent);
    }
    case "estimator-error": {
      if (csv.length !== 1) throw new Error("estimator-error needs exactly one CSV");
      return buildEstimatorError(csv[0], opts.refExponent);
    }
    case "kl-sweep": {
      if (csv.length !== 1) throw new Error("kl-sweep needs exactly one sweep CSV");
      return buildKlSweep(csv[0], json[0]);
    }
  }
}

export function run(argv: string[]): number {
  const args = yargs(argv)
    .usage("plot --kind <kind> --in <files..> --out <figure.svg> [--ref-exponent x]")
    .option("kind", { choices: PLOT_KINDS, demandOption: true })
    .option("in", { type: "string", array: true, demandOption: true })
    .option("out", { type: "string", demandOption: true })
    .option("ref-exponent", { type: "number" })
    .option("policy", { type: "string", describe: "policy name for rate-fit inputs" })
    .option("width", { type: "number", default: 900 })
    .option("height", { type: "number", default: 600 })
    .strict()
    .parseSync();

  const plot = buildPlot(args.kind as PlotKind, args.in as string[], {
    policy: args.policy,
    refExponent: args.refExponent,
  });
  const svg = renderSvg(plot.option, { width: args.width, height: args.height });
  writeFigure(args.out, svg);
  console.log(`wrote ${args.out}`);
  for (const line of plot.annotations) {
    console.log(`  ${line}`);
  }
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${path.resolve(process.argv[1])}`).href;

if (invokedDirectly) {
  try {
    process.exitCode = run(hideBin(process.argv));
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    process.exitCode = 1;
  }
}
