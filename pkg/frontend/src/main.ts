/** `plot` command: render a figure from harness CSVs.
 *
 * Usage:
 *   plot <spec.json>
 *   plot --kind stability --input summary.csv --output stability.svg
 *   plot --kind cost-per-phase --input results.csv --reference summary.csv --output cost.svg
 *   plot --kind regret-sweep --input sweep.csv --output regret.svg
 */

import { readFileSync, writeFileSync } from "fs";

import { FigureKind, PlotSpec, render } from "./plots";

function parseArgs(argv: string[]): PlotSpec {
  if (argv.length === 1 && !argv[0].startsWith("--")) {
    const raw = JSON.parse(readFileSync(argv[0], "utf-8"));
    if (!raw.kind || !raw.input || !raw.output) {
      throw new Error("spec file must define kind, input, output");
    }
    return raw as PlotSpec;
  }
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`bad argument ${argv[i]}`);
    }
    flags.set(argv[i].slice(2), argv[i + 1]);
  }
  const kind = flags.get("kind") as FigureKind | undefined;
  const input = flags.get("input");
  const output = flags.get("output");
  if (!kind || !input || !output) {
    throw new Error("--kind, --input, --output are required");
  }
  return { kind, input, output, reference: flags.get("reference") };
}

export function main(argv: string[]): number {
  let spec: PlotSpec;
  try {
    spec = parseArgs(argv);
    const svg = render(spec);
    writeFileSync(spec.output, svg, "utf-8");
    process.stdout.write(`wrote ${spec.output}\n`);
    return 0;
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 2;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
