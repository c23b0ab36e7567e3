#!/usr/bin/env node
/**
 * featurize <input csv> <output csv> --task {classification,regression}
 *
 * Reads a SMILES task file (columns Drug, Y, split), writes the core
 * dataset format with the first 128 MACCS bits. Drops unparseable SMILES
 * rows and reports the count on stderr.
 */
import * as fs from "fs";
import { buildDataset, TaskKind } from "./dataset";

function usage(): never {
  process.stderr.write(
    "usage: featurize <input csv> <output csv> --task {classification,regression}\n",
  );
  process.exit(2);
}

async function main(): Promise<number> {
  const args = process.argv.slice(2);
  const positional: string[] = [];
  let task: string | null = null;
  for (let i = 0; i < args.length; i++) {
    if (args[i] === "--task") {
      task = args[++i] ?? null;
    } else if (args[i].startsWith("--")) {
      usage();
    } else {
      positional.push(args[i]);
    }
  }
  if (positional.length !== 2 || task === null) usage();
  if (task !== "classification" && task !== "regression") usage();
  const [inputPath, outputPath] = positional;

  let text: string;
  try {
    text = fs.readFileSync(inputPath, "utf-8");
  } catch (err) {
    process.stderr.write(`cannot read ${inputPath}: ${(err as Error).message}\n`);
    return 1;
  }
  try {
    const result = await buildDataset(text, task as TaskKind);
    fs.writeFileSync(outputPath, result.content);
    process.stderr.write(
      `wrote ${result.kept} rows to ${outputPath} (${result.dropped} dropped)\n`,
    );
    return 0;
  } catch (err) {
    process.stderr.write(`featurize failed: ${(err as Error).message}\n`);
    return 1;
  }
}

main().then((code) => {
  process.exitCode = code;
});
