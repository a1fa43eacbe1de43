/**
 * Subprocess bridge to the ctaug CLI.
 *
 * The toolkit binary is resolved from CTAUG_CLI (e.g. "ctaug" when installed
 * on PATH); by default the sibling source tree of this repository is run via
 * `python3 -m ctaug`.
 */

import { spawnSync } from "node:child_process";
import * as path from "node:path";

import { CtaugError, ValidationError } from "./errors";

export interface CliInvocation {
  command: string;
  args: string[];
  env: NodeJS.ProcessEnv;
}

function invocation(cliArgs: string[]): CliInvocation {
  const override = process.env.CTAUG_CLI;
  if (override) {
    const [command, ...prefix] = override.split(" ");
    return { command, args: [...prefix, ...cliArgs], env: process.env };
  }
  const srcDir = path.resolve(__dirname, "..", "..", "..", "src");
  const pythonPath = process.env.PYTHONPATH
    ? `${srcDir}${path.delimiter}${process.env.PYTHONPATH}`
    : srcDir;
  return {
    command: process.env.CTAUG_PYTHON ?? "python3",
    args: ["-m", "ctaug", ...cliArgs],
    env: { ...process.env, PYTHONPATH: pythonPath },
  };
}

/** Run one ctaug subcommand; throws CtaugError/ValidationError on failure. */
export function runCli(args: string[]): string {
  const inv = invocation(["--json-errors", ...args]);
  const result = spawnSync(inv.command, inv.args, { encoding: "utf-8", env: inv.env });
  if (result.error) {
    throw new CtaugError(`failed to launch ${inv.command}: ${result.error.message}`, "SpawnError", 3);
  }
  if (result.status !== 0) {
    const lines = (result.stderr ?? "").trim().split("\n");
    const last = lines[lines.length - 1];
    try {
      const doc = JSON.parse(last);
      if (doc.error === "ValidationError" || doc.exit_code === 2) {
        throw new ValidationError(doc.message);
      }
      throw new CtaugError(doc.message, doc.error, doc.exit_code);
    } catch (err) {
      if (err instanceof CtaugError) {
        throw err;
      }
      throw new CtaugError(
        `ctaug exited with ${result.status}: ${result.stderr || result.stdout}`,
        "CliError",
        result.status ?? 4
      );
    }
  }
  return result.stdout;
}
