/** Test harness: materialize a synthetic dataset with the CLI, then run the
 * real API server as a child process. */

import { spawn, spawnSync, ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

const PYTHON = process.env.DIFFEVAL_PYTHON ?? "python3";

export interface LiveServer {
  baseUrl: string;
  dataDir: string;
  stop(): void;
}

export function makeDataset(seed = 5): string {
  const dir = mkdtempSync(join(tmpdir(), "workbench-data-"));
  const result = spawnSync(
    PYTHON,
    [
      "-m", "diffeval.cli", "simulate",
      "--seed", String(seed),
      "--n-instances", "120",
      "--n-candidates", "6",
      "--replicates", "2",
      "--budget-pcts", "10",
      "--k-low", "15",
      "--k-high", "15",
      "--output-dir", dir,
    ],
    { encoding: "utf-8" },
  );
  if (result.status !== 0) {
    throw new Error(`simulate failed: ${result.stderr}`);
  }
  return dir;
}

export async function startServer(dataDir: string): Promise<LiveServer> {
  const port = 20000 + Math.floor(Math.random() * 20000);
  const baseUrl = `http://127.0.0.1:${port}`;
  const child: ChildProcess = spawn(
    PYTHON,
    ["-m", "diffeval.cli", "serve", "--data-dir", dataDir, "--addr", `127.0.0.1:${port}`],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  let stderr = "";
  child.stderr?.on("data", (chunk) => (stderr += chunk));

  const deadline = Date.now() + 20_000;
  while (Date.now() < deadline) {
    if (child.exitCode !== null) {
      throw new Error(`server exited early (${child.exitCode}): ${stderr}`);
    }
    try {
      const resp = await fetch(`${baseUrl}/api/health`);
      if (resp.ok) {
        return {
          baseUrl,
          dataDir,
          stop() {
            child.kill("SIGTERM");
          },
        };
      }
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 150));
  }
  child.kill("SIGTERM");
  throw new Error(`server never became healthy: ${stderr}`);
}

export function cleanupDataset(dir: string): void {
  rmSync(dir, { recursive: true, force: true });
}
