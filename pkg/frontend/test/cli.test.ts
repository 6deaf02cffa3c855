/**
 * Drives the built command end to end (exit codes, outputs, determinism).
 * Needs `npm run build` first; the package's `pretest` script takes care of
 * that under `npm test`.
 */

import { spawnSync } from "node:child_process";
import { existsSync, mkdtempSync, readFileSync, readdirSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

const CLI = fileURLToPath(new URL("../dist/cli.js", import.meta.url));
const GRID = fileURLToPath(new URL("./fixtures/grid", import.meta.url));
const DIVERGED = fileURLToPath(new URL("./fixtures/diverged", import.meta.url));

const tmpDirs: string[] = [];
function tmp(): string {
  const dir = mkdtempSync(join(tmpdir(), "smplots-"));
  tmpDirs.push(dir);
  return dir;
}

function run(...args: string[]): { status: number | null; stdout: string; stderr: string } {
  const res = spawnSync("node", [CLI, ...args], { encoding: "utf8" });
  return { status: res.status, stdout: res.stdout, stderr: res.stderr };
}

beforeAll(() => {
  if (!existsSync(CLI)) {
    throw new Error("dist/cli.js missing - run `npm run build` first (npm test does this for you)");
  }
});

afterAll(() => {
  for (const dir of tmpDirs) {
    rmSync(dir, { recursive: true, force: true });
  }
});

describe("saddlemesh-plots command", () => {
  it("renders a directory of run files into one SVG per topology plus the oracle chart", () => {
    const out = tmp();
    const res = run(GRID, "--out", out);
    expect(res.stderr).toBe("");
    expect(res.status).toBe(0);
    expect(readdirSync(out).sort()).toEqual([
      "grad_x_sq_line.svg",
      "grad_x_sq_metropolis_random.svg",
      "grad_x_sq_ring.svg",
      "oracle_calls.svg",
    ]);
    expect(res.stdout.match(/^wrote /gm)).toHaveLength(4);
  });

  it("is deterministic: two invocations write byte-identical figures", () => {
    const a = tmp();
    const b = tmp();
    expect(run(GRID, "--out", a).status).toBe(0);
    expect(run(GRID, "--out", b).status).toBe(0);
    for (const name of readdirSync(a).sort()) {
      expect(readFileSync(join(b, name), "utf8")).toBe(readFileSync(join(a, name), "utf8"));
    }
  });

  it("honours --metric and --linear", () => {
    const out = tmp();
    const res = run(DIVERGED, "--out", out, "--metric", "consensus_x", "--linear");
    expect(res.status).toBe(0);
    const files = readdirSync(out).sort();
    expect(files).toEqual(["consensus_x_ring.svg", "oracle_calls.svg"]);
    expect(readFileSync(join(out, "consensus_x_ring.svg"), "utf8")).toContain(
      "consensus_x vs round (ring)",
    );
  });

  it("reports dropped repetitions on stderr but still succeeds", () => {
    const res = run(DIVERGED, "--out", tmp());
    expect(res.status).toBe(0);
    expect(res.stderr).toContain("warning:");
    expect(res.stderr).toContain("dropped");
  });

  it("expands a '*' pattern and skips summary.csv in directories", () => {
    const out = tmp();
    const res = run(join(GRID, "storm_*_ring_rep*.csv"), "--out", out);
    expect(res.status).toBe(0);
    const svg = readFileSync(join(out, "grad_x_sq_ring.svg"), "utf8");
    expect(svg.split('class="curve"').length - 1).toBe(3); // storm x 3 strategies
  });

  it("exits 1 and names the file on a malformed input", () => {
    const dir = tmp();
    const bad = join(dir, "storm_ed_ring_rep0.csv");
    writeFileSync(bad, "round,nonsense\n0,1\n", "utf8");
    const res = run(bad, "--out", tmp());
    expect(res.status).toBe(1);
    expect(res.stderr).toContain(bad);
    expect(res.stderr).toContain("header mismatch");
  });

  it("exits 1 on unreadable inputs and empty matches", () => {
    const res = run(join(tmp(), "nope.csv"), "--out", tmp());
    expect(res.status).toBe(1);
    expect(res.stderr).toContain("cannot read");
  });

  it("exits 2 on usage errors", () => {
    expect(run().status).toBe(2);
    expect(run(GRID).status).toBe(2); // missing --out
    const res = run(GRID, "--out", tmp(), "--metric", "round_trip_time");
    expect(res.status).toBe(2);
    expect(res.stderr).toContain("unknown metric 'round_trip_time'");
    expect(res.stderr).toContain("usage:");
  });
});
