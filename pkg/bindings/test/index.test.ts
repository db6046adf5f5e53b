import { spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import {
  BoundArray,
  MvbevCliError,
  boundEvaluate,
  boundWarp,
  readGrid,
  runCli,
  version,
  writeGrid,
} from "../src/index";

const FIXTURES = path.resolve(__dirname, "..", "..", "fixtures");

let workDir: string;
let simDir: string;

function cliDirect(args: string[]): string {
  const proc = spawnSync(process.env.MVBEV_PYTHON ?? "python3",
    ["-m", "mvbev.cli", ...args], { encoding: "utf-8", maxBuffer: 1 << 28 });
  if (proc.status !== 0) {
    throw new Error(proc.stderr);
  }
  return proc.stdout;
}

beforeAll(() => {
  workDir = fs.mkdtempSync(path.join(os.tmpdir(), "mvbev-bindings-test-"));
  // shared simulated dataset produced entirely through the CLI surface
  simDir = path.join(workDir, "sim");
  cliDirect([
    "simulate", "--seed", "21", "--frames", "3", "--objects", "4",
    "--out", simDir, "--with-detections",
  ]);
}, 120_000);

afterAll(() => {
  fs.rmSync(workDir, { recursive: true, force: true });
});

describe("version", () => {
  it("mirrors the core package version", () => {
    const pkg = JSON.parse(
      fs.readFileSync(path.resolve(__dirname, "..", "package.json"), "utf-8"),
    );
    expect(version()).toBe(pkg.version);
  });
});

describe("boundEvaluate", () => {
  it("matches the CLI bit for bit on the canonical fixtures", () => {
    const report = boundEvaluate(
      path.join(FIXTURES, "annotations.json"),
      path.join(FIXTURES, "detections.json"),
      { radius: 0.5 },
    );
    const direct = path.join(workDir, "direct-report.json");
    cliDirect([
      "eval",
      "--gt", path.join(FIXTURES, "annotations.json"),
      "--det", path.join(FIXTURES, "detections.json"),
      "--radius", "0.5", "--json", direct,
    ]);
    const expected = JSON.parse(fs.readFileSync(direct, "utf-8"));
    expect(report).toStrictEqual(expected);
    expect(JSON.stringify(report)).toBe(JSON.stringify(expected));
    // hand-traceable values: TP at 0 m and 0.25 m, one FP, one FN
    expect(report.moda).toBe(1 - 2 / 3);
    expect(report.modp).toBe(0.75);
  });

  it("matches the CLI on simulated data (perfect pipeline run)", () => {
    const gt = path.join(simDir, "annotations.json");
    const det = path.join(simDir, "detections.json");
    const report = boundEvaluate(gt, det, { radius: 0.5 });
    const direct = path.join(workDir, "sim-report.json");
    cliDirect(["eval", "--gt", gt, "--det", det, "--radius", "0.5",
               "--json", direct]);
    expect(report).toStrictEqual(JSON.parse(fs.readFileSync(direct, "utf-8")));
    expect(report.moda).toBe(1.0);
  });

  it("honors evaluation options", () => {
    const gt = path.join(simDir, "annotations.json");
    const det = path.join(simDir, "detections.json");
    const report = boundEvaluate(gt, det, {
      radius: 0.25, iouThresholds: [0.3], modpMode: "distance", apPoints: 40,
    });
    const params = report.params as Record<string, unknown>;
    expect(params.radius).toBe(0.25);
    expect(params.iou_thresholds).toStrictEqual([0.3]);
    expect(params.ap_points).toBe(40);
    expect(Object.keys(report.ap3d as object)).toStrictEqual(["0.3"]);
  });

  it("carries core parse errors across the boundary", () => {
    const bad = path.join(workDir, "bad.json");
    fs.writeFileSync(bad, "{ not json");
    try {
      boundEvaluate(bad, bad);
      expect.unreachable("expected a CLI error");
    } catch (err) {
      expect(err).toBeInstanceOf(MvbevCliError);
      expect((err as MvbevCliError).message).toMatch(/^error: /);
      expect((err as MvbevCliError).message).toContain("invalid JSON");
      expect((err as MvbevCliError).exitCode).toBe(2);
    }
  });
});

describe("boundWarp", () => {
  const calib = () => path.join(FIXTURES, "calibration.json");

  function impulseGrid(): BoundArray {
    // image-frame grid for the fixture rig (800 x 600), single channel
    const data = new Float64Array(600 * 800);
    data[320 * 800 + 410] = 1.0; // row 320, col 410
    return { shape: [600, 800, 1], data };
  }

  it("is byte-identical to the CLI warp on an impulse grid", () => {
    const warped = boundWarp(impulseGrid(), calib(), 0);
    expect(warped.shape).toStrictEqual([120, 160, 1]);

    const inStem = path.join(workDir, "feat-direct");
    const outStem = path.join(workDir, "warped-direct");
    writeGrid(inStem, impulseGrid(), "image", 0);
    cliDirect(["warp", "--calib", calib(), "--view", "0",
               "--feat", inStem, "--out", outStem,
               "--grid-shape", "120", "160"]);
    const directBytes = fs.readFileSync(`${outStem}.bin`);
    const boundBytes = Buffer.from(warped.data.buffer, warped.data.byteOffset,
                                   warped.data.byteLength);
    expect(boundBytes.equals(directBytes)).toBe(true);
    // the impulse must survive the warp somewhere on the raster
    expect(Math.max(...warped.data)).toBeGreaterThan(0);
  });

  it("is byte-identical on an all-ones grid", () => {
    const ones: BoundArray = {
      shape: [600, 800, 1],
      data: new Float64Array(600 * 800).fill(1.0),
    };
    const warped = boundWarp(ones, calib(), 1);
    const inStem = path.join(workDir, "ones");
    const outStem = path.join(workDir, "ones-warped");
    writeGrid(inStem, ones, "image", 1);
    cliDirect(["warp", "--calib", calib(), "--view", "1",
               "--feat", inStem, "--out", outStem,
               "--grid-shape", "120", "160"]);
    const direct = readGrid(outStem);
    expect(Buffer.from(warped.data.buffer).equals(
      Buffer.from(direct.data.buffer))).toBe(true);
  });

  it("round-trips simulator view grids through the raster format", () => {
    const viewStem = path.join(simDir, "views", "frame_0000_view_0");
    const view = readGrid(viewStem);
    expect(view.shape).toStrictEqual([600, 800, 3]);
    const copyStem = path.join(workDir, "view-copy");
    writeGrid(copyStem, view, "image", 0);
    expect(fs.readFileSync(`${copyStem}.bin`).equals(
      fs.readFileSync(`${viewStem}.bin`))).toBe(true);
  });

  it("rejects wrong-rank arrays at the boundary", () => {
    const flat: BoundArray = { shape: [600, 800], data: new Float64Array(5) };
    expect(() => boundWarp(flat, calib(), 0)).toThrow(RangeError);
  });

  it("rejects shape/buffer disagreements at the boundary", () => {
    const bad: BoundArray = { shape: [2, 2, 1], data: new Float64Array(5) };
    expect(() => boundWarp(bad, calib(), 0)).toThrow(/implies 4 values/);
  });

  it("surfaces core shape errors for mismatched image sizes", () => {
    const tiny: BoundArray = { shape: [4, 4, 1], data: new Float64Array(16) };
    try {
      boundWarp(tiny, calib(), 0);
      expect.unreachable("expected a CLI error");
    } catch (err) {
      expect(err).toBeInstanceOf(MvbevCliError);
      expect((err as MvbevCliError).message).toMatch(/^error: /);
      expect((err as MvbevCliError).exitCode).toBe(2);
    }
  });
});

describe("runCli", () => {
  it("reports usage errors with exit code 1", () => {
    try {
      runCli(["warp"]);
      expect.unreachable("expected a usage error");
    } catch (err) {
      expect(err).toBeInstanceOf(MvbevCliError);
      expect((err as MvbevCliError).exitCode).toBe(1);
      expect((err as MvbevCliError).message).toContain("usage:");
    }
  });
});
