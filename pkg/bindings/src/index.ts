/**
 * Thin bindings for the mvbev toolkit.
 *
 * Every operation delegates to the `mvbev` command line through its
 * documented file formats (JSON + little-endian float64 rasters); no
 * numeric logic lives on this side of the boundary, so results are
 * bit-identical to direct CLI runs. Python interpreter resolution:
 * MVBEV_PYTHON env var, else `python3`.
 */

import { spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

/** Dense row-major float64 array crossing the boundary. */
export interface BoundArray {
  /** [rows, cols, channels] */
  shape: number[];
  /** row-major values; length must equal the shape product */
  data: Float64Array;
}

export interface EvaluateOptions {
  radius?: number;
  iouThresholds?: number[];
  modpMode?: "distance" | "iou";
  apPoints?: 11 | 40;
}

/** Raised when the CLI reports a usage or data problem. */
export class MvbevCliError extends Error {
  readonly exitCode: number;
  constructor(message: string, exitCode: number) {
    super(message);
    this.name = "MvbevCliError";
    this.exitCode = exitCode;
  }
}

function python(): string {
  return process.env.MVBEV_PYTHON ?? "python3";
}

/** Run the CLI, returning stdout; CLI errors surface with their message. */
export function runCli(args: string[]): string {
  const proc = spawnSync(python(), ["-m", "mvbev.cli", ...args], {
    encoding: "utf-8",
    maxBuffer: 1 << 28,
  });
  if (proc.error) {
    throw proc.error;
  }
  if (proc.status !== 0) {
    const detail = (proc.stderr ?? "").trim() || `exit code ${proc.status}`;
    throw new MvbevCliError(detail, proc.status ?? -1);
  }
  return proc.stdout ?? "";
}

/** Core package version (the binding mirrors it). */
export function version(): string {
  return runCli(["--version"]).trim();
}

function expectLittleEndian(): void {
  if (os.endianness() !== "LE") {
    throw new Error("grid rasters are little-endian; big-endian hosts unsupported");
  }
}

function checkShape(shape: number[], length: number): void {
  if (shape.length !== 3) {
    throw new RangeError(`grid arrays must be rank 3, got rank ${shape.length}`);
  }
  if (shape.some((d) => !Number.isInteger(d) || d <= 0)) {
    throw new RangeError(`shape entries must be positive integers, got [${shape}]`);
  }
  const expected = shape[0] * shape[1] * shape[2];
  if (expected !== length) {
    throw new RangeError(
      `shape [${shape}] implies ${expected} values, buffer holds ${length}`,
    );
  }
}

/** Write a grid in the header+raster format the CLI consumes. */
export function writeGrid(
  stem: string,
  grid: BoundArray,
  frame: "image" | "bev",
  viewId: number | null,
): void {
  expectLittleEndian();
  checkShape(grid.shape, grid.data.length);
  const header = {
    shape: grid.shape,
    frame,
    view_id: viewId,
    dtype: "float64",
    order: "row-major",
    data: `${path.basename(stem)}.bin`,
  };
  fs.writeFileSync(`${stem}.json`, JSON.stringify(header, null, 2) + "\n");
  fs.writeFileSync(
    `${stem}.bin`,
    Buffer.from(grid.data.buffer, grid.data.byteOffset, grid.data.byteLength),
  );
}

/** Read a grid written by the CLI (or by writeGrid). */
export function readGrid(stem: string): BoundArray {
  expectLittleEndian();
  const headerPath = stem.endsWith(".json") ? stem : `${stem}.json`;
  const header = JSON.parse(fs.readFileSync(headerPath, "utf-8"));
  const raw = fs.readFileSync(
    path.join(path.dirname(headerPath), header.data as string),
  );
  // node file buffers are pooled and may be misaligned for float64 views
  const aligned = new Uint8Array(raw.byteLength);
  aligned.set(raw);
  const data = new Float64Array(aligned.buffer);
  checkShape(header.shape as number[], data.length);
  return { shape: header.shape as number[], data };
}

function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "mvbev-"));
  try {
    return fn(dir);
  } finally {
    fs.rmSync(dir, { recursive: true, force: true });
  }
}

/**
 * Evaluate a detection file against ground truth.
 *
 * Returns the full metrics report as a plain object, numerically
 * identical to `mvbev eval --json` on the same inputs.
 */
export function boundEvaluate(
  gtPath: string,
  detPath: string,
  options: EvaluateOptions = {},
): Record<string, unknown> {
  return withTempDir((dir) => {
    const out = path.join(dir, "report.json");
    const args = ["eval", "--gt", gtPath, "--det", detPath, "--json", out];
    if (options.radius !== undefined) {
      args.push("--radius", String(options.radius));
    }
    if (options.iouThresholds !== undefined) {
      args.push("--iou", ...options.iouThresholds.map(String));
    }
    if (options.modpMode !== undefined) {
      args.push("--modp-mode", options.modpMode);
    }
    if (options.apPoints !== undefined) {
      args.push("--ap-points", String(options.apPoints));
    }
    runCli(args);
    return JSON.parse(fs.readFileSync(out, "utf-8"));
  });
}

/**
 * Warp an image-frame feature grid onto the BEV raster.
 *
 * The input array is [imageHeight, imageWidth, channels] for the given
 * view; the result is [gridRows, gridCols, channels], byte-identical to
 * `mvbev warp` on the same inputs.
 */
export function boundWarp(
  feat: BoundArray,
  calibPath: string,
  viewId: number,
  gridShape: [number, number] = [120, 160],
): BoundArray {
  checkShape(feat.shape, feat.data.length);
  return withTempDir((dir) => {
    const inStem = path.join(dir, "feat");
    const outStem = path.join(dir, "warped");
    writeGrid(inStem, feat, "image", viewId);
    runCli([
      "warp",
      "--calib", calibPath,
      "--view", String(viewId),
      "--feat", inStem,
      "--out", outStem,
      "--grid-shape", String(gridShape[0]), String(gridShape[1]),
    ]);
    return readGrid(outStem);
  });
}
