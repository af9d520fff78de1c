import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import {
  CameraGeometry,
  FaceTemplate,
  PointerState,
  startFrameTicker,
  synthesizeFrame,
  truthFromPointer,
  TURNED_AWAY_YAW,
} from "../src/frames.js";

// a miniature stand-in template with the same invariants: 68 points,
// centroid and bbox midpoint exactly at the origin
const TEMPLATE: FaceTemplate = {
  version: 1,
  base_scale: 0.28,
  points: Array.from({ length: 34 }, (_, i) => {
    const x = ((i % 17) - 8) / 32;
    const y = (i % 5) / 16;
    return [
      [x, y],
      [-x, -y],
    ] as [number, number][];
  }).flat(),
};

const CAMERA: CameraGeometry = { fovH: 58, fovV: 45, depth: 0.6 };

function pointerAt(x: number, y: number, extra: Partial<PointerState> = {}): PointerState {
  return { position: { x, y }, occluded: false, turnedAway: false, expression: "neutral", ...extra };
}

describe("synthesizeFrame", () => {
  it("centers the landmark centroid on the pointer", () => {
    const frame = synthesizeFrame(pointerAt(0.5, 0.5), TEMPLATE, 0);
    expect(frame.points).toHaveLength(68);
    const cx = frame.points.reduce((acc, p) => acc + p[0], 0) / 68;
    const cy = frame.points.reduce((acc, p) => acc + p[1], 0) / 68;
    expect(cx).toBeCloseTo(0.5, 9);
    expect(cy).toBeCloseTo(0.5, 9);
  });

  it("tracks pointer offsets", () => {
    const frame = synthesizeFrame(pointerAt(0.25, 0.7), TEMPLATE, 0);
    const cx = frame.points.reduce((acc, p) => acc + p[0], 0) / 68;
    expect(cx).toBeCloseTo(0.25, 9);
  });

  it("emits empty points when the pointer leaves the band", () => {
    const frame = synthesizeFrame(pointerAt(0, 0, { position: null }), TEMPLATE, 0);
    expect(frame.points).toHaveLength(0);
    expect(frame.in_fov).toBe(false);
  });

  it("emits empty points when occluded", () => {
    const frame = synthesizeFrame(pointerAt(0.5, 0.5, { occluded: true }), TEMPLATE, 0);
    expect(frame.points).toHaveLength(0);
    expect(frame.occluded).toBe(true);
  });

  it("keeps 68 points but flags yaw when turned away", () => {
    const frame = synthesizeFrame(pointerAt(0.5, 0.5, { turnedAway: true }), TEMPLATE, 0);
    expect(frame.points).toHaveLength(68);
    expect(frame.true_yaw).toBe(TURNED_AWAY_YAW);
    // the shear squeezes x-offsets toward the centroid
    const xs = frame.points.map((p) => p[0]);
    const width = Math.max(...xs) - Math.min(...xs);
    expect(width).toBeLessThan(0.28 * 0.5);
  });
});

describe("truthFromPointer", () => {
  it("maps the pointer back to a lateral offset", () => {
    const truth = truthFromPointer(pointerAt(0.0, 0.5), CAMERA);
    // pointer at the image-left edge = +29 degrees bearing at 0.6 m
    expect(truth.x).toBeCloseTo(0.6 * Math.tan((29 * Math.PI) / 180), 9);
    expect(truth.z).toBe(0.6);
  });

  it("carries expression and occlusion", () => {
    const truth = truthFromPointer(
      pointerAt(0.5, 0.5, { expression: "anger", occluded: true }),
      CAMERA,
    );
    expect(truth.expression).toBe("anger");
    expect(truth.occluded).toBe(true);
  });
});

describe("startFrameTicker", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("publishes at 30 Hz with sample-and-hold regardless of pointer event rate", () => {
    const frames: number[] = [];
    let pointer = pointerAt(0.5, 0.5);
    const ticker = startFrameTicker(
      () => pointer,
      TEMPLATE,
      CAMERA,
      (frame) => frames.push(frame.points.length ? frame.points[0][0] : NaN),
      30,
      (fn, ms) => setInterval(fn, ms),
      (h) => clearInterval(h as ReturnType<typeof setInterval>),
    );
    vi.advanceTimersByTime(1000);
    expect(Math.abs(frames.length - 30)).toBeLessThanOrEqual(1);
    // one pointer move mid-stream; later frames hold the new sample
    pointer = pointerAt(0.2, 0.5);
    vi.advanceTimersByTime(1000);
    expect(Math.abs(frames.length - 60)).toBeLessThanOrEqual(2);
    const last = frames[frames.length - 1];
    expect(last).toBeCloseTo(0.2 + TEMPLATE.base_scale * TEMPLATE.points[0][0], 9);
    ticker.stop();
    const count = frames.length;
    vi.advanceTimersByTime(1000);
    expect(frames.length).toBe(count);
  });

  it("stamps frames with tick-indexed sim times", () => {
    const times: number[] = [];
    const ticker = startFrameTicker(
      () => pointerAt(0.5, 0.5),
      TEMPLATE,
      CAMERA,
      (frame) => times.push(frame.sim_time),
      30,
    );
    vi.advanceTimersByTime(200);
    ticker.stop();
    expect(times[0]).toBe(0);
    for (let i = 1; i < times.length; i++) {
      expect(times[i] - times[i - 1]).toBeCloseTo(1 / 30, 9);
    }
  });
});
