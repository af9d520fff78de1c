/**
 * Pointer-driven frame synthesis.
 *
 * The operator's pointer position (normalized canvas coordinates) stands in
 * for the tracked face center. Frames reuse the exact 68-point template the
 * scripted interlocutor uses (fetched from the service as a JSON asset), so
 * console-driven and scripted runs are interchangeable in logs. Frames are
 * published at the camera rate with sample-and-hold, independent of UI
 * event jitter.
 */

import { InterlocutorStateMsg, LandmarkFrameMsg, EmotionLabel } from "./protocol.js";

export interface FaceTemplate {
  version: number;
  base_scale: number;
  points: [number, number][];
}

export interface PointerState {
  /** normalized canvas position in [0,1]^2; null while the pointer is
   *  outside the face-valid band */
  position: { x: number; y: number } | null;
  occluded: boolean;
  turnedAway: boolean; // yaw pushed past the 90 degree profile limit
  expression: EmotionLabel;
}

export const TURNED_AWAY_YAW = 120.0;

export function synthesizeFrame(
  pointer: PointerState,
  template: FaceTemplate,
  simTime: number,
): LandmarkFrameMsg {
  const yaw = pointer.turnedAway ? TURNED_AWAY_YAW : 0.0;
  const inFov = pointer.position !== null;
  if (!inFov || pointer.occluded) {
    return {
      sim_time: simTime,
      points: [],
      in_fov: inFov,
      occluded: pointer.occluded,
      true_yaw: yaw,
    };
  }
  const { x, y } = pointer.position!;
  const shear = Math.cos((yaw * Math.PI) / 180);
  const s = template.base_scale;
  const points = template.points.map(
    ([tx, ty]) => [x + s * shear * tx, y + s * ty] as [number, number],
  );
  return { sim_time: simTime, points, in_fov: true, occluded: pointer.occluded, true_yaw: yaw };
}

export interface CameraGeometry {
  fovH: number;
  fovV: number;
  depth: number;
}

/** Ground-truth state matching the synthesized frame; the simulated
 *  classifier consumes the expression, the metrics consume the position. */
export function truthFromPointer(
  pointer: PointerState,
  camera: CameraGeometry,
): InterlocutorStateMsg {
  let x = 0;
  if (pointer.position !== null) {
    const bearing = (0.5 - pointer.position.x) * camera.fovH;
    x = camera.depth * Math.tan((bearing * Math.PI) / 180);
  }
  return {
    x,
    z: camera.depth,
    face_yaw: pointer.turnedAway ? TURNED_AWAY_YAW : 0.0,
    face_pitch: 0.0,
    expression: pointer.expression,
    occluded: pointer.occluded,
  };
}

export type FrameSink = (frame: LandmarkFrameMsg, truth: InterlocutorStateMsg) => void;

export interface TickerHandle {
  stop(): void;
}

/**
 * Publish the held pointer state at a fixed rate. The interval timer is
 * injectable so tests can run it on fake time.
 */
export function startFrameTicker(
  pointer: () => PointerState,
  template: FaceTemplate,
  camera: CameraGeometry,
  sink: FrameSink,
  rateHz = 30,
  setIntervalFn: (fn: () => void, ms: number) => unknown = setInterval,
  clearIntervalFn: (handle: unknown) => void = (h) => clearInterval(h as ReturnType<typeof setInterval>),
): TickerHandle {
  let tickIndex = 0;
  const periodMs = 1000 / rateHz;
  const handle = setIntervalFn(() => {
    const t = tickIndex / rateHz;
    tickIndex += 1;
    const state = pointer();
    sink(synthesizeFrame(state, template, t), truthFromPointer(state, camera));
  }, periodMs);
  return { stop: () => clearIntervalFn(handle) };
}
