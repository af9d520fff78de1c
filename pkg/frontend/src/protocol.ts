/**
 * Bridge wire protocol: one JSON object per WebSocket text frame.
 *
 * Client ops: subscribe / unsubscribe / publish. The server pushes publish
 * frames for subscribed topics and error frames with a reason code.
 */

export type EmotionLabel =
  | "happiness" | "anger" | "sadness" | "fear"
  | "surprise" | "disgust" | "contempt" | "neutral";

export type Posture = "none" | "eca_only" | "head_only" | "both";
export type ScheduleKind = "continuous" | "intermittent";

export interface MimicryMode {
  posture: Posture;
  emotion_mirroring: boolean;
  schedule: ScheduleKind;
}

export interface HeadStateMsg {
  pan: number;
  tilt: number;
  sim_time: number;
}

export interface EcaFaceStateMsg {
  gaze_pan: number;
  gaze_tilt: number;
  blend: Record<string, number>;
  sim_time: number;
}

export interface LandmarkFrameMsg {
  sim_time: number;
  points: [number, number][];
  in_fov: boolean;
  occluded: boolean;
  true_yaw: number;
}

export interface InterlocutorStateMsg {
  x: number;
  z: number;
  face_yaw: number;
  face_pitch: number;
  expression: EmotionLabel;
  occluded: boolean;
}

export interface ServerPublish {
  op: "publish";
  topic: string;
  seq: number;
  sim_time: number;
  msg: Record<string, unknown>;
}

export interface ServerError {
  op: "error";
  reason: string;
}

export type ServerFrame = ServerPublish | ServerError;

export const TOPICS = {
  frames: "/interlocutor/frames",
  truth: "/interlocutor/truth",
  mode: "/control/mode",
  headState: "/head/state",
  ecaState: "/eca/state",
} as const;

export function encodeSubscribe(topic: string): string {
  return JSON.stringify({ op: "subscribe", topic });
}

export function encodePublish(topic: string, msg: unknown): string {
  return JSON.stringify({ op: "publish", topic, msg });
}

/** Parse a server frame; returns null for anything malformed (the session
 *  logs and survives). */
export function decodeServerFrame(text: string): ServerFrame | null {
  let data: unknown;
  try {
    data = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const frame = data as Record<string, unknown>;
  if (frame.op === "error" && typeof frame.reason === "string") {
    return { op: "error", reason: frame.reason };
  }
  if (
    frame.op === "publish" &&
    typeof frame.topic === "string" &&
    typeof frame.seq === "number" &&
    typeof frame.sim_time === "number" &&
    typeof frame.msg === "object" && frame.msg !== null
  ) {
    return {
      op: "publish",
      topic: frame.topic,
      seq: frame.seq,
      sim_time: frame.sim_time,
      msg: frame.msg as Record<string, unknown>,
    };
  }
  return null;
}

export function isHeadState(msg: Record<string, unknown>): msg is HeadStateMsg & Record<string, unknown> {
  return typeof msg.pan === "number" && typeof msg.tilt === "number" && typeof msg.sim_time === "number";
}

export function isEcaFaceState(msg: Record<string, unknown>): msg is EcaFaceStateMsg & Record<string, unknown> {
  return (
    typeof msg.gaze_pan === "number" &&
    typeof msg.gaze_tilt === "number" &&
    typeof msg.blend === "object" && msg.blend !== null
  );
}

export function isMimicryMode(msg: Record<string, unknown>): msg is MimicryMode & Record<string, unknown> {
  return (
    typeof msg.posture === "string" &&
    typeof msg.emotion_mirroring === "boolean" &&
    typeof msg.schedule === "string"
  );
}
