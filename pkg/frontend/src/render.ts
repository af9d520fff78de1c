/**
 * Rendering geometry: pure functions from telemetry to drawable shapes,
 * plus thin canvas painters. The geometry layer is unit-tested; painters
 * only translate geometry into 2D context calls.
 *
 * The head is drawn as a pan/tilt gauge with limit arcs at +-35/+-23 and a
 * top-down gaze ray. The agent is a schematic face whose brows (AU1/2/4),
 * lids (AU5/7), mouth (AU12/15/20/23/26) and nose (AU9) deform with the
 * blend weights and whose eyes shift with the gaze offset.
 */

import { EcaFaceStateMsg, HeadStateMsg } from "./protocol.js";

export const PAN_LIMIT = 35;
export const TILT_LIMIT = 23;
export const ECA_GAZE_PAN_LIMIT = 15;
export const ECA_GAZE_TILT_LIMIT = 10;

const clamp01 = (v: number) => Math.min(Math.max(v, 0), 1);
const clamp = (v: number, lo: number, hi: number) => Math.min(Math.max(v, lo), hi);

export interface GaugeGeometry {
  /** needle positions as fractions of the limit, in [-1, 1] */
  panFraction: number;
  tiltFraction: number;
  panPinned: boolean;
  tiltPinned: boolean;
  /** top-down gaze ray direction in radians, 0 = straight ahead */
  rayAngle: number;
}

export function gaugeGeometry(state: HeadStateMsg): GaugeGeometry {
  const panFraction = clamp(state.pan / PAN_LIMIT, -1, 1);
  const tiltFraction = clamp(state.tilt / TILT_LIMIT, -1, 1);
  return {
    panFraction,
    tiltFraction,
    panPinned: Math.abs(state.pan) >= PAN_LIMIT,
    tiltPinned: Math.abs(state.tilt) >= TILT_LIMIT,
    rayAngle: (state.pan * Math.PI) / 180,
  };
}

export interface FaceGeometry {
  /** 0 = resting; positive lifts the brows, negative knits them down */
  browLift: number;
  /** eyelid openness, 1 = resting, >1 widened, <1 tightened */
  lidOpen: number;
  /** mouth corner curve: +1 full smile, -1 full frown */
  mouthCurve: number;
  /** jaw drop, 0..1 */
  mouthOpen: number;
  /** horizontal lip stretch, 0..1 */
  mouthStretch: number;
  /** lip press (thinning), 0..1 */
  lipPress: number;
  /** nose wrinkle, 0..1 */
  noseWrinkle: number;
  /** pupil offset as fractions of eye radius, x positive = agent's left */
  eyeOffset: { x: number; y: number };
}

const au = (blend: Record<string, number>, id: number) => clamp01(blend[String(id)] ?? 0);

export function faceGeometry(state: EcaFaceStateMsg): FaceGeometry {
  const blend = state.blend;
  const inner = au(blend, 1); // inner brow raiser
  const outer = au(blend, 2); // outer brow raiser
  const lower = au(blend, 4); // brow lowerer
  const upperLid = au(blend, 5); // upper lid raiser
  const lidTight = au(blend, 7); // lid tightener
  const wrinkle = au(blend, 9); // nose wrinkler
  const smile = au(blend, 12); // lip corner puller
  const dimple = au(blend, 14); // dimpler
  const frown = au(blend, 15); // lip corner depressor
  const stretch = au(blend, 20); // lip stretcher
  const press = au(blend, 23); // lip tightener
  const jaw = au(blend, 26); // jaw drop

  return {
    browLift: 0.5 * inner + 0.5 * outer - lower,
    lidOpen: clamp(1 + 0.8 * upperLid - 0.6 * lidTight, 0.2, 1.8),
    mouthCurve: clamp(smile + 0.4 * dimple - frown, -1, 1),
    mouthOpen: jaw,
    mouthStretch: stretch,
    lipPress: press,
    noseWrinkle: wrinkle,
    eyeOffset: {
      x: clamp(state.gaze_pan / ECA_GAZE_PAN_LIMIT, -1, 1),
      y: clamp(state.gaze_tilt / ECA_GAZE_TILT_LIMIT, -1, 1),
    },
  };
}

// --- canvas painters ---------------------------------------------------------

export interface Ctx2D {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  quadraticCurveTo(cx: number, cy: number, x: number, y: number): void;
  stroke(): void;
  fill(): void;
  strokeStyle: string | unknown;
  fillStyle: string | unknown;
  lineWidth: number;
}

export function drawHeadGauge(ctx: Ctx2D, geom: GaugeGeometry, w: number, h: number): void {
  ctx.clearRect(0, 0, w, h);
  const cx = w / 2;
  const cy = h * 0.62;
  const radius = Math.min(w, h) * 0.42;

  // limit arcs (pan)
  ctx.strokeStyle = geom.panPinned ? "#d9534f" : "#666";
  ctx.lineWidth = 3;
  ctx.beginPath();
  ctx.arc(cx, cy, radius, -Math.PI / 2 - (PAN_LIMIT * Math.PI) / 180, -Math.PI / 2 + (PAN_LIMIT * Math.PI) / 180);
  ctx.stroke();

  // gaze ray (top-down view; screen-left is the robot's left = positive pan)
  const angle = -Math.PI / 2 - geom.rayAngle;
  ctx.strokeStyle = "#4da3ff";
  ctx.lineWidth = 4;
  ctx.beginPath();
  ctx.moveTo(cx, cy);
  ctx.lineTo(cx + radius * Math.cos(angle), cy + radius * Math.sin(angle));
  ctx.stroke();

  // tilt bar
  const barX = w - 26;
  ctx.strokeStyle = geom.tiltPinned ? "#d9534f" : "#666";
  ctx.lineWidth = 3;
  ctx.beginPath();
  ctx.moveTo(barX, cy - radius);
  ctx.lineTo(barX, cy + radius);
  ctx.stroke();
  ctx.fillStyle = "#4da3ff";
  const knobY = cy - geom.tiltFraction * radius;
  ctx.beginPath();
  ctx.arc(barX, knobY, 7, 0, 2 * Math.PI);
  ctx.fill();
}

export function drawFace(ctx: Ctx2D, geom: FaceGeometry, w: number, h: number): void {
  ctx.clearRect(0, 0, w, h);
  const cx = w / 2;
  const cy = h / 2;
  const R = Math.min(w, h) * 0.4;

  ctx.strokeStyle = "#daa26b";
  ctx.lineWidth = 3;
  ctx.beginPath();
  ctx.arc(cx, cy, R, 0, 2 * Math.PI);
  ctx.stroke();

  const eyeY = cy - R * 0.25;
  const eyeDx = R * 0.38;
  const eyeR = R * 0.16;
  const lid = Math.max(geom.lidOpen, 0.1);
  for (const side of [-1, 1]) {
    const ex = cx + side * eyeDx;
    ctx.strokeStyle = "#333";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(ex, eyeY, eyeR, 0, 2 * Math.PI);
    ctx.stroke();
    // pupil shifted by gaze (screen-left = agent pan positive), scaled by lid
    ctx.fillStyle = "#333";
    ctx.beginPath();
    ctx.arc(
      ex - geom.eyeOffset.x * eyeR * 0.5,
      eyeY - geom.eyeOffset.y * eyeR * 0.5,
      eyeR * 0.4 * Math.min(lid, 1),
      0,
      2 * Math.PI,
    );
    ctx.fill();
    // brow: lift raises it, knit tips the inner end down
    const browY = eyeY - eyeR * (1.5 + geom.browLift * 0.9);
    ctx.strokeStyle = "#6b4a2b";
    ctx.lineWidth = 3;
    ctx.beginPath();
    ctx.moveTo(ex - eyeR, browY + (geom.browLift < 0 ? -geom.browLift * 4 : 0));
    ctx.lineTo(ex + eyeR, browY + (geom.browLift < 0 ? geom.browLift * side * 6 : 0));
    ctx.stroke();
  }

  if (geom.noseWrinkle > 0.05) {
    ctx.strokeStyle = "#b5815a";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(cx - R * 0.1, cy - R * 0.02 - geom.noseWrinkle * R * 0.08);
    ctx.quadraticCurveTo(cx, cy - R * 0.1 - geom.noseWrinkle * R * 0.1, cx + R * 0.1, cy - R * 0.02 - geom.noseWrinkle * R * 0.08);
    ctx.stroke();
  }

  // mouth: corners curve up/down, stretch widens, press thins, jaw opens
  const mouthY = cy + R * 0.45;
  const half = R * (0.32 + geom.mouthStretch * 0.12);
  const curve = geom.mouthCurve * R * 0.22;
  const openness = geom.mouthOpen * R * 0.22;
  ctx.strokeStyle = "#a33";
  ctx.lineWidth = Math.max(1, 4 - geom.lipPress * 3);
  ctx.beginPath();
  ctx.moveTo(cx - half, mouthY - curve * 0.5);
  ctx.quadraticCurveTo(cx, mouthY + curve * 0.7 + openness * 0.3, cx + half, mouthY - curve * 0.5);
  ctx.stroke();
  if (openness > 1) {
    ctx.beginPath();
    ctx.moveTo(cx - half * 0.7, mouthY + openness * 0.15);
    ctx.quadraticCurveTo(cx, mouthY + openness, cx + half * 0.7, mouthY + openness * 0.15);
    ctx.stroke();
  }
}
