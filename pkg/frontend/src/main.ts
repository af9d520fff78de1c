/**
 * Browser entry point: DOM wiring for the operator console.
 *
 * The left canvas is the face band: move the pointer to steer the virtual
 * interlocutor, pick an expression, toggle occlusion or the >90 degree
 * turn-away. The right panels render the head gauge and the agent face
 * from the live telemetry, coalesced to animation-frame rate.
 */

import { ConsoleSession } from "./session.js";
import { FaceTemplate } from "./frames.js";
import { drawFace, drawHeadGauge, faceGeometry, gaugeGeometry } from "./render.js";
import { EmotionLabel, MimicryMode, Posture, ScheduleKind } from "./protocol.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function fetchJson<T>(url: string): Promise<T> {
  const resp = await fetch(url);
  if (!resp.ok) throw new Error(`${url}: HTTP ${resp.status}`);
  return (await resp.json()) as T;
}

async function start(): Promise<void> {
  const params = new URLSearchParams(location.search);
  const httpBase = params.get("server") ?? "http://127.0.0.1:8008";
  const wsBase = httpBase.replace(/^http/, "ws");

  const template = await fetchJson<FaceTemplate>(`${httpBase}/assets/face-template`);
  const config = await fetchJson<{
    perception: { camera: { fov_h: number; fov_v: number } };
    interlocutor: { depth: number };
  }>(`${httpBase}/config/default`);
  const camera = {
    fovH: config.perception.camera.fov_h,
    fovV: config.perception.camera.fov_v,
    depth: config.interlocutor.depth,
  };

  const session = new ConsoleSession(`${wsBase}/bridge`);
  const band = el<HTMLCanvasElement>("band");
  const gauge = el<HTMLCanvasElement>("gauge");
  const face = el<HTMLCanvasElement>("face");
  const banner = el<HTMLDivElement>("banner");
  const hudText = el<HTMLDivElement>("hud");

  band.addEventListener("pointermove", (ev) => {
    const rect = band.getBoundingClientRect();
    session.setPointer({
      x: (ev.clientX - rect.left) / rect.width,
      y: (ev.clientY - rect.top) / rect.height,
    });
  });
  band.addEventListener("pointerleave", () => session.setPointer(null));

  el<HTMLSelectElement>("expression").addEventListener("change", (ev) => {
    session.setExpression((ev.target as HTMLSelectElement).value as EmotionLabel);
  });
  el<HTMLInputElement>("occluded").addEventListener("change", (ev) => {
    session.setOccluded((ev.target as HTMLInputElement).checked);
  });
  el<HTMLInputElement>("turned").addEventListener("change", (ev) => {
    session.setTurnedAway((ev.target as HTMLInputElement).checked);
  });

  const sendMode = () => {
    const mode: MimicryMode = {
      posture: el<HTMLSelectElement>("posture").value as Posture,
      emotion_mirroring: el<HTMLInputElement>("mirroring").checked,
      schedule: el<HTMLSelectElement>("schedule").value as ScheduleKind,
    };
    session.requestMode(mode);
  };
  el<HTMLSelectElement>("posture").addEventListener("change", sendMode);
  el<HTMLInputElement>("mirroring").addEventListener("change", sendMode);
  el<HTMLSelectElement>("schedule").addEventListener("change", sendMode);

  let dirty = true;
  session.onhud = () => {
    dirty = true;
  };

  const gctx = gauge.getContext("2d")!;
  const fctx = face.getContext("2d")!;
  function paint(): void {
    if (dirty) {
      dirty = false;
      const hud = session.hud;
      banner.textContent =
        hud.connection === "open"
          ? "connected"
          : hud.connection === "connecting"
            ? "connecting..."
            : "disconnected, retrying";
      banner.className = hud.connection;
      if (hud.head) drawHeadGauge(gctx, gaugeGeometry(hud.head), gauge.width, gauge.height);
      if (hud.face) drawFace(fctx, faceGeometry(hud.face), face.width, face.height);
      const ack = hud.acknowledgedMode;
      hudText.textContent = [
        `mode (ack): ${ack ? `${ack.posture} / mirroring ${ack.emotion_mirroring ? "on" : "off"} / ${ack.schedule}` : "n/a"}`,
        `head: ${hud.head ? `${hud.head.pan.toFixed(1)} deg pan, ${hud.head.tilt.toFixed(1)} deg tilt` : "n/a"}`,
        `frames sent: ${hud.framesSent}`,
        `detection uptime (3 s): ${(hud.uptimeRecent * 100).toFixed(0)}%`,
        `errors: ${hud.serverErrors} server / ${hud.protocolErrors} protocol`,
      ].join("\n");
    }
    requestAnimationFrame(paint);
  }

  session.connect(template, camera);
  requestAnimationFrame(paint);
}

start().catch((err) => {
  document.body.textContent = `console failed to start: ${err}`;
});
