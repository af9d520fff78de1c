/**
 * Console session: one bridge connection, pointer state, mode control and
 * the HUD model. A pure observer plus input source: closing the console
 * never changes pipeline state. The HUD's mode is the one acknowledged on
 * the /control/mode echo, never the locally requested one.
 */

import { BridgeClient, BridgeClientOptions, ConnectionState } from "./client.js";
import {
  CameraGeometry,
  FaceTemplate,
  FrameSink,
  PointerState,
  startFrameTicker,
  TickerHandle,
} from "./frames.js";
import {
  EcaFaceStateMsg,
  EmotionLabel,
  encodePublish,
  HeadStateMsg,
  isEcaFaceState,
  isHeadState,
  isMimicryMode,
  MimicryMode,
  ServerFrame,
  TOPICS,
} from "./protocol.js";

export interface HudModel {
  connection: ConnectionState;
  /** last mode acknowledged by the bus, not the locally requested one */
  acknowledgedMode: MimicryMode | null;
  requestedMode: MimicryMode | null;
  head: HeadStateMsg | null;
  face: EcaFaceStateMsg | null;
  framesSent: number;
  protocolErrors: number;
  serverErrors: number;
  /** detection uptime proxy: fraction of recent frames with a visible face */
  uptimeRecent: number;
}

export interface SessionOptions extends BridgeClientOptions {
  rateHz?: number;
  setIntervalFn?: (fn: () => void, ms: number) => unknown;
  clearIntervalFn?: (handle: unknown) => void;
}

const UPTIME_WINDOW = 90; // ~3 s of frames

export class ConsoleSession {
  readonly client: BridgeClient;
  readonly hud: HudModel = {
    connection: "closed",
    acknowledgedMode: null,
    requestedMode: null,
    head: null,
    face: null,
    framesSent: 0,
    protocolErrors: 0,
    serverErrors: 0,
    uptimeRecent: 1,
  };
  pointer: PointerState = {
    position: { x: 0.5, y: 0.5 },
    occluded: false,
    turnedAway: false,
    expression: "neutral",
  };
  onhud: ((hud: HudModel) => void) | null = null;

  private ticker: TickerHandle | null = null;
  private recentVisible: boolean[] = [];
  private readonly options: SessionOptions;

  constructor(url: string, options: SessionOptions = {}) {
    this.options = options;
    this.client = new BridgeClient(url, options);
    this.client.onstate = (state) => {
      this.hud.connection = state;
      this.emit();
    };
    this.client.onframe = (frame) => this.handleFrame(frame);
    this.client.onprotocolerror = () => {
      this.hud.protocolErrors += 1;
      this.emit();
    };
  }

  connect(template: FaceTemplate, camera: CameraGeometry): void {
    this.client.subscribe(TOPICS.headState);
    this.client.subscribe(TOPICS.ecaState);
    this.client.subscribe(TOPICS.mode);
    this.client.connect();
    const sink: FrameSink = (frame, truth) => {
      const sentFrame = this.client.publish(encodePublish(TOPICS.frames, frame));
      this.client.publish(encodePublish(TOPICS.truth, truth));
      if (sentFrame) {
        this.hud.framesSent += 1;
        this.recentVisible.push(frame.points.length > 0);
        if (this.recentVisible.length > UPTIME_WINDOW) this.recentVisible.shift();
        this.hud.uptimeRecent =
          this.recentVisible.filter(Boolean).length / this.recentVisible.length;
        this.emit();
      }
    };
    this.ticker = startFrameTicker(
      () => this.pointer,
      template,
      camera,
      sink,
      this.options.rateHz ?? 30,
      this.options.setIntervalFn ?? setInterval,
      this.options.clearIntervalFn ?? ((h) => clearInterval(h as ReturnType<typeof setInterval>)),
    );
  }

  disconnect(): void {
    this.ticker?.stop();
    this.ticker = null;
    this.client.close();
  }

  setPointer(position: { x: number; y: number } | null): void {
    this.pointer = { ...this.pointer, position };
  }

  setExpression(expression: EmotionLabel): void {
    this.pointer = { ...this.pointer, expression };
  }

  setOccluded(occluded: boolean): void {
    this.pointer = { ...this.pointer, occluded };
  }

  setTurnedAway(turnedAway: boolean): void {
    this.pointer = { ...this.pointer, turnedAway };
  }

  requestMode(mode: MimicryMode): boolean {
    this.hud.requestedMode = mode;
    this.emit();
    return this.client.publish(encodePublish(TOPICS.mode, mode));
  }

  private handleFrame(frame: ServerFrame): void {
    if (frame.op === "error") {
      this.hud.serverErrors += 1;
      this.emit();
      return;
    }
    switch (frame.topic) {
      case TOPICS.headState:
        if (isHeadState(frame.msg)) this.hud.head = frame.msg;
        break;
      case TOPICS.ecaState:
        if (isEcaFaceState(frame.msg)) this.hud.face = frame.msg;
        break;
      case TOPICS.mode:
        if (isMimicryMode(frame.msg)) this.hud.acknowledgedMode = frame.msg;
        break;
      default:
        break;
    }
    this.emit();
  }

  private emit(): void {
    this.onhud?.(this.hud);
  }
}
