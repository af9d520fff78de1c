/**
 * Reconnecting bridge client. Wraps one WebSocket with exponential backoff
 * and replays the topic subscriptions after every reconnect. The socket
 * constructor and timer are injectable so tests can drive it without a
 * network or real time.
 */

import { decodeServerFrame, encodeSubscribe, ServerFrame } from "./protocol.js";

export type ConnectionState = "connecting" | "open" | "closed";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;
export type Scheduler = (fn: () => void, ms: number) => unknown;

export interface BridgeClientOptions {
  socketFactory?: SocketFactory;
  schedule?: Scheduler;
  baseBackoffMs?: number;
  maxBackoffMs?: number;
}

export class BridgeClient {
  readonly url: string;
  state: ConnectionState = "closed";
  onframe: ((frame: ServerFrame) => void) | null = null;
  onstate: ((state: ConnectionState) => void) | null = null;
  onprotocolerror: ((raw: unknown) => void) | null = null;

  private socket: SocketLike | null = null;
  private subscriptions = new Set<string>();
  private retries = 0;
  private stopped = false;
  private readonly makeSocket: SocketFactory;
  private readonly schedule: Scheduler;
  private readonly baseBackoffMs: number;
  private readonly maxBackoffMs: number;

  constructor(url: string, options: BridgeClientOptions = {}) {
    this.url = url;
    this.makeSocket = options.socketFactory ?? ((u) => new WebSocket(u) as unknown as SocketLike);
    this.schedule = options.schedule ?? ((fn, ms) => setTimeout(fn, ms));
    this.baseBackoffMs = options.baseBackoffMs ?? 500;
    this.maxBackoffMs = options.maxBackoffMs ?? 5000;
  }

  connect(): void {
    this.stopped = false;
    this.open();
  }

  close(): void {
    this.stopped = true;
    this.socket?.close();
    this.socket = null;
    this.setState("closed");
  }

  /** Ask for a topic now and after every reconnect. */
  subscribe(topic: string): void {
    this.subscriptions.add(topic);
    if (this.state === "open") this.socket?.send(encodeSubscribe(topic));
  }

  publish(text: string): boolean {
    if (this.state !== "open" || !this.socket) return false;
    this.socket.send(text);
    return true;
  }

  backoffMs(): number {
    return Math.min(this.baseBackoffMs * 2 ** this.retries, this.maxBackoffMs);
  }

  private open(): void {
    this.setState("connecting");
    const socket = this.makeSocket(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.retries = 0;
      this.setState("open");
      for (const topic of this.subscriptions) socket.send(encodeSubscribe(topic));
    };
    socket.onmessage = (event) => {
      const frame = decodeServerFrame(String(event.data));
      if (frame === null) {
        this.onprotocolerror?.(event.data);
        return;
      }
      this.onframe?.(frame);
    };
    socket.onerror = () => {
      /* the close handler owns retries */
    };
    socket.onclose = () => {
      if (this.socket !== socket) return;
      this.socket = null;
      this.setState("closed");
      if (!this.stopped) {
        const delay = this.backoffMs();
        this.retries += 1;
        this.schedule(() => {
          if (!this.stopped) this.open();
        }, delay);
      }
    };
  }

  private setState(state: ConnectionState): void {
    if (state !== this.state) {
      this.state = state;
      this.onstate?.(state);
    }
  }
}
