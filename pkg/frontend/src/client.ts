/** WebSocket client: parses frames, feeds the console state, and sends
 * schema-validated control messages. */

import { ConsoleState } from "./state.js";
import {
  ControlMessage,
  parseServerMessage,
  serializeControl,
} from "./schema.js";

export interface ClientEvents {
  onState?: () => void;
  onAck?: (applied: string) => void;
  onError?: (message: string) => void;
}

export class ConsoleClient {
  readonly state = new ConsoleState();
  private ws: WebSocket | null = null;
  private events: ClientEvents;
  lastArrivalWallS: number | null = null;

  constructor(events: ClientEvents = {}) {
    this.events = events;
  }

  connect(url: string): void {
    this.state.status = "connecting";
    const ws = new WebSocket(url);
    this.ws = ws;
    ws.onopen = () => {
      this.state.status = "connected";
    };
    ws.onmessage = (ev) => this.handleFrame(String(ev.data));
    ws.onclose = () => {
      this.state.onDisconnect();
      this.ws = null;
    };
    ws.onerror = () => {
      this.state.lastError = "connection error";
    };
  }

  /** Parse one raw frame; exposed for tests (no socket required). */
  handleFrame(raw: string, nowWallS: number = Date.now() / 1000): void {
    const msg = parseServerMessage(raw);
    if (msg === null) {
      this.state.lastError = "malformed frame dropped";
      return;
    }
    if (msg.type === "state") {
      this.lastArrivalWallS = nowWallS;
      this.state.applyState(msg);
      this.events.onState?.();
    } else if (msg.type === "ack") {
      this.events.onAck?.(msg.applied);
    } else {
      this.state.lastError = msg.message;
      this.events.onError?.(msg.message);
    }
  }

  /** Validate and send; marks velocity commands pending until echoed. */
  send(msg: ControlMessage): void {
    if (this.ws === null || this.state.status !== "connected") {
      throw new Error("not connected");
    }
    if (msg.type === "command") {
      this.state.markCommandPending(msg.vx, msg.vy, msg.wz);
    }
    this.ws.send(serializeControl(msg));
  }

  get stalled(): boolean {
    return this.state.isStalled(Date.now() / 1000, this.lastArrivalWallS);
  }
}
