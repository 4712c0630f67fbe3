/** Console state machine: connection status, latest frame, rolling buffers,
 * optimistic pending command. Pure logic — no DOM, no sockets. */

import { RollingBuffer, WINDOW_S } from "./buffers.js";
import { StateMessage } from "./schema.js";

export type ConnectionStatus = "disconnected" | "connecting" | "connected";

export const STALL_S = 1.0;

export class ConsoleState {
  status: ConnectionStatus = "disconnected";
  latest: StateMessage | null = null;
  lastError: string | null = null;
  /** Command sent but not yet echoed back in a StateMessage. */
  pendingCommand: [number, number, number] | null = null;

  readonly velocity = new RollingBuffer(6, WINDOW_S); // cmd vx,vy,wz + actual
  readonly faults = new RollingBuffer(24, WINDOW_S); // f_est (12) + f_true (12)
  readonly contacts = new RollingBuffer(4, WINDOW_S);

  applyState(msg: StateMessage): void {
    this.latest = msg;
    this.velocity.push(msg.t, [...msg.commanded, ...msg.actual]);
    this.faults.push(msg.t, [...msg.f_est, ...msg.f_true]);
    this.contacts.push(msg.t, msg.contacts);
    if (this.pendingCommand !== null) {
      const [vx, vy, wz] = this.pendingCommand;
      const eps = 1e-3; // server rounds to 4 decimals
      if (
        Math.abs(msg.commanded[0] - vx) < eps &&
        Math.abs(msg.commanded[1] - vy) < eps &&
        Math.abs(msg.commanded[2] - wz) < eps
      ) {
        this.pendingCommand = null;
      }
    }
  }

  markCommandPending(vx: number, vy: number, wz: number): void {
    this.pendingCommand = [vx, vy, wz];
  }

  /** True when no frame arrived for more than STALL_S of wall time. */
  isStalled(nowWallS: number, lastArrivalWallS: number | null): boolean {
    if (this.status !== "connected" || lastArrivalWallS === null) return false;
    return nowWallS - lastArrivalWallS > STALL_S;
  }

  onDisconnect(): void {
    this.status = "disconnected";
    this.pendingCommand = null;
    // buffers retain history so a reconnect resumes the charts in place
  }
}
