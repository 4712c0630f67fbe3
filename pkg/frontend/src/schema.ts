/** Versioned JSON message schema shared with the telemetry server. */

export const SCHEMA_VERSION = 1;

export const N_JOINTS = 12;
export const N_FEET = 4;

export const JOINT_NAMES = [
  "FL_hip", "FL_thigh", "FL_calf",
  "FR_hip", "FR_thigh", "FR_calf",
  "RL_hip", "RL_thigh", "RL_calf",
  "RR_hip", "RR_thigh", "RR_calf",
] as const;

export const FOOT_NAMES = ["FL", "FR", "RL", "RR"] as const;

/** Per-axis command bounds enforced before sending, mirroring the server. */
export const COMMAND_BOUNDS: ReadonlyArray<readonly [number, number]> = [
  [-1.0, 1.0],
  [-0.5, 0.5],
  [-1.0, 1.0],
];

export interface StateMessage {
  v: number;
  type: "state";
  t: number;
  base_position: number[]; // [x, y, z]
  base_orientation: number[]; // quaternion [w, x, y, z]
  q: number[]; // 12 joint angles
  contacts: number[]; // 4 flags
  commanded: number[]; // [vx, vy, wz]
  actual: number[]; // body-frame linear velocity [vx, vy, vz]
  f_true: number[]; // 12 binary
  f_est: number[]; // 12 probabilities
  reward: number;
  paused: boolean;
}

export interface AckMessage {
  v: number;
  type: "ack";
  applied: string;
}

export interface ErrorMessage {
  v: number;
  type: "error";
  message: string;
}

export type ServerMessage = StateMessage | AckMessage | ErrorMessage;

export type FaultKind = "locked" | "weakened";

export type ControlMessage =
  | { type: "command"; vx: number; vy: number; wz: number }
  | { type: "fault"; joint: number; kind: FaultKind; q_cen?: number; k_tau?: number }
  | { type: "clear_fault" }
  | { type: "pause" }
  | { type: "resume" }
  | { type: "reset" };

function isNumberArray(x: unknown, length: number): x is number[] {
  return (
    Array.isArray(x) && x.length === length && x.every((v) => typeof v === "number" && Number.isFinite(v))
  );
}

/** Parse one server frame; returns null for anything malformed. */
export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const msg = data as Record<string, unknown>;
  if (msg.v !== SCHEMA_VERSION) return null;
  if (msg.type === "ack" && typeof msg.applied === "string") {
    return msg as unknown as AckMessage;
  }
  if (msg.type === "error" && typeof msg.message === "string") {
    return msg as unknown as ErrorMessage;
  }
  if (msg.type !== "state") return null;
  const ok =
    typeof msg.t === "number" &&
    isNumberArray(msg.base_position, 3) &&
    isNumberArray(msg.base_orientation, 4) &&
    isNumberArray(msg.q, N_JOINTS) &&
    isNumberArray(msg.contacts, N_FEET) &&
    isNumberArray(msg.commanded, 3) &&
    isNumberArray(msg.actual, 3) &&
    isNumberArray(msg.f_true, N_JOINTS) &&
    isNumberArray(msg.f_est, N_JOINTS) &&
    typeof msg.reward === "number" &&
    typeof msg.paused === "boolean";
  return ok ? (msg as unknown as StateMessage) : null;
}

/** Build a velocity command, validating bounds; throws on violation. */
export function makeCommand(vx: number, vy: number, wz: number): ControlMessage {
  const values = [vx, vy, wz];
  const names = ["vx", "vy", "wz"];
  values.forEach((v, i) => {
    if (!Number.isFinite(v)) throw new Error(`${names[i]} must be finite`);
    const [lo, hi] = COMMAND_BOUNDS[i];
    if (v < lo || v > hi) throw new Error(`${names[i]}=${v} outside [${lo}, ${hi}]`);
  });
  return { type: "command", vx, vy, wz };
}

export function makeFault(
  joint: number,
  kind: FaultKind,
  params: { q_cen?: number; k_tau?: number } = {},
): ControlMessage {
  if (!Number.isInteger(joint) || joint < 0 || joint >= N_JOINTS) {
    throw new Error(`joint must be an integer in [0, ${N_JOINTS - 1}]`);
  }
  if (kind !== "locked" && kind !== "weakened") {
    throw new Error(`unknown fault kind ${kind}`);
  }
  if (params.k_tau !== undefined && (params.k_tau < 0 || params.k_tau > 1)) {
    throw new Error("k_tau must lie in [0, 1]");
  }
  return { type: "fault", joint, kind, ...params };
}

export function makeClearFault(): ControlMessage {
  return { type: "clear_fault" };
}

export function serializeControl(msg: ControlMessage): string {
  return JSON.stringify({ v: SCHEMA_VERSION, ...msg });
}
