/**
 * Bridge protocol mirror: the line-JSON messages teleopd speaks.
 *
 * Field names and ranges match the wire datagrams one to one; everything
 * sent from the console is clamped/validated here so an invalid widget
 * state can never reach the socket.
 */

export type CameraName = "Wrist" | "Head";

export interface TelemetryMsg {
  type: "telemetry";
  seq: number;
  t_us: number;
  joints: number[];
  roll: number;
  pitch: number;
  aperture: number;
  status: number;
  homed: boolean;
  estop: boolean;
  head_faulted: boolean;
  estop_reason: string;
}

export interface DhMsg {
  type: "dh";
  a: number[];
  d: number[];
  alpha: number[];
}

export interface HelloMsg {
  type: "hello";
  version: number;
}

export interface ErrorMsg {
  type: "error";
  message: string;
}

export type ServerMsg = TelemetryMsg | DhMsg | HelloMsg | ErrorMsg;

export function parseServerMessage(text: string): ServerMsg | null {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null || !("type" in obj)) return null;
  const msg = obj as Record<string, unknown>;
  switch (msg.type) {
    case "telemetry": {
      const joints = msg.joints;
      if (!Array.isArray(joints) || joints.length !== 6) return null;
      if (joints.some((v) => typeof v !== "number" || !Number.isFinite(v))) return null;
      for (const key of ["seq", "t_us", "roll", "pitch", "aperture", "status"]) {
        if (typeof msg[key] !== "number" || !Number.isFinite(msg[key] as number)) return null;
      }
      return msg as unknown as TelemetryMsg;
    }
    case "dh": {
      for (const key of ["a", "d", "alpha"]) {
        const row = msg[key];
        if (!Array.isArray(row) || row.length !== 6) return null;
      }
      return msg as unknown as DhMsg;
    }
    case "hello":
      return msg as unknown as HelloMsg;
    case "error":
      return typeof msg.message === "string" ? (msg as unknown as ErrorMsg) : null;
    default:
      return null;
  }
}

export const clamp = (v: number, lo: number, hi: number): number =>
  Math.min(hi, Math.max(lo, v));

export function armTargetMessage(
  seq: number,
  position: [number, number, number],
  orientation: [number, number, number, number],
): string {
  const n = Math.hypot(...orientation);
  if (!(n > 0)) throw new Error("zero-norm orientation");
  const q = orientation.map((c) => c / n);
  return JSON.stringify({
    type: "arm_target",
    seq,
    position: position.map((v) => (Number.isFinite(v) ? v : 0)),
    orientation: q,
  });
}

export function headTargetMessage(seq: number, roll: number, pitch: number): string {
  return JSON.stringify({
    type: "head_target",
    seq,
    roll: clamp(roll, -Math.PI, Math.PI),
    pitch: clamp(pitch, -Math.PI / 2, Math.PI / 2),
  });
}

export function gripperMessage(seq: number, aperture: number, camera: CameraName): string {
  return JSON.stringify({ type: "gripper", seq, aperture: clamp(aperture, 0, 1), camera });
}

export function heartbeatMessage(seq: number): string {
  return JSON.stringify({ type: "heartbeat", seq });
}

export function estopMessage(seq: number): string {
  return JSON.stringify({ type: "estop", seq, reason: "OPERATOR" });
}

export function estopResetMessage(): string {
  return JSON.stringify({ type: "estop_reset" });
}
