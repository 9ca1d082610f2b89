/**
 * Operator console state: last accepted telemetry, connection state,
 * local input widgets, and send-rate bookkeeping.
 *
 * Rendering always derives from the last accepted telemetry -- there is
 * deliberately no client-side prediction of robot state, so what the
 * operator sees is what the robot reported, at most `staleness` old.
 */

import type { DhParams } from "./kinematics.js";
import { validateDh } from "./kinematics.js";
import type { CameraName, TelemetryMsg } from "./protocol.js";
import { clamp } from "./protocol.js";

export type ConnectionState = "connecting" | "connected" | "disconnected";

export const STALE_AFTER_MS = 500;
export const DEAD_AFTER_MS = 2000;
export const ARM_SEND_MIN_GAP_MS = 20; // <= 50 Hz
export const HEAD_SEND_MIN_GAP_MS = 10; // <= 100 Hz

/** Hand target widget: position plus roll/pitch/yaw slider orientation. */
export interface HandInput {
  x: number;
  y: number;
  z: number;
  roll: number;
  pitch: number;
  yaw: number;
}

export interface HeadInput {
  roll: number;
  pitch: number;
}

const HALF_SEQ = 2 ** 31;

function serialNewer(seq: number, last: number): boolean {
  const delta = (seq - last + 2 ** 32) % 2 ** 32;
  return delta > 0 && delta < HALF_SEQ;
}

/** Intrinsic z-y-x euler angles to a (w, x, y, z) unit quaternion. */
export function eulerToQuat(
  roll: number,
  pitch: number,
  yaw: number,
): [number, number, number, number] {
  const cr = Math.cos(roll / 2);
  const sr = Math.sin(roll / 2);
  const cp = Math.cos(pitch / 2);
  const sp = Math.sin(pitch / 2);
  const cy = Math.cos(yaw / 2);
  const sy = Math.sin(yaw / 2);
  return [
    cy * cp * cr + sy * sp * sr,
    cy * cp * sr - sy * sp * cr,
    cy * sp * cr + sy * cp * sr,
    sy * cp * cr - cy * sp * sr,
  ];
}

export class ViewModel {
  connection: ConnectionState = "disconnected";
  reconnectAttempts = 0;
  telemetry: TelemetryMsg | null = null;
  lastTelemetryAtMs: number | null = null;
  dh: DhParams | null = null;
  lastError: string | null = null;

  hand: HandInput = { x: 0, y: 0, z: 0, roll: 0, pitch: 0, yaw: 0 };
  head: HeadInput = { roll: 0, pitch: 0 };
  pinchDeg = 60;
  camera: CameraName = "Wrist";

  /** smoothed one-way delay above the best observed arrival offset, ms */
  latencyEstimateMs: number | null = null;
  private baseOffsetMs: number | null = null;

  private lastTelemetrySeq: number | null = null;
  private lastArmSendMs = -Infinity;
  private lastHeadSendMs = -Infinity;

  /** Accept a telemetry frame unless it is serially stale. */
  acceptTelemetry(msg: TelemetryMsg, nowMs: number): boolean {
    if (this.lastTelemetrySeq !== null && !serialNewer(msg.seq, this.lastTelemetrySeq)) {
      return false;
    }
    this.lastTelemetrySeq = msg.seq;
    this.telemetry = msg;
    this.lastTelemetryAtMs = nowMs;
    const offset = nowMs - msg.t_us / 1000;
    if (this.baseOffsetMs === null || offset < this.baseOffsetMs) {
      this.baseOffsetMs = offset;
    }
    const sample = offset - this.baseOffsetMs;
    this.latencyEstimateMs =
      this.latencyEstimateMs === null
        ? sample
        : 0.9 * this.latencyEstimateMs + 0.1 * sample;
    return true;
  }

  acceptDh(dh: DhParams): void {
    validateDh(dh);
    this.dh = dh;
  }

  stalenessMs(nowMs: number): number | null {
    return this.lastTelemetryAtMs === null ? null : nowMs - this.lastTelemetryAtMs;
  }

  isStale(nowMs: number): boolean {
    const age = this.stalenessMs(nowMs);
    return age !== null && age > STALE_AFTER_MS;
  }

  isDead(nowMs: number): boolean {
    const age = this.stalenessMs(nowMs);
    return age !== null && age > DEAD_AFTER_MS;
  }

  /** Inputs are live only when connected, fresh, and not e-stopped. */
  inputsEnabled(nowMs: number): boolean {
    return (
      this.connection === "connected" &&
      this.telemetry !== null &&
      !this.telemetry.estop &&
      !this.isDead(nowMs)
    );
  }

  onConnected(): void {
    this.connection = "connected";
    this.reconnectAttempts = 0;
    this.lastTelemetrySeq = null; // server restarts get a fresh seq space
    this.baseOffsetMs = null;
    this.latencyEstimateMs = null;
  }

  onDisconnected(): void {
    this.connection = "disconnected";
    this.telemetry = null;
    this.lastTelemetryAtMs = null;
  }

  /** Rate gate for arm/gripper sends; true when a send is allowed now. */
  maySendArm(nowMs: number): boolean {
    if (nowMs - this.lastArmSendMs < ARM_SEND_MIN_GAP_MS) return false;
    this.lastArmSendMs = nowMs;
    return true;
  }

  maySendHead(nowMs: number): boolean {
    if (nowMs - this.lastHeadSendMs < HEAD_SEND_MIN_GAP_MS) return false;
    this.lastHeadSendMs = nowMs;
    return true;
  }

  setHand(update: Partial<HandInput>): void {
    this.hand = { ...this.hand, ...update };
    this.hand.x = clamp(this.hand.x, -0.5, 0.5);
    this.hand.y = clamp(this.hand.y, -0.5, 0.5);
    this.hand.z = clamp(this.hand.z, -0.5, 0.5);
  }

  setHead(update: Partial<HeadInput>): void {
    this.head = { ...this.head, ...update };
    this.head.roll = clamp(this.head.roll, -Math.PI, Math.PI);
    this.head.pitch = clamp(this.head.pitch, -Math.PI / 2, Math.PI / 2);
  }

  setPinch(deg: number): void {
    this.pinchDeg = clamp(deg, 0, 90);
  }

  /** Pinch angle to aperture with the robot-side default 10..60 degree map. */
  aperture(): number {
    return clamp((this.pinchDeg - 10) / 50, 0, 1);
  }

  toggleCamera(): CameraName {
    this.camera = this.camera === "Wrist" ? "Head" : "Wrist";
    return this.camera;
  }

  statusLabel(nowMs: number): string {
    if (this.connection !== "connected") {
      return this.connection === "connecting"
        ? `reconnecting (attempt ${this.reconnectAttempts})`
        : "disconnected";
    }
    if (this.telemetry === null) return "waiting for telemetry";
    if (this.isStale(nowMs)) return "stale telemetry";
    if (this.telemetry.estop) return `E-STOP: ${this.telemetry.estop_reason}`;
    if (this.telemetry.head_faulted) return "head FAULTED";
    return this.telemetry.homed ? "homed" : "unhomed";
  }
}
