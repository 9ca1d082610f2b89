/**
 * Bridge connection: WebSocket session management with visible reconnect.
 *
 * The socket constructor is injectable so tests (and tooling) can run the
 * same client under node with the `ws` package; browsers pass the native
 * WebSocket.  Every (re)connect starts fresh per-channel sequence
 * numbers, matching the bridge's per-connection freshness tracking.
 */

import type { DhParams } from "./kinematics.js";
import {
  armTargetMessage,
  estopMessage,
  estopResetMessage,
  gripperMessage,
  headTargetMessage,
  heartbeatMessage,
  parseServerMessage,
} from "./protocol.js";
import { eulerToQuat, ViewModel } from "./viewmodel.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface BridgeClientOptions {
  now?: () => number;
  backoffInitialMs?: number;
  backoffMaxMs?: number;
  heartbeatMs?: number;
  setTimer?: (fn: () => void, ms: number) => unknown;
  clearTimer?: (handle: unknown) => void;
}

export class BridgeClient {
  readonly vm: ViewModel;
  private readonly factory: SocketFactory;
  private readonly url: string;
  private sock: SocketLike | null = null;
  private seqs = { arm: 0, head: 0, grip: 0, beat: 0, estop: 0 };
  private readonly now: () => number;
  private readonly setTimer: (fn: () => void, ms: number) => unknown;
  private readonly clearTimer: (handle: unknown) => void;
  private readonly backoffInitialMs: number;
  private readonly backoffMaxMs: number;
  private readonly heartbeatMs: number;
  private reconnectTimer: unknown = null;
  private heartbeatTimer: unknown = null;
  private stopped = false;

  constructor(url: string, factory: SocketFactory, vm: ViewModel, opts: BridgeClientOptions = {}) {
    this.url = url;
    this.factory = factory;
    this.vm = vm;
    this.now = opts.now ?? (() => Date.now());
    this.setTimer = opts.setTimer ?? ((fn, ms) => setTimeout(fn, ms));
    this.clearTimer = opts.clearTimer ?? ((h) => clearTimeout(h as Parameters<typeof clearTimeout>[0]));
    this.backoffInitialMs = opts.backoffInitialMs ?? 500;
    this.backoffMaxMs = opts.backoffMaxMs ?? 5000;
    this.heartbeatMs = opts.heartbeatMs ?? 100;
  }

  connect(): void {
    if (this.stopped) return;
    this.vm.connection = "connecting";
    this.vm.reconnectAttempts += 1;
    let sock: SocketLike;
    try {
      sock = this.factory(this.url);
    } catch {
      this.scheduleReconnect();
      return;
    }
    this.sock = sock;
    sock.onopen = () => {
      this.seqs = { arm: 0, head: 0, grip: 0, beat: 0, estop: 0 };
      this.vm.onConnected();
      this.startHeartbeat();
    };
    sock.onmessage = (ev) => this.handleMessage(String(ev.data));
    sock.onerror = () => {
      /* onclose always follows */
    };
    sock.onclose = () => {
      this.stopHeartbeat();
      this.vm.onDisconnected();
      this.sock = null;
      this.scheduleReconnect();
    };
  }

  close(): void {
    this.stopped = true;
    this.stopHeartbeat();
    if (this.reconnectTimer !== null) this.clearTimer(this.reconnectTimer);
    this.sock?.close();
    this.vm.onDisconnected();
  }

  private scheduleReconnect(): void {
    if (this.stopped) return;
    const delay = Math.min(
      this.backoffMaxMs,
      this.backoffInitialMs * 2 ** Math.max(0, this.vm.reconnectAttempts - 1),
    );
    this.vm.connection = "connecting";
    this.reconnectTimer = this.setTimer(() => this.connect(), delay);
  }

  private startHeartbeat(): void {
    const beat = () => {
      if (this.vm.connection !== "connected") return;
      this.sendRaw(heartbeatMessage(this.seqs.beat++));
      // a dead bridge stops telemetry: declare disconnect within 2 s
      if (this.vm.isDead(this.now())) {
        this.sock?.close();
        return;
      }
      this.heartbeatTimer = this.setTimer(beat, this.heartbeatMs);
    };
    this.heartbeatTimer = this.setTimer(beat, this.heartbeatMs);
  }

  private stopHeartbeat(): void {
    if (this.heartbeatTimer !== null) this.clearTimer(this.heartbeatTimer);
    this.heartbeatTimer = null;
  }

  private handleMessage(text: string): void {
    const msg = parseServerMessage(text);
    if (msg === null) return;
    switch (msg.type) {
      case "telemetry":
        this.vm.acceptTelemetry(msg, this.now());
        break;
      case "dh":
        this.vm.acceptDh({ a: msg.a, d: msg.d, alpha: msg.alpha } as DhParams);
        break;
      case "error":
        this.vm.lastError = msg.message;
        break;
      case "hello":
        break;
    }
  }

  private sendRaw(text: string): boolean {
    if (this.sock === null || this.vm.connection !== "connected") return false;
    try {
      this.sock.send(text);
      return true;
    } catch {
      return false;
    }
  }

  /** Rate-capped input fan-out; call as often as the UI likes. */
  sendInputs(): void {
    const now = this.now();
    if (!this.vm.inputsEnabled(now)) return;
    if (this.vm.maySendHead(now)) {
      this.sendRaw(headTargetMessage(this.seqs.head++, this.vm.head.roll, this.vm.head.pitch));
    }
    if (this.vm.maySendArm(now)) {
      const h = this.vm.hand;
      this.sendRaw(
        armTargetMessage(
          this.seqs.arm++,
          [h.x, h.y, h.z],
          eulerToQuat(h.roll, h.pitch, h.yaw),
        ),
      );
      this.sendRaw(gripperMessage(this.seqs.grip++, this.vm.aperture(), this.vm.camera));
    }
  }

  /** E-stop bypasses every rate limit and the inputs-enabled gate. */
  sendEstop(): boolean {
    return this.sendRaw(estopMessage(this.seqs.estop++));
  }

  sendEstopReset(): boolean {
    return this.sendRaw(estopResetMessage());
  }

  toggleCamera(): void {
    const camera = this.vm.toggleCamera();
    this.sendRaw(gripperMessage(this.seqs.grip++, this.vm.aperture(), camera));
  }
}
