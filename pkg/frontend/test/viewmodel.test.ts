import { describe, expect, it } from "vitest";

import type { TelemetryMsg } from "../src/protocol.js";
import {
  ARM_SEND_MIN_GAP_MS,
  HEAD_SEND_MIN_GAP_MS,
  ViewModel,
  eulerToQuat,
} from "../src/viewmodel.js";

function telemetry(seq: number, t_us: number, extra: Partial<TelemetryMsg> = {}): TelemetryMsg {
  return {
    type: "telemetry",
    seq,
    t_us,
    joints: [0, -1.2, 1.0, -1.37, -1.57, 0],
    roll: 0,
    pitch: 0,
    aperture: 1,
    status: 1,
    homed: true,
    estop: false,
    head_faulted: false,
    estop_reason: "NONE",
    ...extra,
  };
}

describe("telemetry intake", () => {
  it("accepts serially fresh frames and rejects stale ones", () => {
    const vm = new ViewModel();
    expect(vm.acceptTelemetry(telemetry(5, 0), 0)).toBe(true);
    expect(vm.acceptTelemetry(telemetry(6, 10_000), 10)).toBe(true);
    expect(vm.acceptTelemetry(telemetry(6, 10_000), 11)).toBe(false);
    expect(vm.acceptTelemetry(telemetry(4, 0), 12)).toBe(false);
    expect(vm.telemetry?.seq).toBe(6);
  });

  it("handles sequence wraparound", () => {
    const vm = new ViewModel();
    expect(vm.acceptTelemetry(telemetry(2 ** 32 - 1, 0), 0)).toBe(true);
    expect(vm.acceptTelemetry(telemetry(0, 10_000), 10)).toBe(true);
  });

  it("rendered state only ever reflects accepted telemetry", () => {
    const vm = new ViewModel();
    vm.acceptTelemetry(telemetry(1, 0, { roll: 0.25 }), 0);
    vm.setHead({ roll: 1.0 }); // local input must not echo into telemetry
    expect(vm.telemetry?.roll).toBe(0.25);
  });
});

describe("staleness", () => {
  it("goes stale after 500 ms and dead after 2 s", () => {
    const vm = new ViewModel();
    vm.onConnected();
    vm.acceptTelemetry(telemetry(1, 0), 1000);
    expect(vm.isStale(1400)).toBe(false);
    expect(vm.isStale(1501)).toBe(true);
    expect(vm.isDead(2500)).toBe(false);
    expect(vm.isDead(3001)).toBe(true);
    expect(vm.inputsEnabled(3001)).toBe(false);
  });

  it("status label surfaces homing, fault and e-stop states", () => {
    const vm = new ViewModel();
    vm.onConnected();
    vm.acceptTelemetry(telemetry(1, 0, { homed: false }), 0);
    expect(vm.statusLabel(1)).toBe("unhomed");
    vm.acceptTelemetry(telemetry(2, 10_000, { head_faulted: true }), 1);
    expect(vm.statusLabel(2)).toBe("head FAULTED");
    vm.acceptTelemetry(telemetry(3, 20_000, { estop: true, estop_reason: "WATCHDOG" }), 2);
    expect(vm.statusLabel(3)).toContain("E-STOP: WATCHDOG");
    expect(vm.inputsEnabled(3)).toBe(false);
  });
});

describe("send rate caps", () => {
  it("arm channel stays at or below 50 Hz", () => {
    const vm = new ViewModel();
    let sends = 0;
    for (let t = 0; t <= 1000; t += 2) {
      if (vm.maySendArm(t)) sends += 1;
    }
    expect(sends).toBeLessThanOrEqual(1000 / ARM_SEND_MIN_GAP_MS + 1);
    expect(sends).toBeGreaterThan(40);
  });

  it("head channel stays at or below 100 Hz", () => {
    const vm = new ViewModel();
    let sends = 0;
    for (let t = 0; t <= 1000; t += 1) {
      if (vm.maySendHead(t)) sends += 1;
    }
    expect(sends).toBeLessThanOrEqual(1000 / HEAD_SEND_MIN_GAP_MS + 1);
    expect(sends).toBeGreaterThan(90);
  });
});

describe("input widgets", () => {
  it("clamps hand and head inputs to valid ranges", () => {
    const vm = new ViewModel();
    vm.setHand({ x: 9, y: -9, z: 0.2 });
    expect(vm.hand.x).toBe(0.5);
    expect(vm.hand.y).toBe(-0.5);
    vm.setHead({ roll: 9, pitch: -9 });
    expect(vm.head.roll).toBe(Math.PI);
    expect(vm.head.pitch).toBe(-Math.PI / 2);
  });

  it("maps pinch degrees to aperture with the robot's 10..60 map", () => {
    const vm = new ViewModel();
    vm.setPinch(10);
    expect(vm.aperture()).toBe(0);
    vm.setPinch(60);
    expect(vm.aperture()).toBe(1);
    vm.setPinch(35);
    expect(vm.aperture()).toBeCloseTo(0.5, 12);
  });

  it("camera toggle flips between the two cameras", () => {
    const vm = new ViewModel();
    expect(vm.toggleCamera()).toBe("Head");
    expect(vm.toggleCamera()).toBe("Wrist");
  });
});

describe("latency estimate", () => {
  it("tracks delay above the fastest observed arrival", () => {
    const vm = new ViewModel();
    vm.onConnected();
    // frames every 10 ms sim time arriving with 5 then 25 ms extra delay
    vm.acceptTelemetry(telemetry(1, 0), 1005);
    for (let i = 2; i < 30; i++) {
      vm.acceptTelemetry(telemetry(i, (i - 1) * 10_000), 1005 + (i - 1) * 10 + 20);
    }
    expect(vm.latencyEstimateMs).not.toBeNull();
    expect(vm.latencyEstimateMs!).toBeGreaterThan(10);
    expect(vm.latencyEstimateMs!).toBeLessThanOrEqual(21);
  });
});

describe("euler to quaternion", () => {
  it("produces unit quaternions matching axis rotations", () => {
    const [w, x, y, z] = eulerToQuat(Math.PI / 2, 0, 0);
    expect(Math.hypot(w, x, y, z)).toBeCloseTo(1, 12);
    expect(w).toBeCloseTo(Math.SQRT1_2, 12);
    expect(x).toBeCloseTo(Math.SQRT1_2, 12);
    expect(y).toBeCloseTo(0, 12);
    expect(z).toBeCloseTo(0, 12);
    const q2 = eulerToQuat(0.3, -0.4, 1.1);
    expect(Math.hypot(...q2)).toBeCloseTo(1, 12);
  });
});
