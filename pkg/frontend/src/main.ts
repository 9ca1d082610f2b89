/**
 * Browser wiring: widgets in, canvas panels out.
 *
 * One requestAnimationFrame loop repaints from the ViewModel snapshot and
 * fans inputs out through the rate-capped client, so rendering stays
 * decoupled from message arrival.  Hand target: drag on the main panel
 * (x/y) plus mouse wheel for depth; orientation via roll/pitch/yaw
 * sliders.  Head target: drag on the head panel.  E-stop is a plain
 * button wired straight to sendEstop (no rate limit).
 */

import { BridgeClient } from "./client.js";
import { buildScene, overviewCamera, panelCamera, projectSegment } from "./render.js";
import type { Scene } from "./render.js";
import { ViewModel } from "./viewmodel.js";

const COLORS = { link: "#4ec9f0", frustum: "#f0b84e", gripper: "#8ef08e", floor: "#333a44" };

function paint(canvas: HTMLCanvasElement, scene: Scene, which: "overview" | "head" | "wrist") {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.fillStyle = "#14171c";
  ctx.fillRect(0, 0, width, height);
  const view =
    which === "overview"
      ? overviewCamera(width, height)
      : panelCamera(which === "head" ? scene.headCamera : scene.wristCamera, width, height);
  for (const seg of scene.segments) {
    if (which !== "overview" && seg.kind === "frustum") continue;
    const line = projectSegment(view, seg);
    if (!line) continue;
    ctx.strokeStyle = COLORS[seg.kind];
    ctx.lineWidth = seg.kind === "link" ? 3 : 1;
    ctx.beginPath();
    ctx.moveTo(line[0][0], line[0][1]);
    ctx.lineTo(line[1][0], line[1][1]);
    ctx.stroke();
  }
}

function grey(canvas: HTMLCanvasElement, label: string) {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.fillStyle = "rgba(40, 40, 40, 0.8)";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#ddd";
  ctx.font = "16px sans-serif";
  ctx.textAlign = "center";
  ctx.fillText(label, canvas.width / 2, canvas.height / 2);
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export function start(): void {
  const vm = new ViewModel();
  const url = `ws://${location.hostname || "127.0.0.1"}:${
    new URLSearchParams(location.search).get("port") ?? "46080"
  }`;
  const client = new BridgeClient(url, (u) => new WebSocket(u) as never, vm);
  client.connect();

  const overview = el<HTMLCanvasElement>("overview");
  const headPanel = el<HTMLCanvasElement>("head-panel");
  const wristPanel = el<HTMLCanvasElement>("wrist-panel");
  const status = el<HTMLDivElement>("status");
  const latency = el<HTMLDivElement>("latency");

  // hand target: drag for x/y, wheel for depth
  let dragging = false;
  overview.addEventListener("mousedown", () => (dragging = true));
  window.addEventListener("mouseup", () => (dragging = false));
  overview.addEventListener("mousemove", (ev) => {
    if (!dragging) return;
    vm.setHand({
      x: vm.hand.x + ev.movementY * -0.001,
      y: vm.hand.y + ev.movementX * -0.001,
    });
  });
  overview.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    vm.setHand({ z: vm.hand.z - Math.sign(ev.deltaY) * 0.005 });
  });

  // head target: drag on the head panel
  let headDrag = false;
  headPanel.addEventListener("mousedown", () => (headDrag = true));
  window.addEventListener("mouseup", () => (headDrag = false));
  headPanel.addEventListener("mousemove", (ev) => {
    if (!headDrag) return;
    vm.setHead({
      roll: vm.head.roll + ev.movementX * 0.004,
      pitch: vm.head.pitch + ev.movementY * 0.004,
    });
  });

  for (const axis of ["roll", "pitch", "yaw"] as const) {
    el<HTMLInputElement>(`hand-${axis}`).addEventListener("input", (ev) => {
      vm.setHand({ [axis]: Number((ev.target as HTMLInputElement).value) });
    });
  }
  el<HTMLInputElement>("pinch").addEventListener("input", (ev) => {
    vm.setPinch(Number((ev.target as HTMLInputElement).value));
  });
  el<HTMLButtonElement>("camera-toggle").addEventListener("click", () => {
    client.toggleCamera();
    el<HTMLButtonElement>("camera-toggle").textContent = `camera: ${vm.camera}`;
  });
  el<HTMLButtonElement>("estop").addEventListener("click", () => client.sendEstop());
  el<HTMLButtonElement>("estop-reset").addEventListener("click", () => client.sendEstopReset());

  const frame = () => {
    const now = Date.now();
    client.sendInputs();
    status.textContent = vm.statusLabel(now);
    status.className = vm.telemetry?.estop ? "estop" : vm.connection;
    latency.textContent =
      vm.latencyEstimateMs === null ? "latency: -" : `latency: ${vm.latencyEstimateMs.toFixed(1)} ms`;
    if (vm.telemetry && vm.dh && !vm.isStale(now)) {
      const scene = buildScene(vm.telemetry, vm.dh);
      paint(overview, scene, "overview");
      paint(headPanel, scene, "head");
      paint(wristPanel, scene, "wrist");
      const active = vm.camera === "Head" ? headPanel : wristPanel;
      const other = vm.camera === "Head" ? wristPanel : headPanel;
      active.classList.add("active");
      other.classList.remove("active");
    } else {
      const label = vm.connection === "connected" ? "telemetry stale" : "disconnected";
      grey(overview, label);
      grey(headPanel, label);
      grey(wristPanel, label);
    }
    requestAnimationFrame(frame);
  };
  requestAnimationFrame(frame);
}

start();
