/**
 * Scene geometry for the console: arm skeleton from client-side FK, the
 * head frustum, and the two viewpoint panels (head camera and wrist
 * camera poses rendered geometrically -- video transport is out of scope).
 *
 * Everything here is pure math over the ViewModel snapshot; the canvas
 * painting in main.ts consumes the line lists this module produces.
 */

import type { DhParams, Transform, Vec3 } from "./kinematics.js";
import { applyTransform, fkFrames, mulTransform, origin, rollPitchTransform } from "./kinematics.js";
import type { TelemetryMsg } from "./protocol.js";

export interface Segment {
  a: Vec3;
  b: Vec3;
  kind: "link" | "frustum" | "gripper" | "floor";
}

/** Fixed pedestal pose of the 2-DoF head relative to the arm base. */
const HEAD_BASE: Transform = [
  [1, 0, 0, -0.25],
  [0, 1, 0, 0.35],
  [0, 0, 1, 0.45],
];

export interface Scene {
  segments: Segment[];
  jointPositions: Vec3[];
  headCamera: Transform;
  wristCamera: Transform;
}

function frustum(at: Transform, depth = 0.12, half = 0.05): Segment[] {
  const apex = origin(at);
  const corners: Vec3[] = [
    applyTransform(at, [half, half, depth]),
    applyTransform(at, [-half, half, depth]),
    applyTransform(at, [-half, -half, depth]),
    applyTransform(at, [half, -half, depth]),
  ];
  const out: Segment[] = [];
  for (let i = 0; i < 4; i++) {
    out.push({ a: apex, b: corners[i], kind: "frustum" });
    out.push({ a: corners[i], b: corners[(i + 1) % 4], kind: "frustum" });
  }
  return out;
}

export function buildScene(tlm: TelemetryMsg, dh: DhParams): Scene {
  const frames = fkFrames(tlm.joints, dh);
  const joints = frames.map(origin);
  const segments: Segment[] = [];
  for (let i = 0; i + 1 < joints.length; i++) {
    segments.push({ a: joints[i], b: joints[i + 1], kind: "link" });
  }
  // gripper fingers on the flange: spread follows the aperture
  const flange = frames[6];
  const spread = 0.01 + 0.035 * tlm.aperture;
  for (const side of [-1, 1]) {
    const root = applyTransform(flange, [0, side * spread, 0]);
    const tip = applyTransform(flange, [0, side * spread, 0.07]);
    segments.push({ a: origin(flange), b: root, kind: "gripper" });
    segments.push({ a: root, b: tip, kind: "gripper" });
  }
  // head camera pose from telemetry roll/pitch on the pedestal
  const headCamera = mulTransform(HEAD_BASE, rollPitchTransform(tlm.roll, tlm.pitch));
  segments.push(...frustum(headCamera));
  segments.push(...frustum(flange, 0.08, 0.03));
  // a sparse floor grid anchors the scene
  for (let i = -2; i <= 2; i++) {
    segments.push({ a: [i * 0.2, -0.6, 0], b: [i * 0.2, 0.6, 0], kind: "floor" });
    segments.push({ a: [-0.4, i * 0.3, 0], b: [0.4, i * 0.3, 0], kind: "floor" });
  }
  return { segments, jointPositions: joints, headCamera, wristCamera: flange };
}

export interface CameraView {
  /** camera pose in world coordinates; looks along its +z axis */
  pose: Transform;
  focalPx: number;
  width: number;
  height: number;
}

/** World point to pixel coordinates; null when behind the camera. */
export function project(view: CameraView, p: Vec3): [number, number] | null {
  const t = view.pose;
  const dx = p[0] - t[0][3];
  const dy = p[1] - t[1][3];
  const dz = p[2] - t[2][3];
  // world delta into camera coordinates (rotation transpose)
  const cx = t[0][0] * dx + t[1][0] * dy + t[2][0] * dz;
  const cy = t[0][1] * dx + t[1][1] * dy + t[2][1] * dz;
  const cz = t[0][2] * dx + t[1][2] * dy + t[2][2] * dz;
  if (cz <= 1e-6) return null;
  return [
    view.width / 2 + (view.focalPx * cx) / cz,
    view.height / 2 - (view.focalPx * cy) / cz,
  ];
}

export function projectSegment(
  view: CameraView,
  seg: Segment,
): [[number, number], [number, number]] | null {
  const a = project(view, seg.a);
  const b = project(view, seg.b);
  return a && b ? [a, b] : null;
}

/** Fixed third-person view for the main panel. */
export function overviewCamera(width: number, height: number): CameraView {
  // behind and above the base, looking at the workspace center
  const eye: Vec3 = [0.9, -1.1, 0.9];
  const target: Vec3 = [-0.15, 0.0, 0.25];
  return { pose: lookAt(eye, target), focalPx: 0.9 * height, width, height };
}

export function panelCamera(pose: Transform, width: number, height: number): CameraView {
  return { pose, focalPx: 0.8 * height, width, height };
}

export function lookAt(eye: Vec3, target: Vec3): Transform {
  const fz: Vec3 = norm3([target[0] - eye[0], target[1] - eye[1], target[2] - eye[2]]);
  const worldUp: Vec3 = Math.abs(fz[2]) > 0.98 ? [0, 1, 0] : [0, 0, 1];
  const fx = norm3(cross(worldUp, fz)); // camera right
  const fy = cross(fz, fx); // camera down-ish axis chosen right-handed
  return [
    [fx[0], fy[0], fz[0], eye[0]],
    [fx[1], fy[1], fz[1], eye[1]],
    [fx[2], fy[2], fz[2], eye[2]],
  ];
}

function cross(a: Vec3, b: Vec3): Vec3 {
  return [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
}

function norm3(v: Vec3): Vec3 {
  const n = Math.hypot(v[0], v[1], v[2]);
  return [v[0] / n, v[1] / n, v[2] / n];
}
