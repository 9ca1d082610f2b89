/**
 * Client-side forward kinematics for rendering the arm skeleton.
 *
 * The bridge sends the same standard Denavit-Hartenberg table the robot
 * side uses (Rz(q) Tz(d) Tx(a) Rx(alpha) per joint), so frames computed
 * here agree with server telemetry to floating-point accuracy.
 */

export interface DhParams {
  a: number[];
  d: number[];
  alpha: number[];
}

export type Vec3 = [number, number, number];

/** 3x4 rigid transform: rotation rows with the translation in column 3. */
export type Transform = [
  [number, number, number, number],
  [number, number, number, number],
  [number, number, number, number],
];

export const IDENTITY: Transform = [
  [1, 0, 0, 0],
  [0, 1, 0, 0],
  [0, 0, 1, 0],
];

export function dhTransform(q: number, d: number, a: number, alpha: number): Transform {
  const cq = Math.cos(q);
  const sq = Math.sin(q);
  const ca = Math.cos(alpha);
  const sa = Math.sin(alpha);
  return [
    [cq, -sq * ca, sq * sa, a * cq],
    [sq, cq * ca, -cq * sa, a * sq],
    [0, sa, ca, d],
  ];
}

export function mulTransform(t: Transform, u: Transform): Transform {
  const out: number[][] = [[], [], []];
  for (let i = 0; i < 3; i++) {
    for (let j = 0; j < 4; j++) {
      let acc = t[i][0] * u[0][j] + t[i][1] * u[1][j] + t[i][2] * u[2][j];
      if (j === 3) acc += t[i][3];
      out[i][j] = acc;
    }
  }
  return out as Transform;
}

export function applyTransform(t: Transform, p: Vec3): Vec3 {
  return [
    t[0][0] * p[0] + t[0][1] * p[1] + t[0][2] * p[2] + t[0][3],
    t[1][0] * p[0] + t[1][1] * p[1] + t[1][2] * p[2] + t[1][3],
    t[2][0] * p[0] + t[2][1] * p[1] + t[2][2] * p[2] + t[2][3],
  ];
}

export function origin(t: Transform): Vec3 {
  return [t[0][3], t[1][3], t[2][3]];
}

export function validateDh(dh: DhParams): void {
  for (const key of ["a", "d", "alpha"] as const) {
    const row = dh[key];
    if (!Array.isArray(row) || row.length !== 6 || row.some((v) => !Number.isFinite(v))) {
      throw new Error(`DH table field '${key}' must hold 6 finite numbers`);
    }
  }
}

/** Transforms of frames 0..6 (base frame first, tool flange last). */
export function fkFrames(joints: number[], dh: DhParams): Transform[] {
  if (joints.length !== 6) throw new Error(`need 6 joint angles, got ${joints.length}`);
  const frames: Transform[] = [IDENTITY];
  let t: Transform = IDENTITY;
  for (let i = 0; i < 6; i++) {
    t = mulTransform(t, dhTransform(joints[i], dh.d[i], dh.a[i], dh.alpha[i]));
    frames.push(t);
  }
  return frames;
}

/** Rotation about x then y applied to a base transform (head camera pose). */
export function rollPitchTransform(roll: number, pitch: number): Transform {
  const cr = Math.cos(roll);
  const sr = Math.sin(roll);
  const cp = Math.cos(pitch);
  const sp = Math.sin(pitch);
  // Ry(pitch) * Rx(roll), matching the robot-side decomposition order
  return [
    [cp, sp * sr, sp * cr, 0],
    [0, cr, -sr, 0],
    [-sp, cp * sr, cp * cr, 0],
  ];
}
