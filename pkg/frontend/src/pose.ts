/** 2-D pose reconstruction: base-frame leg geometry from the 12 joint
 * angles, projected to side (x–z) and top (x–y) views for the canvas. */

export const HIP_LATERAL = 0.08; // m, hip roll link
export const THIGH = 0.2; // m
export const CALF = 0.2; // m
export const BODY_HALF_LENGTH = 0.19; // m, matches hip fore/aft offset
export const BODY_HALF_WIDTH = 0.05; // m, hip lateral offset

/** Leg order FL, FR, RL, RR; offsets and roll-axis sign per leg. */
export const HIP_OFFSETS: ReadonlyArray<readonly [number, number, number]> = [
  [BODY_HALF_LENGTH, BODY_HALF_WIDTH, 0],
  [BODY_HALF_LENGTH, -BODY_HALF_WIDTH, 0],
  [-BODY_HALF_LENGTH, BODY_HALF_WIDTH, 0],
  [-BODY_HALF_LENGTH, -BODY_HALF_WIDTH, 0],
];
export const SIDE_SIGNS = [1, -1, 1, -1] as const;

export type Vec3 = [number, number, number];

export interface LegPose {
  hip: Vec3;
  knee: Vec3;
  foot: Vec3;
}

/** Base-frame positions of one leg's hip, knee, and foot. */
export function legPose(leg: number, q1: number, q2: number, q3: number): LegPose {
  if (leg < 0 || leg > 3) throw new Error(`leg index ${leg} out of range`);
  const [hx, hy, hz] = HIP_OFFSETS[leg];
  const l1 = SIDE_SIGNS[leg] * HIP_LATERAL;
  const c1 = Math.cos(q1);
  const s1 = Math.sin(q1);

  const rotate = (xp: number, zp: number): Vec3 => [
    hx + xp,
    hy + c1 * l1 - s1 * zp,
    hz + s1 * l1 + c1 * zp,
  ];

  const kneeX = -THIGH * Math.sin(q2);
  const kneeZ = -THIGH * Math.cos(q2);
  const footX = kneeX - CALF * Math.sin(q2 + q3);
  const footZ = kneeZ - CALF * Math.cos(q2 + q3);
  return {
    hip: rotate(0, 0),
    knee: rotate(kneeX, kneeZ),
    foot: rotate(footX, footZ),
  };
}

export function allLegPoses(q: number[]): LegPose[] {
  if (q.length !== 12) throw new Error("expected 12 joint angles");
  return [0, 1, 2, 3].map((leg) => legPose(leg, q[3 * leg], q[3 * leg + 1], q[3 * leg + 2]));
}

export type JointColor = "normal" | "faulty" | "suspected";

/**
 * Highlight state per joint: ground-truth faults draw red ("faulty"),
 * estimator suspicion above 0.5 draws amber ("suspected") only when the
 * ground truth disagrees — the channels never mix.
 */
export function jointColors(fTrue: number[], fEst: number[]): JointColor[] {
  if (fTrue.length !== 12 || fEst.length !== 12) {
    throw new Error("expected 12-element fault vectors");
  }
  return fTrue.map((truth, i) => {
    if (truth > 0.5) return "faulty";
    if (fEst[i] > 0.5) return "suspected";
    return "normal";
  });
}

export interface Segment2d {
  a: [number, number];
  b: [number, number];
  joint: number; // index of the joint actuating this link
}

/** Side view (x right, z up): thigh and calf links for all legs. */
export function sideSegments(q: number[]): Segment2d[] {
  return segments(q, (p) => [p[0], p[2]]);
}

/** Top view (x right, y up): thigh and calf links for all legs. */
export function topSegments(q: number[]): Segment2d[] {
  return segments(q, (p) => [p[0], p[1]]);
}

function segments(q: number[], proj: (p: Vec3) => [number, number]): Segment2d[] {
  const out: Segment2d[] = [];
  allLegPoses(q).forEach((pose, leg) => {
    out.push({ a: proj(pose.hip), b: proj(pose.knee), joint: 3 * leg + 1 });
    out.push({ a: proj(pose.knee), b: proj(pose.foot), joint: 3 * leg + 2 });
  });
  return out;
}
