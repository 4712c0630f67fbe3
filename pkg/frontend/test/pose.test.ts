import { describe, expect, it } from "vitest";

import {
  BODY_HALF_LENGTH,
  BODY_HALF_WIDTH,
  CALF,
  HIP_LATERAL,
  THIGH,
  allLegPoses,
  jointColors,
  legPose,
  sideSegments,
  topSegments,
} from "../src/pose.js";

const DEFAULT_Q = [0, 0.8, -1.5, 0, 0.8, -1.5, 0, 0.8, -1.5, 0, 0.8, -1.5];

describe("legPose", () => {
  it("straight leg hangs one link-length below the hip", () => {
    const pose = legPose(0, 0, 0, 0);
    expect(pose.hip[0]).toBeCloseTo(BODY_HALF_LENGTH, 12);
    expect(pose.knee[2]).toBeCloseTo(-THIGH, 12);
    expect(pose.foot[2]).toBeCloseTo(-(THIGH + CALF), 12);
    expect(pose.foot[0]).toBeCloseTo(BODY_HALF_LENGTH, 12);
    // zero hip roll keeps the lateral link fully sideways
    expect(pose.foot[1]).toBeCloseTo(BODY_HALF_WIDTH + HIP_LATERAL, 12);
  });

  it("left and right legs mirror in y at the default pose", () => {
    const poses = allLegPoses(DEFAULT_Q);
    expect(poses[0].foot[1]).toBeCloseTo(-poses[1].foot[1], 12);
    expect(poses[2].foot[1]).toBeCloseTo(-poses[3].foot[1], 12);
    expect(poses[0].foot[2]).toBeCloseTo(poses[1].foot[2], 12);
  });

  it("link lengths are preserved for arbitrary angles", () => {
    const pose = legPose(2, 0.3, 1.1, -2.0);
    const d = (a: number[], b: number[]) =>
      Math.hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
    expect(d(pose.knee, pose.foot)).toBeCloseTo(CALF, 12);
    // the lateral link is folded into the hip point, so hip->knee is the thigh
    expect(d(pose.hip, pose.knee)).toBeCloseTo(THIGH, 12);
  });

  it("rejects bad indices and widths", () => {
    expect(() => legPose(4, 0, 0, 0)).toThrowError(/leg index/);
    expect(() => allLegPoses([1, 2, 3])).toThrowError(/12 joint angles/);
  });
});

describe("jointColors", () => {
  it("draws ground-truth faults red regardless of the estimate", () => {
    const fTrue = new Array(12).fill(0);
    const fEst = new Array(12).fill(0);
    fTrue[5] = 1;
    fEst[5] = 0.1;
    expect(jointColors(fTrue, fEst)[5]).toBe("faulty");
  });

  it("draws suspected-only joints amber, never mixing channels", () => {
    const fTrue = new Array(12).fill(0);
    const fEst = new Array(12).fill(0);
    fEst[5] = 0.9;
    const colors = jointColors(fTrue, fEst);
    expect(colors[5]).toBe("suspected");
    expect(colors.filter((c) => c !== "normal")).toHaveLength(1);
  });
});

describe("projections", () => {
  it("produces two links per leg in both views", () => {
    expect(sideSegments(DEFAULT_Q)).toHaveLength(8);
    expect(topSegments(DEFAULT_Q)).toHaveLength(8);
  });

  it("tags segments with the actuating joint index", () => {
    const segs = sideSegments(DEFAULT_Q);
    expect(segs.map((s) => s.joint)).toEqual([1, 2, 4, 5, 7, 8, 10, 11]);
  });

  it("side view drops y: mirrored legs coincide at the default pose", () => {
    const segs = sideSegments(DEFAULT_Q);
    expect(segs[0].b[0]).toBeCloseTo(segs[2].b[0], 12);
    expect(segs[0].b[1]).toBeCloseTo(segs[2].b[1], 12);
  });
});
