import { describe, expect, it } from "vitest";
import { drawOverlay, skeletonGeometry, type StrokeContext } from "../src/overlay.js";
import type { KeypointTuple, SkeletonView } from "../src/types.js";

function skeleton(indices: number[]): SkeletonView {
  const keypoints = indices.map(
    (i): KeypointTuple => [i, 10 * i, 5 * i, true],
  );
  return { view: "lateral", rostrum: indices.includes(1) ? "intact" : "broken", keypoints };
}

const FULL = Array.from({ length: 23 }, (_, i) => i + 1);

describe("skeletonGeometry", () => {
  it("builds 8 spine edges and 7 pair edges for a 23-point skeleton", () => {
    const geo = skeletonGeometry(skeleton(FULL));
    expect(geo.points).toHaveLength(23);
    expect(geo.segments.filter((s) => s.kind === "spine")).toHaveLength(8);
    expect(geo.segments.filter((s) => s.kind === "pair")).toHaveLength(7);
  });

  it("drops the rostrum edge on a 22-point skeleton", () => {
    const geo = skeletonGeometry(skeleton(FULL.filter((i) => i !== 1)));
    expect(geo.segments.filter((s) => s.kind === "spine")).toHaveLength(7);
    expect(geo.segments.filter((s) => s.kind === "pair")).toHaveLength(7);
  });

  it("skips invisible keypoints", () => {
    const skel = skeleton(FULL);
    skel.keypoints[8][3] = false; // keypoint 9: tail tip
    const geo = skeletonGeometry(skel);
    expect(geo.points).toHaveLength(22);
    expect(geo.segments.filter((s) => s.kind === "spine")).toHaveLength(7);
  });
});

describe("drawOverlay", () => {
  it("strokes every segment and marks every point, scaled", () => {
    const calls: string[] = [];
    const ctx: StrokeContext = {
      strokeStyle: "",
      lineWidth: 0,
      fillStyle: "",
      beginPath: () => calls.push("begin"),
      moveTo: (x, y) => calls.push(`move ${x},${y}`),
      lineTo: (x, y) => calls.push(`line ${x},${y}`),
      stroke: () => calls.push("stroke"),
      fillRect: () => calls.push("fill"),
    };
    drawOverlay(ctx, skeleton(FULL), 2);
    expect(calls.filter((c) => c === "stroke")).toHaveLength(15);
    expect(calls.filter((c) => c === "fill")).toHaveLength(23);
    // keypoint 1 sits at (10, 5); scale 2 puts the first move at (20, 10)
    expect(calls).toContain("move 20,10");
  });
});
