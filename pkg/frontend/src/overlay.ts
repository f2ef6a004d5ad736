import type { SkeletonView } from "./types.js";

/** Line segment between two keypoints, in image pixel coordinates. */
export interface Segment {
  from: [number, number];
  to: [number, number];
  kind: "spine" | "pair";
}

export interface OverlayGeometry {
  points: { index: number; x: number; y: number }[];
  segments: Segment[];
}

/**
 * Skeleton edges: the longitudinal chain through keypoints 1..9 (1 absent on
 * broken-rostrum skeletons) plus the seven transverse pairs (10,11)..(22,23).
 */
export function skeletonGeometry(skel: SkeletonView): OverlayGeometry {
  const byIndex = new Map<number, [number, number]>();
  const points = [];
  for (const [index, x, y, visible] of skel.keypoints) {
    if (!visible) continue;
    byIndex.set(index, [x, y]);
    points.push({ index, x, y });
  }
  const segments: Segment[] = [];
  for (let i = 1; i < 9; i += 1) {
    const a = byIndex.get(i);
    const b = byIndex.get(i + 1);
    if (a && b) segments.push({ from: a, to: b, kind: "spine" });
  }
  for (let k = 0; k < 7; k += 1) {
    const a = byIndex.get(10 + 2 * k);
    const b = byIndex.get(11 + 2 * k);
    if (a && b) segments.push({ from: a, to: b, kind: "pair" });
  }
  return { points, segments };
}

/** The subset of CanvasRenderingContext2D the overlay needs (test-friendly). */
export interface StrokeContext {
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  fillStyle: string | CanvasGradient | CanvasPattern;
  fillRect(x: number, y: number, w: number, h: number): void;
}

export function drawOverlay(ctx: StrokeContext, skel: SkeletonView, scale = 1): void {
  const geo = skeletonGeometry(skel);
  for (const seg of geo.segments) {
    ctx.strokeStyle = seg.kind === "spine" ? "#ffd166" : "#06d6a0";
    ctx.lineWidth = 1;
    ctx.beginPath();
    ctx.moveTo(seg.from[0] * scale, seg.from[1] * scale);
    ctx.lineTo(seg.to[0] * scale, seg.to[1] * scale);
    ctx.stroke();
  }
  ctx.fillStyle = "#ef476f";
  for (const p of geo.points) {
    ctx.fillRect(p.x * scale - 1, p.y * scale - 1, 3, 3);
  }
}
