/** Canvas rendering: thin drawing layer over the pure pose/chart data. */

import { ChartData, RasterData } from "./charts.js";
import { JointColor, Segment2d } from "./pose.js";

const JOINT_COLORS: Record<JointColor, string> = {
  normal: "#4a90d9",
  faulty: "#d64040",
  suspected: "#e0a030",
};

const SERIES_PALETTE = [
  "#4a90d9", "#d64040", "#50b060", "#e0a030",
  "#9060c0", "#808080", "#c050a0", "#40b0b0",
];

export interface Viewport {
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
}

function toPixels(
  ctx: CanvasRenderingContext2D, vp: Viewport, x: number, y: number,
): [number, number] {
  const w = ctx.canvas.width;
  const h = ctx.canvas.height;
  const px = ((x - vp.xMin) / (vp.xMax - vp.xMin)) * w;
  const py = h - ((y - vp.yMin) / (vp.yMax - vp.yMin)) * h;
  return [px, py];
}

export function drawPose(
  ctx: CanvasRenderingContext2D,
  segments: Segment2d[],
  colors: JointColor[],
  vp: Viewport,
  bodyLine: [number, number, number, number],
): void {
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  ctx.lineWidth = 3;
  ctx.strokeStyle = "#333";
  ctx.beginPath();
  const [bx0, by0] = toPixels(ctx, vp, bodyLine[0], bodyLine[1]);
  const [bx1, by1] = toPixels(ctx, vp, bodyLine[2], bodyLine[3]);
  ctx.moveTo(bx0, by0);
  ctx.lineTo(bx1, by1);
  ctx.stroke();
  for (const seg of segments) {
    ctx.strokeStyle = JOINT_COLORS[colors[seg.joint]];
    ctx.beginPath();
    const [ax, ay] = toPixels(ctx, vp, seg.a[0], seg.a[1]);
    const [bx, by] = toPixels(ctx, vp, seg.b[0], seg.b[1]);
    ctx.moveTo(ax, ay);
    ctx.lineTo(bx, by);
    ctx.stroke();
  }
}

export function drawChart(ctx: CanvasRenderingContext2D, data: ChartData): void {
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  const vp: Viewport = {
    xMin: data.tMin, xMax: Math.max(data.tMax, data.tMin + 1e-6),
    yMin: data.yMin, yMax: data.yMax,
  };
  data.series.forEach((s, idx) => {
    if (s.times.length < 2) return;
    ctx.strokeStyle = SERIES_PALETTE[idx % SERIES_PALETTE.length];
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    s.times.forEach((t, i) => {
      const [px, py] = toPixels(ctx, vp, t, s.values[i]);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.stroke();
  });
}

export function drawRaster(ctx: CanvasRenderingContext2D, data: RasterData): void {
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  const h = ctx.canvas.height / data.rows.length;
  const vp: Viewport = {
    xMin: data.tMin, xMax: Math.max(data.tMax, data.tMin + 1e-6),
    yMin: 0, yMax: 1,
  };
  ctx.fillStyle = "#4a90d9";
  data.intervals.forEach((row, r) => {
    for (const [start, end] of row) {
      const [x0] = toPixels(ctx, vp, start, 0);
      const [x1] = toPixels(ctx, vp, end, 0);
      ctx.fillRect(x0, r * h + 2, Math.max(x1 - x0, 1), h - 4);
    }
  });
  ctx.fillStyle = "#333";
  ctx.font = "10px sans-serif";
  data.rows.forEach((name, r) => ctx.fillText(name, 4, r * h + 12));
}
