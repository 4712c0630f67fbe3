/** Chart data preparation: map rolling buffers to drawable series with
 * fixed axes. Pure functions so the windowing logic is testable. */

import { RollingBuffer } from "./buffers.js";

export interface Series {
  label: string;
  times: number[];
  values: number[];
}

export interface ChartData {
  tMin: number;
  tMax: number;
  yMin: number;
  yMax: number;
  series: Series[];
}

/** Commanded vs actual planar velocity (vx pair and vy pair). */
export function velocityChart(buf: RollingBuffer): ChartData {
  const times = buf.times();
  const tMax = times.length ? times[times.length - 1] : 0;
  return {
    tMin: tMax - buf.windowS,
    tMax,
    yMin: -1.2,
    yMax: 1.2,
    series: [
      { label: "cmd vx", times, values: buf.channel(0) },
      { label: "cmd vy", times, values: buf.channel(1) },
      { label: "act vx", times, values: buf.channel(3) },
      { label: "act vy", times, values: buf.channel(4) },
    ],
  };
}

/** Probability traces per joint with ground-truth step overlays. */
export function faultChart(buf: RollingBuffer, jointNames: readonly string[]): ChartData {
  const times = buf.times();
  const tMax = times.length ? times[times.length - 1] : 0;
  const series: Series[] = [];
  for (let j = 0; j < 12; j++) {
    series.push({ label: `est ${jointNames[j]}`, times, values: buf.channel(j) });
    series.push({ label: `true ${jointNames[j]}`, times, values: buf.channel(12 + j) });
  }
  return { tMin: tMax - buf.windowS, tMax, yMin: 0, yMax: 1, series };
}

export interface RasterData {
  tMin: number;
  tMax: number;
  rows: string[];
  /** For each row, intervals [start, end] where the foot is in contact. */
  intervals: Array<Array<[number, number]>>;
}

/** Foot-contact raster: one row per foot, contiguous contact intervals. */
export function contactRaster(buf: RollingBuffer, footNames: readonly string[]): RasterData {
  const times = buf.times();
  const tMax = times.length ? times[times.length - 1] : 0;
  const intervals: Array<Array<[number, number]>> = [];
  for (let f = 0; f < 4; f++) {
    const flags = buf.channel(f);
    const rows: Array<[number, number]> = [];
    let start: number | null = null;
    for (let i = 0; i < times.length; i++) {
      const on = flags[i] > 0.5;
      if (on && start === null) start = times[i];
      if (!on && start !== null) {
        rows.push([start, times[i]]);
        start = null;
      }
    }
    if (start !== null) rows.push([start, tMax]);
    intervals.push(rows);
  }
  return { tMin: tMax - buf.windowS, tMax, rows: footNames.slice(), intervals };
}
