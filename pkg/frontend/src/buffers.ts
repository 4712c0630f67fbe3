/** Time-windowed sample buffers feeding the live charts. */

export const WINDOW_S = 10.0;

export interface Sample {
  t: number;
  values: number[];
}

/**
 * Rolling buffer keeping the last `windowS` seconds of fixed-width samples.
 * Samples must arrive with non-decreasing timestamps; an earlier timestamp
 * signals a server reset and clears the buffer first.
 */
export class RollingBuffer {
  readonly width: number;
  readonly windowS: number;
  private samples: Sample[] = [];

  constructor(width: number, windowS: number = WINDOW_S) {
    if (width < 1) throw new Error("width must be >= 1");
    if (windowS <= 0) throw new Error("window must be positive");
    this.width = width;
    this.windowS = windowS;
  }

  push(t: number, values: number[]): void {
    if (values.length !== this.width) {
      throw new Error(`expected ${this.width} values, got ${values.length}`);
    }
    const last = this.samples[this.samples.length - 1];
    if (last && t < last.t) this.samples = []; // stream restarted
    this.samples.push({ t, values: values.slice() });
    const cutoff = t - this.windowS;
    let drop = 0;
    while (drop < this.samples.length && this.samples[drop].t < cutoff) drop++;
    if (drop > 0) this.samples = this.samples.slice(drop);
  }

  get length(): number {
    return this.samples.length;
  }

  get latest(): Sample | undefined {
    return this.samples[this.samples.length - 1];
  }

  /** Span of buffered time in seconds (0 when fewer than two samples). */
  get span(): number {
    if (this.samples.length < 2) return 0;
    return this.samples[this.samples.length - 1].t - this.samples[0].t;
  }

  times(): number[] {
    return this.samples.map((s) => s.t);
  }

  /** One channel as a flat series, aligned with times(). */
  channel(i: number): number[] {
    if (i < 0 || i >= this.width) throw new Error(`channel ${i} out of range`);
    return this.samples.map((s) => s.values[i]);
  }

  clear(): void {
    this.samples = [];
  }
}
