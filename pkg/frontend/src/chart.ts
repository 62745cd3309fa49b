/** SVG geometry for the plan/corridor/actual chart (pure string builders). */

import type { CurvesPayload } from "./types.js";

export interface ChartLayout {
  width: number;
  height: number;
  padLeft: number;
  padRight: number;
  padTop: number;
  padBottom: number;
}

export const DEFAULT_LAYOUT: ChartLayout = {
  width: 640,
  height: 320,
  padLeft: 54,
  padRight: 14,
  padTop: 12,
  padBottom: 28,
};

export interface Scales {
  x: (t: number) => number;
  y: (v: number) => number;
  yMin: number;
  yMax: number;
}

function round2(value: number): number {
  return Math.round(value * 100) / 100;
}

/** Scales covering the corridor and every actual point (progress is always [0,1]). */
export function makeScales(curves: CurvesPayload, layout: ChartLayout = DEFAULT_LAYOUT): Scales {
  const values = [
    ...curves.corridor_low,
    ...curves.corridor_high,
    ...curves.plan,
    ...curves.actuals.map((a) => a.value),
  ];
  let yMin = Math.min(...values);
  let yMax = Math.max(...values);
  if (yMin === yMax) {
    yMin -= 1;
    yMax += 1;
  }
  const innerWidth = layout.width - layout.padLeft - layout.padRight;
  const innerHeight = layout.height - layout.padTop - layout.padBottom;
  return {
    x: (t) => round2(layout.padLeft + t * innerWidth),
    y: (v) => round2(layout.padTop + (yMax - v) / (yMax - yMin) * innerHeight),
    yMin,
    yMax,
  };
}

export function linePath(ts: number[], values: number[], scales: Scales): string {
  const parts: string[] = [];
  for (let i = 0; i < ts.length; i++) {
    const command = i === 0 ? "M" : "L";
    parts.push(`${command}${scales.x(ts[i]!)},${scales.y(values[i]!)}`);
  }
  return parts.join(" ");
}

/** Closed band between the low and high corridor curves. */
export function bandPath(ts: number[], lows: number[], highs: number[], scales: Scales): string {
  if (ts.length === 0) return "";
  const upper = linePath(ts, highs, scales);
  const lowerParts: string[] = [];
  for (let i = ts.length - 1; i >= 0; i--) {
    lowerParts.push(`L${scales.x(ts[i]!)},${scales.y(lows[i]!)}`);
  }
  return `${upper} ${lowerParts.join(" ")} Z`;
}

export interface AxisTick {
  position: number;
  label: string;
}

/** Evenly spaced y-axis ticks labeled compactly (display formatting only). */
export function yTicks(scales: Scales, count = 5): AxisTick[] {
  const ticks: AxisTick[] = [];
  for (let i = 0; i < count; i++) {
    const value = scales.yMin + ((scales.yMax - scales.yMin) * i) / (count - 1);
    ticks.push({ position: scales.y(value), label: formatTick(value) });
  }
  return ticks;
}

export function formatTick(value: number): string {
  if (value === 0) return "0";
  const magnitude = Math.abs(value);
  if (magnitude >= 1000) return value.toFixed(0);
  if (magnitude >= 1) return String(Math.round(value * 100) / 100);
  return value.toPrecision(3);
}
