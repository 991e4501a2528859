// Chart geometry as pure data: each builder maps a server document onto
// drawable primitives in a unit square (x and y in [0, 1], y up). The
// canvas code only scales and strokes. Fractions, counts, and fit
// parameters come from the server verbatim — nothing is re-aggregated here.

import type { CompositionDoc, HistogramDoc } from './types.js';

export type ChartKind = 'pie' | 'line' | 'area' | 'scatter' | 'bubble' | 'radar' | 'histogram';

export interface PieSector {
  label: string;
  fraction: number;
  startAngle: number; // radians from 12 o'clock, clockwise
  endAngle: number;
}

export function pieSectors(doc: CompositionDoc): PieSector[] {
  const sectors: PieSector[] = [];
  let angle = 0;
  for (const category of doc.categories) {
    const sweep = category.fraction * 2 * Math.PI;
    sectors.push({
      label: category.label,
      fraction: category.fraction,
      startAngle: angle,
      endAngle: angle + sweep,
    });
    angle += sweep;
  }
  return sectors;
}

export interface Bar {
  x0: number;
  x1: number;
  height: number; // unit-square height
  count: number;
}

export function histogramBars(doc: HistogramDoc): Bar[] {
  const peak = Math.max(1, ...doc.counts);
  const span = doc.edges[doc.edges.length - 1] - doc.edges[0];
  return doc.counts.map((count, i) => ({
    x0: (doc.edges[i] - doc.edges[0]) / span,
    x1: (doc.edges[i + 1] - doc.edges[0]) / span,
    height: count / peak,
    count,
  }));
}

// The fitted normal curve over the histogram, scaled so the pdf and the
// bars share a y-axis (pdf × n × bin-width, normalized by the tallest
// bar). Returns null when there is no fit or the fit is degenerate — the
// caller shows the degenerate notice instead of a curve.
export function normalOverlay(doc: HistogramDoc, samples = 64): { x: number; y: number }[] | null {
  if (!doc.fit || doc.fit.degenerate || doc.counts.length === 0) return null;
  const { mean, stddev } = doc.fit;
  const lo = doc.edges[0];
  const hi = doc.edges[doc.edges.length - 1];
  const span = hi - lo;
  const binWidth = span / doc.counts.length;
  const peak = Math.max(1, ...doc.counts);
  const points: { x: number; y: number }[] = [];
  for (let i = 0; i <= samples; i++) {
    const value = lo + (span * i) / samples;
    const zscore = (value - mean) / stddev;
    const pdf = Math.exp(-0.5 * zscore * zscore) / (stddev * Math.sqrt(2 * Math.PI));
    points.push({ x: (value - lo) / span, y: (pdf * doc.total * binWidth) / peak });
  }
  return points;
}

export interface SeriesPoint {
  x: number;
  y: number;
  r?: number; // bubble radius, unit-square
  label?: string;
}

// line / area / scatter / bubble share one mapping: categories in order on
// x, counts normalized on y, bubble radius from the fraction.
export function seriesPoints(doc: CompositionDoc, kind: ChartKind): SeriesPoint[] {
  const n = doc.categories.length;
  if (n === 0) return [];
  const peak = Math.max(1, ...doc.categories.map((c) => c.count));
  return doc.categories.map((category, i) => ({
    x: n === 1 ? 0.5 : i / (n - 1),
    y: category.count / peak,
    r: kind === 'bubble' ? Math.sqrt(category.fraction) * 0.12 : undefined,
    label: category.label,
  }));
}

export interface RadarVertex {
  x: number;
  y: number;
  label: string;
}

// Radar: one spoke per category around the unit-square center, radius
// proportional to the category's share of the largest count.
export function radarVertices(doc: CompositionDoc): RadarVertex[] {
  const n = doc.categories.length;
  if (n === 0) return [];
  const peak = Math.max(1, ...doc.categories.map((c) => c.count));
  return doc.categories.map((category, i) => {
    const angle = (2 * Math.PI * i) / n - Math.PI / 2;
    const radius = (category.count / peak) * 0.5;
    return {
      x: 0.5 + radius * Math.cos(angle),
      y: 0.5 + radius * Math.sin(angle),
      label: category.label,
    };
  });
}
