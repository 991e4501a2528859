// The time slider's model: t is clamped to the dataset extent, playback
// advances t by wall-clock deltas times a speed multiplier, and traffic
// frames/colors are looked up per t.

import type { CongestionLevel, TrafficFrameDoc } from './types.js';

export interface TimelineState {
  t: number;
  playing: boolean;
  speed: number;
}

export interface TimeExtent {
  min: number;
  max: number;
}

export function clampT(t: number, extent: TimeExtent): number {
  return Math.min(extent.max, Math.max(extent.min, t));
}

export function scrub(state: TimelineState, t: number, extent: TimeExtent): TimelineState {
  return { ...state, t: clampT(t, extent) };
}

export function tick(state: TimelineState, wallDeltaMs: number, extent: TimeExtent): TimelineState {
  if (!state.playing) return state;
  const t = clampT(state.t + wallDeltaMs * state.speed, extent);
  return { ...state, t, playing: t < extent.max };
}

// The frame governing time t: the latest frame at or before t, or the first
// frame when t precedes them all (the replay starts there anyway).
export function frameAt(frames: TrafficFrameDoc[], t: number): TrafficFrameDoc | null {
  if (frames.length === 0) return null;
  let current = frames[0];
  for (const frame of frames) {
    if (frame.t > t) break;
    current = frame;
  }
  return current;
}

export const LEVEL_COLORS: Record<CongestionLevel, string> = {
  smooth: '#2e9e4f',
  slow: '#e0a800',
  congested: '#d23c2e',
  unknown: '#8a8a8a',
};

export function trafficColor(level: CongestionLevel): string {
  return LEVEL_COLORS[level] ?? LEVEL_COLORS.unknown;
}

export function segmentColorAt(frames: TrafficFrameDoc[], segment: string, t: number): string {
  const frame = frameAt(frames, t);
  return trafficColor(frame?.levels[segment] ?? 'unknown');
}
