// Hawk-eye minimap: the viewport rectangle's center must track the main
// viewport's center exactly, and clicks invert back to coordinates.

import { describe, expect, it } from 'vitest';

import { minimapToLonLat, projectToMinimap, viewportRect, type Rect } from '../src/minimap';
import type { ViewportState } from '../src/tiles';
import type { BBox } from '../src/types';

const CITY: BBox = { minLon: 113.9, minLat: 22.45, maxLon: 114.3, maxLat: 22.75 };
const INNER: Rect = { x: 6, y: 6, width: 168, height: 128 };

function view(lon: number, lat: number, zoom: number): ViewportState {
  return { center: { lon, lat }, zoom, widthPx: 1200, heightPx: 800, mode: 'above' };
}

describe('viewport rectangle', () => {
  it('is centered on the projected viewport center', () => {
    for (const v of [view(114.05, 22.55, 13.2), view(114.2, 22.7, 15), view(113.95, 22.5, 11.8)]) {
      const rect = viewportRect(v, CITY, INNER);
      const center = projectToMinimap(v.center, CITY, INNER);
      expect(rect.x + rect.width / 2).toBeCloseTo(center.x, 6);
      expect(rect.y + rect.height / 2).toBeCloseTo(center.y, 6);
    }
  });

  it('shrinks as the viewport zooms in but never vanishes', () => {
    const wide = viewportRect(view(114.1, 22.6, 12), CITY, INNER);
    const tight = viewportRect(view(114.1, 22.6, 18), CITY, INNER);
    expect(tight.width).toBeLessThan(wide.width);
    expect(tight.width).toBeGreaterThanOrEqual(2);
    expect(tight.height).toBeGreaterThanOrEqual(2);
  });
});

describe('minimap projection', () => {
  it('maps the city corners onto the inner rect corners', () => {
    const nw = projectToMinimap({ lon: CITY.minLon, lat: CITY.maxLat }, CITY, INNER);
    expect(nw.x).toBeCloseTo(INNER.x, 9);
    expect(nw.y).toBeCloseTo(INNER.y, 9);
    const se = projectToMinimap({ lon: CITY.maxLon, lat: CITY.minLat }, CITY, INNER);
    expect(se.x).toBeCloseTo(INNER.x + INNER.width, 9);
    expect(se.y).toBeCloseTo(INNER.y + INNER.height, 9);
  });

  it('round-trips clicks back to coordinates', () => {
    const p = { lon: 114.123, lat: 22.567 };
    const screen = projectToMinimap(p, CITY, INNER);
    const back = minimapToLonLat(screen.x, screen.y, CITY, INNER);
    expect(back.lon).toBeCloseTo(p.lon, 9);
    expect(back.lat).toBeCloseTo(p.lat, 9);
  });

  it('puts north at the top: higher latitude means smaller screen y', () => {
    const north = projectToMinimap({ lon: 114.1, lat: 22.7 }, CITY, INNER);
    const south = projectToMinimap({ lon: 114.1, lat: 22.5 }, CITY, INNER);
    expect(north.y).toBeLessThan(south.y);
  });
});
