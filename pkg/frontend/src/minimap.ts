// Hawk-eye minimap math: the whole city box maps onto a fixed screen rect,
// and the main viewport appears as a rectangle whose center tracks the
// viewport center exactly. The minimap shares the main view's Mercator
// projection — with a linear latitude the viewport rectangle's midpoint
// would drift off the projected center.

import { viewportBBox, type ViewportState } from './tiles.js';
import type { BBox, LonLat } from './types.js';

export interface Rect {
  x: number;
  y: number;
  width: number;
  height: number;
}

function mercY(lat: number): number {
  const rad = (lat * Math.PI) / 180;
  return Math.log(Math.tan(rad) + 1 / Math.cos(rad));
}

export function projectToMinimap(p: LonLat, cityBox: BBox, inner: Rect): { x: number; y: number } {
  const spanLon = cityBox.maxLon - cityBox.minLon;
  const spanMerc = mercY(cityBox.maxLat) - mercY(cityBox.minLat);
  const nx = spanLon > 0 ? (p.lon - cityBox.minLon) / spanLon : 0;
  const ny = spanMerc > 0 ? (mercY(cityBox.maxLat) - mercY(p.lat)) / spanMerc : 0; // screen y grows downward
  return { x: inner.x + nx * inner.width, y: inner.y + ny * inner.height };
}

export function viewportRect(view: ViewportState, cityBox: BBox, inner: Rect): Rect {
  const box = viewportBBox(view);
  const topLeft = projectToMinimap({ lon: box.minLon, lat: box.maxLat }, cityBox, inner);
  const bottomRight = projectToMinimap({ lon: box.maxLon, lat: box.minLat }, cityBox, inner);
  return {
    x: topLeft.x,
    y: topLeft.y,
    width: Math.max(2, bottomRight.x - topLeft.x),
    height: Math.max(2, bottomRight.y - topLeft.y),
  };
}

export function minimapToLonLat(sx: number, sy: number, cityBox: BBox, inner: Rect): LonLat {
  const nx = (sx - inner.x) / inner.width;
  const ny = (sy - inner.y) / inner.height;
  const merc = mercY(cityBox.maxLat) - ny * (mercY(cityBox.maxLat) - mercY(cityBox.minLat));
  return {
    lon: cityBox.minLon + nx * (cityBox.maxLon - cityBox.minLon),
    lat: (Math.atan(Math.sinh(merc)) * 180) / Math.PI,
  };
}
