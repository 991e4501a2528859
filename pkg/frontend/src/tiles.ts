// Slippy-map tile addressing and the Web-Mercator screen projection, the
// client-side mirror of the server's tile grid. World pixels use the usual
// 256px tile convention.

import type { BBox, LonLat } from './types.js';

export const TILE_PX = 256;
export const MAX_ZOOM = 22;
export const MERCATOR_LAT_LIMIT = 85.0511;

export interface TileKey {
  z: number;
  x: number;
  y: number;
}

export interface ViewportState {
  center: LonLat;
  zoom: number; // fractional; floored for tile requests
  widthPx: number;
  heightPx: number;
  mode: 'above' | 'below';
}

export function tileKeyOf(lon: number, lat: number, z: number): TileKey {
  const n = 1 << z;
  const x = Math.min(n - 1, Math.max(0, Math.floor(((lon + 180) / 360) * n)));
  const latRad = (lat * Math.PI) / 180;
  const merc = Math.log(Math.tan(latRad) + 1 / Math.cos(latRad));
  const y = Math.min(n - 1, Math.max(0, Math.floor(((1 - merc / Math.PI) / 2) * n)));
  return { z, x, y };
}

export function tileBBox(key: TileKey): BBox {
  const n = 1 << key.z;
  const edgeLon = (x: number) => (x / n) * 360 - 180;
  const edgeLat = (y: number) => (Math.atan(Math.sinh(Math.PI * (1 - (2 * y) / n))) * 180) / Math.PI;
  return {
    minLon: edgeLon(key.x),
    minLat: edgeLat(key.y + 1),
    maxLon: edgeLon(key.x + 1),
    maxLat: edgeLat(key.y),
  };
}

export function tileId(key: TileKey): string {
  return `${key.z}/${key.x}/${key.y}`;
}

// World-pixel projection at a (fractional) zoom.
export function lonLatToWorldPx(p: LonLat, zoom: number): { x: number; y: number } {
  const scale = TILE_PX * Math.pow(2, zoom);
  const latRad = (p.lat * Math.PI) / 180;
  const merc = Math.log(Math.tan(latRad) + 1 / Math.cos(latRad));
  return {
    x: ((p.lon + 180) / 360) * scale,
    y: ((1 - merc / Math.PI) / 2) * scale,
  };
}

export function worldPxToLonLat(x: number, y: number, zoom: number): LonLat {
  const scale = TILE_PX * Math.pow(2, zoom);
  const lon = (x / scale) * 360 - 180;
  const merc = Math.PI * (1 - (2 * y) / scale);
  const lat = (Math.atan(Math.sinh(merc)) * 180) / Math.PI;
  return { lon, lat };
}

export function screenToLonLat(view: ViewportState, sx: number, sy: number): LonLat {
  const center = lonLatToWorldPx(view.center, view.zoom);
  return worldPxToLonLat(center.x + sx - view.widthPx / 2, center.y + sy - view.heightPx / 2, view.zoom);
}

export function lonLatToScreen(view: ViewportState, p: LonLat): { x: number; y: number } {
  const center = lonLatToWorldPx(view.center, view.zoom);
  const world = lonLatToWorldPx(p, view.zoom);
  return { x: world.x - center.x + view.widthPx / 2, y: world.y - center.y + view.heightPx / 2 };
}

export function viewportBBox(view: ViewportState): BBox {
  const nw = screenToLonLat(view, 0, 0);
  const se = screenToLonLat(view, view.widthPx, view.heightPx);
  return {
    minLon: nw.lon,
    minLat: Math.max(-MERCATOR_LAT_LIMIT, se.lat),
    maxLon: se.lon,
    maxLat: Math.min(MERCATOR_LAT_LIMIT, nw.lat),
  };
}

// Every tile at floor(zoom) that intersects the viewport, row-major.
export function tileCover(view: ViewportState): TileKey[] {
  const z = Math.max(0, Math.min(MAX_ZOOM, Math.floor(view.zoom)));
  const box = viewportBBox(view);
  const nw = tileKeyOf(box.minLon, box.maxLat, z);
  const se = tileKeyOf(box.maxLon, box.minLat, z);
  const keys: TileKey[] = [];
  for (let y = nw.y; y <= se.y; y++) {
    for (let x = nw.x; x <= se.x; x++) {
      keys.push({ z, x, y });
    }
  }
  return keys;
}
