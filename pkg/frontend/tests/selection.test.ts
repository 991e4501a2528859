// Click-to-select against stubbed wire responses captured from a live
// server: picking a house fills the panel with the holographic record
// byte-for-byte, picking anything else leaves the panel empty.

import { describe, expect, it } from 'vitest';

import { CityApi, type FetchLike } from '../src/api';
import { EMPTY_SELECTION, panelRows, selectAt } from '../src/selection';
import { screenToLonLat, type ViewportState } from '../src/tiles';
import type { HouseholdDoc, PickDoc, SceneObjectDoc } from '../src/types';
import holographicDoc from './fixtures/holographic_h1.json';
import pickDoc from './fixtures/pick_house.json';
import tileDoc from './fixtures/tile.json';

const PICK = pickDoc as PickDoc;
const HOLOGRAPHIC = holographicDoc as unknown as HouseholdDoc;
const HOUSE = PICK.object as SceneObjectDoc;

function jsonResponse(doc: unknown, status = 200): Response {
  return new Response(JSON.stringify(doc), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

// Routes keyed by decoded pathname; every request is logged for assertions.
function stubFetch(routes: Record<string, unknown>, log: URL[]): FetchLike {
  return async (url) => {
    const parsed = new URL(url, 'http://stub');
    log.push(parsed);
    const doc = routes[decodeURIComponent(parsed.pathname)];
    if (doc === undefined) return jsonResponse({ error: 'NotFound', detail: parsed.pathname }, 404);
    return jsonResponse(doc);
  };
}

function houseView(): ViewportState {
  const [lon, lat] = HOUSE.geometry.coordinates[0];
  return { center: { lon, lat }, zoom: 17.4, widthPx: 800, heightPx: 600, mode: 'above' };
}

describe('selecting a house', () => {
  it('shows the holographic record exactly as the server sent it', async () => {
    const log: URL[] = [];
    const api = new CityApi('', stubFetch({ '/pick': PICK, '/entities/house:h1/holographic': HOLOGRAPHIC }, log));
    const view = houseView();
    const t = 1602592000000;

    const selection = await selectAt(api, view, view.widthPx / 2, view.heightPx / 2, t);

    expect(selection.selected).toBe('house:h1');
    expect(selection.object).toEqual(HOUSE);
    // Pass-through, not reconstruction: the panel is the wire document.
    expect(selection.panel).toEqual(HOLOGRAPHIC);
    expect(JSON.stringify(selection.panel)).toBe(JSON.stringify(HOLOGRAPHIC));

    // The pick carried the unprojected click point, the floored zoom, the
    // viewport mode, and the timeline t.
    const pick = log.find((u) => u.pathname === '/pick')!;
    const unprojected = screenToLonLat(view, view.widthPx / 2, view.heightPx / 2);
    expect(Number(pick.searchParams.get('lon'))).toBeCloseTo(unprojected.lon, 9);
    expect(Number(pick.searchParams.get('lat'))).toBeCloseTo(unprojected.lat, 9);
    expect(pick.searchParams.get('z')).toBe('17');
    expect(pick.searchParams.get('mode')).toBe('above');
    expect(pick.searchParams.get('at')).toBe(String(t));

    // The holographic request was pinned to the same t.
    const holo = log.find((u) => u.pathname.endsWith('/holographic'))!;
    expect(holo.searchParams.get('at')).toBe(String(t));
  });

  it('lists owner, address, and residents rows verbatim', () => {
    const rows = panelRows(HOLOGRAPHIC);
    const byKey = new Map(rows.map(([k, v]) => [k, v]));
    expect(byKey.get('house')).toBe(HOLOGRAPHIC.house.entity);
    expect(byKey.get('owner')).toBe(HOLOGRAPHIC.owner!.entity);
    expect(byKey.get('address.district')).toBe(HOLOGRAPHIC.admin_path!.district);
    expect(byKey.get('address.grid_cell')).toBe(HOLOGRAPHIC.admin_path!.grid_cell);
    const residents = rows.filter(([k]) => k === 'resident').map(([, v]) => v);
    expect(residents).toEqual(HOLOGRAPHIC.residents.map((r) => r.entity));
  });
});

describe('selecting anything else', () => {
  it('keeps the panel closed for a building', async () => {
    const building = (tileDoc as { objects: SceneObjectDoc[] }).objects.find((o) =>
      o.id.startsWith('building:')
    )!;
    const log: URL[] = [];
    const api = new CityApi('', stubFetch({ '/pick': { object: building } }, log));

    const selection = await selectAt(api, houseView(), 10, 10, 0);

    expect(selection.selected).toBe(building.id);
    expect(selection.panel).toBeNull();
    // No holographic fetch happened for a non-house.
    expect(log).toHaveLength(1);
  });

  it('clears the selection on a miss', async () => {
    const api = new CityApi('', stubFetch({ '/pick': { object: null } }, []));
    const selection = await selectAt(api, houseView(), 0, 0, 0);
    expect(selection).toEqual(EMPTY_SELECTION);
  });
});
