// Click-to-select: unproject the screen point, ask the server to pick, and
// for houses fill the panel with the holographic record exactly as it came
// off the wire — the panel never recomputes or reorders server data.

import { CityApi } from './api.js';
import { screenToLonLat, type ViewportState } from './tiles.js';
import type { HouseholdDoc, SceneObjectDoc } from './types.js';

export interface SelectionState {
  selected: string | null;
  object: SceneObjectDoc | null;
  panel: HouseholdDoc | null; // populated iff the selection is a house
}

export const EMPTY_SELECTION: SelectionState = { selected: null, object: null, panel: null };

export async function selectAt(
  api: CityApi,
  view: ViewportState,
  sx: number,
  sy: number,
  t: number
): Promise<SelectionState> {
  const p = screenToLonLat(view, sx, sy);
  const pick = await api.pick(p.lon, p.lat, Math.floor(view.zoom), view.mode, t);
  if (pick.object === null) return EMPTY_SELECTION;
  const selected = pick.object.id;
  if (!selected.startsWith('house:')) {
    return { selected, object: pick.object, panel: null };
  }
  const panel = await api.holographic(selected, t);
  return { selected, object: pick.object, panel };
}

// Panel rows in display order; values are the wire values, stringified only
// for text rendering (no rounding, no reformatting of server numbers).
export function panelRows(panel: HouseholdDoc): [string, string][] {
  const rows: [string, string][] = [['house', panel.house.entity]];
  for (const [key, value] of Object.entries(panel.house.attributes)) {
    rows.push([`house.${key}`, String(value)]);
  }
  if (panel.building) rows.push(['building', panel.building.entity]);
  if (panel.owner) {
    rows.push(['owner', panel.owner.entity]);
    for (const [key, value] of Object.entries(panel.owner.attributes)) {
      rows.push([`owner.${key}`, String(value)]);
    }
  }
  if (panel.admin_path) {
    for (const [level, region] of Object.entries(panel.admin_path)) {
      rows.push([`address.${level}`, region]);
    }
  }
  for (const resident of panel.residents) {
    rows.push(['resident', resident.entity]);
  }
  for (const event of panel.open_events) {
    rows.push(['open event', event.entity]);
  }
  return rows;
}
