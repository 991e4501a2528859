// Wire documents exactly as the server sends them. The client never
// recomputes statistics or reshapes these: what arrives is what renders.

export type EntityRef = string; // "kind:local", e.g. "house:h17"

export type Band = 'above' | 'below';

export type CongestionLevel = 'smooth' | 'slow' | 'congested' | 'unknown';

export type RouteStatus = 'not_departed' | 'en_route' | 'arrived';

export interface GeometryDoc {
  type: 'footprint' | 'polyline' | 'point';
  coordinates: [number, number][];
  alt: number;
}

export interface SceneObjectDoc {
  id: EntityRef;
  layer: string;
  lod: number;
  height_m: number | null;
  band: Band;
  geometry: GeometryDoc;
}

export function kindOf(id: EntityRef): string {
  const sep = id.indexOf(':');
  return sep < 0 ? id : id.slice(0, sep);
}

export interface TileManifestDoc {
  tile: { z: number; x: number; y: number };
  generated_at: number;
  objects: SceneObjectDoc[];
}

export interface LayerNodeDoc {
  layer_id: string;
  name: string;
  visible: boolean;
  children: LayerNodeDoc[];
}

export interface StateDoc {
  entity: EntityRef;
  version: number;
  valid_from: number;
  valid_to: number | null;
  attributes: Record<string, unknown>;
}

export interface HouseholdDoc {
  at: number;
  house: StateDoc;
  building: StateDoc | null;
  owner: StateDoc | null;
  residents: StateDoc[];
  admin_path: Record<string, EntityRef> | null;
  open_events: StateDoc[];
}

export interface PickDoc {
  object: SceneObjectDoc | null;
}

export interface CompositionCategoryDoc {
  label: string;
  count: number;
  fraction: number;
}

export interface CompositionDoc {
  attribute: string;
  total: number;
  categories: CompositionCategoryDoc[];
}

export interface NormalFitDoc {
  mean: number;
  stddev: number;
  degenerate: boolean;
}

export interface HistogramDoc {
  counts: number[];
  edges: number[];
  total: number;
  fit: NormalFitDoc | null;
}

export interface HeatmapDoc {
  rows: number;
  cols: number;
  cell: number;
  origin: { lon: number; lat: number };
  values: number[];
}

export interface TrafficFrameDoc {
  t: number;
  levels: Record<EntityRef, CongestionLevel>;
}

export interface TrafficHistoryDoc {
  frames: TrafficFrameDoc[];
}

export interface ArealFrameDoc {
  cell: number;
  rows: number;
  cols: number;
  levels: CongestionLevel[];
}

export interface SubwayPositionDoc {
  line: EntityRef;
  t: number;
  status: RouteStatus;
  position: { lon: number; lat: number; alt: number };
}

export interface PowerConnectedDoc {
  node: EntityRef;
  connected: EntityRef[];
}

export interface HealthDoc {
  status: string;
  events: number;
  base_time: number;
  head_time: number;
  kernels: string;
  bbox: [number, number, number, number] | null;
}

export interface LonLat {
  lon: number;
  lat: number;
}

export interface BBox {
  minLon: number;
  minLat: number;
  maxLon: number;
  maxLat: number;
}
