// Thin typed client over the HTTP API. Every method is one endpoint; the
// fetch implementation is injectable so tests can stub the wire, and every
// call takes an optional AbortSignal so overlays can cancel stale requests.

import type {
  ArealFrameDoc,
  BBox,
  CompositionDoc,
  HealthDoc,
  HeatmapDoc,
  HistogramDoc,
  HouseholdDoc,
  LayerNodeDoc,
  PickDoc,
  PowerConnectedDoc,
  StateDoc,
  SubwayPositionDoc,
  TileManifestDoc,
  TrafficFrameDoc,
  TrafficHistoryDoc,
} from './types.js';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly errorName: string,
    detail: string
  ) {
    super(`${errorName}: ${detail}`);
  }
}

function query(params: Record<string, string | number | undefined>): string {
  const search = new URLSearchParams();
  for (const [key, value] of Object.entries(params)) {
    if (value !== undefined) search.set(key, String(value));
  }
  const encoded = search.toString();
  return encoded ? `?${encoded}` : '';
}

export class CityApi {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init)
  ) {}

  private async get<T>(
    path: string,
    params: Record<string, string | number | undefined> = {},
    signal?: AbortSignal
  ): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path + query(params), { signal });
    return this.decode<T>(response);
  }

  private async post<T>(path: string, body: unknown, signal?: AbortSignal): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
      signal,
    });
    return this.decode<T>(response);
  }

  private async decode<T>(response: Response): Promise<T> {
    const doc = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, doc?.error ?? 'HTTPError', doc?.detail ?? response.statusText);
    }
    return doc as T;
  }

  health(signal?: AbortSignal): Promise<HealthDoc> {
    return this.get('/healthz', {}, signal);
  }

  layers(signal?: AbortSignal): Promise<LayerNodeDoc> {
    return this.get('/layers', {}, signal);
  }

  tile(z: number, x: number, y: number, at?: number, signal?: AbortSignal): Promise<TileManifestDoc> {
    return this.get(`/tiles/${z}/${x}/${y}`, { at }, signal);
  }

  entity(id: string, at?: number, signal?: AbortSignal): Promise<StateDoc> {
    return this.get(`/entities/${encodeURIComponent(id)}`, { at }, signal);
  }

  holographic(id: string, at?: number, signal?: AbortSignal): Promise<HouseholdDoc> {
    return this.get(`/entities/${encodeURIComponent(id)}/holographic`, { at }, signal);
  }

  pick(
    lon: number,
    lat: number,
    z: number,
    mode: 'above' | 'below',
    at?: number,
    signal?: AbortSignal
  ): Promise<PickDoc> {
    return this.get('/pick', { lon, lat, z, mode, at }, signal);
  }

  composition(region: string, kind: string, attr: string, at?: number, signal?: AbortSignal): Promise<CompositionDoc> {
    return this.get('/stats/composition', { region, kind, attr, at }, signal);
  }

  histogram(
    region: string,
    kind: string,
    attr: string,
    min: number,
    max: number,
    bins: number,
    at?: number,
    signal?: AbortSignal
  ): Promise<HistogramDoc> {
    return this.get('/stats/histogram', { region, kind, attr, min, max, bins, at }, signal);
  }

  heatmap(box: BBox, cell: number, sigma: number, kind = 'person', at?: number, signal?: AbortSignal): Promise<HeatmapDoc> {
    const bbox = `${box.minLon},${box.minLat},${box.maxLon},${box.maxLat}`;
    return this.get('/heatmap', { bbox, cell, sigma, kind, at }, signal);
  }

  trafficCurrent(at?: number, signal?: AbortSignal): Promise<TrafficFrameDoc> {
    return this.get('/traffic/current', { at }, signal);
  }

  trafficHistory(from: number, to: number, step: number, signal?: AbortSignal): Promise<TrafficHistoryDoc> {
    return this.get('/traffic/history', { from, to, step }, signal);
  }

  trafficAreal(box: BBox | undefined, cell: number, at?: number, signal?: AbortSignal): Promise<ArealFrameDoc> {
    const bbox = box ? `${box.minLon},${box.minLat},${box.maxLon},${box.maxLat}` : undefined;
    return this.get('/traffic/areal', { bbox, cell, at }, signal);
  }

  subwayPosition(line: string, at?: number, signal?: AbortSignal): Promise<SubwayPositionDoc> {
    return this.get(`/subway/${encodeURIComponent(line)}/position`, { at }, signal);
  }

  powerConnected(node: string, at?: number, signal?: AbortSignal): Promise<PowerConnectedDoc> {
    return this.get(`/power/${encodeURIComponent(node)}/connected`, { at }, signal);
  }

  postSamples(samples: { segment: string; t: number; speed_kmh: number }[]): Promise<{ ingested: number }> {
    return this.post('/traffic/samples', { samples });
  }
}

// At most one outstanding request per overlay type: starting a new request
// under a key aborts the previous one, and a superseded response never
// resolves into the caller.
export class OverlayFetcher {
  private readonly inflight = new Map<string, AbortController>();

  async run<T>(key: string, start: (signal: AbortSignal) => Promise<T>): Promise<T | null> {
    this.inflight.get(key)?.abort();
    const controller = new AbortController();
    this.inflight.set(key, controller);
    try {
      const result = await start(controller.signal);
      return this.inflight.get(key) === controller ? result : null;
    } catch (err) {
      if (controller.signal.aborted) return null;
      throw err;
    } finally {
      if (this.inflight.get(key) === controller) this.inflight.delete(key);
    }
  }
}
