// Boot, DOM wiring, and the canvas render loop. All data flows through
// CityApi; everything painted traces back to a fetched document.

import { ApiError, CityApi, OverlayFetcher } from './api.js';
import { pieSectors, histogramBars, normalOverlay, type ChartKind, seriesPoints, radarVertices } from './charts.js';
import { ClientLayerTree } from './layers.js';
import { minimapToLonLat, projectToMinimap, viewportRect, type Rect } from './minimap.js';
import { SceneStore } from './scene.js';
import { EMPTY_SELECTION, panelRows, selectAt, type SelectionState } from './selection.js';
import {
  lonLatToScreen,
  lonLatToWorldPx,
  tileCover,
  tileId,
  worldPxToLonLat,
  type ViewportState,
} from './tiles.js';
import { scrub, tick, trafficColor, type TimeExtent, type TimelineState } from './timeline.js';
import { kindOf, type BBox, type CompositionDoc, type HeatmapDoc, type HistogramDoc, type SceneObjectDoc, type TrafficFrameDoc } from './types.js';

interface AppState {
  view: ViewportState;
  timeline: TimelineState;
  extent: TimeExtent;
  cityBox: BBox;
  selection: SelectionState;
  trafficFrame: TrafficFrameDoc | null;
  heatmap: HeatmapDoc | null;
  showHeatmap: boolean;
  chartKind: ChartKind;
  chartRegion: string;
  chartAttr: string;
  composition: CompositionDoc | null;
  histogram: HistogramDoc | null;
}

const KIND_FILL: Record<string, string> = {
  building: '#7d94b5',
  house: '#a5b8d0',
  room: '#c4d0e2',
  admin_region: 'rgba(120, 140, 160, 0.08)',
};

function toast(message: string): void {
  const host = document.getElementById('toasts');
  if (!host) return;
  const node = document.createElement('div');
  node.className = 'toast';
  node.textContent = message;
  host.appendChild(node);
  setTimeout(() => node.remove(), 4_000);
}

function main(): void {
  const api = new CityApi('');
  const overlays = new OverlayFetcher();
  const scene = new SceneStore();
  const canvas = document.getElementById('map') as HTMLCanvasElement;
  const mini = document.getElementById('minimap') as HTMLCanvasElement;
  const panel = document.getElementById('panel') as HTMLElement;
  const chartCanvas = document.getElementById('chart') as HTMLCanvasElement;
  const slider = document.getElementById('time-slider') as HTMLInputElement;
  const timeLabel = document.getElementById('time-label') as HTMLElement;

  let tree: ClientLayerTree | null = null;
  const state: AppState = {
    view: {
      center: { lon: 0, lat: 0 },
      zoom: 14,
      widthPx: canvas.width,
      heightPx: canvas.height,
      mode: 'above',
    },
    timeline: { t: 0, playing: false, speed: 60 },
    extent: { min: 0, max: 0 },
    cityBox: { minLon: -1, minLat: -1, maxLon: 1, maxLat: 1 },
    selection: EMPTY_SELECTION,
    trafficFrame: null,
    heatmap: null,
    showHeatmap: false,
    chartKind: 'pie',
    chartRegion: 'admin:d1',
    chartAttr: 'age',
    composition: null,
    histogram: null,
  };

  // ----------------------------------------------------------- data loads

  async function refreshTiles(): Promise<void> {
    const keys = tileCover(state.view);
    scene.retainZoom(Math.floor(state.view.zoom));
    const missing = keys.filter((k) => !scene.manifest(k));
    const results = await Promise.allSettled(
      missing.map((k) => api.tile(k.z, k.x, k.y, state.timeline.t))
    );
    results.forEach((result, i) => {
      if (result.status === 'fulfilled') {
        scene.put(result.value);
      } else {
        toast(`tile ${tileId(missing[i])}: ${String(result.reason)}`); // stale tiles stay up
      }
    });
    draw();
  }

  async function refreshTraffic(): Promise<void> {
    const frame = await overlays.run('traffic', (signal) =>
      api.trafficCurrent(state.timeline.t, signal)
    );
    if (frame !== null) {
      state.trafficFrame = frame;
      draw();
    }
  }

  async function refreshHeatmap(): Promise<void> {
    if (!state.showHeatmap) {
      state.heatmap = null;
      draw();
      return;
    }
    const cell = Math.max(0.001, (state.cityBox.maxLon - state.cityBox.minLon) / 48);
    const doc = await overlays.run('heatmap', (signal) =>
      api.heatmap(state.cityBox, cell, 1.0, 'person', state.timeline.t, signal)
    );
    if (doc !== null) {
      state.heatmap = doc;
      draw();
    }
  }

  async function refreshCharts(): Promise<void> {
    try {
      if (state.chartKind === 'histogram') {
        state.histogram = await api.histogram(
          state.chartRegion, 'person', state.chartAttr, 0, 100, 20, state.timeline.t
        );
        state.composition = null;
      } else {
        state.composition = await api.composition(
          state.chartRegion, 'person', state.chartAttr, state.timeline.t
        );
        state.histogram = null;
      }
    } catch (err) {
      toast(err instanceof ApiError ? err.message : String(err));
      return;
    }
    drawChart();
  }

  function onScrub(t: number): void {
    state.timeline = scrub(state.timeline, t, state.extent);
    slider.value = String(state.timeline.t);
    timeLabel.textContent = new Date(state.timeline.t).toISOString();
    void refreshTiles();
    void refreshTraffic();
    void refreshHeatmap();
    void refreshCharts();
    if (state.selection.selected?.startsWith('house:')) {
      void api
        .holographic(state.selection.selected, state.timeline.t)
        .then((doc) => {
          state.selection = { ...state.selection, panel: doc };
          renderPanel();
        })
        .catch((err) => toast(String(err)));
    }
  }

  // -------------------------------------------------------------- drawing

  function drawObject(ctx: CanvasRenderingContext2D, obj: SceneObjectDoc, ghosted: boolean): void {
    const geometry = obj.geometry;
    const kind = kindOf(obj.id);
    ctx.globalAlpha = ghosted ? 0.25 : 1.0;
    if (geometry.type === 'footprint') {
      const ring = geometry.coordinates.map(([lon, lat]) => lonLatToScreen(state.view, { lon, lat }));
      ctx.beginPath();
      ring.forEach((p, i) => (i === 0 ? ctx.moveTo(p.x, p.y) : ctx.lineTo(p.x, p.y)));
      ctx.closePath();
      ctx.fillStyle = KIND_FILL[kind] ?? '#9aa7b8';
      ctx.fill();
      // 2.5D: extrude by height with a simple vertical offset roof
      const h = obj.height_m ?? 0;
      if (h > 0 && state.view.zoom >= 13) {
        const lift = Math.min(24, (h / 10) * Math.max(0, state.view.zoom - 12));
        ctx.beginPath();
        ring.forEach((p, i) => (i === 0 ? ctx.moveTo(p.x, p.y - lift) : ctx.lineTo(p.x, p.y - lift)));
        ctx.closePath();
        ctx.fillStyle = '#b8c6da';
        ctx.fill();
        ctx.strokeStyle = '#5c718e';
        ctx.stroke();
      }
      if (obj.id === state.selection.selected) {
        ctx.strokeStyle = '#ff5f1f';
        ctx.lineWidth = 2.5;
        ctx.beginPath();
        ring.forEach((p, i) => (i === 0 ? ctx.moveTo(p.x, p.y) : ctx.lineTo(p.x, p.y)));
        ctx.closePath();
        ctx.stroke();
        ctx.lineWidth = 1;
      }
    } else if (geometry.type === 'polyline') {
      const pts = geometry.coordinates.map(([lon, lat]) => lonLatToScreen(state.view, { lon, lat }));
      ctx.beginPath();
      pts.forEach((p, i) => (i === 0 ? ctx.moveTo(p.x, p.y) : ctx.lineTo(p.x, p.y)));
      if (kind === 'road_segment') {
        const level = state.trafficFrame?.levels[obj.id] ?? 'unknown';
        ctx.strokeStyle = trafficColor(level);
        ctx.lineWidth = 3;
      } else if (obj.band === 'below') {
        ctx.strokeStyle = kind === 'subway_line' ? '#7b4fd0' : '#3d7dd0';
        ctx.lineWidth = 2;
      } else {
        ctx.strokeStyle = '#6b7785';
        ctx.lineWidth = 1.5;
      }
      ctx.stroke();
      ctx.lineWidth = 1;
    } else {
      const [lon, lat] = geometry.coordinates[0];
      const p = lonLatToScreen(state.view, { lon, lat });
      ctx.beginPath();
      ctx.arc(p.x, p.y, 3, 0, 2 * Math.PI);
      ctx.fillStyle = kind === 'power_node' ? '#d0a23d' : '#55606e';
      ctx.fill();
    }
    ctx.globalAlpha = 1.0;
  }

  function drawHeat(ctx: CanvasRenderingContext2D, doc: HeatmapDoc): void {
    const peak = Math.max(1e-12, ...doc.values);
    for (let r = 0; r < doc.rows; r++) {
      for (let c = 0; c < doc.cols; c++) {
        const value = doc.values[r * doc.cols + c];
        if (value <= 0) continue;
        const sw = lonLatToScreen(state.view, {
          lon: doc.origin.lon + c * doc.cell,
          lat: doc.origin.lat + r * doc.cell,
        });
        const ne = lonLatToScreen(state.view, {
          lon: doc.origin.lon + (c + 1) * doc.cell,
          lat: doc.origin.lat + (r + 1) * doc.cell,
        });
        ctx.fillStyle = `rgba(214, 69, 42, ${0.12 + 0.55 * (value / peak)})`;
        ctx.fillRect(sw.x, ne.y, ne.x - sw.x, sw.y - ne.y);
      }
    }
  }

  function draw(): void {
    const ctx = canvas.getContext('2d');
    if (!ctx || !tree) return;
    ctx.fillStyle = state.view.mode === 'below' ? '#1d232b' : '#f2f4f7';
    ctx.fillRect(0, 0, canvas.width, canvas.height);

    const keys = tileCover(state.view);
    const list = scene.drawList(tree, keys, state.view.mode);
    for (const obj of list.ghosted) drawObject(ctx, obj, true);
    if (state.heatmap && state.showHeatmap) drawHeat(ctx, state.heatmap);
    for (const obj of list.solid) drawObject(ctx, obj, false);
    drawMinimap();
  }

  function drawMinimap(): void {
    const ctx = mini.getContext('2d');
    if (!ctx) return;
    ctx.fillStyle = '#10151c';
    ctx.fillRect(0, 0, mini.width, mini.height);
    const inner: Rect = { x: 6, y: 6, width: mini.width - 12, height: mini.height - 12 };
    ctx.strokeStyle = '#3c4a5c';
    ctx.strokeRect(inner.x, inner.y, inner.width, inner.height);
    if (state.selection.object) {
      const g = state.selection.object.geometry;
      const [lon, lat] = g.coordinates[0];
      const p = projectToMinimap({ lon, lat }, state.cityBox, inner);
      ctx.fillStyle = '#ff5f1f';
      ctx.fillRect(p.x - 2, p.y - 2, 4, 4);
    }
    const rect = viewportRect(state.view, state.cityBox, inner);
    ctx.strokeStyle = '#e8eef6';
    ctx.strokeRect(rect.x, rect.y, rect.width, rect.height);
  }

  function drawChart(): void {
    const ctx = chartCanvas.getContext('2d');
    if (!ctx) return;
    const { width, height } = chartCanvas;
    ctx.clearRect(0, 0, width, height);
    ctx.fillStyle = '#ffffff';
    ctx.fillRect(0, 0, width, height);
    const pad = 14;
    const plotW = width - 2 * pad;
    const plotH = height - 2 * pad;
    const toPx = (p: { x: number; y: number }) => ({ x: pad + p.x * plotW, y: height - pad - p.y * plotH });
    const palette = ['#4e79a7', '#f28e2b', '#e15759', '#76b7b2', '#59a14f', '#edc948', '#b07aa1'];

    if (state.chartKind === 'histogram' && state.histogram) {
      const bars = histogramBars(state.histogram);
      ctx.fillStyle = palette[0];
      for (const bar of bars) {
        const x = pad + bar.x0 * plotW;
        const w = (bar.x1 - bar.x0) * plotW - 1;
        ctx.fillRect(x, height - pad - bar.height * plotH, Math.max(1, w), bar.height * plotH);
      }
      const overlay = normalOverlay(state.histogram);
      if (overlay) {
        ctx.beginPath();
        overlay.map(toPx).forEach((p, i) => (i === 0 ? ctx.moveTo(p.x, p.y) : ctx.lineTo(p.x, p.y)));
        ctx.strokeStyle = '#d23c2e';
        ctx.lineWidth = 2;
        ctx.stroke();
        ctx.lineWidth = 1;
      } else if (state.histogram.fit?.degenerate) {
        ctx.fillStyle = '#555';
        ctx.fillText('degenerate fit: all values equal', pad, pad + 4);
      }
      return;
    }
    if (!state.composition) return;

    if (state.chartKind === 'pie') {
      const cx = width / 2;
      const cy = height / 2;
      const radius = Math.min(plotW, plotH) / 2;
      pieSectors(state.composition).forEach((sector, i) => {
        ctx.beginPath();
        ctx.moveTo(cx, cy);
        ctx.arc(cx, cy, radius, sector.startAngle - Math.PI / 2, sector.endAngle - Math.PI / 2);
        ctx.closePath();
        ctx.fillStyle = palette[i % palette.length];
        ctx.fill();
      });
    } else if (state.chartKind === 'radar') {
      const verts = radarVertices(state.composition).map(toPx);
      if (verts.length >= 3) {
        ctx.beginPath();
        verts.forEach((p, i) => (i === 0 ? ctx.moveTo(p.x, p.y) : ctx.lineTo(p.x, p.y)));
        ctx.closePath();
        ctx.fillStyle = 'rgba(78, 121, 167, 0.35)';
        ctx.fill();
        ctx.strokeStyle = palette[0];
        ctx.stroke();
      }
    } else {
      const pts = seriesPoints(state.composition, state.chartKind).map((p) => ({
        ...toPx(p),
        r: p.r,
      }));
      if (state.chartKind === 'line' || state.chartKind === 'area') {
        ctx.beginPath();
        pts.forEach((p, i) => (i === 0 ? ctx.moveTo(p.x, p.y) : ctx.lineTo(p.x, p.y)));
        ctx.strokeStyle = palette[0];
        ctx.stroke();
        if (state.chartKind === 'area' && pts.length > 0) {
          ctx.lineTo(pts[pts.length - 1].x, height - pad);
          ctx.lineTo(pts[0].x, height - pad);
          ctx.closePath();
          ctx.fillStyle = 'rgba(78, 121, 167, 0.3)';
          ctx.fill();
        }
      } else {
        pts.forEach((p, i) => {
          ctx.beginPath();
          ctx.arc(p.x, p.y, state.chartKind === 'bubble' ? Math.max(3, (p.r ?? 0.02) * plotW) : 3, 0, 2 * Math.PI);
          ctx.fillStyle = palette[i % palette.length];
          ctx.fill();
        });
      }
    }
  }

  function renderPanel(): void {
    panel.innerHTML = '';
    const title = document.createElement('h3');
    title.textContent = state.selection.selected ?? 'nothing selected';
    panel.appendChild(title);
    if (!state.selection.panel) return;
    const table = document.createElement('table');
    for (const [key, value] of panelRows(state.selection.panel)) {
      const row = table.insertRow();
      row.insertCell().textContent = key;
      row.insertCell().textContent = value;
    }
    panel.appendChild(table);
  }

  function renderLayerTree(): void {
    const host = document.getElementById('layer-tree');
    if (!host || !tree) return;
    host.innerHTML = '';
    const render = (layerId: string, depth: number) => {
      const row = document.createElement('label');
      row.style.paddingLeft = `${depth * 14}px`;
      const box = document.createElement('input');
      box.type = 'checkbox';
      box.checked = tree!.flag(layerId);
      box.addEventListener('change', () => {
        tree!.setVisible(layerId, box.checked);
        renderLayerTree(); // ancestors changing dims descendants
        draw();
      });
      row.appendChild(box);
      const text = document.createElement('span');
      text.textContent = tree!.name(layerId);
      text.style.opacity = tree!.isEffectivelyVisible(layerId) ? '1' : '0.45';
      row.appendChild(text);
      host.appendChild(row);
      for (const child of tree!.children(layerId)) render(child, depth + 1);
    };
    render(tree.root.layer_id, 0);
  }

  // ---------------------------------------------------------------- events

  canvas.addEventListener('click', (ev) => {
    const bounds = canvas.getBoundingClientRect();
    void selectAt(api, state.view, ev.clientX - bounds.left, ev.clientY - bounds.top, state.timeline.t)
      .then((selection) => {
        state.selection = selection;
        renderPanel();
        draw();
      })
      .catch((err) => toast(String(err)));
  });

  let dragging = false;
  let last = { x: 0, y: 0 };
  canvas.addEventListener('mousedown', (ev) => {
    dragging = true;
    last = { x: ev.clientX, y: ev.clientY };
  });
  window.addEventListener('mouseup', () => (dragging = false));
  window.addEventListener('mousemove', (ev) => {
    if (!dragging) return;
    const dx = ev.clientX - last.x;
    const dy = ev.clientY - last.y;
    last = { x: ev.clientX, y: ev.clientY };
    const center = lonLatToWorldPx(state.view.center, state.view.zoom);
    state.view = {
      ...state.view,
      center: worldPxToLonLat(center.x - dx, center.y - dy, state.view.zoom),
    };
    void refreshTiles();
  });

  canvas.addEventListener('wheel', (ev) => {
    ev.preventDefault();
    const dz = ev.deltaY < 0 ? 0.5 : -0.5;
    state.view = { ...state.view, zoom: Math.min(20, Math.max(8, state.view.zoom + dz)) };
    void refreshTiles();
  });

  mini.addEventListener('click', (ev) => {
    const bounds = mini.getBoundingClientRect();
    const inner: Rect = { x: 6, y: 6, width: mini.width - 12, height: mini.height - 12 };
    state.view = {
      ...state.view,
      center: minimapToLonLat(ev.clientX - bounds.left, ev.clientY - bounds.top, state.cityBox, inner),
    };
    void refreshTiles();
  });

  slider.addEventListener('input', () => onScrub(Number(slider.value)));

  (document.getElementById('mode-toggle') as HTMLInputElement).addEventListener('change', (ev) => {
    state.view = { ...state.view, mode: (ev.target as HTMLInputElement).checked ? 'below' : 'above' };
    draw();
  });
  (document.getElementById('heatmap-toggle') as HTMLInputElement).addEventListener('change', (ev) => {
    state.showHeatmap = (ev.target as HTMLInputElement).checked;
    void refreshHeatmap();
  });
  (document.getElementById('play-toggle') as HTMLButtonElement).addEventListener('click', () => {
    state.timeline = { ...state.timeline, playing: !state.timeline.playing };
  });
  (document.getElementById('chart-kind') as HTMLSelectElement).addEventListener('change', (ev) => {
    state.chartKind = (ev.target as HTMLSelectElement).value as ChartKind;
    void refreshCharts();
  });
  (document.getElementById('chart-attr') as HTMLSelectElement).addEventListener('change', (ev) => {
    state.chartAttr = (ev.target as HTMLSelectElement).value;
    void refreshCharts();
  });

  let lastTick = performance.now();
  function loop(now: number): void {
    const delta = now - lastTick;
    lastTick = now;
    if (state.timeline.playing) {
      const next = tick(state.timeline, delta, state.extent);
      if (next.t !== state.timeline.t) onScrub(next.t);
      state.timeline = next;
    }
    requestAnimationFrame(loop);
  }

  // ------------------------------------------------------------------ boot

  async function boot(): Promise<void> {
    try {
      const health = await api.health();
      const layersDoc = await api.layers();
      tree = new ClientLayerTree(layersDoc);
      state.extent = { min: health.base_time, max: health.head_time };
      state.timeline = { ...state.timeline, t: health.head_time };
      if (health.bbox) {
        const [minLon, minLat, maxLon, maxLat] = health.bbox;
        state.cityBox = { minLon, minLat, maxLon, maxLat };
        state.view = {
          ...state.view,
          center: { lon: (minLon + maxLon) / 2, lat: (minLat + maxLat) / 2 },
        };
      }
      slider.min = String(state.extent.min);
      slider.max = String(state.extent.max);
      slider.value = String(state.timeline.t);
      timeLabel.textContent = new Date(state.timeline.t).toISOString();
      renderLayerTree();
      await refreshTiles();
      await refreshTraffic();
      await refreshCharts();
      requestAnimationFrame(loop);
    } catch (err) {
      toast(`boot failed: ${String(err)}`);
    }
  }

  void boot();
}

main();
