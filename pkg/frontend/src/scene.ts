// Holds fetched tile manifests and turns them into a draw list. Objects can
// appear in several tiles; the draw list carries each entity once. Stale
// tiles are kept until a fresh manifest replaces them.

import { ClientLayerTree } from './layers.js';
import { tileId, type TileKey } from './tiles.js';
import type { SceneObjectDoc, TileManifestDoc } from './types.js';

export interface DrawList {
  solid: SceneObjectDoc[]; // the active band, fully rendered
  ghosted: SceneObjectDoc[]; // the other band, dimmed for context
}

export class SceneStore {
  private readonly manifests = new Map<string, TileManifestDoc>();

  put(manifest: TileManifestDoc): void {
    const key: TileKey = { z: manifest.tile.z, x: manifest.tile.x, y: manifest.tile.y };
    this.manifests.set(tileId(key), manifest);
  }

  manifest(key: TileKey): TileManifestDoc | undefined {
    return this.manifests.get(tileId(key));
  }

  // Drop manifests from zoom levels other than z (a zoom change invalidates
  // the whole pyramid level; panning keeps still-visible neighbours).
  retainZoom(z: number): void {
    for (const [id, manifest] of this.manifests) {
      if (manifest.tile.z !== z) this.manifests.delete(id);
    }
  }

  clear(): void {
    this.manifests.clear();
  }

  drawList(tree: ClientLayerTree, keys: TileKey[], mode: 'above' | 'below'): DrawList {
    const seen = new Set<string>();
    const solid: SceneObjectDoc[] = [];
    const ghosted: SceneObjectDoc[] = [];
    for (const key of keys) {
      const manifest = this.manifests.get(tileId(key));
      if (!manifest) continue;
      for (const obj of manifest.objects) {
        if (seen.has(obj.id)) continue;
        if (tree.has(obj.layer) && !tree.isEffectivelyVisible(obj.layer)) continue;
        seen.add(obj.id);
        const activeBand = mode === 'below' ? 'below' : 'above';
        (obj.band === activeBand ? solid : ghosted).push(obj);
      }
    }
    return { solid, ghosted };
  }
}
