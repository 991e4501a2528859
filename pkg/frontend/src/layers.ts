// Client-side mirror of the server's layer tree. Visibility semantics are
// identical: a node renders only if it and every ancestor are visible.

import type { LayerNodeDoc } from './types.js';

export class ClientLayerTree {
  private readonly parents = new Map<string, string | null>();
  private readonly flags = new Map<string, boolean>();
  private readonly names = new Map<string, string>();
  private readonly childIds = new Map<string, string[]>();

  constructor(readonly root: LayerNodeDoc) {
    const walk = (node: LayerNodeDoc, parent: string | null) => {
      this.parents.set(node.layer_id, parent);
      this.flags.set(node.layer_id, node.visible);
      this.names.set(node.layer_id, node.name);
      this.childIds.set(
        node.layer_id,
        node.children.map((c) => c.layer_id)
      );
      for (const child of node.children) walk(child, node.layer_id);
    };
    walk(root, null);
  }

  has(layerId: string): boolean {
    return this.flags.has(layerId);
  }

  name(layerId: string): string {
    return this.names.get(layerId) ?? layerId;
  }

  children(layerId: string): string[] {
    return this.childIds.get(layerId) ?? [];
  }

  isLeaf(layerId: string): boolean {
    return this.children(layerId).length === 0;
  }

  leafIds(): string[] {
    return [...this.flags.keys()].filter((id) => this.isLeaf(id));
  }

  flag(layerId: string): boolean {
    return this.flags.get(layerId) ?? false;
  }

  setVisible(layerId: string, visible: boolean): void {
    if (!this.flags.has(layerId)) throw new Error(`unknown layer ${layerId}`);
    this.flags.set(layerId, visible);
  }

  toggle(layerId: string): boolean {
    const next = !this.flag(layerId);
    this.setVisible(layerId, next);
    return next;
  }

  // AND-chain to the root, same as the server's effective visibility.
  isEffectivelyVisible(layerId: string): boolean {
    let cursor: string | null | undefined = layerId;
    while (cursor != null) {
      if (!this.flags.get(cursor)) return false;
      cursor = this.parents.get(cursor);
    }
    return true;
  }
}
