// Pure scene building: (document, DSLs, view) -> draw list. No DOM here, so
// rendering stays a function of its inputs and the tests can pin it down.

import type {
  DslDefinition,
  LinkTypeDef,
  NodeRecord,
  NodeTypeDef,
  WorkspaceDoc,
} from "./model.js";
import { valueToText } from "./model.js";

export interface ViewTransform {
  panX: number;
  panY: number;
  zoom: number;
}

export interface SceneNode {
  id: string;
  shape: string; // rectangle | ellipse | diamond | image | container
  x: number;
  y: number;
  w: number;
  h: number;
  fill: string;
  label: string;
  icon?: string;
  selected: boolean;
  unresolved: boolean;
  isContainer: boolean;
  isWorkspaceLink: boolean;
}

export interface SceneEdge {
  id: string;
  fromId: string;
  toId: string;
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  color: string;
  lineStyle: string;
  arrowHead: string;
  label: string;
  selected: boolean;
}

export interface Scene {
  containers: SceneNode[]; // drawn first, behind their children
  nodes: SceneNode[];
  edges: SceneEdge[];
}

export const FALLBACK_FILL = "#ECECEC";
export const FALLBACK_STROKE = "#B00020";

export function nodeTypeOf(dsls: DslDefinition[], key: string): NodeTypeDef | undefined {
  const hits = dsls.flatMap((d) => d.nodeTypes.filter((nt) => nt.key === key));
  return hits.length === 1 ? hits[0] : undefined;
}

export function linkTypeOf(dsls: DslDefinition[], key: string): LinkTypeDef | undefined {
  const hits = dsls.flatMap((d) => d.linkTypes.filter((lt) => lt.key === key));
  return hits.length === 1 ? hits[0] : undefined;
}

/** Render a node-type label template: ${label}, ${id}, ${attr.NAME}. */
export function renderLabel(template: string, node: NodeRecord): string {
  return template.replace(/\$\{([^}]*)\}/g, (_, expr: string) => {
    if (expr === "label") return node.label;
    if (expr === "id") return node.id;
    if (expr.startsWith("attr.")) {
      const tagged = node.attributes[expr.slice(5)];
      return tagged === undefined ? "" : valueToText(tagged);
    }
    return "";
  });
}

function center(node: NodeRecord): { cx: number; cy: number } {
  return { cx: node.geometry.x + node.geometry.w / 2, cy: node.geometry.y + node.geometry.h / 2 };
}

/** Bounds of a container: its own box grown to enclose every child box. */
export function containerBounds(doc: WorkspaceDoc, containerId: string): { x: number; y: number; w: number; h: number } {
  const container = doc.nodes.find((n) => n.id === containerId)!;
  let { x, y } = container.geometry;
  let right = x + container.geometry.w;
  let bottom = y + container.geometry.h;
  const pad = 12;
  for (const node of doc.nodes) {
    if (node.containerId !== containerId) continue;
    x = Math.min(x, node.geometry.x - pad);
    y = Math.min(y, node.geometry.y - pad);
    right = Math.max(right, node.geometry.x + node.geometry.w + pad);
    bottom = Math.max(bottom, node.geometry.y + node.geometry.h + pad);
  }
  return { x, y, w: right - x, h: bottom - y };
}

export function buildScene(
  doc: WorkspaceDoc,
  dsls: DslDefinition[],
  selection: ReadonlySet<string> = new Set(),
): Scene {
  const byId = new Map(doc.nodes.map((n) => [n.id, n]));
  const containers: SceneNode[] = [];
  const nodes: SceneNode[] = [];

  const sortedNodes = [...doc.nodes].sort((a, b) => (a.id < b.id ? -1 : a.id > b.id ? 1 : 0));
  for (const node of sortedNodes) {
    const typeDef = nodeTypeOf(dsls, node.typeKey);
    const isContainer =
      typeDef?.allowsContainment === true || doc.nodes.some((n) => n.containerId === node.id);
    const bounds = isContainer
      ? containerBounds(doc, node.id)
      : { x: node.geometry.x, y: node.geometry.y, w: node.geometry.w, h: node.geometry.h };
    const sceneNode: SceneNode = {
      id: node.id,
      shape: typeDef ? typeDef.visual.shape : "rectangle",
      ...bounds,
      fill: typeDef ? typeDef.visual.fillColor : FALLBACK_FILL,
      label: typeDef ? renderLabel(typeDef.visual.labelTemplate, node) : `${node.label || node.id} (?${node.typeKey})`,
      icon: typeDef?.visual.icon,
      selected: selection.has(node.id),
      unresolved: !typeDef,
      isContainer,
      isWorkspaceLink: node.typeKey === "workspace-link",
    };
    (isContainer ? containers : nodes).push(sceneNode);
  }

  const edges: SceneEdge[] = [];
  const sortedLinks = [...doc.links].sort((a, b) => (a.id < b.id ? -1 : a.id > b.id ? 1 : 0));
  for (const link of sortedLinks) {
    const from = byId.get(link.fromNodeId);
    const to = byId.get(link.toNodeId);
    if (!from || !to) continue;
    const typeDef = linkTypeOf(dsls, link.typeKey);
    const a = center(from);
    const b = center(to);
    edges.push({
      id: link.id,
      fromId: link.fromNodeId,
      toId: link.toNodeId,
      x1: a.cx,
      y1: a.cy,
      x2: b.cx,
      y2: b.cy,
      color: typeDef ? typeDef.visual.color : FALLBACK_STROKE,
      lineStyle: typeDef ? typeDef.visual.lineStyle : "dotted",
      arrowHead: typeDef ? typeDef.visual.arrowHead : "arrow",
      label: link.label,
      selected: selection.has(link.id),
    });
  }
  return { containers, nodes, edges };
}

// --- view math -----------------------------------------------------------------

export function worldToScreen(view: ViewTransform, x: number, y: number): { x: number; y: number } {
  return { x: (x - view.panX) * view.zoom, y: (y - view.panY) * view.zoom };
}

export function screenToWorld(view: ViewTransform, x: number, y: number): { x: number; y: number } {
  return { x: x / view.zoom + view.panX, y: y / view.zoom + view.panY };
}

/** Zoom about a screen point so the world point under the cursor stays put. */
export function zoomAt(view: ViewTransform, screenX: number, screenY: number, factor: number): ViewTransform {
  const zoom = Math.min(16, Math.max(1 / 64, view.zoom * factor));
  const anchor = screenToWorld(view, screenX, screenY);
  return {
    zoom,
    panX: anchor.x - screenX / zoom,
    panY: anchor.y - screenY / zoom,
  };
}

export function panBy(view: ViewTransform, dxScreen: number, dyScreen: number): ViewTransform {
  return { ...view, panX: view.panX - dxScreen / view.zoom, panY: view.panY - dyScreen / view.zoom };
}

export function visibleWorldRect(view: ViewTransform, width: number, height: number) {
  const a = screenToWorld(view, 0, 0);
  const b = screenToWorld(view, width, height);
  return { x: a.x, y: a.y, w: b.x - a.x, h: b.y - a.y };
}

export function rectsIntersect(
  a: { x: number; y: number; w: number; h: number },
  b: { x: number; y: number; w: number; h: number },
): boolean {
  return a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h && b.y < a.y + a.h;
}

/** Cull a scene to what intersects the viewport; keeps pans over huge
 * workspaces cheap. Edges survive when either endpoint's box is visible. */
export function cullScene(scene: Scene, view: ViewTransform, width: number, height: number): Scene {
  const window_ = visibleWorldRect(view, width, height);
  const visibleIds = new Set<string>();
  const keepNode = (n: SceneNode) => {
    const keep = rectsIntersect(n, window_);
    if (keep) visibleIds.add(n.id);
    return keep;
  };
  const containers = scene.containers.filter(keepNode);
  const nodes = scene.nodes.filter(keepNode);
  const edges = scene.edges.filter(
    (e) =>
      visibleIds.has(e.fromId) ||
      visibleIds.has(e.toId) ||
      rectsIntersect(
        { x: Math.min(e.x1, e.x2), y: Math.min(e.y1, e.y2), w: Math.abs(e.x2 - e.x1), h: Math.abs(e.y2 - e.y1) },
        window_,
      ),
  );
  return { containers, nodes, edges };
}

// --- hit testing ------------------------------------------------------------------

export type Hit =
  | { kind: "node"; id: string }
  | { kind: "link"; id: string }
  | { kind: "background" };

function pointInNode(node: SceneNode, x: number, y: number): boolean {
  if (node.shape === "ellipse") {
    const rx = node.w / 2;
    const ry = node.h / 2;
    const dx = (x - (node.x + rx)) / rx;
    const dy = (y - (node.y + ry)) / ry;
    return dx * dx + dy * dy <= 1;
  }
  if (node.shape === "diamond") {
    const cx = node.x + node.w / 2;
    const cy = node.y + node.h / 2;
    return Math.abs(x - cx) / (node.w / 2) + Math.abs(y - cy) / (node.h / 2) <= 1;
  }
  return x >= node.x && x <= node.x + node.w && y >= node.y && y <= node.y + node.h;
}

function distanceToSegment(px: number, py: number, x1: number, y1: number, x2: number, y2: number): number {
  const dx = x2 - x1;
  const dy = y2 - y1;
  const lengthSq = dx * dx + dy * dy;
  const t = lengthSq === 0 ? 0 : Math.max(0, Math.min(1, ((px - x1) * dx + (py - y1) * dy) / lengthSq));
  const qx = x1 + t * dx;
  const qy = y1 + t * dy;
  return Math.hypot(px - qx, py - qy);
}

/** Topmost element at a world point: plain nodes beat edges beat containers. */
export function hitTest(scene: Scene, x: number, y: number, edgeTolerance = 6): Hit {
  for (let i = scene.nodes.length - 1; i >= 0; i--) {
    if (pointInNode(scene.nodes[i], x, y)) return { kind: "node", id: scene.nodes[i].id };
  }
  for (let i = scene.edges.length - 1; i >= 0; i--) {
    const e = scene.edges[i];
    if (distanceToSegment(x, y, e.x1, e.y1, e.x2, e.y2) <= edgeTolerance) {
      return { kind: "link", id: e.id };
    }
  }
  for (let i = scene.containers.length - 1; i >= 0; i--) {
    if (pointInNode(scene.containers[i], x, y)) return { kind: "node", id: scene.containers[i].id };
  }
  return { kind: "background" };
}
