// Canvas 2D renderer for the scene graph. Drawing is dumb on purpose: all
// decisions live in scene.ts; this file just puts pixels where told.

import type { Scene, SceneEdge, SceneNode, ViewTransform } from "./scene.js";
import { cullScene, worldToScreen } from "./scene.js";

const LINE_DASHES: Record<string, number[]> = {
  solid: [],
  dashed: [8, 5],
  dotted: [2, 4],
};

export interface RenderStats {
  drawnNodes: number;
  drawnEdges: number;
}

export function renderScene(
  ctx: CanvasRenderingContext2D,
  scene: Scene,
  view: ViewTransform,
  width: number,
  height: number,
): RenderStats {
  ctx.clearRect(0, 0, width, height);
  drawGrid(ctx, view, width, height);
  const visible = cullScene(scene, view, width, height);

  for (const node of visible.containers) drawNode(ctx, node, view, true);
  for (const edge of visible.edges) drawEdge(ctx, edge, view);
  for (const node of visible.nodes) drawNode(ctx, node, view, false);
  return {
    drawnNodes: visible.containers.length + visible.nodes.length,
    drawnEdges: visible.edges.length,
  };
}

function drawGrid(ctx: CanvasRenderingContext2D, view: ViewTransform, width: number, height: number): void {
  const spacing = 64 * view.zoom;
  if (spacing < 12) return;
  ctx.save();
  ctx.strokeStyle = "#EDEFF2";
  ctx.lineWidth = 1;
  const offsetX = ((-view.panX * view.zoom) % spacing + spacing) % spacing;
  const offsetY = ((-view.panY * view.zoom) % spacing + spacing) % spacing;
  ctx.beginPath();
  for (let x = offsetX; x <= width; x += spacing) {
    ctx.moveTo(x, 0);
    ctx.lineTo(x, height);
  }
  for (let y = offsetY; y <= height; y += spacing) {
    ctx.moveTo(0, y);
    ctx.lineTo(width, y);
  }
  ctx.stroke();
  ctx.restore();
}

function drawNode(ctx: CanvasRenderingContext2D, node: SceneNode, view: ViewTransform, container: boolean): void {
  const tl = worldToScreen(view, node.x, node.y);
  const w = node.w * view.zoom;
  const h = node.h * view.zoom;
  ctx.save();
  ctx.fillStyle = node.fill;
  ctx.strokeStyle = node.unresolved ? "#B00020" : node.selected ? "#1565C0" : "#55606A";
  ctx.lineWidth = node.selected ? 3 : 1.5;
  if (node.unresolved) ctx.setLineDash([4, 3]);
  if (container) ctx.globalAlpha = 0.55;

  ctx.beginPath();
  if (node.shape === "ellipse") {
    ctx.ellipse(tl.x + w / 2, tl.y + h / 2, w / 2, h / 2, 0, 0, Math.PI * 2);
  } else if (node.shape === "diamond") {
    ctx.moveTo(tl.x + w / 2, tl.y);
    ctx.lineTo(tl.x + w, tl.y + h / 2);
    ctx.lineTo(tl.x + w / 2, tl.y + h);
    ctx.lineTo(tl.x, tl.y + h / 2);
    ctx.closePath();
  } else {
    const radius = Math.min(8 * view.zoom, w / 4, h / 4);
    roundedRect(ctx, tl.x, tl.y, w, h, container ? radius * 1.5 : radius);
  }
  ctx.fill();
  ctx.stroke();

  if (h >= 14 && w >= 24) {
    ctx.globalAlpha = 1;
    ctx.fillStyle = "#1F2730";
    const fontSize = Math.min(14 * view.zoom, h * 0.4, 18);
    if (fontSize >= 6) {
      ctx.font = `${fontSize}px system-ui, sans-serif`;
      ctx.textAlign = "center";
      ctx.textBaseline = container ? "top" : "middle";
      const label = node.label.length > 40 ? node.label.slice(0, 37) + "…" : node.label;
      ctx.fillText(label, tl.x + w / 2, container ? tl.y + 4 : tl.y + h / 2, w - 8);
    }
  }
  ctx.restore();
}

function roundedRect(ctx: CanvasRenderingContext2D, x: number, y: number, w: number, h: number, r: number): void {
  const radius = Math.max(0, r);
  ctx.moveTo(x + radius, y);
  ctx.arcTo(x + w, y, x + w, y + h, radius);
  ctx.arcTo(x + w, y + h, x, y + h, radius);
  ctx.arcTo(x, y + h, x, y, radius);
  ctx.arcTo(x, y, x + w, y, radius);
  ctx.closePath();
}

function drawEdge(ctx: CanvasRenderingContext2D, edge: SceneEdge, view: ViewTransform): void {
  const a = worldToScreen(view, edge.x1, edge.y1);
  const b = worldToScreen(view, edge.x2, edge.y2);
  ctx.save();
  ctx.strokeStyle = edge.selected ? "#1565C0" : edge.color;
  ctx.lineWidth = edge.selected ? 3 : 1.5;
  ctx.setLineDash(LINE_DASHES[edge.lineStyle] ?? []);
  ctx.beginPath();
  ctx.moveTo(a.x, a.y);
  ctx.lineTo(b.x, b.y);
  ctx.stroke();

  if (edge.arrowHead !== "none") {
    const angle = Math.atan2(b.y - a.y, b.x - a.x);
    const size = 9;
    ctx.setLineDash([]);
    ctx.fillStyle = ctx.strokeStyle;
    ctx.beginPath();
    const tipX = (a.x + b.x) / 2;
    const tipY = (a.y + b.y) / 2;
    ctx.moveTo(tipX, tipY);
    if (edge.arrowHead === "diamond") {
      ctx.lineTo(tipX - size * Math.cos(angle - 0.5), tipY - size * Math.sin(angle - 0.5));
      ctx.lineTo(tipX - size * 1.6 * Math.cos(angle), tipY - size * 1.6 * Math.sin(angle));
      ctx.lineTo(tipX - size * Math.cos(angle + 0.5), tipY - size * Math.sin(angle + 0.5));
    } else {
      ctx.lineTo(tipX - size * Math.cos(angle - 0.4), tipY - size * Math.sin(angle - 0.4));
      ctx.lineTo(tipX - size * Math.cos(angle + 0.4), tipY - size * Math.sin(angle + 0.4));
    }
    ctx.closePath();
    ctx.fill();
  }
  ctx.restore();
}
