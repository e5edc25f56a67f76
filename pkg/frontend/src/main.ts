// Application shell: one full-screen canvas, a single contextual menu, an
// attribute panel generated from the DSL schema, and replay controls.

import { KernelApiError, KernelClient } from "./api.js";
import { CanvasView, ConflictError } from "./batch.js";
import { renderScene } from "./canvas.js";
import { buildContextMenu, type MenuAction } from "./contextmenu.js";
import {
  fromTagged,
  textToValue,
  valueToText,
  type DslDefinition,
  type MutationCommand,
  type NodeRecord,
} from "./model.js";
import { ReplayController } from "./playback.js";
import {
  buildScene,
  hitTest,
  nodeTypeOf,
  panBy,
  screenToWorld,
  zoomAt,
  type Hit,
  type Scene,
  type ViewTransform,
} from "./scene.js";

const client = new KernelClient("");

interface AppState {
  view: CanvasView | null;
  dsls: DslDefinition[];
  transform: ViewTransform;
  scene: Scene;
  highlighted: Set<string>;
  pendingLinkFrom: string | null;
}

const state: AppState = {
  view: null,
  dsls: [],
  transform: { panX: 0, panY: 0, zoom: 1 },
  scene: { containers: [], nodes: [], edges: [] },
  highlighted: new Set(),
  pendingLinkFrom: null,
};

const canvas = document.getElementById("canvas") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const menuEl = document.getElementById("menu")!;
const panelEl = document.getElementById("panel")!;
const statusEl = document.getElementById("status")!;
const workspacesEl = document.getElementById("workspaces") as HTMLSelectElement;
const searchEl = document.getElementById("search") as HTMLInputElement;

function setStatus(text: string, isError = false): void {
  statusEl.textContent = text;
  statusEl.classList.toggle("error", isError);
}

function resize(): void {
  canvas.width = canvas.clientWidth * devicePixelRatio;
  canvas.height = canvas.clientHeight * devicePixelRatio;
  ctx.setTransform(devicePixelRatio, 0, 0, devicePixelRatio, 0, 0);
  draw();
}

function rebuildScene(): void {
  if (!state.view?.doc) return;
  const selection = new Set([...state.view.selection, ...state.highlighted]);
  state.scene = buildScene(state.view.doc, state.dsls, selection);
}

let frameRequested = false;
function draw(): void {
  if (frameRequested) return;
  frameRequested = true;
  requestAnimationFrame(() => {
    frameRequested = false;
    renderScene(ctx, state.scene, state.transform, canvas.clientWidth, canvas.clientHeight);
  });
}

async function openWorkspace(uri: string, recordHistory = true): Promise<void> {
  try {
    const view = new CanvasView(client, uri);
    const doc = await view.load();
    state.view = view;
    state.dsls = await client.resolveDsls(doc);
    state.transform = { panX: doc.viewport.panX, panY: doc.viewport.panY, zoom: doc.viewport.zoom };
    state.highlighted.clear();
    rebuildScene();
    draw();
    hidePanel();
    if (recordHistory) await client.navigate(uri);
    setStatus(`${uri} · revision ${doc.revision} · ${doc.nodes.length} nodes / ${doc.links.length} links`);
    workspacesEl.value = uri;
  } catch (err) {
    setStatus(`failed to open ${uri}: ${(err as Error).message}`, true);
  }
}

async function applyCommands(commands: MutationCommand[]): Promise<void> {
  if (!state.view) return;
  try {
    const outcome = await state.view.apply(commands);
    rebuildScene();
    draw();
    setStatus(
      `${state.view.uri} · revision ${outcome.doc.revision}` + (outcome.replayed ? " · replayed after conflict" : ""),
    );
  } catch (err) {
    if (err instanceof ConflictError) {
      await state.view.load();
      rebuildScene();
      draw();
      setStatus(`conflict: ${err.cause_.message} — document refreshed, edit not applied`, true);
    } else if (err instanceof KernelApiError) {
      setStatus(`${err.detail.error}: ${err.detail.message}`, true);
    } else {
      setStatus(String(err), true);
    }
  }
}

// --- context menu ----------------------------------------------------------------

function hideMenu(): void {
  menuEl.classList.add("hidden");
  menuEl.replaceChildren();
}

function showMenu(screenX: number, screenY: number, hit: Hit): void {
  const doc = state.view?.doc;
  if (!doc) return;
  const node = hit.kind === "node" ? doc.nodes.find((n) => n.id === hit.id) : undefined;
  const actions = buildContextMenu(hit, state.dsls, node);
  menuEl.replaceChildren(
    ...actions.map((action) => {
      const item = document.createElement("button");
      item.textContent = action.label;
      item.addEventListener("click", () => {
        hideMenu();
        void runMenuAction(action, screenX, screenY);
      });
      return item;
    }),
  );
  menuEl.style.left = `${screenX}px`;
  menuEl.style.top = `${screenY}px`;
  menuEl.classList.remove("hidden");
}

async function runMenuAction(action: MenuAction, screenX: number, screenY: number): Promise<void> {
  const doc = state.view?.doc;
  if (!doc) return;
  const a = action.action;
  if (a.kind === "create-node") {
    const world = screenToWorld(state.transform, screenX, screenY);
    await applyCommands([
      {
        op: "createNode",
        spec: {
          typeKey: a.typeKey,
          label: a.typeKey,
          geometry: { x: world.x, y: world.y, w: 140, h: 60 },
        },
      },
    ]);
  } else if (a.kind === "delete-node") {
    const incident = doc.links.some((l) => l.fromNodeId === a.nodeId || l.toNodeId === a.nodeId);
    if (!incident || confirm("Node has links; delete it and its links?")) {
      await applyCommands([{ op: "deleteNode", id: a.nodeId, cascade: true }]);
    }
  } else if (a.kind === "delete-link") {
    await applyCommands([{ op: "deleteLink", id: a.linkId }]);
  } else if (a.kind === "edit-attributes" || a.kind === "edit-link") {
    showPanel(a.kind === "edit-attributes" ? a.elementId : a.linkId);
  } else if (a.kind === "create-link") {
    state.pendingLinkFrom = a.fromNodeId;
    setStatus(`click a target node to link from ${a.fromNodeId}`);
  } else if (a.kind === "open-workspace") {
    const node = doc.nodes.find((n) => n.id === a.nodeId);
    const target = node?.aliasOf?.workspaceUri ?? targetUriOf(node);
    if (target) await openWorkspace(target);
  } else if (a.kind === "search") {
    searchEl.focus();
  } else if (a.kind === "paste") {
    setStatus("nothing to paste");
  }
}

function targetUriOf(node: NodeRecord | undefined): string | null {
  const tagged = node?.attributes["target"];
  return tagged ? String(fromTagged(tagged)) : null;
}

// --- attribute panel -------------------------------------------------------------

function hidePanel(): void {
  panelEl.classList.add("hidden");
  panelEl.replaceChildren();
}

function showPanel(elementId: string): void {
  const doc = state.view?.doc;
  if (!doc) return;
  const node = doc.nodes.find((n) => n.id === elementId);
  const link = doc.links.find((l) => l.id === elementId);
  const element = node ?? link;
  if (!element) return;

  const title = document.createElement("h2");
  title.textContent = `${elementId} · ${element.typeKey}`;
  const form = document.createElement("div");
  form.className = "fields";

  const schema = node ? nodeTypeOf(state.dsls, node.typeKey)?.attributeSchema ?? [] : [];
  const names = new Set([...schema.map((a) => a.name), ...Object.keys(element.attributes)]);
  for (const name of [...names].sort()) {
    const def = schema.find((a) => a.name === name);
    const kind = def?.kind ?? element.attributes[name]?.kind ?? "text";
    const label = document.createElement("label");
    label.textContent = `${name} (${kind})${def?.required ? " *" : ""}`;
    const input = document.createElement("input");
    input.value = element.attributes[name] ? valueToText(element.attributes[name]) : "";
    input.addEventListener("change", () => {
      try {
        const value = input.value === "" ? null : textToValue(input.value, kind);
        void applyCommands([{ op: "setAttribute", id: elementId, name, value }]);
      } catch (err) {
        setStatus(String(err), true);
      }
    });
    label.appendChild(input);
    form.appendChild(label);
  }

  const close = document.createElement("button");
  close.textContent = "Close";
  close.addEventListener("click", hidePanel);
  panelEl.replaceChildren(title, form, close);
  panelEl.classList.remove("hidden");
}

// --- replay ------------------------------------------------------------------------

const replay = new ReplayController(client, (entry) => {
  const kind = entry.event.kind;
  if (kind === "highlight" && typeof entry.event["nodeId"] === "string") {
    flash(entry.event["nodeId"] as string);
  } else if (kind === "traverse" && typeof entry.event["linkId"] === "string") {
    flash(entry.event["linkId"] as string);
  }
});

function flash(elementId: string): void {
  state.highlighted.add(elementId);
  rebuildScene();
  draw();
  setTimeout(() => {
    state.highlighted.delete(elementId);
    rebuildScene();
    draw();
  }, 350 / replay.speed);
}

async function runAndReplay(): Promise<void> {
  if (!state.view) return;
  try {
    setStatus("running dataflow…");
    const { timeline } = await replay.replayRun(state.view.uri);
    setStatus(`replaying · ${timeline.totalMs} ms`);
    await replay.finished;
    setStatus("replay finished");
  } catch (err) {
    if (err instanceof KernelApiError) {
      const terminal = (err.detail["terminal"] ?? {}) as { error?: { nodeId?: string; message?: string } };
      const nodeId = terminal.error?.nodeId ?? (err.detail["nodeIds"] as string[] | undefined)?.join(", ");
      if (nodeId) {
        for (const id of String(nodeId).split(", ")) state.highlighted.add(id);
        rebuildScene();
        draw();
      }
      setStatus(`run failed: ${err.detail.message}`, true);
    } else {
      setStatus(String(err), true);
    }
  }
}

// --- pointer handling ---------------------------------------------------------------

let dragging: { kind: "pan"; lastX: number; lastY: number } | { kind: "node"; id: string; lastX: number; lastY: number } | null = null;

canvas.addEventListener("pointerdown", (ev) => {
  hideMenu();
  if (ev.button === 2) return;
  const world = screenToWorld(state.transform, ev.offsetX, ev.offsetY);
  const hit = hitTest(state.scene, world.x, world.y);

  if (state.pendingLinkFrom && hit.kind === "node") {
    const from = state.pendingLinkFrom;
    state.pendingLinkFrom = null;
    const linkTypes = state.dsls.flatMap((d) => d.linkTypes);
    const typeKey = linkTypes[0]?.key;
    if (typeKey) {
      void applyCommands([{ op: "createLink", spec: { typeKey, fromNodeId: from, toNodeId: hit.id } }]);
    }
    return;
  }

  if (hit.kind === "node") {
    state.view?.selection.clear();
    state.view?.selection.add(hit.id);
    dragging = { kind: "node", id: hit.id, lastX: ev.offsetX, lastY: ev.offsetY };
  } else if (hit.kind === "link") {
    state.view?.selection.clear();
    state.view?.selection.add(hit.id);
    dragging = null;
  } else {
    state.view?.selection.clear();
    dragging = { kind: "pan", lastX: ev.offsetX, lastY: ev.offsetY };
  }
  rebuildScene();
  draw();
  canvas.setPointerCapture(ev.pointerId);
});

canvas.addEventListener("pointermove", (ev) => {
  if (!dragging) return;
  const dx = ev.offsetX - dragging.lastX;
  const dy = ev.offsetY - dragging.lastY;
  dragging.lastX = ev.offsetX;
  dragging.lastY = ev.offsetY;
  if (dragging.kind === "pan") {
    state.transform = panBy(state.transform, dx, dy);
    draw();
  } else {
    const doc = state.view?.doc;
    const node = doc?.nodes.find((n) => n.id === (dragging as { id: string }).id);
    if (node) {
      node.geometry.x += dx / state.transform.zoom;
      node.geometry.y += dy / state.transform.zoom;
      rebuildScene();
      draw();
    }
  }
});

canvas.addEventListener("pointerup", (ev) => {
  if (dragging?.kind === "node") {
    const doc = state.view?.doc;
    const node = doc?.nodes.find((n) => n.id === (dragging as { id: string }).id);
    if (node) {
      void applyCommands([{ op: "moveNode", id: node.id, x: node.geometry.x, y: node.geometry.y }]);
    }
  }
  dragging = null;
  canvas.releasePointerCapture(ev.pointerId);
});

canvas.addEventListener("wheel", (ev) => {
  ev.preventDefault();
  const factor = ev.deltaY < 0 ? 1.1 : 1 / 1.1;
  state.transform = zoomAt(state.transform, ev.offsetX, ev.offsetY, factor);
  draw();
}, { passive: false });

canvas.addEventListener("contextmenu", (ev) => {
  ev.preventDefault();
  const world = screenToWorld(state.transform, ev.offsetX, ev.offsetY);
  showMenu(ev.offsetX, ev.offsetY, hitTest(state.scene, world.x, world.y));
});

// --- toolbar ---------------------------------------------------------------------------

document.getElementById("run")!.addEventListener("click", () => void runAndReplay());
document.getElementById("speed")!.addEventListener("change", (ev) => {
  const factor = Number((ev.target as HTMLSelectElement).value);
  void replay.setSpeed(factor);
});
document.getElementById("stop")!.addEventListener("click", () => replay.stop());

searchEl.addEventListener("keydown", (ev) => {
  if (ev.key !== "Enter" || !state.view) return;
  void (async () => {
    try {
      const ids = await client.search(state.view!.uri, searchEl.value);
      state.view!.selection = new Set(ids);
      rebuildScene();
      draw();
      setStatus(`${ids.length} nodes match`);
    } catch (err) {
      if (err instanceof KernelApiError) setStatus(`${err.detail.error}: ${err.detail.message}`, true);
    }
  })();
});

workspacesEl.addEventListener("change", () => void openWorkspace(workspacesEl.value));

async function boot(): Promise<void> {
  window.addEventListener("resize", resize);
  resize();
  try {
    const index = await client.listWorkspaces();
    workspacesEl.replaceChildren(
      ...index.entries.map((entry) => {
        const option = document.createElement("option");
        option.value = entry.uri;
        option.textContent = `${entry.title || entry.uri} (${entry.nodeCount})`;
        return option;
      }),
    );
    const session = await client.getSession();
    const last = session.history[session.historyCursor]?.uri ?? index.entries[0]?.uri;
    if (last) {
      await openWorkspace(last, false);
    } else {
      setStatus("no workspaces yet — PUT one via the API to begin");
    }
  } catch (err) {
    setStatus(`startup failed: ${(err as Error).message}`, true);
  }
}

void boot();
