import { afterEach, describe, expect, it, vi } from "vitest";

import { KernelClient } from "../src/api.js";
import { CanvasView, ConflictError } from "../src/batch.js";
import type { WorkspaceDoc } from "../src/model.js";

function docAt(revision: number, nodeIds: string[]): WorkspaceDoc {
  return {
    uri: "proj/demo",
    title: "Demo",
    revision,
    dslRefs: ["dsl:test"],
    viewport: { panX: 0, panY: 0, zoom: 1 },
    nodes: nodeIds.map((id) => ({
      id,
      typeKey: "note",
      label: id,
      attributes: {},
      geometry: { x: 0, y: 0, w: 100, h: 50 },
      createdAt: "",
      modifiedAt: "",
    })),
    links: [],
  };
}

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("CanvasView.apply", () => {
  it("sends one batch with If-Match and refreshes the document", async () => {
    const calls: { url: string; init: RequestInit | undefined }[] = [];
    let revision = 0;
    vi.stubGlobal("fetch", async (url: RequestInfo | URL, init?: RequestInit) => {
      const path = String(url);
      calls.push({ url: path, init });
      if (path.endsWith("/commands")) {
        expect((init?.headers as Record<string, string>)["If-Match"]).toBe("0");
        revision = 1;
        return jsonResponse(200, { revision: 1, results: [{ nodeId: "a" }] });
      }
      return jsonResponse(200, docAt(revision, revision ? ["a"] : []));
    });

    const view = new CanvasView(new KernelClient("http://x"), "proj/demo");
    await view.load();
    const outcome = await view.apply([{ op: "createNode", spec: { typeKey: "note" } }]);
    expect(outcome.replayed).toBe(false);
    expect(outcome.doc.revision).toBe(1);
    expect(outcome.results).toEqual([{ nodeId: "a" }]);
    expect(view.pending).toEqual([]);
  });

  it("on RevisionConflict refetches and replays the batch once", async () => {
    let serverRevision = 5; // someone else already advanced it
    const batches: string[] = [];
    vi.stubGlobal("fetch", async (url: RequestInfo | URL, init?: RequestInit) => {
      const path = String(url);
      if (path.endsWith("/commands")) {
        const ifMatch = (init?.headers as Record<string, string>)["If-Match"];
        batches.push(ifMatch);
        if (Number(ifMatch) !== serverRevision) {
          return jsonResponse(409, {
            error: "RevisionConflict",
            message: "stale",
            expectedRevision: Number(ifMatch),
            actualRevision: serverRevision,
          });
        }
        serverRevision += 1;
        return jsonResponse(200, { revision: serverRevision, results: [{ nodeId: "a" }] });
      }
      return jsonResponse(200, docAt(serverRevision, []));
    });

    const view = new CanvasView(new KernelClient("http://x"), "proj/demo");
    // stale local copy: pretend we loaded before the other writer
    await view.load();
    view.doc!.revision = 4;
    const outcome = await view.apply([{ op: "createNode", spec: { typeKey: "note" } }]);
    expect(outcome.replayed).toBe(true);
    expect(batches).toEqual(["4", "5"]);
    expect(view.doc!.revision).toBe(6);
  });

  it("surfaces a ConflictError when the replay also fails", async () => {
    vi.stubGlobal("fetch", async (url: RequestInfo | URL) => {
      const path = String(url);
      if (path.endsWith("/commands")) {
        return jsonResponse(409, { error: "RevisionConflict", message: "still stale" });
      }
      return jsonResponse(200, docAt(1, []));
    });
    const view = new CanvasView(new KernelClient("http://x"), "proj/demo");
    await view.load();
    await expect(view.apply([{ op: "deleteNode", id: "a", cascade: false }])).rejects.toBeInstanceOf(
      ConflictError,
    );
  });

  it("passes non-conflict errors through untouched", async () => {
    vi.stubGlobal("fetch", async (url: RequestInfo | URL) => {
      const path = String(url);
      if (path.endsWith("/commands")) {
        return jsonResponse(422, { error: "CommandFailed", message: "nope", index: 0 });
      }
      return jsonResponse(200, docAt(0, []));
    });
    const view = new CanvasView(new KernelClient("http://x"), "proj/demo");
    await view.load();
    await expect(view.apply([{ op: "deleteLink", id: "zz" }])).rejects.toMatchObject({
      detail: { error: "CommandFailed", index: 0 },
    });
  });
});
