// Optimistic mutation pipeline: every edit becomes a command batch sent with
// If-Match. On RevisionConflict the view refetches the document and replays
// the pending batch once; a second conflict (or a command failure against
// the fresh document) surfaces to the caller instead of diverging silently.

import { KernelApiError, type KernelClient } from "./api.js";
import type { MutationCommand, WorkspaceDoc } from "./model.js";

export interface ApplyOutcome {
  doc: WorkspaceDoc;
  results: Record<string, unknown>[];
  replayed: boolean;
}

export class ConflictError extends Error {
  constructor(readonly cause_: KernelApiError) {
    super(`unresolvable conflict: ${cause_.message}`);
  }
}

export class CanvasView {
  doc: WorkspaceDoc | null = null;
  selection = new Set<string>();
  pending: MutationCommand[] = [];

  constructor(
    readonly client: KernelClient,
    readonly uri: string,
  ) {}

  get revision(): number {
    if (!this.doc) throw new Error("workspace not loaded");
    return this.doc.revision;
  }

  async load(): Promise<WorkspaceDoc> {
    this.doc = await this.client.getWorkspace(this.uri);
    return this.doc;
  }

  /** Queue commands and flush them as one atomic batch. */
  async apply(commands: MutationCommand[]): Promise<ApplyOutcome> {
    if (!this.doc) await this.load();
    this.pending.push(...commands);
    return this.flush();
  }

  private async flush(): Promise<ApplyOutcome> {
    const batch = this.pending;
    this.pending = [];
    try {
      const reply = await this.client.sendCommands(this.uri, batch, this.revision);
      await this.load();
      return { doc: this.doc!, results: reply.results, replayed: false };
    } catch (err) {
      if (!(err instanceof KernelApiError) || !err.isRevisionConflict) throw err;
      // someone else won the revision: refetch, replay once
      await this.load();
      try {
        const reply = await this.client.sendCommands(this.uri, batch, this.revision);
        await this.load();
        return { doc: this.doc!, results: reply.results, replayed: true };
      } catch (second) {
        if (second instanceof KernelApiError) throw new ConflictError(second);
        throw second;
      }
    }
  }
}
