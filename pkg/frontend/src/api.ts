// HTTP client for the kernel API. Every mutation is a command batch sent
// with If-Match; the caller owns conflict recovery (see batch.ts).

import type {
  DslDefinition,
  ExecutionTrace,
  MutationCommand,
  ScriptStep,
  Session,
  Timeline,
  WorkspaceDoc,
} from "./model.js";

export interface ApiError {
  status: number;
  error: string;
  message: string;
  [key: string]: unknown;
}

export class KernelApiError extends Error {
  readonly detail: ApiError;

  constructor(detail: ApiError) {
    super(`${detail.error}: ${detail.message}`);
    this.detail = detail;
  }

  get isRevisionConflict(): boolean {
    return this.detail.error === "RevisionConflict";
  }
}

export interface CommandResult {
  revision: number;
  results: Record<string, unknown>[];
}

export interface RunResult {
  runId: string;
  outputs: Record<string, unknown[]>;
  terminal: unknown;
}

export interface IndexEntry {
  uri: string;
  title: string;
  nodeCount: number;
  linkCount: number;
  modifiedAt: string;
}

async function request<T>(
  base: string,
  method: string,
  path: string,
  body?: unknown,
  headers?: Record<string, string>,
): Promise<T> {
  const response = await fetch(base + path, {
    method,
    headers: { "Content-Type": "application/json", ...(headers ?? {}) },
    body: body === undefined ? undefined : JSON.stringify(body),
  });
  const text = await response.text();
  const parsed = text ? JSON.parse(text) : null;
  if (!response.ok) {
    throw new KernelApiError({ status: response.status, ...(parsed ?? { error: "HttpError", message: text }) });
  }
  return parsed as T;
}

export class KernelClient {
  constructor(readonly base: string = "") {}

  listWorkspaces(): Promise<{ entries: IndexEntry[] }> {
    return request(this.base, "GET", "/workspaces");
  }

  getWorkspace(uri: string): Promise<WorkspaceDoc> {
    return request(this.base, "GET", `/workspaces/${uri}`);
  }

  putWorkspace(uri: string, doc: WorkspaceDoc, revision?: number): Promise<{ revision: number }> {
    const headers = revision === undefined ? undefined : { "If-Match": String(revision) };
    return request(this.base, "PUT", `/workspaces/${uri}`, doc, headers);
  }

  sendCommands(uri: string, commands: MutationCommand[], revision: number): Promise<CommandResult> {
    return request(this.base, "POST", `/workspaces/${uri}/commands`, { commands }, {
      "If-Match": String(revision),
    });
  }

  runDataflow(uri: string, inputs: Record<string, unknown> = {}, maxTicks = 1000): Promise<RunResult> {
    return request(this.base, "POST", `/workspaces/${uri}/run`, { inputs, maxTicks });
  }

  getTrace(runId: string): Promise<ExecutionTrace> {
    return request(this.base, "GET", `/runs/${runId}/trace`);
  }

  search(uri: string, query: string): Promise<string[]> {
    return request(this.base, "GET", `/workspaces/${uri}/search?q=${encodeURIComponent(query)}`);
  }

  compileTimeline(steps: ScriptStep[]): Promise<Timeline> {
    return request(this.base, "POST", "/animations/compile", { steps });
  }

  getSession(): Promise<Session> {
    return request(this.base, "GET", "/session");
  }

  putSession(session: Session): Promise<Session> {
    return request(this.base, "PUT", "/session", session);
  }

  navigate(uri: string): Promise<Session> {
    return request(this.base, "POST", "/session/navigate", { uri });
  }

  getDsl(uri: string): Promise<DslDefinition> {
    return request(this.base, "GET", `/dsls/${uri}`);
  }

  /** Resolve every DSL a workspace references; unknown refs are skipped and
   * their elements fall back to the unresolved style. */
  async resolveDsls(doc: WorkspaceDoc): Promise<DslDefinition[]> {
    const out: DslDefinition[] = [];
    for (const ref of doc.dslRefs) {
      try {
        out.push(await this.getDsl(ref));
      } catch {
        // keep rendering; validation will surface the missing DSL
      }
    }
    return out;
  }
}
