// Wire-format types for the workspace kernel's HTTP API, plus helpers for
// the tagged attribute-value encoding.

export type ValueKind = "text" | "number" | "flag" | "list" | "map" | "uri";

export interface TaggedValue {
  kind: ValueKind;
  value: unknown;
}

export type PlainValue =
  | string
  | number
  | boolean
  | PlainValue[]
  | { [key: string]: PlainValue };

export interface Geometry {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface NodeRecord {
  id: string;
  typeKey: string;
  label: string;
  attributes: Record<string, TaggedValue>;
  geometry: Geometry;
  containerId?: string;
  contentRef?: { mime: string; uri: string };
  aliasOf?: { workspaceUri: string; nodeId: string };
  createdAt: string;
  modifiedAt: string;
}

export interface LinkRecord {
  id: string;
  typeKey: string;
  fromNodeId: string;
  toNodeId: string;
  fromPort?: string;
  toPort?: string;
  label: string;
  attributes: Record<string, TaggedValue>;
}

export interface Viewport {
  panX: number;
  panY: number;
  zoom: number;
}

export interface WorkspaceDoc {
  uri: string;
  title: string;
  revision: number;
  dslRefs: string[];
  viewport: Viewport;
  nodes: NodeRecord[];
  links: LinkRecord[];
}

export interface AttrDef {
  name: string;
  kind: ValueKind;
  required: boolean;
  default?: TaggedValue;
}

export interface NodeTypeDef {
  key: string;
  displayName: string;
  visual: { shape: string; fillColor: string; icon?: string; labelTemplate: string };
  attributeSchema: AttrDef[];
  ports: { name: string; direction: "in" | "out" }[];
  allowsContainment: boolean;
  allowedChildTypeKeys?: string[];
}

export interface LinkTypeDef {
  key: string;
  displayName: string;
  visual: { lineStyle: string; arrowHead: string; color: string };
  sourceTypeKeys: string[] | "*";
  targetTypeKeys: string[] | "*";
  maxOutPerSource?: number;
  maxInPerTarget?: number;
}

export interface DslDefinition {
  uri: string;
  name: string;
  version: string;
  nodeTypes: NodeTypeDef[];
  linkTypes: LinkTypeDef[];
}

export type MutationCommand =
  | { op: "createNode"; spec: Partial<NodeRecord> & { typeKey: string } }
  | { op: "createLink"; spec: Partial<LinkRecord> & { typeKey: string } }
  | { op: "deleteNode"; id: string; cascade: boolean }
  | { op: "deleteLink"; id: string }
  | { op: "setAttribute"; id: string; name: string; value: TaggedValue | null }
  | { op: "moveNode"; id: string; x: number; y: number }
  | { op: "setViewport"; panX: number; panY: number; zoom: number };

export interface TraceEvent {
  tick: number;
  nodeId: string;
  consumed: Record<string, string>;
  consumedVia: Record<string, string>;
  produced: Record<string, string>;
}

export interface ExecutionTrace {
  runId: string;
  events: TraceEvent[];
  terminal: "completed" | "tickLimit" | { error: { nodeId: string; message: string } };
}

export type ScriptStep =
  | { kind: "highlight"; nodeId: string; durationMs: number }
  | { kind: "traverse"; linkId: string; durationMs: number }
  | { kind: "pause"; durationMs: number }
  | { kind: "setSpeed"; factor: number }
  | { kind: "annotate"; nodeId: string; text: string; durationMs: number }
  | { kind: "navigate"; workspaceUri: string }
  | { kind: "speak"; text: string; estimatedMs: number };

export interface TimelineEntry {
  atMs: number;
  event: { kind: string; [key: string]: unknown };
}

export interface Timeline {
  entries: TimelineEntry[];
  totalMs: number;
}

export interface Session {
  sessionId: string;
  openWorkspaces: { uri: string; viewport: Viewport }[];
  history: { uri: string; enteredAt: string }[];
  historyCursor: number;
}

// --- tagged value helpers ----------------------------------------------------

export function fromTagged(tagged: TaggedValue): PlainValue {
  switch (tagged.kind) {
    case "list":
      return (tagged.value as TaggedValue[]).map(fromTagged);
    case "map": {
      const out: Record<string, PlainValue> = {};
      for (const [key, value] of Object.entries(tagged.value as Record<string, TaggedValue>)) {
        out[key] = fromTagged(value);
      }
      return out;
    }
    default:
      return tagged.value as PlainValue;
  }
}

export function toTagged(value: PlainValue, uriHint = false): TaggedValue {
  if (typeof value === "boolean") return { kind: "flag", value };
  if (typeof value === "number") return { kind: "number", value };
  if (typeof value === "string") return { kind: uriHint ? "uri" : "text", value };
  if (Array.isArray(value)) return { kind: "list", value: value.map((v) => toTagged(v)) };
  const out: Record<string, TaggedValue> = {};
  for (const [key, inner] of Object.entries(value)) out[key] = toTagged(inner);
  return { kind: "map", value: out };
}

export function valueToText(tagged: TaggedValue): string {
  switch (tagged.kind) {
    case "text":
    case "uri":
      return String(tagged.value);
    case "number":
      return String(tagged.value);
    case "flag":
      return tagged.value ? "true" : "false";
    default:
      return JSON.stringify(fromTagged(tagged));
  }
}

/** Parse side-panel input text into a tagged value of the schema's kind. */
export function textToValue(text: string, kind: ValueKind): TaggedValue {
  switch (kind) {
    case "number": {
      const parsed = Number(text);
      if (!Number.isFinite(parsed)) throw new Error(`not a finite number: ${text}`);
      return { kind, value: parsed };
    }
    case "flag":
      return { kind, value: text.trim() === "true" };
    case "list":
    case "map":
      return toTagged(JSON.parse(text) as PlainValue);
    case "uri":
      return { kind, value: text };
    default:
      return { kind: "text", value: text };
  }
}
