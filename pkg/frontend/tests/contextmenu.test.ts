import { describe, expect, it } from "vitest";

import { buildContextMenu } from "../src/contextmenu.js";
import type { DslDefinition, NodeRecord } from "../src/model.js";

const dsls: DslDefinition[] = [
  {
    uri: "dsl:flow",
    name: "Flow",
    version: "1",
    nodeTypes: [
      {
        key: "processor",
        displayName: "Processor",
        visual: { shape: "rectangle", fillColor: "#B3E5FC", labelTemplate: "${label}" },
        attributeSchema: [],
        ports: [],
        allowsContainment: false,
      },
    ],
    linkTypes: [],
  },
  {
    uri: "builtin:workspace-nav",
    name: "Nav",
    version: "1",
    nodeTypes: [
      {
        key: "workspace-link",
        displayName: "Workspace Link",
        visual: { shape: "diamond", fillColor: "#E1BEE7", labelTemplate: "${label}" },
        attributeSchema: [{ name: "target", kind: "uri", required: true }],
        ports: [],
        allowsContainment: false,
      },
    ],
    linkTypes: [],
  },
];

function nodeOf(typeKey: string): NodeRecord {
  return {
    id: "n1",
    typeKey,
    label: "n1",
    attributes: {},
    geometry: { x: 0, y: 0, w: 10, h: 10 },
    createdAt: "",
    modifiedAt: "",
  };
}

describe("buildContextMenu", () => {
  it("background lists every DSL node type plus paste and search", () => {
    const menu = buildContextMenu({ kind: "background" }, dsls);
    expect(menu.map((m) => m.id)).toEqual([
      "create:processor",
      "create:workspace-link",
      "paste",
      "search",
    ]);
    expect(menu[0].action).toEqual({ kind: "create-node", typeKey: "processor" });
  });

  it("node menu: edit, create-link, delete", () => {
    const menu = buildContextMenu({ kind: "node", id: "n1" }, dsls, nodeOf("processor"));
    expect(menu.map((m) => m.id)).toEqual(["edit", "link", "delete"]);
  });

  it("workspace-link nodes offer open", () => {
    const menu = buildContextMenu({ kind: "node", id: "n1" }, dsls, nodeOf("workspace-link"));
    expect(menu[0].id).toBe("open");
    expect(menu[0].action).toEqual({ kind: "open-workspace", nodeId: "n1" });
  });

  it("link menu: edit and delete", () => {
    const menu = buildContextMenu({ kind: "link", id: "l1" }, dsls);
    expect(menu.map((m) => m.action.kind)).toEqual(["edit-attributes", "delete-link"]);
  });
});
