// The single contextual popup menu: its contents are a pure function of the
// click target and the loaded DSLs.

import type { DslDefinition, NodeRecord } from "./model.js";
import type { Hit } from "./scene.js";

export interface MenuAction {
  id: string;
  label: string;
  // what main.ts should do; parameters ride along
  action:
    | { kind: "create-node"; typeKey: string }
    | { kind: "paste" }
    | { kind: "search" }
    | { kind: "edit-attributes"; elementId: string }
    | { kind: "delete-node"; nodeId: string }
    | { kind: "create-link"; fromNodeId: string }
    | { kind: "open-workspace"; nodeId: string }
    | { kind: "delete-link"; linkId: string }
    | { kind: "edit-link"; linkId: string };
}

export function buildContextMenu(
  hit: Hit,
  dsls: DslDefinition[],
  node?: NodeRecord,
): MenuAction[] {
  if (hit.kind === "background") {
    const creations: MenuAction[] = dsls
      .flatMap((d) => d.nodeTypes)
      .map((nt) => ({
        id: `create:${nt.key}`,
        label: `New ${nt.displayName || nt.key}`,
        action: { kind: "create-node", typeKey: nt.key },
      }));
    return [
      ...creations,
      { id: "paste", label: "Paste", action: { kind: "paste" } },
      { id: "search", label: "Search…", action: { kind: "search" } },
    ];
  }
  if (hit.kind === "node") {
    const actions: MenuAction[] = [
      {
        id: "edit",
        label: "Edit attributes",
        action: { kind: "edit-attributes", elementId: hit.id },
      },
      { id: "link", label: "Create link…", action: { kind: "create-link", fromNodeId: hit.id } },
      { id: "delete", label: "Delete", action: { kind: "delete-node", nodeId: hit.id } },
    ];
    if (node?.typeKey === "workspace-link" || node?.aliasOf) {
      actions.unshift({
        id: "open",
        label: "Open workspace",
        action: { kind: "open-workspace", nodeId: hit.id },
      });
    }
    return actions;
  }
  return [
    { id: "edit", label: "Edit attributes", action: { kind: "edit-attributes", elementId: hit.id } },
    { id: "delete", label: "Delete", action: { kind: "delete-link", linkId: hit.id } },
  ];
}
