// Collapsible rendering of the merge-tree document served at /hierarchy:
// nested nodes, each internal node a toggle with its merge height, leaves
// colored by their category.

import type { TreeNode } from "./api.js";
import { categoryColor } from "./palette.js";

export function countInternal(node: TreeNode): number {
  if (!node.children) return 0;
  let total = 1;
  for (const child of node.children) total += countInternal(child);
  return total;
}

export function collectLeaves(node: TreeNode): string[] {
  if (!node.children) return node.name === undefined ? [] : [node.name];
  const names: string[] = [];
  for (const child of node.children) names.push(...collectLeaves(child));
  return names;
}

function escapeHtml(value: string): string {
  return value
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/**
 * Renders the tree and returns the node table keyed by the data-node-id
 * attribute, so click handlers can map elements back to subtrees.
 */
export function renderDendrogram(
  root: HTMLElement,
  tree: TreeNode,
  categoryOf: Map<string, string>,
  categoryOrder: string[],
): Map<string, TreeNode> {
  const table = new Map<string, TreeNode>();
  let nextId = 0;

  function render(node: TreeNode): string {
    const id = String(nextId++);
    table.set(id, node);
    if (!node.children) {
      const name = node.name ?? "";
      const category = categoryOf.get(name) ?? "";
      const color = categoryColor(category, categoryOrder);
      return `
        <div class="tree-leaf" data-node-id="${id}" data-height="${node.height}">
          <span class="leaf-dot" style="background:${color}"></span>
          <span class="node-label" data-node-id="${id}">${escapeHtml(name)}</span>
        </div>`;
    }
    const children = node.children.map(render).join("");
    return `
      <div class="tree-node" data-node-id="${id}" data-height="${node.height}">
        <div class="tree-head">
          <button class="tree-toggle" data-node-id="${id}" aria-expanded="true">&#9662;</button>
          <span class="node-label" data-node-id="${id}">merge @ ${node.height.toFixed(3)}</span>
        </div>
        <div class="tree-children">${children}</div>
      </div>`;
  }

  root.innerHTML = render(tree);

  for (const button of root.querySelectorAll<HTMLButtonElement>(".tree-toggle")) {
    button.addEventListener("click", () => {
      const holder = button.closest(".tree-node") as HTMLElement | null;
      if (!holder) return;
      const children = holder.querySelector(":scope > .tree-children") as HTMLElement | null;
      if (!children) return;
      const collapsed = children.style.display === "none";
      children.style.display = collapsed ? "" : "none";
      button.setAttribute("aria-expanded", String(collapsed));
      button.innerHTML = collapsed ? "&#9662;" : "&#9656;";
    });
  }
  return table;
}
