/** Pure HTML renderers: ViewState in, markup out.
 *
 * Interactive elements carry data-action attributes; the controller wires
 * them up with one delegated listener.  Being string-pure keeps every
 * renderer unit-testable without a DOM.
 */

import type { OntologyView, OperationDict, TreeNode } from "./api.js";
import { hasFocusMarker, isHighlighted, type ViewState } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function attr(value: string): string {
  return escapeHtml(value).replace(/'/g, "&#39;");
}

export function opLabel(op: OperationDict): string {
  const fields = Object.entries(op)
    .filter(([key]) => key !== "type")
    .map(([, value]) => value)
    .join(" ");
  return `${op.type} ${fields}`.trim();
}

function renderNode(
  state: ViewState,
  pane: string,
  node: TreeNode,
  path: string,
): string {
  const key = `${pane}:${path}`;
  const expanded = state.expanded.has(key);
  const hasChildren = node.children.length > 0;
  const toggle = hasChildren
    ? `<button class="twisty" data-action="toggle" data-key="${attr(key)}">${
        expanded ? "▾" : "▸"
      }</button>`
    : `<span class="twisty leaf">·</span>`;
  const highlight = pane === "merged" && isHighlighted(state, node.name) ? " highlight" : "";
  const children =
    hasChildren && expanded
      ? `<ul>${node.children
          .map((child) => renderNode(state, pane, child, `${path}/${child.name}`))
          .join("")}</ul>`
      : "";
  return `<li><span class="tree-name${highlight}">${toggle}${escapeHtml(node.name)}</span>${children}</li>`;
}

export function renderTreePane(state: ViewState, pane: string, onto: OntologyView): string {
  const slots = onto.slots
    .map((slot) => {
      const range = Array.isArray(slot.range) ? slot.range.join(", ") : slot.range;
      const highlight =
        pane === "merged" && isHighlighted(state, slot.name) ? " highlight" : "";
      return `<li class="slot-row${highlight}">${escapeHtml(slot.name)} <small>${escapeHtml(
        slot.domain.join(", "),
      )} → ${escapeHtml(range)}</small></li>`;
    })
    .join("");
  return `
    <section class="pane" data-pane="${attr(pane)}">
      <h2>${escapeHtml(onto.name)}</h2>
      <ul class="tree">${onto.tree
        .map((node) => renderNode(state, pane, node, node.name))
        .join("")}</ul>
      <h3>properties</h3>
      <ul class="slots">${slots || "<li><em>none</em></li>"}</ul>
    </section>`;
}

export function renderSuggestions(state: ViewState): string {
  if (state.suggestions.length === 0) {
    return `<p class="empty">no standing suggestions</p>`;
  }
  const rows = state.suggestions.map((s, index) => {
    const explanations = s.explanations
      .map((e) => `<li class="expl expl-${attr(e.kind)}">${escapeHtml(e.text)}</li>`)
      .join("");
    const focus = hasFocusMarker(s) ? `<span class="focus-marker" title="related to recent operations">●</span>` : "";
    const disabled = state.busy ? " disabled" : "";
    return `
      <li class="suggestion">
        <div class="suggestion-head">
          ${focus}<strong>${escapeHtml(opLabel(s.operation))}</strong>
          <span class="score">${s.score.toFixed(2)}</span>
          <button data-action="accept" data-index="${index}"${disabled}>apply</button>
          <button data-action="dismiss" data-index="${index}"${disabled}>dismiss</button>
        </div>
        <ul class="explanations">${explanations}</ul>
      </li>`;
  });
  return `<ul class="suggestions">${rows.join("")}</ul>`;
}

export function renderConflicts(state: ViewState): string {
  if (state.conflicts.length === 0) {
    return `<p class="empty">no conflicts</p>`;
  }
  const rows = state.conflicts.map((conflict, cIndex) => {
    const disabled = state.busy ? " disabled" : "";
    const resolutions = conflict.resolutions
      .map(
        (resolution, rIndex) =>
          `<button data-action="resolve" data-conflict="${cIndex}" data-resolution="${rIndex}"${disabled}>
             ${escapeHtml(opLabel(resolution))}
           </button>`,
      )
      .join("");
    return `
      <li class="conflict conflict-${attr(conflict.kind)}">
        <strong>${escapeHtml(conflict.kind)}</strong>
        <span class="conflict-detail">${escapeHtml(conflict.detail)}</span>
        <div class="conflict-frames">${escapeHtml(conflict.frames.join(", "))}</div>
        <div class="resolutions">${resolutions || "<em>no automatic resolution</em>"}</div>
      </li>`;
  });
  return `<ul class="conflicts">${rows.join("")}</ul>`;
}

export function renderHistory(state: ViewState): string {
  const items = state.opLog
    .map((op, index) => `<li>${index + 1}. ${escapeHtml(opLabel(op))}</li>`)
    .join("");
  const disabled = state.busy || state.opLog.length === 0 ? " disabled" : "";
  return `
    <div class="history">
      <button data-action="undo"${disabled}>undo last</button>
      <ol>${items || "<li><em>no operations yet</em></li>"}</ol>
    </div>`;
}

export function renderDirectForm(state: ViewState): string {
  const disabled = state.busy ? " disabled" : "";
  return `
    <form class="direct-op" data-action="direct">
      <select name="type">
        <option value="merge-classes">merge-classes</option>
        <option value="merge-slots">merge-slots</option>
        <option value="merge-instances">merge-instances</option>
        <option value="copy-class">copy-class</option>
        <option value="deep-copy-class">deep-copy-class</option>
        <option value="copy-slot">copy-slot</option>
        <option value="create-class">create-class</option>
        <option value="add-superclass">add-superclass</option>
        <option value="rename-frame">rename-frame</option>
      </select>
      <input name="fields" placeholder="a=Src:frame b=Other:frame name=merged" size="48" />
      <button type="submit"${disabled}>apply</button>
    </form>`;
}

export function renderHeader(state: ViewState): string {
  const sources = state.sources
    .map(
      (onto) =>
        `<option value="${attr(onto.name)}"${
          onto.name === state.preferred ? " selected" : ""
        }>${escapeHtml(onto.name)}</option>`,
    )
    .join("");
  const disabled = state.busy ? " disabled" : "";
  return `
    <div class="toolbar">
      <span class="version">state v${state.stateVersion}</span>
      <label>preferred source
        <select data-action="preferred"${disabled}>
          <option value="">(none)</option>${sources}
        </select>
      </label>
      <button data-action="export-canonical"${disabled}>download canonical</button>
      <button data-action="export-owl"${disabled}>download OWL</button>
    </div>`;
}

export function renderApp(state: ViewState): string {
  if (!state.sessionId || !state.merged) {
    return `
      <div class="loader">
        <h1>ontology merge cockpit</h1>
        <form class="upload" data-action="load-sources">
          <p>Pick two or more source OWL files to start a merge session.</p>
          <input type="file" name="sources" multiple accept=".owl,.xml" />
          <button type="submit">load sources</button>
        </form>
        ${state.error ? `<p class="error">${escapeHtml(state.error)}</p>` : ""}
      </div>`;
  }
  const banner = state.error
    ? `<p class="error">${escapeHtml(state.error)}</p>`
    : state.notice
      ? `<p class="notice">${escapeHtml(state.notice)}</p>`
      : "";
  return `
    ${renderHeader(state)}
    ${banner}
    <main class="panes">
      ${state.sources.map((onto, i) => renderTreePane(state, `source${i}`, onto)).join("")}
      ${renderTreePane(state, "merged", state.merged)}
    </main>
    <aside class="side">
      <h2>suggestions</h2>
      ${renderSuggestions(state)}
      <h2>conflicts</h2>
      ${renderConflicts(state)}
      <h2>direct operation</h2>
      ${renderDirectForm(state)}
      <h2>history</h2>
      ${renderHistory(state)}
    </aside>`;
}
