/** Schema inspector: the GET /schema markdown split into navigable
 * sections with a sidebar and a search box that marks matches. */

import { renderMarkdown } from "./markdown.js";
import { escapeHtml } from "./sql.js";

export interface SchemaSection {
  id: string;
  title: string;
  /** the `# ` part of the document this section belongs to */
  group: string;
  body: string;
  isTable: boolean;
}

const TABLE_HEADING = /^T_\w+\b/;

export function parseSchemaSections(markdown: string): SchemaSection[] {
  const sections: SchemaSection[] = [];
  let group = "";
  let current: SchemaSection | null = null;
  for (const line of markdown.split("\n")) {
    const top = line.match(/^#\s+(.*)$/);
    if (top) {
      group = top[1].trim();
      current = null;
      continue;
    }
    const heading = line.match(/^##\s+(.*)$/);
    if (heading) {
      const title = heading[1].trim();
      current = {
        id: `section-${sections.length}`,
        title,
        group,
        body: "",
        isTable: TABLE_HEADING.test(title),
      };
      sections.push(current);
      continue;
    }
    if (current) current.body += line + "\n";
  }
  return sections;
}

/** Wrap query matches in <mark>, touching text nodes only so markup
 * inside the rendered section stays intact. */
export function markMatches(element: HTMLElement, query: string): number {
  if (!query) return 0;
  const needle = query.toLowerCase();
  let hits = 0;
  const walk = (node: Node) => {
    if (node.nodeType === 3) {
      const value = node.nodeValue ?? "";
      const pieces: (string | HTMLElement)[] = [];
      let cursor = 0;
      let at = value.toLowerCase().indexOf(needle);
      while (at !== -1) {
        pieces.push(value.slice(cursor, at));
        const mark = document.createElement("mark");
        mark.textContent = value.slice(at, at + query.length);
        pieces.push(mark);
        cursor = at + query.length;
        at = value.toLowerCase().indexOf(needle, cursor);
        hits += 1;
      }
      if (pieces.length === 0) return;
      pieces.push(value.slice(cursor));
      const parent = node.parentNode!;
      for (const piece of pieces) {
        parent.insertBefore(
          typeof piece === "string" ? document.createTextNode(piece) : piece,
          node,
        );
      }
      parent.removeChild(node);
      return;
    }
    // static snapshot; marking mutates childNodes in place
    for (const child of Array.from(node.childNodes)) walk(child);
  };
  walk(element);
  return hits;
}

export interface SchemaViewState {
  query: string;
  activeSection: string | null;
}

export function renderSchemaExplorer(
  markdown: string,
  state: SchemaViewState,
): HTMLElement {
  const container = document.createElement("div");
  container.className = "schema-explorer";

  if (!markdown.trim()) {
    container.innerHTML = `<p class="empty-state">The schema endpoint returned an empty document.</p>`;
    return container;
  }

  const sections = parseSchemaSections(markdown);
  const matched = new Set<string>();

  const panels = document.createElement("div");
  panels.className = "schema-sections";
  for (const section of sections) {
    const panel = document.createElement("section");
    panel.className = "schema-section";
    panel.id = section.id;
    panel.innerHTML =
      `<h2>${escapeHtml(section.title)}</h2>` + renderMarkdown(section.body);
    if (state.query && markMatches(panel, state.query) > 0) {
      matched.add(section.id);
      panel.classList.add("has-matches");
    }
    const visible = state.query
      ? matched.has(section.id)
      : state.activeSection === null || state.activeSection === section.id;
    if (!visible) panel.classList.add("hidden");
    panels.appendChild(panel);
  }

  const nav = document.createElement("nav");
  nav.className = "schema-nav";
  const items = sections
    .map((section) => {
      const classes = ["schema-nav-item"];
      if (section.isTable) classes.push("table-entry");
      if (section.id === state.activeSection) classes.push("active");
      if (matched.has(section.id)) classes.push("matched");
      return (
        `<li><a href="#${section.id}" class="${classes.join(" ")}" data-section="${section.id}">` +
        `${escapeHtml(section.title)}</a></li>`
      );
    })
    .join("");
  nav.innerHTML = `<ul>${items}</ul>`;

  container.appendChild(nav);
  container.appendChild(panels);
  return container;
}
