/** Small markdown renderer covering what the service actually emits:
 * headings, fenced code, pipe tables, bullet lists, inline marks.
 * Everything is HTML-escaped before any markup is applied. */

import { escapeHtml, highlightSql } from "./sql.js";

function inline(text: string): string {
  let out = escapeHtml(text);
  out = out.replace(/`([^`]+)`/g, "<code>$1</code>");
  out = out.replace(/\*\*([^*]+)\*\*/g, "<strong>$1</strong>");
  out = out.replace(/\*([^*]+)\*/g, "<em>$1</em>");
  return out;
}

function tableRow(line: string, tag: "td" | "th"): string {
  const cells = line.replace(/^\|/, "").replace(/\|$/, "").split("|");
  const body = cells.map((c) => `<${tag}>${inline(c.trim())}</${tag}>`).join("");
  return `<tr>${body}</tr>`;
}

const isTableLine = (line: string) => line.trimStart().startsWith("|");
const isSeparatorLine = (line: string) => /^\s*\|[\s:|-]+\|?\s*$/.test(line);

export function renderMarkdown(source: string): string {
  const lines = source.split("\n");
  const html: string[] = [];
  let i = 0;

  while (i < lines.length) {
    const line = lines[i];

    if (line.trim() === "") {
      i++;
      continue;
    }

    const fence = line.match(/^```(\w*)\s*$/);
    if (fence) {
      const lang = fence[1];
      const body: string[] = [];
      i++;
      while (i < lines.length && !lines[i].startsWith("```")) {
        body.push(lines[i]);
        i++;
      }
      i++; // closing fence (or end of input)
      const code = body.join("\n");
      const rendered = lang === "sql" ? highlightSql(code) : escapeHtml(code);
      html.push(`<pre><code class="lang-${lang || "text"}">${rendered}</code></pre>`);
      continue;
    }

    const heading = line.match(/^(#{1,6})\s+(.*)$/);
    if (heading) {
      const level = heading[1].length;
      html.push(`<h${level}>${inline(heading[2])}</h${level}>`);
      i++;
      continue;
    }

    if (/^\s*---+\s*$/.test(line)) {
      html.push("<hr>");
      i++;
      continue;
    }

    if (isTableLine(line)) {
      const block: string[] = [];
      while (i < lines.length && isTableLine(lines[i])) {
        block.push(lines[i]);
        i++;
      }
      const rows: string[] = [];
      block.forEach((row, n) => {
        if (n === 0) {
          rows.push(tableRow(row, "th"));
        } else if (!isSeparatorLine(row)) {
          rows.push(tableRow(row, "td"));
        }
      });
      html.push(`<table>${rows.join("")}</table>`);
      continue;
    }

    if (/^\s*[-*]\s+/.test(line)) {
      const items: string[] = [];
      while (i < lines.length && /^\s*[-*]\s+/.test(lines[i])) {
        items.push(`<li>${inline(lines[i].replace(/^\s*[-*]\s+/, ""))}</li>`);
        i++;
      }
      html.push(`<ul>${items.join("")}</ul>`);
      continue;
    }

    // paragraph: consume until a blank line or a structural line
    const para: string[] = [];
    while (
      i < lines.length &&
      lines[i].trim() !== "" &&
      !lines[i].startsWith("```") &&
      !/^#{1,6}\s/.test(lines[i]) &&
      !isTableLine(lines[i]) &&
      !/^\s*[-*]\s+/.test(lines[i])
    ) {
      para.push(lines[i]);
      i++;
    }
    html.push(`<p>${inline(para.join(" "))}</p>`);
  }

  return html.join("\n");
}
