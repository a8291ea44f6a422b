import { describe, expect, it } from "vitest";

import { renderMarkdown } from "../src/markdown.js";

describe("renderMarkdown", () => {
  it("renders headings at their level", () => {
    expect(renderMarkdown("## Concepts")).toBe("<h2>Concepts</h2>");
    expect(renderMarkdown("#### deep")).toBe("<h4>deep</h4>");
  });

  it("renders paragraphs and inline marks", () => {
    const html = renderMarkdown("plain **bold** and *soft* with `code`");
    expect(html).toBe(
      "<p>plain <strong>bold</strong> and <em>soft</em> with <code>code</code></p>",
    );
  });

  it("joins wrapped lines into one paragraph", () => {
    expect(renderMarkdown("one\ntwo")).toBe("<p>one two</p>");
  });

  it("highlights sql fences and escapes other fences", () => {
    const sql = renderMarkdown("```sql\nSELECT 1\n```");
    expect(sql).toContain('<span class="sql-keyword">SELECT</span>');
    const other = renderMarkdown("```\n<b>raw</b>\n```");
    expect(other).toContain("&lt;b&gt;raw&lt;/b&gt;");
  });

  it("survives an unterminated fence", () => {
    expect(renderMarkdown("```sql\nSELECT 1")).toContain("sql-keyword");
  });

  it("renders pipe tables with a header row", () => {
    const html = renderMarkdown("| a | b |\n| --- | --- |\n| 1 | 2 |");
    expect(html).toBe(
      "<table><tr><th>a</th><th>b</th></tr><tr><td>1</td><td>2</td></tr></table>",
    );
  });

  it("keeps pipes inside list items as text", () => {
    const html = renderMarkdown("- **Status** (TEXT) | open or shipped");
    expect(html).toBe("<ul><li><strong>Status</strong> (TEXT) | open or shipped</li></ul>");
  });

  it("renders bullet lists", () => {
    expect(renderMarkdown("- one\n- two")).toBe("<ul><li>one</li><li>two</li></ul>");
  });

  it("renders horizontal rules", () => {
    expect(renderMarkdown("---")).toBe("<hr>");
  });

  it("escapes raw html in prose", () => {
    expect(renderMarkdown("<img src=x onerror=alert(1)>")).not.toContain("<img");
  });

  it("renders the deterministic fallback answer shape end to end", () => {
    const answer = [
      "I could not generate a narrative answer, so here is the result directly.",
      "",
      "```sql",
      "SELECT COUNT(*) AS unit_count FROM T_A",
      "```",
      "",
      "| unit_count |",
      "| --- |",
      "| 12 |",
      "",
      "(1 row shown.)",
    ].join("\n");
    const html = renderMarkdown(answer);
    expect(html).toContain("sql-keyword");
    expect(html).toContain("<th>unit_count</th>");
    expect(html).toContain("<td>12</td>");
    expect(html).toContain("<p>(1 row shown.)</p>");
  });
});
