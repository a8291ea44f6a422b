import { describe, expect, it } from "vitest";

import { escapeHtml, highlightSql, tokenizeSql } from "../src/sql.js";

const types = (sql: string) =>
  tokenizeSql(sql)
    .filter((t) => t.type !== "whitespace")
    .map((t) => `${t.type}:${t.value}`);

describe("tokenizeSql", () => {
  it("classifies keywords, identifiers and numbers", () => {
    expect(types("SELECT UnitName FROM T_A LIMIT 3")).toEqual([
      "keyword:SELECT",
      "identifier:UnitName",
      "keyword:FROM",
      "identifier:T_A",
      "keyword:LIMIT",
      "number:3",
    ]);
  });

  it("keywords are case-insensitive", () => {
    expect(types("select 1")[0]).toBe("keyword:select");
  });

  it("treats aggregate names as functions only when called", () => {
    expect(types("SELECT COUNT(*) AS count FROM t")).toContain("function:COUNT");
    // bare word: a column happening to be named like a function
    expect(types("SELECT count FROM t")).toContain("identifier:count");
  });

  it("reassembles to the original text", () => {
    const sql = "SELECT a, b -- trailing\nFROM t WHERE x >= 10.5 AND y = 'it''s'";
    expect(tokenizeSql(sql).map((t) => t.value).join("")).toBe(sql);
  });

  it("handles doubled-quote escapes inside string literals", () => {
    const tokens = tokenizeSql("SELECT 'it''s fine'");
    const literal = tokens.find((t) => t.type === "string");
    expect(literal?.value).toBe("'it''s fine'");
  });

  it("double quotes delimit identifiers", () => {
    const tokens = tokenizeSql('SELECT "weird name" FROM t');
    expect(tokens.find((t) => t.value === '"weird name"')?.type).toBe("identifier");
  });

  it("captures line and block comments", () => {
    expect(types("-- note\nSELECT 1")[0]).toBe("comment:-- note");
    expect(types("/* multi\nline */ SELECT 1")[0]).toBe("comment:/* multi\nline */");
  });

  it("tolerates an unterminated block comment", () => {
    const tokens = tokenizeSql("SELECT 1 /* oops");
    expect(tokens[tokens.length - 1].type).toBe("comment");
  });

  it("groups comparison operators", () => {
    expect(types("a <= b")).toEqual(["identifier:a", "operator:<=", "identifier:b"]);
    expect(types("a || b")).toContain("operator:||");
  });
});

describe("highlightSql", () => {
  it("wraps keywords in spans and leaves identifiers bare", () => {
    const html = highlightSql("SELECT UnitName FROM T_A");
    expect(html).toContain('<span class="sql-keyword">SELECT</span>');
    expect(html).toContain("UnitName");
    expect(html).not.toContain('<span class="sql-identifier">');
  });

  it("escapes html inside string literals", () => {
    const html = highlightSql("SELECT '<script>' FROM t");
    expect(html).not.toContain("<script>");
    expect(html).toContain("&lt;script&gt;");
  });
});

describe("escapeHtml", () => {
  it("neutralizes every metacharacter", () => {
    expect(escapeHtml(`<a href="x">&'</a>`)).toBe(
      "&lt;a href=&quot;x&quot;&gt;&amp;&#039;&lt;/a&gt;",
    );
  });
});
