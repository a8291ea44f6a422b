/** SQL tokenizer and HTML highlighter for the attempt/final cards. */

export interface Token {
  type:
    | "keyword"
    | "function"
    | "string"
    | "number"
    | "comment"
    | "operator"
    | "identifier"
    | "whitespace";
  value: string;
}

const SQL_KEYWORDS = new Set([
  "SELECT", "FROM", "WHERE", "GROUP", "BY", "HAVING", "ORDER", "LIMIT",
  "OFFSET", "AS", "DISTINCT", "ALL",
  "JOIN", "INNER", "LEFT", "RIGHT", "FULL", "OUTER", "CROSS", "ON", "USING",
  "NATURAL",
  "AND", "OR", "NOT", "IN", "LIKE", "GLOB", "BETWEEN", "IS", "NULL",
  "EXISTS", "CASE", "WHEN", "THEN", "ELSE", "END",
  "UNION", "INTERSECT", "EXCEPT", "WITH", "RECURSIVE",
  "CAST", "COLLATE", "ASC", "DESC", "ESCAPE",
  "INSERT", "UPDATE", "DELETE", "CREATE", "DROP", "ALTER", "TABLE", "VIEW",
  "INDEX", "INTO", "VALUES", "SET",
]);

const SQL_FUNCTIONS = new Set([
  "COUNT", "SUM", "AVG", "MIN", "MAX", "TOTAL", "GROUP_CONCAT",
  "ROUND", "ABS", "LENGTH", "UPPER", "LOWER", "TRIM", "LTRIM", "RTRIM",
  "SUBSTR", "REPLACE", "INSTR", "PRINTF", "COALESCE", "IFNULL", "NULLIF",
  "DATE", "TIME", "DATETIME", "JULIANDAY", "STRFTIME",
]);

const isSpace = (ch: string) => /\s/.test(ch);
const isDigit = (ch: string) => ch >= "0" && ch <= "9";
const isWordStart = (ch: string) => /[A-Za-z_]/.test(ch);
const isWord = (ch: string) => /[A-Za-z0-9_]/.test(ch);

export function tokenizeSql(sql: string): Token[] {
  const tokens: Token[] = [];
  let i = 0;

  while (i < sql.length) {
    const ch = sql[i];

    if (isSpace(ch)) {
      let run = "";
      while (i < sql.length && isSpace(sql[i])) run += sql[i++];
      tokens.push({ type: "whitespace", value: run });
      continue;
    }

    if (sql.startsWith("--", i)) {
      let run = "";
      while (i < sql.length && sql[i] !== "\n") run += sql[i++];
      tokens.push({ type: "comment", value: run });
      continue;
    }

    if (sql.startsWith("/*", i)) {
      const end = sql.indexOf("*/", i + 2);
      const stop = end === -1 ? sql.length : end + 2;
      tokens.push({ type: "comment", value: sql.slice(i, stop) });
      i = stop;
      continue;
    }

    // string literal; a doubled quote is an escaped quote, not the end
    if (ch === "'") {
      let run = "'";
      i++;
      while (i < sql.length) {
        if (sql[i] === "'" && sql[i + 1] === "'") {
          run += "''";
          i += 2;
          continue;
        }
        run += sql[i];
        if (sql[i] === "'") {
          i++;
          break;
        }
        i++;
      }
      tokens.push({ type: "string", value: run });
      continue;
    }

    // double quotes delimit identifiers, not strings
    if (ch === '"') {
      let run = '"';
      i++;
      while (i < sql.length) {
        run += sql[i];
        if (sql[i] === '"') {
          i++;
          break;
        }
        i++;
      }
      tokens.push({ type: "identifier", value: run });
      continue;
    }

    if (isDigit(ch) || (ch === "." && isDigit(sql[i + 1] ?? ""))) {
      let run = "";
      while (i < sql.length && /[0-9.eE+\-xX]/.test(sql[i])) {
        // only consume +/- as part of an exponent
        if ((sql[i] === "+" || sql[i] === "-") && !/[eE]/.test(sql[i - 1])) break;
        run += sql[i++];
      }
      tokens.push({ type: "number", value: run });
      continue;
    }

    if (isWordStart(ch)) {
      let run = "";
      while (i < sql.length && isWord(sql[i])) run += sql[i++];
      const upper = run.toUpperCase();
      if (SQL_KEYWORDS.has(upper)) {
        tokens.push({ type: "keyword", value: run });
      } else if (SQL_FUNCTIONS.has(upper) && sql[i] === "(") {
        tokens.push({ type: "function", value: run });
      } else {
        tokens.push({ type: "identifier", value: run });
      }
      continue;
    }

    let op = ch;
    i++;
    if (/[=<>!|]/.test(ch) && i < sql.length && /[=<>|]/.test(sql[i])) {
      op += sql[i++];
    }
    tokens.push({ type: "operator", value: op });
  }

  return tokens;
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#039;");
}

/** Render SQL as HTML with one span per colored token. */
export function highlightSql(sql: string): string {
  return tokenizeSql(sql)
    .map((token) => {
      if (token.type === "whitespace" || token.type === "identifier") {
        return escapeHtml(token.value);
      }
      return `<span class="sql-${token.type}">${escapeHtml(token.value)}</span>`;
    })
    .join("");
}
