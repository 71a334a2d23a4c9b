/**
 * Byte-exact access to top-level JSON values.
 *
 * The console never re-formats numbers it shows: a metric cell displays the
 * exact characters the service sent.  JSON.parse + toString would rewrite
 * `80.0` as `80`, so this module scans the response text and returns the
 * literal value token for a top-level key.
 */

/** Returns the raw token (e.g. `80.0`, `null`, `"abc"`) for a top-level key. */
export function rawToken(body: string, key: string): string | null {
  const target = JSON.stringify(key);
  let depth = 0;
  let i = skipWs(body, 0);
  if (body[i] !== "{") return null;
  i++;
  depth = 1;
  while (i < body.length) {
    i = skipWs(body, i);
    if (body[i] === "}") return null;
    const keyStart = i;
    i = skipString(body, i);
    const keyText = body.slice(keyStart, i);
    i = skipWs(body, i);
    if (body[i] !== ":") return null;
    i = skipWs(body, i + 1);
    const valueStart = i;
    i = skipValue(body, i);
    if (depth === 1 && keyText === target) {
      return body.slice(valueStart, i);
    }
    i = skipWs(body, i);
    if (body[i] === ",") {
      i++;
      continue;
    }
    if (body[i] === "}") return null;
  }
  return null;
}

/** The token parsed as a number, or null for `null`/missing/non-numeric. */
export function tokenNumber(token: string | null): number | null {
  if (token === null || token === "null") return null;
  const v = Number(token);
  return Number.isFinite(v) ? v : null;
}

function skipWs(s: string, i: number): number {
  while (i < s.length && (s[i] === " " || s[i] === "\n" || s[i] === "\t" || s[i] === "\r")) i++;
  return i;
}

function skipString(s: string, i: number): number {
  // assumes s[i] === '"'
  i++;
  while (i < s.length) {
    if (s[i] === "\\") i += 2;
    else if (s[i] === '"') return i + 1;
    else i++;
  }
  return i;
}

function skipValue(s: string, i: number): number {
  const c = s[i];
  if (c === '"') return skipString(s, i);
  if (c === "{" || c === "[") {
    const open = c;
    const close = c === "{" ? "}" : "]";
    let depth = 0;
    while (i < s.length) {
      if (s[i] === '"') {
        i = skipString(s, i);
        continue;
      }
      if (s[i] === open) depth++;
      else if (s[i] === close) {
        depth--;
        if (depth === 0) return i + 1;
      }
      i++;
    }
    return i;
  }
  // number, true, false, null: scan to delimiter
  while (i < s.length && !",}] \n\t\r".includes(s[i])) i++;
  return i;
}
