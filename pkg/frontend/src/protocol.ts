/**
 * Wire protocol codec, mirroring the server: one record per WebSocket
 * text frame, `tag key=value ...` with percent-encoded values.
 */

export interface Message {
  tag: string;
  fields: Record<string, string>;
}

export class ProtocolError extends Error {}

export function encodeMessage(tag: string, fields: Record<string, string | number> = {}): string {
  if (!tag || tag.includes(" ")) {
    throw new ProtocolError(`invalid tag ${JSON.stringify(tag)}`);
  }
  const parts = [tag];
  for (const [key, value] of Object.entries(fields)) {
    parts.push(`${key}=${percentEncode(String(value))}`);
  }
  return parts.join(" ");
}

export function parseMessage(record: string): Message {
  const parts = record.trim().split(" ");
  if (parts.length === 0 || parts[0] === "") {
    throw new ProtocolError("empty record");
  }
  const fields: Record<string, string> = {};
  for (const part of parts.slice(1)) {
    const eq = part.indexOf("=");
    if (eq < 0) {
      throw new ProtocolError(`malformed field ${JSON.stringify(part)}`);
    }
    fields[part.slice(0, eq)] = decodeURIComponent(part.slice(eq + 1));
  }
  return { tag: parts[0], fields };
}

// encodeURIComponent leaves !'()* and ~ bare; that is fine for the server's
// decoder, but space and '=' (the two structural characters) must never leak.
function percentEncode(value: string): string {
  return encodeURIComponent(value).replace(
    /[!'()*]/g,
    (c) => "%" + c.charCodeAt(0).toString(16).toUpperCase(),
  );
}
