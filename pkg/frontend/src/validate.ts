// Client-side checks that run before a request is attempted.

function count(haystack: string, needle: string): number {
  return haystack.split(needle).length - 1;
}

/** Null when valid, else a message naming the broken placeholder. */
export function validateTemplate(template: string): string | null {
  for (const placeholder of ["{context}", "{question}"]) {
    const n = count(template, placeholder);
    if (n === 0) return `template is missing ${placeholder}`;
    if (n > 1) return `template repeats ${placeholder}`;
  }
  return null;
}

export function validateDocId(docId: string): string | null {
  if (!docId.trim()) return "document id must not be empty";
  return null;
}

export type SourceField = "template" | "index_path" | "endpoint" | "form";

/** Guess which form field a server-side 400 message belongs to. */
export function fieldForError(message: string): SourceField {
  const lower = message.toLowerCase();
  if (lower.includes("template") || lower.includes("placeholder")) return "template";
  if (lower.includes("index_path") || lower.includes("index path")) return "index_path";
  if (lower.includes("endpoint")) return "endpoint";
  return "form";
}
