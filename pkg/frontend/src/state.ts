// Session state: the transcript, the pending gate, and optimistic updates.

import type { ChatReply, SourceRef, TranscriptEntry } from "./api.js";

export type BubbleStatus = "ok" | "pending" | "failed";

export interface Bubble {
  role: string;
  content: string;
  status: BubbleStatus;
  sources?: SourceRef[];
}

const SESSION_KEY = "kennel.session";

export function newSessionId(): string {
  return `web-${Date.now().toString(36)}-${Math.random().toString(36).slice(2, 10)}`;
}

export function getOrCreateSessionId(storage: Storage): string {
  const existing = storage.getItem(SESSION_KEY);
  if (existing) return existing;
  const id = newSessionId();
  storage.setItem(SESSION_KEY, id);
  return id;
}

export class SessionState {
  transcript: Bubble[] = [];
  pending = false;
  lastError: string | null = null;

  constructor(public readonly sessionId: string) {}

  /** Append the optimistic user bubble and close the send gate.
   *  Returns false when a send is already in flight or the text is empty. */
  beginSend(text: string): boolean {
    if (this.pending || !text.trim()) return false;
    this.pending = true;
    this.lastError = null;
    this.transcript.push({ role: "user", content: text, status: "pending" });
    return true;
  }

  /** Server truth replaces the optimistic view; the reply's source list is
   *  pinned to the assistant bubble it produced. */
  completeSend(reply: ChatReply, history: TranscriptEntry[]): void {
    this.syncFromHistory(history);
    const last = this.transcript[this.transcript.length - 1];
    if (last && last.role === "assistant") {
      last.sources = reply.chunks_used;
    }
    this.pending = false;
  }

  /** Keep the user bubble, mark it failed, reopen the gate. */
  failSend(message: string): void {
    for (let i = this.transcript.length - 1; i >= 0; i--) {
      if (this.transcript[i].status === "pending") {
        this.transcript[i].status = "failed";
        break;
      }
    }
    this.lastError = message;
    this.pending = false;
  }

  /** Drop a failed bubble (its text is about to be resent). */
  removeFailed(index: number): string | null {
    const bubble = this.transcript[index];
    if (!bubble || bubble.status !== "failed") return null;
    this.transcript.splice(index, 1);
    return bubble.content;
  }

  syncFromHistory(entries: TranscriptEntry[]): void {
    this.transcript = entries.map((e) => ({
      role: e.role,
      content: e.content,
      status: "ok" as BubbleStatus,
    }));
  }
}
