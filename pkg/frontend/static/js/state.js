// Session state: the transcript, the pending gate, and optimistic updates.
const SESSION_KEY = "kennel.session";
export function newSessionId() {
    return `web-${Date.now().toString(36)}-${Math.random().toString(36).slice(2, 10)}`;
}
export function getOrCreateSessionId(storage) {
    const existing = storage.getItem(SESSION_KEY);
    if (existing)
        return existing;
    const id = newSessionId();
    storage.setItem(SESSION_KEY, id);
    return id;
}
export class SessionState {
    constructor(sessionId) {
        this.sessionId = sessionId;
        this.transcript = [];
        this.pending = false;
        this.lastError = null;
    }
    /** Append the optimistic user bubble and close the send gate.
     *  Returns false when a send is already in flight or the text is empty. */
    beginSend(text) {
        if (this.pending || !text.trim())
            return false;
        this.pending = true;
        this.lastError = null;
        this.transcript.push({ role: "user", content: text, status: "pending" });
        return true;
    }
    /** Server truth replaces the optimistic view; the reply's source list is
     *  pinned to the assistant bubble it produced. */
    completeSend(reply, history) {
        this.syncFromHistory(history);
        const last = this.transcript[this.transcript.length - 1];
        if (last && last.role === "assistant") {
            last.sources = reply.chunks_used;
        }
        this.pending = false;
    }
    /** Keep the user bubble, mark it failed, reopen the gate. */
    failSend(message) {
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
    removeFailed(index) {
        const bubble = this.transcript[index];
        if (!bubble || bubble.status !== "failed")
            return null;
        this.transcript.splice(index, 1);
        return bubble.content;
    }
    syncFromHistory(entries) {
        this.transcript = entries.map((e) => ({
            role: e.role,
            content: e.content,
            status: "ok",
        }));
    }
}
