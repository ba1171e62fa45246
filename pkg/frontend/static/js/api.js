// Typed client for the kennel service JSON API.
export class ApiError extends Error {
    constructor(status, kind, message) {
        super(message);
        this.status = status;
        this.kind = kind;
        this.name = "ApiError";
    }
}
async function errorFromResponse(response) {
    let message = `request failed with status ${response.status}`;
    let kind = "http";
    try {
        const body = await response.json();
        if (body && typeof body.error === "string")
            message = body.error;
        if (body && typeof body.kind === "string")
            kind = body.kind;
    }
    catch {
        // non-JSON error body, keep the status message
    }
    return new ApiError(response.status, kind, message);
}
export class ApiClient {
    constructor(baseUrl = "") {
        this.baseUrl = baseUrl;
    }
    async request(method, path, body) {
        let response;
        try {
            response = await fetch(this.baseUrl + path, {
                method,
                headers: body === undefined ? undefined : { "Content-Type": "application/json" },
                body: body === undefined ? undefined : JSON.stringify(body),
            });
        }
        catch (err) {
            throw new ApiError(0, "network", `cannot reach the service: ${String(err)}`);
        }
        if (!response.ok) {
            throw await errorFromResponse(response);
        }
        if (response.status === 204) {
            return undefined;
        }
        return (await response.json());
    }
    sendMessage(sessionId, prompt) {
        const id = encodeURIComponent(sessionId);
        return this.request("POST", `/api/sessions/${id}/messages`, { prompt });
    }
    async getHistory(sessionId) {
        const id = encodeURIComponent(sessionId);
        const body = await this.request("GET", `/api/sessions/${id}/history`);
        return body.messages.map((m) => ({ role: m.role, content: m.content }));
    }
    getSource() {
        return this.request("GET", "/api/knowledge-source");
    }
    putSource(config) {
        return this.request("PUT", "/api/knowledge-source", config);
    }
    uploadDocument(docId, text) {
        return this.request("POST", "/api/documents", { doc_id: docId, text });
    }
    deleteDocument(docId) {
        return this.request("DELETE", `/api/documents/${encodeURIComponent(docId)}`);
    }
    async health() {
        try {
            await this.request("GET", "/api/health");
            return true;
        }
        catch {
            return false;
        }
    }
}
