// Typed client for the kennel service JSON API.

export interface TranscriptEntry {
  role: string;
  content: string;
}

export interface SourceRef {
  source: string;
  score?: number;
}

export interface ChatReply {
  text: string;
  finish_reason: string;
  chunks_used: SourceRef[];
  usage?: { prompt_tokens: number; completion_tokens: number } | null;
}

export interface KnowledgeSource {
  kind: string;
  index_path?: string | null;
  endpoint?: string | null;
  top_k?: number;
  template?: string;
}

export interface IngestResult {
  doc_id: string;
  chunks: number;
  replaced: boolean;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public kind: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function errorFromResponse(response: Response): Promise<ApiError> {
  let message = `request failed with status ${response.status}`;
  let kind = "http";
  try {
    const body = await response.json();
    if (body && typeof body.error === "string") message = body.error;
    if (body && typeof body.kind === "string") kind = body.kind;
  } catch {
    // non-JSON error body, keep the status message
  }
  return new ApiError(response.status, kind, message);
}

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await fetch(this.baseUrl + path, {
        method,
        headers: body === undefined ? undefined : { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError(0, "network", `cannot reach the service: ${String(err)}`);
    }
    if (!response.ok) {
      throw await errorFromResponse(response);
    }
    if (response.status === 204) {
      return undefined as T;
    }
    return (await response.json()) as T;
  }

  sendMessage(sessionId: string, prompt: string): Promise<ChatReply> {
    const id = encodeURIComponent(sessionId);
    return this.request<ChatReply>("POST", `/api/sessions/${id}/messages`, { prompt });
  }

  async getHistory(sessionId: string): Promise<TranscriptEntry[]> {
    const id = encodeURIComponent(sessionId);
    const body = await this.request<{ messages: { role: string; content: string }[] }>(
      "GET",
      `/api/sessions/${id}/history`,
    );
    return body.messages.map((m) => ({ role: m.role, content: m.content }));
  }

  getSource(): Promise<KnowledgeSource> {
    return this.request<KnowledgeSource>("GET", "/api/knowledge-source");
  }

  putSource(config: KnowledgeSource): Promise<KnowledgeSource> {
    return this.request<KnowledgeSource>("PUT", "/api/knowledge-source", config);
  }

  uploadDocument(docId: string, text: string): Promise<IngestResult> {
    return this.request<IngestResult>("POST", "/api/documents", { doc_id: docId, text });
  }

  deleteDocument(docId: string): Promise<void> {
    return this.request<void>("DELETE", `/api/documents/${encodeURIComponent(docId)}`);
  }

  async health(): Promise<boolean> {
    try {
      await this.request<{ status: string }>("GET", "/api/health");
      return true;
    } catch {
      return false;
    }
  }
}
