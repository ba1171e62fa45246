// DOM wiring for the single-page client. No framework, no routing; the
// markup is owned here so tests and the served page stay identical.

import { ApiError } from "./api.js";
import type { ChatReply, IngestResult, KnowledgeSource, TranscriptEntry } from "./api.js";
import { SessionState, getOrCreateSessionId } from "./state.js";
import { fieldForError, validateDocId, validateTemplate } from "./validate.js";

export interface ApiLike {
  sendMessage(sessionId: string, prompt: string): Promise<ChatReply>;
  getHistory(sessionId: string): Promise<TranscriptEntry[]>;
  getSource(): Promise<KnowledgeSource>;
  putSource(config: KnowledgeSource): Promise<KnowledgeSource>;
  uploadDocument(docId: string, text: string): Promise<IngestResult>;
}

export const DEFAULT_TEMPLATE =
  "Use the following context to answer.\n\nContext:\n{context}\n\nQuestion: {question}";

export const PRESETS: Record<string, string> = {
  default: DEFAULT_TEMPLATE,
  outline:
    "Draft a short learning outline grounded in the context.\n\nContext:\n{context}\n\nQuestion: {question}",
};

export const SHELL = `
<header>
  <h1>kennel</h1>
  <span id="source-badge" class="badge">No source</span>
</header>
<main>
  <section id="chat-pane">
    <div id="error-banner" class="banner" hidden></div>
    <div id="transcript"></div>
    <div class="composer">
      <input id="chat-input" type="text" placeholder="Say something" autocomplete="off">
      <button id="send-btn" type="button">Send</button>
    </div>
  </section>
  <aside id="side-panel">
    <section id="source-panel">
      <h2>Knowledge source</h2>
      <label>Kind
        <select id="source-kind">
          <option value="none">None</option>
          <option value="keyword_corpus">Keyword corpus</option>
          <option value="web_search">Web search</option>
        </select>
      </label>
      <label id="row-index-path">Index path
        <input id="source-index-path" type="text" placeholder="index.json">
        <span id="index-path-error" class="field-error" hidden></span>
      </label>
      <label id="row-endpoint">Endpoint
        <input id="source-endpoint" type="text" placeholder="https://search.example/api">
        <span id="endpoint-error" class="field-error" hidden></span>
      </label>
      <label id="row-top-k">Top k
        <input id="source-top-k" type="number" min="1" value="4">
      </label>
      <label id="row-template">Template
        <textarea id="source-template" rows="6"></textarea>
        <span id="template-error" class="field-error" hidden></span>
      </label>
      <div id="preset-row">
        <button type="button" class="preset" data-preset="default">Default prompt</button>
        <button type="button" class="preset" data-preset="outline">Learning outline</button>
      </div>
      <span id="form-error" class="field-error" hidden></span>
      <div class="actions">
        <button id="source-save" type="button">Save</button>
        <span id="source-saved" class="saved-note" hidden>saved</span>
      </div>
    </section>
    <section id="upload-panel">
      <h2>Upload document</h2>
      <label>Document id
        <input id="doc-id" type="text" placeholder="notes.md">
      </label>
      <label>Text
        <textarea id="doc-text" rows="4"></textarea>
      </label>
      <span id="upload-error" class="field-error" hidden></span>
      <div class="actions">
        <button id="upload-btn" type="button">Upload</button>
        <span id="upload-status" class="saved-note"></span>
      </div>
    </section>
  </aside>
</main>
`;

function byId<T extends HTMLElement>(root: ParentNode, id: string): T {
  const el = root.querySelector(`#${id}`);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

function errorMessage(err: unknown): string {
  if (err instanceof Error) return err.message;
  return String(err);
}

export interface AppController {
  state: SessionState;
  ready: Promise<void>;
  send(): Promise<void>;
  retry(index: number): Promise<void>;
  saveSource(): Promise<void>;
  upload(): Promise<void>;
  applyPreset(name: string): void;
  refreshSource(): Promise<void>;
}

export function initApp(root: HTMLElement, api: ApiLike, storage: Storage): AppController {
  root.innerHTML = SHELL;

  const badge = byId<HTMLSpanElement>(root, "source-badge");
  const banner = byId<HTMLDivElement>(root, "error-banner");
  const transcriptEl = byId<HTMLDivElement>(root, "transcript");
  const input = byId<HTMLInputElement>(root, "chat-input");
  const sendBtn = byId<HTMLButtonElement>(root, "send-btn");
  const kindSelect = byId<HTMLSelectElement>(root, "source-kind");
  const indexPathInput = byId<HTMLInputElement>(root, "source-index-path");
  const endpointInput = byId<HTMLInputElement>(root, "source-endpoint");
  const topKInput = byId<HTMLInputElement>(root, "source-top-k");
  const templateInput = byId<HTMLTextAreaElement>(root, "source-template");
  const saveBtn = byId<HTMLButtonElement>(root, "source-save");
  const savedNote = byId<HTMLSpanElement>(root, "source-saved");
  const docIdInput = byId<HTMLInputElement>(root, "doc-id");
  const docTextInput = byId<HTMLTextAreaElement>(root, "doc-text");
  const uploadBtn = byId<HTMLButtonElement>(root, "upload-btn");
  const uploadStatus = byId<HTMLSpanElement>(root, "upload-status");

  const fieldErrors = {
    template: byId<HTMLSpanElement>(root, "template-error"),
    index_path: byId<HTMLSpanElement>(root, "index-path-error"),
    endpoint: byId<HTMLSpanElement>(root, "endpoint-error"),
    form: byId<HTMLSpanElement>(root, "form-error"),
    upload: byId<HTMLSpanElement>(root, "upload-error"),
  };

  const state = new SessionState(getOrCreateSessionId(storage));
  templateInput.value = DEFAULT_TEMPLATE;

  function setFieldError(slot: keyof typeof fieldErrors, message: string | null): void {
    const el = fieldErrors[slot];
    el.textContent = message ?? "";
    el.hidden = message === null;
  }

  function clearSourceErrors(): void {
    setFieldError("template", null);
    setFieldError("index_path", null);
    setFieldError("endpoint", null);
    setFieldError("form", null);
  }

  function renderBadge(source: KnowledgeSource): void {
    if (source.kind === "keyword_corpus") {
      badge.textContent = `keyword corpus (${source.index_path ?? ""})`;
    } else if (source.kind === "web_search") {
      badge.textContent = `web search (${source.endpoint ?? ""})`;
    } else if (source.kind === "composite") {
      badge.textContent = "composite source";
    } else {
      badge.textContent = "No source";
    }
  }

  function toggleSourceRows(): void {
    const kind = kindSelect.value;
    byId<HTMLElement>(root, "row-index-path").hidden = kind !== "keyword_corpus";
    byId<HTMLElement>(root, "row-endpoint").hidden = kind !== "web_search";
    byId<HTMLElement>(root, "row-top-k").hidden = kind === "none";
    byId<HTMLElement>(root, "row-template").hidden = kind === "none";
  }

  function renderTranscript(): void {
    transcriptEl.textContent = "";
    state.transcript.forEach((bubble, index) => {
      const div = document.createElement("div");
      div.className = `bubble ${bubble.role}`;
      div.dataset.status = bubble.status;
      const text = document.createElement("p");
      text.textContent = bubble.content;
      div.appendChild(text);
      if (bubble.sources && bubble.sources.length > 0) {
        const details = document.createElement("details");
        details.className = "sources";
        const summary = document.createElement("summary");
        summary.textContent = `sources (${bubble.sources.length})`;
        details.appendChild(summary);
        const list = document.createElement("ul");
        for (const ref of bubble.sources) {
          const item = document.createElement("li");
          item.textContent =
            ref.score === undefined ? ref.source : `${ref.source} (${ref.score.toFixed(4)})`;
          list.appendChild(item);
        }
        details.appendChild(list);
        div.appendChild(details);
      }
      if (bubble.status === "failed") {
        const retryBtn = document.createElement("button");
        retryBtn.type = "button";
        retryBtn.className = "retry";
        retryBtn.textContent = "retry";
        retryBtn.addEventListener("click", () => void controller.retry(index));
        div.appendChild(retryBtn);
      }
      transcriptEl.appendChild(div);
    });
    transcriptEl.scrollTop = transcriptEl.scrollHeight;
  }

  function renderChat(): void {
    renderTranscript();
    sendBtn.disabled = state.pending;
    banner.hidden = state.lastError === null;
    banner.textContent = state.lastError ?? "";
  }

  async function sendText(text: string): Promise<void> {
    if (!state.beginSend(text)) return;
    renderChat();
    try {
      const reply = await api.sendMessage(state.sessionId, text);
      const history = await api.getHistory(state.sessionId);
      state.completeSend(reply, history);
    } catch (err) {
      state.failSend(errorMessage(err));
    }
    renderChat();
  }

  function populateSourceForm(source: KnowledgeSource): void {
    kindSelect.value = source.kind;
    if (source.index_path) indexPathInput.value = source.index_path;
    if (source.endpoint) endpointInput.value = source.endpoint;
    if (source.top_k !== undefined) topKInput.value = String(source.top_k);
    if (source.template) templateInput.value = source.template;
    toggleSourceRows();
  }

  const controller: AppController = {
    state,
    ready: Promise.resolve(),

    async send(): Promise<void> {
      const text = input.value;
      input.value = "";
      await sendText(text);
    },

    async retry(index: number): Promise<void> {
      const text = state.removeFailed(index);
      if (text === null) return;
      state.lastError = null;
      renderChat();
      await sendText(text);
    },

    async saveSource(): Promise<void> {
      clearSourceErrors();
      savedNote.hidden = true;
      const kind = kindSelect.value;
      let config: KnowledgeSource;
      if (kind === "none") {
        config = { kind: "none" };
      } else {
        const templateError = validateTemplate(templateInput.value);
        if (templateError) {
          setFieldError("template", templateError);
          return;
        }
        config = { kind, template: templateInput.value };
        const topK = parseInt(topKInput.value, 10);
        if (!Number.isNaN(topK)) config.top_k = topK;
        if (kind === "keyword_corpus") config.index_path = indexPathInput.value;
        if (kind === "web_search") config.endpoint = endpointInput.value;
      }
      try {
        await api.putSource(config);
        const current = await api.getSource();
        populateSourceForm(current);
        renderBadge(current);
        savedNote.hidden = false;
      } catch (err) {
        if (err instanceof ApiError && err.status === 400) {
          setFieldError(fieldForError(err.message), err.message);
        } else {
          setFieldError("form", errorMessage(err));
        }
      }
    },

    async upload(): Promise<void> {
      setFieldError("upload", null);
      uploadStatus.textContent = "";
      const docIdError = validateDocId(docIdInput.value);
      if (docIdError) {
        setFieldError("upload", docIdError);
        return;
      }
      try {
        const result = await api.uploadDocument(docIdInput.value.trim(), docTextInput.value);
        if (result.chunks === 0 && result.replaced) {
          uploadStatus.textContent = `removed ${result.doc_id}`;
        } else {
          const noun = result.chunks === 1 ? "chunk" : "chunks";
          const suffix = result.replaced ? " (replaced existing)" : "";
          uploadStatus.textContent = `indexed: ${result.chunks} ${noun}${suffix}`;
        }
      } catch (err) {
        setFieldError("upload", errorMessage(err));
      }
    },

    applyPreset(name: string): void {
      const template = PRESETS[name];
      if (!template) return;
      templateInput.value = template;
      setFieldError("template", null);
    },

    async refreshSource(): Promise<void> {
      try {
        const current = await api.getSource();
        populateSourceForm(current);
        renderBadge(current);
      } catch (err) {
        setFieldError("form", errorMessage(err));
      }
    },
  };

  sendBtn.addEventListener("click", () => void controller.send());
  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter") void controller.send();
  });
  saveBtn.addEventListener("click", () => void controller.saveSource());
  uploadBtn.addEventListener("click", () => void controller.upload());
  kindSelect.addEventListener("change", toggleSourceRows);
  templateInput.addEventListener("input", () => {
    setFieldError("template", validateTemplate(templateInput.value));
  });
  root.querySelectorAll<HTMLButtonElement>("button.preset").forEach((button) => {
    button.addEventListener("click", () => controller.applyPreset(button.dataset.preset ?? ""));
  });

  toggleSourceRows();
  renderChat();
  controller.ready = controller.refreshSource();
  return controller;
}
