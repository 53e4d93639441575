import type {
  AgentInfo,
  ApplyResponse,
  Decision,
  Paper,
  RunView,
  SchemeConfig,
  StatsPayload,
  TemplateDoc,
  TemplateDraft,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly violations: string[] = [],
    readonly missingPairs: [string, string][] = [],
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let body: Record<string, unknown> = {};
  try {
    body = await response.json();
  } catch {
    // non-JSON error body; fall through to the status line
  }
  return new ApiError(
    typeof body.error === "string" ? body.error : `HTTP ${response.status}`,
    response.status,
    Array.isArray(body.violations) ? (body.violations as string[]) : [],
    Array.isArray(body.missing_pairs) ? (body.missing_pairs as [string, string][]) : [],
  );
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      throw await parseError(response);
    }
    return response.json() as Promise<T>;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  health(): Promise<{ status: string; version: string }> {
    return this.request("/health");
  }

  listPapers(corpusId: string): Promise<{ papers: Paper[] }> {
    return this.request(`/corpora/${corpusId}/papers`);
  }

  uploadBibtex(corpusId: string, data: string, source: string) {
    return this.request<{ report: Record<string, number>; diagnostics: unknown[] }>(
      `/corpora/${corpusId}/bibtex?source=${encodeURIComponent(source)}`,
      { method: "POST", body: data },
    );
  }

  listTemplates(): Promise<{ templates: { id: string; latest_version: number }[] }> {
    return this.request("/templates");
  }

  getTemplate(id: string, version?: number): Promise<TemplateDoc> {
    const suffix = version === undefined ? "" : `?version=${version}`;
    return this.request(`/templates/${id}${suffix}`);
  }

  saveTemplate(draft: TemplateDraft): Promise<TemplateDoc> {
    return this.post("/templates", draft);
  }

  previewTemplate(draft: TemplateDraft, corpusId: string, paperId: string): Promise<{ text: string }> {
    return this.post("/templates/preview", {
      template: draft,
      corpus_id: corpusId,
      paper_id: paperId,
    });
  }

  listAgents(): Promise<{ agents: AgentInfo[] }> {
    return this.request("/agents");
  }

  registerAgent(agent: Partial<AgentInfo> & { id: string; endpoint_url: string }): Promise<AgentInfo> {
    return this.post("/agents", agent);
  }

  createRun(body: {
    corpus_id: string;
    template_id: string;
    template_version?: number;
    agent_ids: string[];
    scope?: string[];
  }): Promise<RunView> {
    return this.post("/runs", body);
  }

  getRun(runId: string): Promise<RunView> {
    return this.request(`/runs/${runId}`);
  }

  listRuns(): Promise<{ runs: RunView[] }> {
    return this.request("/runs");
  }

  runDecisions(runId: string): Promise<{ decisions: Decision[] }> {
    return this.request(`/runs/${runId}/decisions`);
  }

  createScheme(scheme: SchemeConfig): Promise<SchemeConfig> {
    return this.post("/schemes", scheme);
  }

  applyScheme(schemeId: string, runIds: string[]): Promise<ApplyResponse> {
    return this.post(`/schemes/${schemeId}/apply`, { run_ids: runIds });
  }

  stats(scopeId: string): Promise<StatsPayload> {
    return this.request(`/stats/${scopeId}`);
  }

  exportUrl(scopeId: string): string {
    return `${this.baseUrl}/export/${scopeId}.csv`;
  }
}
