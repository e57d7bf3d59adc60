/** Typed client for the merge-session HTTP service.
 *
 * Every mutation carries the last acknowledged state version; a 409 means
 * another tab moved the session forward and the caller should refresh.
 */

export interface OperationDict {
  type: string;
  [field: string]: string;
}

export interface ExplanationView {
  kind: string;
  text: string;
  evidence: string[];
  score: number | null;
}

export interface SuggestionView {
  key: string;
  operation: OperationDict;
  score: number;
  explanations: ExplanationView[];
  relatedFrames: string[];
}

export interface ConflictView {
  kind: string;
  frames: string[];
  detail: string;
  resolutions: OperationDict[];
}

export interface ClassView {
  name: string;
  superclasses: string[];
  slots: string[];
}

export interface SlotView {
  name: string;
  kind: string;
  domain: string[];
  range: string | string[];
  minCard: number;
  maxCard: number | null;
}

export interface InstanceView {
  name: string;
  types: string[];
  values: Record<string, Array<{ kind?: string; lexical?: string; ref?: string }>>;
}

export interface TreeNode {
  name: string;
  children: TreeNode[];
}

export interface OntologyView {
  name: string;
  classes: ClassView[];
  slots: SlotView[];
  instances: InstanceView[];
  tree: TreeNode[];
}

export interface SessionState {
  sessionId: string;
  stateVersion: number;
  mergedName: string;
  preferred: string | null;
  sources: OntologyView[];
  merged: OntologyView;
  opLog: OperationDict[];
}

export interface CreateResponse extends SessionState {
  suggestions: SuggestionView[];
  conflicts: ConflictView[];
}

export interface StepResponse {
  stateVersion: number;
  applied: boolean;
  result: string | null;
  created: string[];
  deleted: string[];
  suggestions: SuggestionView[];
  conflicts: ConflictView[];
  merged: OntologyView;
}

export interface UndoResponse {
  stateVersion: number;
  suggestions: SuggestionView[];
  conflicts: ConflictView[];
  merged: OntologyView;
}

export class VersionConflictError extends Error {
  constructor(public serverVersion: number) {
    super(`state version is stale; server is at ${serverVersion}`);
  }
}

export class ServiceError extends Error {
  constructor(message: string, public status: number) {
    super(message);
  }
}

async function parseError(response: Response): Promise<never> {
  let detail: unknown;
  try {
    detail = (await response.json()).detail;
  } catch {
    detail = response.statusText;
  }
  if (response.status === 409 && typeof detail === "object" && detail !== null) {
    const version = (detail as { stateVersion?: number }).stateVersion ?? -1;
    throw new VersionConflictError(version);
  }
  const message =
    typeof detail === "string" ? detail : JSON.stringify(detail ?? response.statusText);
  throw new ServiceError(message, response.status);
}

export class MergeServiceClient {
  constructor(
    private baseUrl: string = "",
    private fetcher: typeof fetch = fetch.bind(globalThis),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetcher(this.baseUrl + path, init);
    if (!response.ok) {
      await parseError(response);
    }
    return (await response.json()) as T;
  }

  async createSession(
    files: Array<{ name: string; content: string }>,
    options: { mergedName?: string; preferred?: string; threshold?: number } = {},
  ): Promise<CreateResponse> {
    const form = new FormData();
    for (const file of files) {
      form.append("files", new Blob([file.content], { type: "application/rdf+xml" }), file.name);
    }
    if (options.mergedName) form.append("merged_name", options.mergedName);
    if (options.preferred) form.append("preferred", options.preferred);
    if (options.threshold !== undefined) form.append("threshold", String(options.threshold));
    return this.request<CreateResponse>("/sessions", { method: "POST", body: form });
  }

  getState(sessionId: string): Promise<SessionState> {
    return this.request<SessionState>(`/sessions/${sessionId}/state`);
  }

  getSuggestions(sessionId: string): Promise<{ stateVersion: number; suggestions: SuggestionView[] }> {
    return this.request(`/sessions/${sessionId}/suggestions`);
  }

  getConflicts(sessionId: string): Promise<{ stateVersion: number; conflicts: ConflictView[] }> {
    return this.request(`/sessions/${sessionId}/conflicts`);
  }

  applyOperation(
    sessionId: string,
    expectedVersion: number,
    operation: OperationDict,
  ): Promise<StepResponse> {
    return this.request<StepResponse>(`/sessions/${sessionId}/operations`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ expectedVersion, operation }),
    });
  }

  undo(sessionId: string, expectedVersion: number): Promise<UndoResponse> {
    return this.request<UndoResponse>(`/sessions/${sessionId}/undo`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ expectedVersion }),
    });
  }

  setPreferred(sessionId: string, preferred: string | null): Promise<{ stateVersion: number }> {
    return this.request(`/sessions/${sessionId}/preferred`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ preferred }),
    });
  }

  dismiss(
    sessionId: string,
    operation: OperationDict,
  ): Promise<{ stateVersion: number; suggestions: SuggestionView[] }> {
    return this.request(`/sessions/${sessionId}/dismissals`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ operation }),
    });
  }

  async exportText(sessionId: string, format: "canonical" | "owl"): Promise<string> {
    const response = await this.fetcher(
      `${this.baseUrl}/sessions/${sessionId}/export?format=${format}`,
    );
    if (!response.ok) {
      await parseError(response);
    }
    return response.text();
  }
}
